// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

#include "core/simulator.hpp"

namespace perturbdag {

// truth.json. Written files carry every field; on input everything except
// "genes" and "edges" may be omitted and falls back to the simulator
// defaults (tau -1, noise_sd 0.3, two confounders with loadings of +-0.4
// signed at random from the seed, baseline mean 4, control weight 0.65).
GroundTruth truth_from_json_text(const std::string& text);
std::string truth_to_json_text(const GroundTruth& truth);

GroundTruth load_truth(const std::filesystem::path& path);
void save_truth(const GroundTruth& truth, const std::filesystem::path& path);

}  // namespace perturbdag
