// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "core/dataset.hpp"

namespace fixture {

// Small hand-built dataset; rows are cells. Size factors default to 1.
perturbdag::PerturbDataset make_dataset(const std::vector<std::vector<unsigned>>& counts,
                                        const std::vector<std::vector<int>>& guides);

// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& tag);

std::string read_file(const std::filesystem::path& path);

}  // namespace fixture
