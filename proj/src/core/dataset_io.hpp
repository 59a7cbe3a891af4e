// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>

#include "core/dataset.hpp"

namespace perturbdag {

inline constexpr const char* kNonTargeting = "non-targeting";

struct DatasetPaths {
  std::filesystem::path counts;  // .mtx (Matrix Market) or TSV
  std::filesystem::path guides;  // cell_id<TAB>target_gene
  std::optional<std::filesystem::path> covariates;
  std::optional<std::filesystem::path> size_factors;  // cell_id<TAB>size_factor
  std::optional<std::filesystem::path> genes;         // required with .mtx counts
  std::optional<std::filesystem::path> cells;         // optional with .mtx counts
};

// Reads the on-disk formats. Size factors come from the size-factor file
// when given, otherwise from total UMI counts. The result is not validated;
// call validate()/require_valid().
PerturbDataset load_dataset(const DatasetPaths& paths);

// Writes counts.tsv, guides.tsv, size_factors.tsv and (when J > 0)
// covariates.tsv into `dir`. Reals use 17 significant digits.
void save_dataset(const PerturbDataset& dataset, const std::filesystem::path& dir);

// Matrix Market coordinate export plus genes.tsv / cells.tsv sidecars.
void save_counts_mtx(const PerturbDataset& dataset, const std::filesystem::path& mtx,
                     const std::filesystem::path& genes, const std::filesystem::path& cells);

DatasetPaths default_paths(const std::filesystem::path& dir);

}  // namespace perturbdag
