// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/dag_search.hpp"
#include "core/dataset.hpp"
#include "core/descendants.hpp"

namespace perturbdag {

struct FitResult {
  RunConfig config;
  PerturbDataset analyzed;  // node genes only, after filtering
  std::vector<std::string> untargeted_genes;
  std::vector<std::string> dropped_genes;  // by the minimum-cell filter
  AncestryResult ancestry;
  CausalDag dag;
};

// validate -> drop untargeted genes -> minimum-cell filter -> ancestry ->
// DAG search.
FitResult run_fit(const PerturbDataset& dataset, const RunConfig& config);

}  // namespace perturbdag
