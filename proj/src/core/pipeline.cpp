// SPDX-License-Identifier: Apache-2.0
#include "core/pipeline.hpp"

#include "core/error.hpp"

namespace perturbdag {

FitResult run_fit(const PerturbDataset& input, const RunConfig& config) {
  validate_config(config);
  require_valid(input);
  require(input.num_genes() >= 2, ErrorCode::kInvalidArgument,
          "need at least 2 genes (dataset has " + std::to_string(input.num_genes()) + ")");

  FitResult out;
  out.config = config;
  PerturbDataset kept = input;
  if (!config.exclude_genes.empty()) {
    std::vector<bool> drop(input.num_genes(), false);
    for (const auto& name : config.exclude_genes) {
      const auto g = input.gene_index(name);
      require(g.has_value(), ErrorCode::kInvalidArgument,
              "exclude_genes names unknown gene '" + name + "'");
      drop[*g] = true;
    }
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < input.num_genes(); ++j) {
      if (!drop[j]) keep.push_back(j);
    }
    require(keep.size() >= 2, ErrorCode::kInvalidArgument, "need at least 2 genes after exclusion");
    kept = restrict_genes(input, keep);
  }
  std::vector<std::size_t> targeted, untargeted;
  for (std::size_t j = 0; j < kept.num_genes(); ++j) {
    (kept.perturbed_count(j) > 0 ? targeted : untargeted).push_back(j);
  }
  for (auto j : untargeted) out.untargeted_genes.push_back(kept.gene_names[j]);
  PerturbDataset nodes = config.untargeted_as_covariates && !untargeted.empty()
                             ? append_expression_covariates(kept, untargeted)
                             : kept;
  if (!untargeted.empty()) {
    require(!targeted.empty(), ErrorCode::kInvalidArgument, "no gene is targeted by any guide");
    nodes = restrict_genes(nodes, targeted);
  }
  auto filtered = min_cell_filter(nodes, config.min_cells);
  out.dropped_genes = std::move(filtered.dropped_genes);
  out.analyzed = std::move(filtered.dataset);
  require(out.analyzed.num_genes() >= 2, ErrorCode::kInvalidArgument,
          "need at least 2 genes after filtering (" + std::to_string(out.analyzed.num_genes()) +
              " left)");

  PairTestOptions pair_options;
  pair_options.tail = descendant_tail(config.pvalue_convention);
  pair_options.threads = config.threads;
  out.ancestry = estimate_ancestry(out.analyzed, config.alpha, config.ancestry_mode, pair_options);

  SearchOptions search_options;
  search_options.tail = parent_tail(config.pvalue_convention);
  search_options.spending = config.spending;
  search_options.threads = config.threads;
  out.dag = search(out.analyzed, out.ancestry, config.alpha, search_options);
  return out;
}

}  // namespace perturbdag
