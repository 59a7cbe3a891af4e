// SPDX-License-Identifier: Apache-2.0
#include "core/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "core/error.hpp"

namespace perturbdag {

std::optional<std::size_t> PerturbDataset::gene_index(std::string_view name) const {
  for (std::size_t j = 0; j < gene_names.size(); ++j) {
    if (gene_names[j] == name) return j;
  }
  return std::nullopt;
}

std::size_t PerturbDataset::perturbed_count(std::size_t j) const {
  std::size_t n = 0;
  for (Eigen::Index i = 0; i < guides.rows(); ++i) n += guides(i, j) != 0;
  return n;
}

std::vector<std::string> validate(const PerturbDataset& d) {
  std::vector<std::string> out;
  const auto n = d.counts.rows();
  const auto p = d.counts.cols();
  if (d.guides.rows() != n || d.guides.cols() != p) {
    out.push_back("guides shape " + std::to_string(d.guides.rows()) + "x" +
                  std::to_string(d.guides.cols()) + " does not match counts " +
                  std::to_string(n) + "x" + std::to_string(p));
  }
  if (d.covariates.rows() != n) {
    out.push_back("covariates have " + std::to_string(d.covariates.rows()) +
                  " rows, expected " + std::to_string(n));
  }
  if (d.size_factors.size() != n) {
    out.push_back("size_factors have " + std::to_string(d.size_factors.size()) +
                  " entries, expected " + std::to_string(n));
  }
  if (static_cast<Eigen::Index>(d.gene_names.size()) != p) {
    out.push_back("gene_names has " + std::to_string(d.gene_names.size()) +
                  " entries, expected " + std::to_string(p));
  }
  if (!d.cell_ids.empty() && static_cast<Eigen::Index>(d.cell_ids.size()) != n) {
    out.push_back("cell_ids has " + std::to_string(d.cell_ids.size()) +
                  " entries, expected " + std::to_string(n));
  }
  if (static_cast<Eigen::Index>(d.covariate_names.size()) != d.covariates.cols()) {
    out.push_back("covariate_names has " + std::to_string(d.covariate_names.size()) +
                  " entries, expected " + std::to_string(d.covariates.cols()));
  }
  std::set<std::string> seen;
  for (const auto& g : d.gene_names) {
    if (!seen.insert(g).second) out.push_back("duplicate gene name '" + g + "'");
  }
  if (!out.empty()) return out;  // shapes disagree; row checks would misindex

  bool any_control = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    int row_sum = 0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const auto g = d.guides(i, j);
      if (g > 1) {
        out.push_back("cell " + std::to_string(i) + ": guide entry for gene " +
                      std::to_string(j) + " is " + std::to_string(g) + ", expected 0 or 1");
      }
      row_sum += g;
    }
    if (row_sum > 1) {
      out.push_back("cell " + std::to_string(i) + ": guide row sums to " +
                    std::to_string(row_sum) + " (at most one targeted gene per cell)");
    }
    any_control = any_control || row_sum == 0;
    const double l = d.size_factors(i);
    if (!(l > 0.0) || !std::isfinite(l)) {
      out.push_back("cell " + std::to_string(i) + ": size factor " + std::to_string(l) +
                    " is not strictly positive");
    }
    for (Eigen::Index c = 0; c < d.covariates.cols(); ++c) {
      if (!std::isfinite(d.covariates(i, c))) {
        out.push_back("cell " + std::to_string(i) + ": covariate " + std::to_string(c) +
                      " is not finite");
      }
    }
  }
  if (!any_control) out.push_back("no control cell (all-zero guide row) present");
  return out;
}

void require_valid(const PerturbDataset& dataset) {
  const auto problems = validate(dataset);
  if (problems.empty()) return;
  std::string msg = "invalid dataset (" + std::to_string(problems.size()) + " violation(s)):";
  for (const auto& v : problems) msg += "\n  " + v;
  throw Error(ErrorCode::kValidation, msg);
}

Eigen::VectorXd size_factors_from_totals(const CountMatrix& counts) {
  const auto n = counts.rows();
  require(n > 0, ErrorCode::kInvalidArgument, "size factors: empty count matrix");
  std::vector<double> totals(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    double t = 0.0;
    for (Eigen::Index j = 0; j < counts.cols(); ++j) t += counts(i, j);
    if (t <= 0.0) {
      throw Error(ErrorCode::kValidation,
                  "size factors: cell " + std::to_string(i) + " has zero total count");
    }
    totals[static_cast<std::size_t>(i)] = t;
  }
  std::vector<double> sorted = totals;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  const double median = m % 2 == 1 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = totals[static_cast<std::size_t>(i)] / median;
  return out;
}

CellSubset perturbation_cells(const PerturbDataset& d, std::size_t gene) {
  require(gene < d.num_genes(), ErrorCode::kInvalidArgument,
          "gene index " + std::to_string(gene) + " out of range");
  CellSubset out;
  for (Eigen::Index i = 0; i < d.guides.rows(); ++i) {
    if (d.guides(i, static_cast<Eigen::Index>(gene)) == 1) {
      out.indices.push_back(static_cast<std::size_t>(i));
    }
  }
  return out;
}

CellSubset control_cells(const PerturbDataset& d) {
  CellSubset out;
  for (Eigen::Index i = 0; i < d.guides.rows(); ++i) {
    if (d.guides.row(i).cast<int>().sum() == 0) out.indices.push_back(static_cast<std::size_t>(i));
  }
  return out;
}

namespace {

PerturbDataset take(const PerturbDataset& d, const std::vector<std::size_t>& cells,
                    std::span<const std::size_t> genes) {
  PerturbDataset out;
  const auto n = static_cast<Eigen::Index>(cells.size());
  const auto p = static_cast<Eigen::Index>(genes.size());
  out.counts.resize(n, p);
  out.guides.resize(n, p);
  out.covariates.resize(n, d.covariates.cols());
  out.size_factors.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto i = static_cast<Eigen::Index>(cells[static_cast<std::size_t>(r)]);
    for (Eigen::Index c = 0; c < p; ++c) {
      const auto j = static_cast<Eigen::Index>(genes[static_cast<std::size_t>(c)]);
      out.counts(r, c) = d.counts(i, j);
      out.guides(r, c) = d.guides(i, j);
    }
    out.covariates.row(r) = d.covariates.row(i);
    out.size_factors(r) = d.size_factors(i);
    if (!d.cell_ids.empty()) out.cell_ids.push_back(d.cell_ids[static_cast<std::size_t>(i)]);
  }
  for (auto j : genes) out.gene_names.push_back(d.gene_names[j]);
  out.covariate_names = d.covariate_names;
  return out;
}

std::vector<std::size_t> cells_not_perturbed_at(const PerturbDataset& d,
                                                const std::vector<bool>& removed) {
  std::vector<std::size_t> cells;
  for (Eigen::Index i = 0; i < d.guides.rows(); ++i) {
    bool keep = true;
    for (Eigen::Index j = 0; j < d.guides.cols(); ++j) {
      if (removed[static_cast<std::size_t>(j)] && d.guides(i, j) != 0) keep = false;
    }
    if (keep) cells.push_back(static_cast<std::size_t>(i));
  }
  return cells;
}

}  // namespace

FilterResult min_cell_filter(const PerturbDataset& d, std::size_t min_perturbed) {
  require(min_perturbed >= 1, ErrorCode::kInvalidArgument, "min_perturbed must be >= 1");
  require(min_perturbed <= d.num_cells(), ErrorCode::kInvalidArgument,
          "min_perturbed " + std::to_string(min_perturbed) + " exceeds the number of cells " +
              std::to_string(d.num_cells()));
  FilterResult out;
  std::vector<std::size_t> keep;
  std::vector<bool> removed(d.num_genes(), false);
  for (std::size_t j = 0; j < d.num_genes(); ++j) {
    if (d.perturbed_count(j) >= min_perturbed) {
      keep.push_back(j);
    } else {
      removed[j] = true;
      out.dropped_genes.push_back(d.gene_names[j]);
    }
  }
  require(!keep.empty(), ErrorCode::kValidation,
          "every gene has fewer than " + std::to_string(min_perturbed) + " perturbed cells");
  if (out.dropped_genes.empty()) {
    out.dataset = d;
    return out;
  }
  out.dataset = take(d, cells_not_perturbed_at(d, removed), keep);
  return out;
}

PerturbDataset restrict_genes(const PerturbDataset& d, std::span<const std::size_t> keep) {
  std::vector<bool> removed(d.num_genes(), true);
  for (auto j : keep) {
    require(j < d.num_genes(), ErrorCode::kInvalidArgument,
            "gene index " + std::to_string(j) + " out of range");
    removed[j] = false;
  }
  return take(d, cells_not_perturbed_at(d, removed), keep);
}

PerturbDataset rescale_size_factors(const PerturbDataset& d, double factor) {
  require(factor > 0.0, ErrorCode::kInvalidArgument, "size factor rescaling must be positive");
  PerturbDataset out = d;
  out.size_factors *= factor;
  return out;
}

PerturbDataset append_expression_covariates(const PerturbDataset& d,
                                            std::span<const std::size_t> genes) {
  PerturbDataset out = d;
  const auto j0 = d.covariates.cols();
  out.covariates.conservativeResize(d.covariates.rows(),
                                    j0 + static_cast<Eigen::Index>(genes.size()));
  for (std::size_t c = 0; c < genes.size(); ++c) {
    const auto g = static_cast<Eigen::Index>(genes[c]);
    for (Eigen::Index i = 0; i < d.covariates.rows(); ++i) {
      out.covariates(i, j0 + static_cast<Eigen::Index>(c)) =
          std::log(d.counts(i, g) / d.size_factors(i) + 1.0);
    }
    out.covariate_names.push_back("expr:" + d.gene_names[genes[c]]);
  }
  return out;
}

}  // namespace perturbdag
