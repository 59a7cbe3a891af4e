// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace perturbdag {

using CountMatrix = Eigen::Matrix<std::uint32_t, Eigen::Dynamic, Eigen::Dynamic>;
using GuideMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

// Observed Perturb-seq data for N cells and p genes. Rows are cells.
// guides(i, j) == 1 means cell i carries the guide targeting gene j; an
// all-zero row is a non-targeting control. Immutable once built; share by
// const reference.
struct PerturbDataset {
  CountMatrix counts;            // N x p
  GuideMatrix guides;            // N x p
  Eigen::MatrixXd covariates;    // N x J, J may be 0
  Eigen::VectorXd size_factors;  // N
  std::vector<std::string> gene_names;
  std::vector<std::string> cell_ids;
  std::vector<std::string> covariate_names;

  std::size_t num_cells() const { return static_cast<std::size_t>(counts.rows()); }
  std::size_t num_genes() const { return static_cast<std::size_t>(counts.cols()); }
  std::size_t num_covariates() const { return static_cast<std::size_t>(covariates.cols()); }

  std::optional<std::size_t> gene_index(std::string_view name) const;
  Eigen::VectorXd log_size_factors() const { return size_factors.array().log().matrix(); }
  Eigen::VectorXd gene_counts(std::size_t j) const { return counts.col(j).cast<double>(); }
  std::size_t perturbed_count(std::size_t j) const;
};

// Ordered cell indices into a dataset; strictly increasing.
struct CellSubset {
  std::vector<std::size_t> indices;

  std::size_t size() const { return indices.size(); }
  bool empty() const { return indices.empty(); }
};

// Lists every violated structural invariant; empty when the dataset is
// well formed.
std::vector<std::string> validate(const PerturbDataset& dataset);

// Throws Error(kValidation) carrying all violations, one per line.
void require_valid(const PerturbDataset& dataset);

// l_i = total_i / median(total). Throws naming the first zero-total cell.
Eigen::VectorXd size_factors_from_totals(const CountMatrix& counts);

CellSubset perturbation_cells(const PerturbDataset& dataset, std::size_t gene);
CellSubset control_cells(const PerturbDataset& dataset);

struct FilterResult {
  PerturbDataset dataset;
  std::vector<std::string> dropped_genes;
};

constexpr std::size_t kDefaultMinPerturbedCells = 50;

// Removes genes with fewer than `min_perturbed` perturbed cells from the
// node set. Cells carrying a guide for a removed gene are dropped as well,
// otherwise they would masquerade as controls. Size factors are kept as
// computed on the full data.
FilterResult min_cell_filter(const PerturbDataset& dataset, std::size_t min_perturbed);

// Keeps only the listed gene columns (in the given order) and drops every
// cell perturbed at a removed gene.
PerturbDataset restrict_genes(const PerturbDataset& dataset, std::span<const std::size_t> keep);

// Same dataset with size factors multiplied by `factor`.
PerturbDataset rescale_size_factors(const PerturbDataset& dataset, double factor);

// Appends log(Y_g / l + 1) of the listed genes as covariate columns named
// "expr:<gene>".
PerturbDataset append_expression_covariates(const PerturbDataset& dataset,
                                            std::span<const std::size_t> genes);

}  // namespace perturbdag
