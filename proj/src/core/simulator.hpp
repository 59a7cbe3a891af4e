// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "core/dataset.hpp"

namespace perturbdag {

enum class ConfounderModel {
  kIndependent,   // U ~ N(0, I), independent of X
  kLinearInX,     // U = L X + Z, Z ~ N(0, I)
  kNonlinearInX,  // U = sin(X) loadings + Z; no closed-form proxy
};

enum class ExpressionModel {
  kPointMass,  // lambda = mu
  kGamma,      // lambda ~ Gamma(shape 1/phi, scale mu phi), so Y is NB
};

enum class CovariateKind { kNormal, kBinary };

std::string to_string(ConfounderModel m);
std::string to_string(ExpressionModel m);
std::string to_string(CovariateKind k);
ConfounderModel parse_confounder_model(const std::string& s);
ExpressionModel parse_expression_model(const std::string& s);
CovariateKind parse_covariate_kind(const std::string& s);

// Log-linear SEM over latent expressions mu:
//   log mu_j = theta_j0 + sum_k theta(j, k) log mu_k + tau_j D_j + beta_j' X
//              + gamma_j' U + eps_j,    eps_j ~ N(0, noise_sd_j^2)
// observed through Y_j ~ Poisson(l * lambda_j).
struct GroundTruth {
  std::vector<std::string> gene_names;
  Eigen::MatrixXd theta;      // p x p, row = child, column = parent
  Eigen::VectorXd intercept;  // theta_j0
  Eigen::VectorXd tau;
  Eigen::MatrixXd beta;       // p x J
  Eigen::MatrixXd gamma;      // p x m
  Eigen::VectorXd noise_sd;   // p
  std::vector<std::string> covariate_names;
  CovariateKind covariate_kind = CovariateKind::kNormal;
  double binary_probability = 0.5;
  ConfounderModel confounder_model = ConfounderModel::kIndependent;
  Eigen::MatrixXd confounder_loading;  // m x J, used by the X-dependent models
  ExpressionModel expression_model = ExpressionModel::kPointMass;
  Eigen::VectorXd dispersion;  // p, Gamma model only
  double control_weight = 0.65;
  Eigen::VectorXd guide_weights;  // p, relative to control_weight
  double size_factor_log_sd = 0.4;
  std::size_t n_cells = 8000;
  std::optional<std::uint64_t> seed;

  std::size_t num_genes() const { return gene_names.size(); }
  std::size_t num_covariates() const { return covariate_names.size(); }
  std::size_t num_confounders() const { return static_cast<std::size_t>(gamma.cols()); }
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;  // (parent, child)
};

// Structural problems, each naming the offending entry; empty when valid.
std::vector<std::string> validate_truth(const GroundTruth& truth);

// Parents before children. Throws Error(kCycle) naming one cycle.
std::vector<std::size_t> topological_order(const GroundTruth& truth);

// true ancestry: reach[j] = genes reachable from j along edges
std::vector<std::vector<std::size_t>> true_descendants(const GroundTruth& truth);

struct LatentRecord {
  Eigen::MatrixXd log_mu;  // N x p
  Eigen::MatrixXd u;       // N x m
  Eigen::MatrixXd lambda;  // N x p
};

struct Simulation {
  PerturbDataset dataset;
  LatentRecord latent;
};

// Cells are generated independently from per-(cell, purpose, name) random
// streams, so the output does not depend on `threads` and follows gene
// names under a relabelling. Guides are drawn before U.
Simulation simulate(const GroundTruth& truth, std::size_t n_cells,
                    std::optional<std::uint64_t> seed, unsigned threads = 1);
Simulation simulate(const GroundTruth& truth, unsigned threads = 1);

// log E[Y_k / l | D = d, X = x] for every gene, in closed form. Requires a
// confounder model with E[U | x] linear in x.
Eigen::VectorXd oracle_population_proxy(const GroundTruth& truth, const Eigen::VectorXd& d,
                                        const Eigen::VectorXd& x);

// Eight genes G1..G8 with G1 -> {G2, G3}, G2 -> G4, G3 -> G5, {G4, G5} -> G6
// and two further genes, G7 -> {G2, G4, G6} and G8 -> {G3, G5, G6}, that act
// as confounders when left out of an analysis. Edge weights are +-0.5.
GroundTruth eight_gene_preset();

// G1 -> G2 -> G3 with theta_21 = theta_32 = 0.5 (theta_31 = 0), N = 4000.
// `baseline` is the control-cell mean of every gene on the count scale.
GroundTruth three_chain_preset(double baseline = 4.0);

// Restriction of the truth to a gene subset (induced subgraph).
GroundTruth restrict_truth(const GroundTruth& truth, const std::vector<std::size_t>& keep);

}  // namespace perturbdag
