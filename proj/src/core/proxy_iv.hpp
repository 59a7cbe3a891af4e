// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "core/dataset.hpp"
#include "core/descendants.hpp"
#include "core/glm.hpp"

namespace perturbdag {

// First-stage model for the link-scale proxy of gene k:
//   eta_k(D, X) = (1, D_k, D_anc(k), X)' xi_k
// Regressor labels are "intercept", "D:<gene>" and "X:<covariate>".
struct ProxyModel {
  std::size_t gene = 0;
  std::vector<std::size_t> ancestors;
  std::vector<std::string> regressor_labels;
  Eigen::VectorXd xi;
  Eigen::MatrixXd xi_covariance;  // sandwich covariance of xi
};

// Poisson QMLE of Y_k on offset(log l) + (1, D_k, D_anc, X) over all cells.
ProxyModel fit_proxy(const PerturbDataset& dataset, std::size_t k, const GeneSet& anc_k,
                     const GlmOptions& options = {});

// N x dim(xi) matrix of the model's regressors, looked up by label.
Eigen::MatrixXd proxy_regressors(const ProxyModel& model, const PerturbDataset& dataset);

Eigen::VectorXd predict_proxy(const ProxyModel& model, const PerturbDataset& dataset);

struct ProxyInput {
  ProxyModel model;
  Eigen::VectorXd predicted;
};

ProxyInput make_proxy_input(ProxyModel model, const PerturbDataset& dataset);

struct EdgeStat {
  std::size_t parent = 0;
  double theta = 0.0;
  double se_sandwich = 0.0;
  double se_mt = 0.0;
  double z = 0.0;
  double p = 1.0;
};

struct SecondStageOptions {
  PvalueTail tail = PvalueTail::kTwoSided;
  GlmOptions glm;
  double condition_limit = 1e8;  // on the standardized proxy block
  unsigned threads = 1;
};

// Second-stage regression Y_j ~ offset(log l) + 1 + X + D_j + sum_k eta_k
// with Murphy-Topel covariance
//   V_MT = A^-1 (B / N + sum_k C_k V_xi_k C_k') A^-1
// where A, B are the bread and meat of this fit and C_k = d(mean score)/d xi_k.
struct SecondStageFit {
  std::size_t target = 0;
  GlmFit glm;
  Eigen::MatrixXd mt_covariance;
  std::vector<std::size_t> proxy_genes;  // in design order
  std::vector<Eigen::MatrixXd> cross_derivatives;
  std::vector<EdgeStat> edge_stats;      // same order as proxy_genes
  std::vector<std::size_t> dropped_proxies;
  std::vector<std::string> warnings;
};

// Raised when two proxies span the same direction exactly.
class ProxyCollinearityError : public Error {
 public:
  ProxyCollinearityError(std::size_t a, std::size_t b, const std::string& message)
      : Error(ErrorCode::kNumerical, message), pair_(a, b) {}
  std::pair<std::size_t, std::size_t> genes() const noexcept { return pair_; }

 private:
  std::pair<std::size_t, std::size_t> pair_;
};

SecondStageFit fit_second_stage(const PerturbDataset& dataset, std::size_t j,
                                const std::map<std::size_t, ProxyInput>& proxies,
                                const SecondStageOptions& options = {});

// C = (1/N) sum_i [ -mu_i theta_c x_i z_i' + (y_i - mu_i) e_c z_i' ], the
// derivative of the mean second-stage score with respect to the first-stage
// coefficients of the proxy sitting in design column c.
Eigen::MatrixXd score_cross_derivative(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                                       const Eigen::VectorXd& mu, const Eigen::VectorXd& theta,
                                       Eigen::Index column, const Eigen::MatrixXd& z);

// Label of the second-stage column carrying the proxy of `gene`.
std::string proxy_label(const PerturbDataset& dataset, std::size_t gene);

}  // namespace perturbdag
