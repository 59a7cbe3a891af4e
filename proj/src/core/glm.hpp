// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "core/error.hpp"

namespace perturbdag {

struct DesignMatrix {
  Eigen::MatrixXd rows;  // N x q
  std::vector<std::string> column_labels;

  std::optional<std::size_t> column(std::string_view label) const;
};

struct GlmOptions {
  double gradient_tolerance = 1e-8;   // on max_c |sum_i (y_i - mu_i) x_ic| / N
  double deviance_tolerance = 1e-10;  // relative change
  int max_iterations = 100;
  double rank_tolerance = 1e-10;      // relative to the largest pivot
  double max_linear_predictor = 30.0; // |x'b| beyond this is treated as divergence
};

// Poisson quasi-likelihood fit with Huber-White covariance.
//   bread = (1/N) sum mu_i x_i x_i'      (minus the mean score Jacobian)
//   meat  = (1/N) sum (y_i - mu_i)^2 x_i x_i'
//   sandwich_covariance = bread^-1 meat bread^-1 / N
//   model_covariance    = bread^-1 / N
struct GlmFit {
  Eigen::VectorXd coefficients;
  Eigen::MatrixXd model_covariance;
  Eigen::MatrixXd sandwich_covariance;
  Eigen::MatrixXd bread;
  Eigen::MatrixXd meat;
  Eigen::VectorXd fitted;  // mu_i including the offset
  std::vector<std::string> column_labels;
  bool converged = false;
  int iterations = 0;
  double final_gradient_norm = 0.0;
  double tolerance = 0.0;

  std::size_t num_observations() const { return static_cast<std::size_t>(fitted.size()); }
  std::optional<std::size_t> column(std::string_view label) const;
};

enum class GlmFailure {
  kInvalidInput,
  kRankDeficient,
  kNotConverged,
  kDiverged,
  kNoSignal,  // response identically zero; a divergence detected up front
};

class GlmError : public Error {
 public:
  GlmError(GlmFailure failure, const std::string& message, std::vector<std::size_t> columns = {})
      : Error(ErrorCode::kNumerical, message), failure_(failure), columns_(std::move(columns)) {}

  GlmFailure failure() const noexcept { return failure_; }
  // Offending design columns (collinear set, separating column), if known.
  const std::vector<std::size_t>& columns() const noexcept { return columns_; }

 private:
  GlmFailure failure_;
  std::vector<std::size_t> columns_;
};

// IRLS with step-halving for log E[y | x] = offset + x'b.
GlmFit fit_poisson_qmle(const Eigen::VectorXd& y, const DesignMatrix& design,
                        const Eigen::VectorXd& offset, const GlmOptions& options = {});

// Which tail probability to report for a Wald statistic.
//   kTwoSided: 2 (1 - Phi(|z|))
//   kUpperAbs: 1 - Phi(|z|)   (one-sided descendant tail)
//   kUpper:    1 - Phi(z)     (signed one-sided parent tail)
enum class PvalueTail { kTwoSided, kUpperAbs, kUpper };

struct WaldTest {
  double z = 0.0;
  double p = 1.0;
};

double tail_probability(double z, PvalueTail tail);

WaldTest wald_z(const GlmFit& fit, std::string_view column_label,
                PvalueTail tail = PvalueTail::kTwoSided);
WaldTest wald_z(double estimate, double variance, PvalueTail tail = PvalueTail::kTwoSided);

}  // namespace perturbdag
