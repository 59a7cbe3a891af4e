// SPDX-License-Identifier: Apache-2.0
#include "core/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "core/stats.hpp"

namespace perturbdag {

std::optional<std::size_t> DesignMatrix::column(std::string_view label) const {
  for (std::size_t c = 0; c < column_labels.size(); ++c) {
    if (column_labels[c] == label) return c;
  }
  return std::nullopt;
}

std::optional<std::size_t> GlmFit::column(std::string_view label) const {
  for (std::size_t c = 0; c < column_labels.size(); ++c) {
    if (column_labels[c] == label) return c;
  }
  return std::nullopt;
}

namespace {

std::string label_of(const DesignMatrix& d, std::size_t c) {
  return c < d.column_labels.size() ? d.column_labels[c] : "#" + std::to_string(c);
}

std::string label_list(const DesignMatrix& d, const std::vector<std::size_t>& cols) {
  std::string s;
  for (std::size_t k = 0; k < cols.size(); ++k) s += (k ? ", " : "") + label_of(d, cols[k]);
  return s;
}

void check_inputs(const Eigen::VectorXd& y, const DesignMatrix& design,
                  const Eigen::VectorXd& offset) {
  const auto n = design.rows.rows();
  const auto q = design.rows.cols();
  auto fail = [](const std::string& m, std::vector<std::size_t> cols = {}) {
    throw GlmError(GlmFailure::kInvalidInput, "glm: " + m, std::move(cols));
  };
  if (q == 0) fail("design has no columns");
  if (static_cast<Eigen::Index>(design.column_labels.size()) != q) {
    fail("design has " + std::to_string(q) + " columns but " +
         std::to_string(design.column_labels.size()) + " labels");
  }
  if (y.size() != n || offset.size() != n) fail("response/offset length does not match design rows");
  if (n <= q) {
    fail("need more observations than columns (N=" + std::to_string(n) + ", q=" +
         std::to_string(q) + ")");
  }
  if (!design.rows.allFinite()) fail("design has non-finite entries");
  if (!offset.allFinite()) fail("offset has non-finite entries");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(y(i) >= 0.0) || !std::isfinite(y(i))) fail("response must be finite and non-negative");
  }
  for (Eigen::Index c = 0; c < q; ++c) {
    if ((design.rows.col(c).array() == 0.0).all()) {
      fail("design column '" + label_of(design, static_cast<std::size_t>(c)) + "' is all zero",
           {static_cast<std::size_t>(c)});
    }
  }
}

// A column whose nonzero support carries no counts (or, for 0/1 columns,
// whose zero set carries none) sends its coefficient to -inf/+inf.
void check_separation(const Eigen::VectorXd& y, const DesignMatrix& design) {
  const auto& x = design.rows;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const auto col = x.col(c).array();
    const bool nonneg = (col >= 0.0).all();
    const bool nonpos = (col <= 0.0).all();
    const bool has_zero = (col == 0.0).any();
    if (!(nonneg || nonpos) || !has_zero) continue;
    double on_support = 0.0, off_support = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) (col(i) != 0.0 ? on_support : off_support) += y(i);
    const bool binary = ((col == 0.0) || (col == 1.0)).all();
    if (on_support == 0.0 || (binary && off_support == 0.0)) {
      throw GlmError(GlmFailure::kDiverged,
                     "glm: complete separation on column '" +
                         label_of(design, static_cast<std::size_t>(c)) +
                         "' (fitted means tend to 0 on one side; coefficient diverges)",
                     {static_cast<std::size_t>(c)});
    }
  }
}

std::vector<std::size_t> collinear_set(const Eigen::ColPivHouseholderQR<Eigen::MatrixXd>& qr,
                                       Eigen::Index rank) {
  const auto q = qr.matrixQR().cols();
  const Eigen::MatrixXd r = qr.matrixQR().topRows(q).triangularView<Eigen::Upper>();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(q);
  v(rank) = 1.0;
  if (rank > 0) {
    v.head(rank) = -r.topLeftCorner(rank, rank).triangularView<Eigen::Upper>().solve(
        r.block(0, rank, rank, 1));
  }
  const auto& perm = qr.colsPermutation().indices();
  const double scale = v.cwiseAbs().maxCoeff();
  std::vector<std::size_t> cols;
  for (Eigen::Index k = 0; k <= rank; ++k) {
    if (std::abs(v(k)) > 1e-6 * scale) cols.push_back(static_cast<std::size_t>(perm(k)));
  }
  std::sort(cols.begin(), cols.end());
  return cols;
}

double quasi_objective(const Eigen::VectorXd& y, const Eigen::VectorXd& eta) {
  // Negative Poisson log quasi-likelihood without the y-only constant.
  return (eta.array().exp() - y.array() * eta.array()).sum();
}

}  // namespace

GlmFit fit_poisson_qmle(const Eigen::VectorXd& y, const DesignMatrix& design,
                        const Eigen::VectorXd& offset, const GlmOptions& options) {
  check_inputs(y, design, offset);
  const auto& x = design.rows;
  const auto n = x.rows();
  const auto q = x.cols();
  const double nd = static_cast<double>(n);

  if (y.sum() == 0.0) {
    throw GlmError(GlmFailure::kNoSignal,
                   "glm: response is identically zero (no-signal); the intercept diverges to -inf");
  }
  check_separation(y, design);

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(q);
  for (Eigen::Index c = 0; c < q; ++c) {
    if ((x.col(c).array() == 1.0).all()) {
      beta(c) = std::log(y.sum() / offset.array().exp().sum());
      break;
    }
  }

  GlmFit fit;
  fit.column_labels = design.column_labels;
  fit.tolerance = options.gradient_tolerance;
  Eigen::VectorXd eta = offset + x * beta;
  double objective = quasi_objective(y, eta);
  Eigen::VectorXd mu;
  double gradient = std::numeric_limits<double>::infinity();

  for (int iter = 0;; ++iter) {
    mu = eta.array().exp();
    const Eigen::VectorXd residual = y - mu;
    gradient = (x.transpose() * residual).cwiseAbs().maxCoeff() / nd;
    fit.iterations = iter;
    if (gradient < options.gradient_tolerance) {
      fit.converged = true;
      break;
    }
    if (iter >= options.max_iterations) {
      throw GlmError(GlmFailure::kNotConverged,
                     "glm: no convergence after " + std::to_string(options.max_iterations) +
                         " iterations (gradient norm " + std::to_string(gradient) + ")");
    }

    const Eigen::VectorXd sqrt_w = mu.array().sqrt();
    const Eigen::MatrixXd wx = sqrt_w.asDiagonal() * x;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(wx);
    const auto diag = qr.matrixQR().diagonal().cwiseAbs();
    const double largest = diag.size() ? diag.maxCoeff() : 0.0;
    Eigen::Index rank = 0;
    while (rank < q && diag(rank) > options.rank_tolerance * largest) ++rank;
    if (rank < q) {
      const auto cols = collinear_set(qr, rank);
      throw GlmError(GlmFailure::kRankDeficient,
                     "glm: design is rank deficient; collinear columns: " + label_list(design, cols),
                     cols);
    }
    const Eigen::VectorXd step = qr.solve((residual.array() / sqrt_w.array()).matrix());

    double t = 1.0;
    Eigen::VectorXd trial_beta, trial_eta;
    double trial_objective = 0.0;
    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving, t *= 0.5) {
      trial_beta = beta + t * step;
      trial_eta = offset + x * trial_beta;
      trial_objective = quasi_objective(y, trial_eta);
      if (std::isfinite(trial_objective) &&
          trial_objective <= objective + 1e-12 * std::abs(objective)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw GlmError(GlmFailure::kNotConverged,
                     "glm: line search failed to decrease the objective (gradient norm " +
                         std::to_string(gradient) + ")");
    }
    const double linear_max = (x * trial_beta).cwiseAbs().maxCoeff();
    if (linear_max > options.max_linear_predictor) {
      throw GlmError(GlmFailure::kDiverged,
                     "glm: linear predictor diverged (|x'b| = " + std::to_string(linear_max) +
                         "); fitted means tend to 0 or infinity");
    }
    // The relative deviance change only signals a stall; convergence is
    // always declared on the gradient so that the score equations hold.
    beta = trial_beta;
    eta = trial_eta;
    objective = trial_objective;
  }

  fit.coefficients = beta;
  fit.fitted = mu;
  fit.final_gradient_norm = gradient;
  const Eigen::VectorXd residual = y - mu;
  fit.bread = x.transpose() * mu.asDiagonal() * x / nd;
  fit.meat = x.transpose() * residual.array().square().matrix().asDiagonal() * x / nd;
  const Eigen::MatrixXd bread_inv = fit.bread.ldlt().solve(Eigen::MatrixXd::Identity(q, q));
  fit.model_covariance = bread_inv / nd;
  Eigen::MatrixXd sandwich = bread_inv * fit.meat * bread_inv / nd;
  fit.sandwich_covariance = 0.5 * (sandwich + sandwich.transpose());
  return fit;
}

double tail_probability(double z, PvalueTail tail) {
  switch (tail) {
    case PvalueTail::kTwoSided:
      return std::min(1.0, 2.0 * normal_upper_tail(std::abs(z)));
    case PvalueTail::kUpperAbs:
      return normal_upper_tail(std::abs(z));
    case PvalueTail::kUpper:
      return normal_upper_tail(z);
  }
  return 1.0;
}

WaldTest wald_z(double estimate, double variance, PvalueTail tail) {
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw Error(ErrorCode::kNumerical,
                "wald test: variance " + std::to_string(variance) + " is not positive");
  }
  WaldTest out;
  out.z = estimate / std::sqrt(variance);
  out.p = tail_probability(out.z, tail);
  return out;
}

WaldTest wald_z(const GlmFit& fit, std::string_view column_label, PvalueTail tail) {
  const auto c = fit.column(column_label);
  if (!c) {
    throw Error(ErrorCode::kInvalidArgument,
                "wald test: no column '" + std::string(column_label) + "' in fit");
  }
  const auto i = static_cast<Eigen::Index>(*c);
  return wald_z(fit.coefficients(i), fit.sandwich_covariance(i, i), tail);
}

}  // namespace perturbdag
