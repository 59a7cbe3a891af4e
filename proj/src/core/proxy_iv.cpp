// SPDX-License-Identifier: Apache-2.0
#include "core/proxy_iv.hpp"

#include <algorithm>
#include <cmath>

#include "core/parallel.hpp"

namespace perturbdag {

std::string proxy_label(const PerturbDataset& d, std::size_t gene) {
  return "eta:" + d.gene_names.at(gene);
}

ProxyModel fit_proxy(const PerturbDataset& d, std::size_t k, const GeneSet& anc_k,
                     const GlmOptions& options) {
  require(k < d.num_genes(), ErrorCode::kInvalidArgument, "fit_proxy: gene index out of range");
  require(!anc_k.count(k), ErrorCode::kInvalidArgument,
          "fit_proxy: gene '" + d.gene_names[k] + "' listed among its own ancestors");
  ProxyModel model;
  model.gene = k;
  model.ancestors.assign(anc_k.begin(), anc_k.end());
  model.regressor_labels = {"intercept", "D:" + d.gene_names[k]};
  for (auto a : model.ancestors) {
    require(a < d.num_genes(), ErrorCode::kInvalidArgument, "fit_proxy: ancestor out of range");
    require(d.perturbed_count(a) > 0, ErrorCode::kInvalidArgument,
            "fit_proxy: ancestor '" + d.gene_names[a] + "' has no perturbed cells");
    model.regressor_labels.push_back("D:" + d.gene_names[a]);
  }
  for (const auto& x : d.covariate_names) model.regressor_labels.push_back("X:" + x);

  DesignMatrix design;
  design.rows = proxy_regressors(model, d);
  design.column_labels = model.regressor_labels;
  const auto fit = fit_poisson_qmle(d.gene_counts(k), design, d.log_size_factors(), options);
  model.xi = fit.coefficients;
  model.xi_covariance = fit.sandwich_covariance;
  return model;
}

Eigen::MatrixXd proxy_regressors(const ProxyModel& model, const PerturbDataset& d) {
  const auto n = static_cast<Eigen::Index>(d.num_cells());
  Eigen::MatrixXd z(n, static_cast<Eigen::Index>(model.regressor_labels.size()));
  for (std::size_t c = 0; c < model.regressor_labels.size(); ++c) {
    const auto& label = model.regressor_labels[c];
    const auto col = static_cast<Eigen::Index>(c);
    if (label == "intercept") {
      z.col(col).setOnes();
      continue;
    }
    const auto colon = label.find(':');
    const std::string kind = label.substr(0, colon == std::string::npos ? 0 : colon);
    const std::string name = colon == std::string::npos ? label : label.substr(colon + 1);
    if (kind == "D") {
      if (const auto g = d.gene_index(name)) {
        z.col(col) = d.guides.col(static_cast<Eigen::Index>(*g)).cast<double>();
        continue;
      }
    } else if (kind == "X") {
      const auto it = std::find(d.covariate_names.begin(), d.covariate_names.end(), name);
      if (it != d.covariate_names.end()) {
        z.col(col) = d.covariates.col(it - d.covariate_names.begin());
        continue;
      }
    }
    throw Error(ErrorCode::kInvalidArgument,
                "proxy regressor '" + label + "' is not available in the dataset");
  }
  return z;
}

Eigen::VectorXd predict_proxy(const ProxyModel& model, const PerturbDataset& d) {
  require(model.xi.size() == static_cast<Eigen::Index>(model.regressor_labels.size()),
          ErrorCode::kInvalidArgument, "proxy model: coefficient/label length mismatch");
  return proxy_regressors(model, d) * model.xi;
}

ProxyInput make_proxy_input(ProxyModel model, const PerturbDataset& d) {
  ProxyInput in;
  in.predicted = predict_proxy(model, d);
  in.model = std::move(model);
  return in;
}

Eigen::MatrixXd score_cross_derivative(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                       const Eigen::VectorXd& mu, const Eigen::VectorXd& theta,
                                       Eigen::Index column, const Eigen::MatrixXd& z) {
  const double n = static_cast<double>(x.rows());
  Eigen::MatrixXd c = -(x.transpose() * (mu.array() * theta(column)).matrix().asDiagonal() * z);
  c.row(column) += (y - mu).transpose() * z;
  return c / n;
}

namespace {

struct ProxyBlockCheck {
  bool exact = false;
  double condition = 1.0;
  std::size_t first = 0, second = 0;  // positions in the active list when exact
};

ProxyBlockCheck check_proxy_block(const std::vector<const Eigen::VectorXd*>& cols) {
  ProxyBlockCheck out;
  const auto m = static_cast<Eigen::Index>(cols.size());
  if (m < 2) return out;
  const auto n = cols.front()->size();
  Eigen::MatrixXd s(n, m);
  for (Eigen::Index c = 0; c < m; ++c) {
    const auto& v = *cols[static_cast<std::size_t>(c)];
    const double mean = v.mean();
    const double sd = std::sqrt((v.array() - mean).square().sum() / static_cast<double>(n));
    if (sd > 0.0) {
      s.col(c) = ((v.array() - mean) / sd).matrix();
    } else {
      s.col(c).setZero();
    }
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(s, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double smax = sv(0), smin = sv(m - 1);
  out.condition = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  if (smin <= 1e-10 * smax) {
    out.exact = true;
    const Eigen::VectorXd null = svd.matrixV().col(m - 1).cwiseAbs();
    Eigen::Index a = 0;
    null.maxCoeff(&a);
    Eigen::VectorXd rest = null;
    rest(a) = -1.0;
    Eigen::Index b = 0;
    rest.maxCoeff(&b);
    out.first = static_cast<std::size_t>(std::min(a, b));
    out.second = static_cast<std::size_t>(std::max(a, b));
  }
  return out;
}

[[noreturn]] void throw_collinear(const PerturbDataset& d, std::size_t a, std::size_t b) {
  throw ProxyCollinearityError(a, b,
                               "proxies for '" + d.gene_names[a] + "' and '" + d.gene_names[b] +
                                   "' are collinear in the second stage");
}

}  // namespace

SecondStageFit fit_second_stage(const PerturbDataset& d, std::size_t j,
                                const std::map<std::size_t, ProxyInput>& proxies,
                                const SecondStageOptions& options) {
  require(j < d.num_genes(), ErrorCode::kInvalidArgument, "second stage: gene out of range");
  require(!proxies.count(j), ErrorCode::kInvalidArgument,
          "second stage: target '" + d.gene_names[j] + "' appears among its own proxies");
  const auto n = static_cast<Eigen::Index>(d.num_cells());
  SecondStageFit out;
  out.target = j;

  std::vector<std::size_t> active;
  for (const auto& [k, in] : proxies) {
    require(k < d.num_genes(), ErrorCode::kInvalidArgument, "second stage: proxy out of range");
    require(in.predicted.size() == n, ErrorCode::kInvalidArgument,
            "second stage: proxy for '" + d.gene_names[k] + "' has wrong length");
    active.push_back(k);
  }
  while (active.size() >= 2) {
    std::vector<const Eigen::VectorXd*> cols;
    for (auto k : active) cols.push_back(&proxies.at(k).predicted);
    const auto check = check_proxy_block(cols);
    if (check.exact) throw_collinear(d, active[check.first], active[check.second]);
    if (check.condition <= options.condition_limit) break;
    auto worst = active.begin();
    double worst_trace = -1.0;
    for (auto it = active.begin(); it != active.end(); ++it) {
      const double tr = proxies.at(*it).model.xi_covariance.trace();
      if (tr > worst_trace) {
        worst_trace = tr;
        worst = it;
      }
    }
    out.warnings.push_back("near-collinear proxies (condition number " +
                           std::to_string(check.condition) + "); dropped proxy for '" +
                           d.gene_names[*worst] + "'");
    out.dropped_proxies.push_back(*worst);
    active.erase(worst);
  }
  out.proxy_genes = active;

  const auto nx = static_cast<Eigen::Index>(d.num_covariates());
  const auto m = static_cast<Eigen::Index>(active.size());
  const Eigen::Index first_proxy = 2 + nx;
  DesignMatrix design;
  design.rows.resize(n, first_proxy + m);
  design.rows.col(0).setOnes();
  design.column_labels.push_back("intercept");
  for (Eigen::Index c = 0; c < nx; ++c) {
    design.rows.col(1 + c) = d.covariates.col(c);
    design.column_labels.push_back("X:" + d.covariate_names[static_cast<std::size_t>(c)]);
  }
  design.rows.col(1 + nx) = d.guides.col(static_cast<Eigen::Index>(j)).cast<double>();
  design.column_labels.push_back("D:" + d.gene_names[j]);
  for (Eigen::Index c = 0; c < m; ++c) {
    const auto k = active[static_cast<std::size_t>(c)];
    design.rows.col(first_proxy + c) = proxies.at(k).predicted;
    design.column_labels.push_back(proxy_label(d, k));
  }

  const Eigen::VectorXd y = d.gene_counts(j);
  try {
    out.glm = fit_poisson_qmle(y, design, d.log_size_factors(), options.glm);
  } catch (const GlmError& e) {
    if (e.failure() == GlmFailure::kRankDeficient) {
      std::vector<std::size_t> hit;
      for (auto c : e.columns()) {
        if (static_cast<Eigen::Index>(c) >= first_proxy) {
          hit.push_back(active[c - static_cast<std::size_t>(first_proxy)]);
        }
      }
      if (hit.size() >= 2) throw_collinear(d, hit[0], hit[1]);
    }
    throw;
  }

  const Eigen::Index q = design.rows.cols();
  const Eigen::MatrixXd bread_inv = out.glm.bread.ldlt().solve(Eigen::MatrixXd::Identity(q, q));
  out.cross_derivatives.resize(active.size());
  std::vector<Eigen::MatrixXd> terms(active.size());
  parallel_for(active.size(), options.threads, [&](std::size_t idx) {
    const auto& model = proxies.at(active[idx]).model;
    const auto z = proxy_regressors(model, d);
    out.cross_derivatives[idx] =
        score_cross_derivative(design.rows, y, out.glm.fitted, out.glm.coefficients,
                               first_proxy + static_cast<Eigen::Index>(idx), z);
    const auto& c = out.cross_derivatives[idx];
    terms[idx] = c * model.xi_covariance * c.transpose();
  });
  Eigen::MatrixXd middle = out.glm.meat / static_cast<double>(n);
  for (const auto& t : terms) middle += t;
  Eigen::MatrixXd v = bread_inv * middle * bread_inv;
  out.mt_covariance = 0.5 * (v + v.transpose());

  for (Eigen::Index c = 0; c < m; ++c) {
    const auto col = first_proxy + c;
    EdgeStat s;
    s.parent = active[static_cast<std::size_t>(c)];
    s.theta = out.glm.coefficients(col);
    s.se_sandwich = std::sqrt(out.glm.sandwich_covariance(col, col));
    const auto w = wald_z(s.theta, out.mt_covariance(col, col), options.tail);
    s.se_mt = std::sqrt(out.mt_covariance(col, col));
    s.z = w.z;
    s.p = w.p;
    out.edge_stats.push_back(s);
  }
  return out;
}

}  // namespace perturbdag
