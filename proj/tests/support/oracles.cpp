// SPDX-License-Identifier: Apache-2.0
#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace oracle {

Eigen::VectorXd newton_poisson(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                               const Eigen::VectorXd& offset, int max_iter) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(x.cols());
  auto loglik = [&](const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = offset + x * beta;
    return (y.array() * eta.array() - eta.array().exp()).sum();
  };
  double current = loglik(b);
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd mu = (offset + x * b).array().exp();
    const Eigen::VectorXd grad = x.transpose() * (y - mu);
    const Eigen::MatrixXd hess = x.transpose() * mu.asDiagonal() * x;
    const Eigen::VectorXd step = hess.llt().solve(grad);
    double t = 1.0;
    while (t > 1e-12) {
      const double next = loglik(b + t * step);
      if (std::isfinite(next) && next >= current) break;
      t *= 0.5;
    }
    b += t * step;
    current = loglik(b);
    if (step.cwiseAbs().maxCoeff() * t < 1e-13) break;
  }
  return b;
}

std::vector<std::set<std::size_t>> bfs_reachability(const std::vector<std::set<std::size_t>>& adj) {
  const std::size_t p = adj.size();
  std::vector<std::set<std::size_t>> out(p);
  for (std::size_t s = 0; s < p; ++s) {
    std::vector<bool> seen(p, false);
    std::deque<std::size_t> q;
    for (auto k : adj[s]) q.push_back(k);
    while (!q.empty()) {
      const auto v = q.front();
      q.pop_front();
      if (seen[v]) continue;
      seen[v] = true;
      out[s].insert(v);
      for (auto w : adj[v]) q.push_back(w);
    }
  }
  return out;
}

double rank_sum_pvalue(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n1 = a.size(), n2 = b.size(), n = n1 + n2;
  std::vector<std::pair<double, int>> all;
  for (double v : a) all.emplace_back(v, 0);
  for (double v : b) all.emplace_back(v, 1);
  std::sort(all.begin(), all.end());
  double r1 = 0.0, tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t k = i;
    while (k < n && all[k].first == all[i].first) ++k;
    const double rank = 0.5 * static_cast<double>(i + 1 + k);
    const double t = static_cast<double>(k - i);
    tie_term += t * t * t - t;
    for (std::size_t m = i; m < k; ++m) {
      if (all[m].second == 0) r1 += rank;
    }
    i = k;
  }
  const double u = r1 - static_cast<double>(n1 * (n1 + 1)) / 2.0;
  const double mean = static_cast<double>(n1 * n2) / 2.0;
  const double var = static_cast<double>(n1 * n2) / 12.0 *
                     (static_cast<double>(n + 1) - tie_term / static_cast<double>(n * (n - 1)));
  if (var <= 0.0) return 1.0;
  const double z = std::max(0.0, std::abs(u - mean) - 0.5) / std::sqrt(var);
  return std::erfc(z / std::sqrt(2.0));
}

double ks_uniform_pvalue(std::vector<double> s) {
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    d = std::max({d, static_cast<double>(i + 1) / n - s[i], s[i] - static_cast<double>(i) / n});
  }
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double q = 0.0;
  for (int k = 1; k <= 100; ++k) {
    q += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  }
  return std::clamp(q, 0.0, 1.0);
}

bool is_acyclic(std::size_t p, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  std::vector<std::size_t> indeg(p, 0);
  std::vector<std::vector<std::size_t>> out(p);
  for (const auto& [a, b] : edges) {
    out[a].push_back(b);
    ++indeg[b];
  }
  std::deque<std::size_t> q;
  for (std::size_t v = 0; v < p; ++v) {
    if (!indeg[v]) q.push_back(v);
  }
  std::size_t seen = 0;
  while (!q.empty()) {
    const auto v = q.front();
    q.pop_front();
    ++seen;
    for (auto w : out[v]) {
      if (--indeg[w] == 0) q.push_back(w);
    }
  }
  return seen == p;
}

std::vector<double> naive_proxy_thetas(const perturbdag::PerturbDataset& d, std::size_t j,
                                       const std::vector<std::size_t>& candidates) {
  const auto n = static_cast<Eigen::Index>(d.num_cells());
  const auto nx = static_cast<Eigen::Index>(d.num_covariates());
  const auto m = static_cast<Eigen::Index>(candidates.size());
  perturbdag::DesignMatrix design;
  design.rows.resize(n, 2 + nx + m);
  design.rows.col(0).setOnes();
  design.column_labels.push_back("intercept");
  for (Eigen::Index c = 0; c < nx; ++c) {
    design.rows.col(1 + c) = d.covariates.col(c);
    design.column_labels.push_back("X" + std::to_string(c));
  }
  design.rows.col(1 + nx) = d.guides.col(static_cast<Eigen::Index>(j)).cast<double>();
  design.column_labels.push_back("D");
  for (Eigen::Index c = 0; c < m; ++c) {
    const auto k = static_cast<Eigen::Index>(candidates[static_cast<std::size_t>(c)]);
    design.rows.col(2 + nx + c) =
        (d.counts.col(k).cast<double>().array() / d.size_factors.array() + 1.0).log().matrix();
    design.column_labels.push_back("naive" + std::to_string(c));
  }
  const auto fit = perturbdag::fit_poisson_qmle(d.gene_counts(j), design, d.log_size_factors());
  std::vector<double> out;
  for (Eigen::Index c = 0; c < m; ++c) out.push_back(fit.coefficients(2 + nx + c));
  return out;
}

}  // namespace oracle
