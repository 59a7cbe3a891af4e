// SPDX-License-Identifier: Apache-2.0
#include "core/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "core/error.hpp"
#include "core/parallel.hpp"
#include "core/rng.hpp"

namespace perturbdag {

std::string to_string(ConfounderModel m) {
  switch (m) {
    case ConfounderModel::kIndependent: return "independent";
    case ConfounderModel::kLinearInX: return "linear_in_x";
    case ConfounderModel::kNonlinearInX: return "nonlinear_in_x";
  }
  return "independent";
}

std::string to_string(ExpressionModel m) {
  return m == ExpressionModel::kPointMass ? "point_mass" : "gamma";
}

std::string to_string(CovariateKind k) { return k == CovariateKind::kNormal ? "normal" : "binary"; }

ConfounderModel parse_confounder_model(const std::string& s) {
  if (s == "independent") return ConfounderModel::kIndependent;
  if (s == "linear_in_x") return ConfounderModel::kLinearInX;
  if (s == "nonlinear_in_x") return ConfounderModel::kNonlinearInX;
  throw Error(ErrorCode::kParse, "unknown confounder model '" + s + "'");
}

ExpressionModel parse_expression_model(const std::string& s) {
  if (s == "point_mass") return ExpressionModel::kPointMass;
  if (s == "gamma") return ExpressionModel::kGamma;
  throw Error(ErrorCode::kParse, "unknown expression model '" + s + "'");
}

CovariateKind parse_covariate_kind(const std::string& s) {
  if (s == "normal") return CovariateKind::kNormal;
  if (s == "binary") return CovariateKind::kBinary;
  throw Error(ErrorCode::kParse, "unknown covariate kind '" + s + "'");
}

std::vector<std::pair<std::size_t, std::size_t>> GroundTruth::edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (Eigen::Index k = 0; k < theta.cols(); ++k) {
    for (Eigen::Index j = 0; j < theta.rows(); ++j) {
      if (theta(j, k) != 0.0) out.emplace_back(static_cast<std::size_t>(k), static_cast<std::size_t>(j));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> validate_truth(const GroundTruth& t) {
  std::vector<std::string> out;
  const auto p = static_cast<Eigen::Index>(t.num_genes());
  const auto nx = static_cast<Eigen::Index>(t.num_covariates());
  auto shape = [&](bool ok, const std::string& what) {
    if (!ok) out.push_back(what + " has the wrong shape");
  };
  if (p == 0) out.push_back("truth has no genes");
  shape(t.theta.rows() == p && t.theta.cols() == p, "theta");
  shape(t.intercept.size() == p, "intercept");
  shape(t.tau.size() == p, "tau");
  shape(t.beta.rows() == p && t.beta.cols() == nx, "beta");
  shape(t.gamma.rows() == p, "gamma");
  shape(t.noise_sd.size() == p, "noise_sd");
  shape(t.guide_weights.size() == p, "guide_weights");
  if (t.expression_model == ExpressionModel::kGamma) shape(t.dispersion.size() == p, "dispersion");
  if (t.confounder_model != ConfounderModel::kIndependent) {
    shape(t.confounder_loading.rows() == t.gamma.cols() && t.confounder_loading.cols() == nx,
          "confounder_loading");
  }
  if (!out.empty()) return out;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (t.theta(j, j) != 0.0) out.push_back("self-loop on gene '" + t.gene_names[j] + "'");
    if (!(t.noise_sd(j) >= 0.0)) out.push_back("negative noise_sd for '" + t.gene_names[j] + "'");
    if (!(t.guide_weights(j) >= 0.0)) out.push_back("negative guide weight for '" + t.gene_names[j] + "'");
    if (t.expression_model == ExpressionModel::kGamma && !(t.dispersion(j) > 0.0)) {
      out.push_back("dispersion for '" + t.gene_names[j] + "' must be positive");
    }
  }
  if (!(t.control_weight > 0.0)) out.push_back("control_weight must be positive");
  if (!(t.size_factor_log_sd >= 0.0)) out.push_back("size_factor_log_sd must be non-negative");
  if (!(t.binary_probability > 0.0 && t.binary_probability < 1.0)) {
    out.push_back("binary_probability must be in (0,1)");
  }
  if (!t.theta.allFinite() || !t.intercept.allFinite() || !t.tau.allFinite() ||
      !t.beta.allFinite() || !t.gamma.allFinite()) {
    out.push_back("non-finite SEM coefficient");
  }
  std::vector<std::string> names = t.gene_names;
  std::sort(names.begin(), names.end());
  if (std::adjacent_find(names.begin(), names.end()) != names.end()) out.push_back("duplicate gene name");
  return out;
}

std::vector<std::size_t> topological_order(const GroundTruth& t) {
  const std::size_t p = t.num_genes();
  enum { kWhite, kGrey, kBlack };
  std::vector<int> colour(p, kWhite);
  std::vector<std::size_t> order, stack;
  std::vector<std::size_t> parent_of(p, p);
  auto children = [&](std::size_t k) {
    std::vector<std::size_t> c;
    for (std::size_t j = 0; j < p; ++j) {
      if (t.theta(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) != 0.0) c.push_back(j);
    }
    return c;
  };
  // Iterative DFS; post-order reversed gives parents first.
  for (std::size_t root = 0; root < p; ++root) {
    if (colour[root] != kWhite) continue;
    std::vector<std::pair<std::size_t, std::vector<std::size_t>>> frames;
    frames.emplace_back(root, children(root));
    colour[root] = kGrey;
    while (!frames.empty()) {
      auto& [node, pending] = frames.back();
      if (pending.empty()) {
        colour[node] = kBlack;
        order.push_back(node);
        frames.pop_back();
        continue;
      }
      const auto next = pending.back();
      pending.pop_back();
      if (colour[next] == kGrey) {
        std::string cycle = t.gene_names[next];
        bool on = false;
        for (const auto& f : frames) {
          if (f.first == next) on = true;
          if (on && f.first != next) cycle += " -> " + t.gene_names[f.first];
        }
        cycle += " -> " + t.gene_names[next];
        throw Error(ErrorCode::kCycle, "truth graph has a cycle: " + cycle);
      }
      if (colour[next] == kWhite) {
        colour[next] = kGrey;
        frames.emplace_back(next, children(next));
      }
    }
  }
  std::reverse(order.begin(), order.end());
  return order;
}

std::vector<std::vector<std::size_t>> true_descendants(const GroundTruth& t) {
  const auto order = topological_order(t);
  const std::size_t p = t.num_genes();
  std::vector<std::vector<bool>> reach(p, std::vector<bool>(p, false));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const auto k = *it;
    for (std::size_t j = 0; j < p; ++j) {
      if (t.theta(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) == 0.0) continue;
      reach[k][j] = true;
      for (std::size_t m = 0; m < p; ++m) {
        if (reach[j][m]) reach[k][m] = true;
      }
    }
  }
  std::vector<std::vector<std::size_t>> out(p);
  for (std::size_t k = 0; k < p; ++k) {
    for (std::size_t j = 0; j < p; ++j) {
      if (reach[k][j]) out[k].push_back(j);
    }
  }
  return out;
}

namespace {

enum Purpose : std::uint64_t {
  kGuide = 1,
  kCovariate,
  kConfounder,
  kSizeFactor,
  kNoise,
  kExpression,
  kCount,
};

double standard_normal(CounterRng& rng) {
  const double u1 = rng.uniform(), u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

Simulation simulate(const GroundTruth& t, std::size_t n_cells, std::optional<std::uint64_t> seed,
                    unsigned threads) {
  require(seed.has_value(), ErrorCode::kInvalidArgument,
          "simulate: a seed is required for reproducibility");
  const auto problems = validate_truth(t);
  if (!problems.empty()) {
    std::string msg = "invalid truth:";
    for (const auto& s : problems) msg += "\n  " + s;
    throw Error(ErrorCode::kValidation, msg);
  }
  const auto order = topological_order(t);
  require(n_cells >= 2, ErrorCode::kInvalidArgument, "simulate: need at least 2 cells");
  const std::uint64_t s = *seed;
  const std::size_t p = t.num_genes();
  const auto pe = static_cast<Eigen::Index>(p);
  const auto nx = static_cast<Eigen::Index>(t.num_covariates());
  const auto m = static_cast<Eigen::Index>(t.num_confounders());
  const auto n = static_cast<Eigen::Index>(n_cells);

  std::vector<std::uint64_t> gene_keys(p);
  for (std::size_t j = 0; j < p; ++j) gene_keys[j] = hash_label(t.gene_names[j]);
  const std::uint64_t control_key = hash_label("non-targeting");

  Simulation sim;
  auto& d = sim.dataset;
  d.counts.resize(n, pe);
  d.guides = GuideMatrix::Zero(n, pe);
  d.covariates.resize(n, nx);
  d.size_factors.resize(n);
  d.gene_names = t.gene_names;
  d.covariate_names = t.covariate_names;
  d.cell_ids.resize(n_cells);
  sim.latent.log_mu.resize(n, pe);
  sim.latent.u.resize(n, m);
  sim.latent.lambda.resize(n, pe);

  parallel_for(n_cells, threads, [&](std::size_t cell) {
    const auto i = static_cast<Eigen::Index>(cell);
    d.cell_ids[cell] = "cell" + std::to_string(cell + 1);
    // Guide by an exponential race keyed on the option's name; the winner
    // is categorical with probability proportional to its weight.
    double best = CounterRng(s, cell, kGuide, control_key).uniform();
    best = -std::log(best) / t.control_weight;
    Eigen::Index target = -1;
    for (std::size_t j = 0; j < p; ++j) {
      if (t.guide_weights(static_cast<Eigen::Index>(j)) <= 0.0) continue;
      const double e = -std::log(CounterRng(s, cell, kGuide, gene_keys[j]).uniform()) /
                       t.guide_weights(static_cast<Eigen::Index>(j));
      if (e < best) {
        best = e;
        target = static_cast<Eigen::Index>(j);
      }
    }
    if (target >= 0) d.guides(i, target) = 1;

    Eigen::VectorXd x(nx);
    for (Eigen::Index c = 0; c < nx; ++c) {
      CounterRng rng(s, cell, kCovariate, hash_label(t.covariate_names[static_cast<std::size_t>(c)]));
      x(c) = t.covariate_kind == CovariateKind::kNormal
                 ? standard_normal(rng)
                 : (rng.uniform() < t.binary_probability ? 1.0 : 0.0);
    }
    d.covariates.row(i) = x.transpose();

    Eigen::VectorXd u(m);
    for (Eigen::Index c = 0; c < m; ++c) {
      CounterRng rng(s, cell, kConfounder, static_cast<std::uint64_t>(c));
      u(c) = standard_normal(rng);
    }
    if (t.confounder_model == ConfounderModel::kLinearInX) {
      u += t.confounder_loading * x;
    } else if (t.confounder_model == ConfounderModel::kNonlinearInX) {
      u += t.confounder_loading * x.array().sin().matrix();
    }
    sim.latent.u.row(i) = u.transpose();

    {
      CounterRng rng(s, cell, kSizeFactor);
      d.size_factors(i) = std::exp(t.size_factor_log_sd * standard_normal(rng));
    }
    const double ell = d.size_factors(i);

    Eigen::VectorXd log_mu = Eigen::VectorXd::Zero(pe);
    for (auto j : order) {
      const auto jj = static_cast<Eigen::Index>(j);
      CounterRng noise(s, cell, kNoise, gene_keys[j]);
      double v = t.intercept(jj) + t.theta.row(jj).dot(log_mu) + t.tau(jj) * d.guides(i, jj) +
                 t.gamma.row(jj).dot(u) + t.noise_sd(jj) * standard_normal(noise);
      if (nx > 0) v += t.beta.row(jj).dot(x);
      log_mu(jj) = v;
    }
    sim.latent.log_mu.row(i) = log_mu.transpose();

    for (std::size_t j = 0; j < p; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      double lambda = std::exp(log_mu(jj));
      if (t.expression_model == ExpressionModel::kGamma) {
        CounterRng rng(s, cell, kExpression, gene_keys[j]);
        const double phi = t.dispersion(jj);
        lambda = std::gamma_distribution<double>(1.0 / phi, lambda * phi)(rng);
      }
      sim.latent.lambda(i, jj) = lambda;
      CounterRng rng(s, cell, kCount, gene_keys[j]);
      const double mean = ell * lambda;
      const auto y = mean > 0.0 ? std::poisson_distribution<std::uint64_t>(mean)(rng) : 0;
      d.counts(i, jj) = static_cast<std::uint32_t>(std::min<std::uint64_t>(y, UINT32_MAX));
    }
  });
  require(control_cells(d).size() > 0, ErrorCode::kValidation,
          "simulate: design produced no control cell");
  return sim;
}

Simulation simulate(const GroundTruth& t, unsigned threads) {
  return simulate(t, t.n_cells, t.seed, threads);
}

Eigen::VectorXd oracle_population_proxy(const GroundTruth& t, const Eigen::VectorXd& d,
                                        const Eigen::VectorXd& x) {
  require(t.confounder_model != ConfounderModel::kNonlinearInX, ErrorCode::kInvalidArgument,
          "population proxy has no closed form when U depends nonlinearly on X");
  const auto p = static_cast<Eigen::Index>(t.num_genes());
  require(d.size() == p && x.size() == static_cast<Eigen::Index>(t.num_covariates()),
          ErrorCode::kInvalidArgument, "oracle proxy: pattern/covariate length mismatch");
  topological_order(t);
  const Eigen::MatrixXd inv =
      (Eigen::MatrixXd::Identity(p, p) - t.theta).partialPivLu().solve(Eigen::MatrixXd::Identity(p, p));
  const auto m = static_cast<Eigen::Index>(t.num_confounders());
  Eigen::VectorXd u_mean = Eigen::VectorXd::Zero(m);
  if (t.confounder_model == ConfounderModel::kLinearInX && m > 0) u_mean = t.confounder_loading * x;
  Eigen::VectorXd shift = t.intercept + t.tau.cwiseProduct(d) + t.gamma * u_mean;
  if (x.size() > 0) shift += t.beta * x;
  const Eigen::MatrixXd noise =
      t.gamma * t.gamma.transpose() + Eigen::MatrixXd(t.noise_sd.array().square().matrix().asDiagonal());
  const Eigen::MatrixXd total = inv * noise * inv.transpose();
  return inv * shift + 0.5 * total.diagonal();
}

namespace {

// Intercepts putting every gene's control-cell log-mean at log(baseline)
// before the variance terms.
void set_baseline(GroundTruth& t, double baseline) {
  const double c = std::log(baseline);
  for (Eigen::Index j = 0; j < t.theta.rows(); ++j) t.intercept(j) = c * (1.0 - t.theta.row(j).sum());
}

}  // namespace

GroundTruth eight_gene_preset() {
  GroundTruth t;
  const Eigen::Index p = 8;
  for (int j = 1; j <= 8; ++j) t.gene_names.push_back("G" + std::to_string(j));
  t.theta = Eigen::MatrixXd::Zero(p, p);
  auto edge = [&](int parent, int child, double w) { t.theta(child - 1, parent - 1) = w; };
  edge(1, 2, 0.5);
  edge(1, 3, -0.5);
  edge(2, 4, -0.5);
  edge(3, 5, 0.5);
  edge(4, 6, 0.5);
  edge(5, 6, -0.5);
  edge(7, 2, 0.5);
  edge(7, 4, 0.5);
  edge(7, 6, 0.5);
  edge(8, 3, -0.5);
  edge(8, 5, 0.5);
  edge(8, 6, -0.5);
  t.intercept = Eigen::VectorXd::Zero(p);
  set_baseline(t, 4.0);
  t.tau = Eigen::VectorXd::Constant(p, -1.0);
  t.covariate_names = {"X1"};
  t.beta.resize(p, 1);
  t.beta << 0.2, -0.2, 0.2, -0.2, 0.2, -0.2, 0.2, -0.2;
  t.gamma.resize(p, 2);
  t.gamma << 0.4, -0.4,
             -0.4, 0.4,
             0.4, 0.4,
             -0.4, -0.4,
             0.4, -0.4,
             -0.4, 0.4,
             0.4, 0.4,
             -0.4, -0.4;
  t.noise_sd = Eigen::VectorXd::Constant(p, 0.3);
  t.confounder_loading = Eigen::MatrixXd::Zero(2, 1);
  t.dispersion = Eigen::VectorXd::Constant(p, 0.5);
  t.control_weight = 0.65;
  t.guide_weights = Eigen::VectorXd::Constant(p, 0.04375);
  t.n_cells = 8000;
  t.seed = 20240801;
  return t;
}

GroundTruth three_chain_preset(double baseline) {
  GroundTruth t;
  const Eigen::Index p = 3;
  t.gene_names = {"G1", "G2", "G3"};
  t.theta = Eigen::MatrixXd::Zero(p, p);
  t.theta(1, 0) = 0.5;
  t.theta(2, 1) = 0.5;
  t.intercept = Eigen::VectorXd::Zero(p);
  set_baseline(t, baseline);
  t.tau = Eigen::VectorXd::Constant(p, -1.0);
  t.covariate_names = {"X1"};
  t.beta.resize(p, 1);
  t.beta << 0.2, -0.2, 0.2;
  t.gamma.resize(p, 2);
  t.gamma << 0.4, -0.4,
             0.4, 0.4,
             -0.4, 0.4;
  t.noise_sd = Eigen::VectorXd::Constant(p, 0.3);
  t.confounder_loading = Eigen::MatrixXd::Zero(2, 1);
  t.dispersion = Eigen::VectorXd::Constant(p, 0.5);
  t.control_weight = 0.4;
  t.guide_weights = Eigen::VectorXd::Constant(p, 0.2);
  t.n_cells = 4000;
  t.seed = 7;
  return t;
}

GroundTruth restrict_truth(const GroundTruth& t, const std::vector<std::size_t>& keep) {
  GroundTruth r = t;
  const auto q = static_cast<Eigen::Index>(keep.size());
  r.gene_names.clear();
  r.theta.resize(q, q);
  r.intercept.resize(q);
  r.tau.resize(q);
  r.beta.resize(q, t.beta.cols());
  r.gamma.resize(q, t.gamma.cols());
  r.noise_sd.resize(q);
  r.guide_weights.resize(q);
  if (t.dispersion.size() == t.theta.rows()) r.dispersion.resize(q);
  for (Eigen::Index a = 0; a < q; ++a) {
    const auto ka = static_cast<Eigen::Index>(keep[static_cast<std::size_t>(a)]);
    require(keep[static_cast<std::size_t>(a)] < t.num_genes(), ErrorCode::kInvalidArgument,
            "restrict_truth: gene index out of range");
    r.gene_names.push_back(t.gene_names[static_cast<std::size_t>(ka)]);
    for (Eigen::Index b = 0; b < q; ++b) {
      r.theta(a, b) = t.theta(ka, static_cast<Eigen::Index>(keep[static_cast<std::size_t>(b)]));
    }
    r.intercept(a) = t.intercept(ka);
    r.tau(a) = t.tau(ka);
    r.beta.row(a) = t.beta.row(ka);
    r.gamma.row(a) = t.gamma.row(ka);
    r.noise_sd(a) = t.noise_sd(ka);
    r.guide_weights(a) = t.guide_weights(ka);
    if (r.dispersion.size() == q) r.dispersion(a) = t.dispersion(ka);
  }
  return r;
}

}  // namespace perturbdag
