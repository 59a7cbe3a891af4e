// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "core/error.hpp"
#include "core/simulator.hpp"
#include "core/truth_io.hpp"

using namespace perturbdag;

namespace {

GroundTruth single_gene(const std::string& extra) {
  return truth_from_json_text(R"({"genes": ["A"], "edges": [], "intercept": [0.6931471805599453],
    "tau": [0.0], "noise_sd": [0.0], "guide_weights": [0.0], "size_factor_log_sd": 0.0,
    "confounders": {"dimension": 0})" + extra + "}");
}

double mean(const Eigen::VectorXd& v) { return v.mean(); }

double variance(const Eigen::VectorXd& v) {
  return (v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1);
}

}  // namespace

TEST_CASE("point-mass model reproduces the Poisson mean") {
  auto sim = simulate(single_gene(""), 100000, 1, 1);
  const auto& d = sim.dataset;
  CHECK(d.perturbed_count(0) == 0);
  Eigen::VectorXd ratio = d.gene_counts(0).cwiseQuotient(d.size_factors);
  CHECK(mean(ratio) > 1.9);
  CHECK(mean(ratio) < 2.1);
}

TEST_CASE("gamma model gives negative binomial variance") {
  auto sim = simulate(single_gene(R"(, "expression_model": "gamma", "dispersion": [0.5])"), 100000, 2, 1);
  const Eigen::VectorXd y = sim.dataset.gene_counts(0);
  const double mu = 2.0;
  const double nb = mu + 0.5 * mu * mu;
  CHECK(variance(y) > mu);
  CHECK(std::abs(variance(y) / nb - 1.0) < 0.1);
}

TEST_CASE("guide assignment does not depend on the confounder") {
  auto a = eight_gene_preset();
  auto b = a;
  b.gamma *= -3.0;
  auto sa = simulate(a, 3000, 9, 1);
  auto sb = simulate(b, 3000, 9, 1);
  CHECK(sa.dataset.guides == sb.dataset.guides);
  CHECK(sa.latent.u == sb.latent.u);
  CHECK(sa.dataset.counts != sb.dataset.counts);

  // and U is uncorrelated with every guide
  const auto& u = sa.latent.u;
  for (Eigen::Index j = 0; j < sa.dataset.guides.cols(); ++j) {
    Eigen::VectorXd g = sa.dataset.guides.col(j).cast<double>();
    g.array() -= g.mean();
    for (Eigen::Index c = 0; c < u.cols(); ++c) {
      Eigen::VectorXd x = u.col(c).array() - u.col(c).mean();
      const double r = g.dot(x) / std::sqrt(g.squaredNorm() * x.squaredNorm());
      CHECK(std::abs(r) < 4.0 / std::sqrt(3000.0));
    }
  }
}

TEST_CASE("relabelling genes permutes the output") {
  auto t = eight_gene_preset();
  std::vector<std::size_t> order{7, 2, 5, 0, 6, 1, 4, 3};
  auto r = restrict_truth(t, order);
  auto a = simulate(t, 1500, 4, 1);
  auto b = simulate(r, 1500, 4, 1);
  for (std::size_t c = 0; c < order.size(); ++c) {
    const auto bc = static_cast<Eigen::Index>(c), ac = static_cast<Eigen::Index>(order[c]);
    CHECK(b.dataset.counts.col(bc) == a.dataset.counts.col(ac));
    CHECK(b.dataset.guides.col(bc) == a.dataset.guides.col(ac));
  }
}

TEST_CASE("output does not depend on the thread count") {
  auto t = eight_gene_preset();
  auto a = simulate(t, 2000, 8, 1);
  auto b = simulate(t, 2000, 8, 3);
  CHECK(a.dataset.counts == b.dataset.counts);
  CHECK(a.dataset.guides == b.dataset.guides);
  CHECK(a.dataset.size_factors == b.dataset.size_factors);
}

TEST_CASE("design targets of the eight-gene preset") {
  auto sim = simulate(eight_gene_preset(), 8000, 20240801, 1);
  const auto& d = sim.dataset;
  CHECK(d.num_genes() == 8);
  std::size_t controls = 0;
  for (Eigen::Index i = 0; i < d.guides.rows(); ++i) controls += d.guides.row(i).cast<int>().sum() == 0;
  CHECK(controls > 4900);
  CHECK(controls < 5500);
  for (std::size_t j = 0; j < 8; ++j) {
    CHECK(d.perturbed_count(j) > 280);
    CHECK(d.perturbed_count(j) < 420);
  }
  CHECK(validate(d).empty());
}

TEST_CASE("cyclic truth and missing seed are errors") {
  auto cyc = truth_from_json_text(R"({"genes": ["A", "B"], "edges": [
      {"parent": "A", "child": "B", "theta": 0.5}, {"parent": "B", "child": "A", "theta": 0.5}]})");
  try {
    simulate(cyc, 100, 1, 1);
    FAIL("expected a cycle error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCycle);
    CHECK(std::string(e.what()).find("A -> B") != std::string::npos);
  }
  auto t = three_chain_preset();
  t.seed.reset();
  CHECK_THROWS_AS(simulate(t, 1), Error);
}

TEST_CASE("population proxy closed form") {
  auto t = restrict_truth(three_chain_preset(), {0, 1, 2});
  t.gamma.setZero();
  Eigen::VectorXd ctl = Eigen::VectorXd::Zero(3), x = Eigen::VectorXd::Zero(1);
  auto eta = oracle_population_proxy(t, ctl, x);
  // G1 is a root: intercept plus half the noise variance
  CHECK(eta(0) == doctest::Approx(t.intercept(0) + 0.5 * t.noise_sd(0) * t.noise_sd(0)));

  Eigen::VectorXd hit = ctl;
  hit(0) = 1.0;
  auto shifted = oracle_population_proxy(t, hit, x);
  CHECK(shifted(1) - eta(1) == doctest::Approx(t.theta(1, 0) * t.tau(0)));
}

TEST_CASE("truth json round trip") {
  auto t = eight_gene_preset();
  auto text = truth_to_json_text(t);
  auto back = truth_from_json_text(text);
  CHECK(back.gene_names == t.gene_names);
  CHECK(back.theta == t.theta);
  CHECK(back.intercept.isApprox(t.intercept, 1e-15));
  CHECK(back.gamma == t.gamma);
  CHECK(back.seed == t.seed);
  CHECK(truth_to_json_text(back) == text);
  CHECK_THROWS_AS(truth_from_json_text(R"({"edges": []})"), Error);
  CHECK_THROWS_AS(truth_from_json_text("{not json"), Error);
}
