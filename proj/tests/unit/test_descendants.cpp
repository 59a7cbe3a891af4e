// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>

#include "core/descendants.hpp"
#include "core/fdr.hpp"
#include "core/simulator.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace perturbdag;

namespace {

PairTestMatrix matrix_from(const Eigen::MatrixXd& p) {
  auto m = PairTestMatrix::untested(static_cast<std::size_t>(p.rows()));
  for (Eigen::Index j = 0; j < p.rows(); ++j)
    for (Eigen::Index k = 0; k < p.cols(); ++k) {
      if (j == k || p(j, k) < 0) continue;
      m.pvals(j, k) = p(j, k);
      m.tested(j, k) = true;
      m.z(j, k) = 0.0;
    }
  return m;
}

GeneSets random_relation(std::size_t p, double density, std::mt19937_64& rng) {
  std::bernoulli_distribution edge(density);
  GeneSets r(p);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = 0; k < p; ++k)
      if (j != k && edge(rng)) r[j].insert(k);
  return r;
}

GroundTruth two_gene_chain(double theta) {
  auto t = restrict_truth(three_chain_preset(), {0, 1});
  t.theta(1, 0) = theta;
  t.tau.setConstant(-1.0);
  return t;
}

}  // namespace

TEST_CASE("BH step-up examples") {
  std::vector<double> p{0.01, 0.02, 0.04, 0.5};
  auto r = bh_adjust(p, 0.05);
  CHECK(r.rejected == std::vector<bool>{true, true, false, false});
  CHECK(r.num_rejected == 2);
  CHECK(r.threshold == doctest::Approx(0.025));

  std::vector<double> ones(5, 1.0), zeros(5, 0.0);
  CHECK(bh_adjust(ones, 0.1).num_rejected == 0);
  CHECK(bh_adjust(zeros, 0.1).num_rejected == 5);
  CHECK(bh_adjust(std::vector<double>{}, 0.1).threshold == 0.0);
}

TEST_CASE("BH rejection set never shrinks when a p-value is lowered") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u;
  for (int rep = 0; rep < 500; ++rep) {
    std::vector<double> p(12);
    for (auto& v : p) v = u(rng) * u(rng);
    auto before = bh_adjust(p, 0.1);
    const std::size_t i = rng() % p.size();
    p[i] *= u(rng);
    auto after = bh_adjust(p, 0.1);
    for (std::size_t k = 0; k < p.size(); ++k)
      if (before.rejected[k]) CHECK(after.rejected[k]);
  }
}

TEST_CASE("closure examples") {
  GeneSets chain{{1}, {2}, {}};
  auto c = close_descendants(chain);
  CHECK(c.des[0] == GeneSet{1, 2});
  CHECK(c.des[1] == GeneSet{2});
  CHECK(c.des[2].empty());
  CHECK(c.self_reaching.empty());

  GeneSets empty(4);
  for (const auto& s : close_descendants(empty).des) CHECK(s.empty());

  GeneSets loop{{1}, {0}, {}};
  CHECK(close_descendants(loop).self_reaching == std::vector<std::size_t>{0, 1});
}

TEST_CASE("closure equals breadth-first reachability") {
  std::mt19937_64 rng(99);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t p = 2 + rng() % 11;
    auto rel = random_relation(p, 0.15, rng);
    auto oracle = oracle::bfs_reachability(rel);
    auto got = close_descendants(rel).des;
    for (std::size_t j = 0; j < p; ++j) {
      GeneSet want(oracle[j].begin(), oracle[j].end());
      want.erase(j);
      if (oracle[j].count(j)) continue;  // self reach is reported separately
      CHECK(got[j] == want);
    }
  }
}

TEST_CASE("ancestry outputs are dual and closed for random evidence") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u;
  for (int rep = 0; rep < 300; ++rep) {
    const Eigen::Index p = 2 + static_cast<Eigen::Index>(rng() % 9);
    Eigen::MatrixXd pv(p, p);
    for (Eigen::Index j = 0; j < p; ++j)
      for (Eigen::Index k = 0; k < p; ++k) pv(j, k) = u(rng) < 0.1 ? -1.0 : std::pow(u(rng), 4);
    auto tests = matrix_from(pv);
    for (auto mode : {AncestryMode::kClosure, AncestryMode::kInfluential}) {
      auto a = ancestry_from_pair_tests(tests, 0.1, mode);
      CHECK(check_ancestry(a).empty());
      CHECK(a.anc == invert_relation(a.des));
      for (Eigen::Index j = 0; j < p; ++j)
        for (auto k : a.des_i[static_cast<std::size_t>(j)])
          CHECK(tests.tested(j, static_cast<Eigen::Index>(k)));
    }
  }
}

TEST_CASE("a called two-cycle keeps the stronger claim") {
  Eigen::MatrixXd pv(3, 3);
  pv << 0, 1e-3, 0.9, 1e-2, 0, 0.8, 0.7, 0.6, 0;
  auto a = ancestry_from_pair_tests(matrix_from(pv), 0.1, AncestryMode::kClosure);
  CHECK(a.des_i[0] == GeneSet{1});
  CHECK(a.des_i[1].empty());
  REQUIRE(a.conflicts.size() == 1);
  CHECK(a.conflicts[0].from == 1);
  CHECK(a.conflicts[0].to == 0);
}

TEST_CASE("closure mode on a closed relation equals influential mode") {
  Eigen::MatrixXd pv = Eigen::MatrixXd::Constant(3, 3, 0.9);
  pv(0, 1) = pv(0, 2) = pv(1, 2) = 1e-6;
  auto tests = matrix_from(pv);
  auto c = ancestry_from_pair_tests(tests, 0.1, AncestryMode::kClosure);
  auto i = ancestry_from_pair_tests(tests, 0.1, AncestryMode::kInfluential);
  CHECK(c.des == i.des);
  CHECK(c.anc == i.anc);
}

TEST_CASE("pair test argument and degenerate handling") {
  auto d = fixture::make_dataset({{0, 3}, {0, 1}, {0, 2}, {0, 5}, {0, 4}, {0, 1}},
                                 {{1, 0}, {1, 0}, {1, 0}, {0, 0}, {0, 0}, {0, 0}});
  CHECK_THROWS_AS(test_descendant_pair(d, 0, 0), Error);
  CHECK_THROWS_AS(test_descendant_pair(d, 1, 0), Error);  // no cells perturbed at G2
  auto r = test_descendant_pair(d, 0, 0 + 1);
  CHECK(r.tested);
  auto d2 = d;
  d2.counts.col(1).setZero();
  auto z = test_descendant_pair(d2, 0, 1);
  CHECK_FALSE(z.tested);
  CHECK(z.reason == "no-signal");
  CHECK(z.p == 1.0);
}

TEST_CASE("pair tests detect a chain edge") {
  auto truth = two_gene_chain(0.8);
  int strong = 0;
  for (int rep = 0; rep < 100; ++rep) {
    auto sim = simulate(truth, 8000, 300 + rep, 1);
    strong += test_descendant_pair(sim.dataset, 0, 1).p < 1e-4;
  }
  CHECK(strong >= 95);
}

TEST_CASE("pair tests are uniform between disconnected genes") {
  auto truth = two_gene_chain(0.0);
  std::vector<double> p;
  for (int rep = 0; rep < 500; ++rep) {
    auto sim = simulate(truth, 2000, 700 + rep, 1);
    p.push_back(test_descendant_pair(sim.dataset, 0, 1).p);
  }
  CHECK(oracle::ks_uniform_pvalue(p) > 0.01);
}

TEST_CASE("estimated descendants match reachability on the eight-gene design") {
  // at alpha 0.01; with 39 null pairs the pooled BH at 0.1 expects about one
  // false claim per replicate
  auto truth = eight_gene_preset();
  auto reach = true_descendants(truth);
  int exact = 0;
  for (int rep = 0; rep < 100; ++rep) {
    auto sim = simulate(truth, 8000, 1000 + rep, 1);
    auto a = estimate_ancestry(sim.dataset, 0.01, AncestryMode::kClosure);
    CHECK(check_ancestry(a).empty());
    bool ok = true;
    for (std::size_t j = 0; j < reach.size(); ++j)
      ok = ok && a.des[j] == GeneSet(reach[j].begin(), reach[j].end());
    exact += ok;
  }
  CHECK(exact >= 90);
}
