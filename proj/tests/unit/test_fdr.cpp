// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "core/error.hpp"
#include "core/fdr.hpp"

using namespace perturbdag;

TEST_CASE("spending sequences") {
  SpendingSequence inv;
  CHECK(inv.gamma(1) == doctest::Approx(6.0 / (std::numbers::pi * std::numbers::pi)));
  double sum = 0.0;
  for (std::size_t t = 1; t <= 100000; ++t) sum += inv.gamma(t);
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-4));

  auto geo = SpendingSequence::parse("geometric:0.25");
  CHECK(geo.gamma(1) == doctest::Approx(0.75));
  CHECK(geo.gamma(2) == doctest::Approx(0.1875));
  CHECK(SpendingSequence::parse(geo.describe()).ratio == doctest::Approx(0.25));
  CHECK_THROWS_AS(SpendingSequence::parse("geometric:1.5"), Error);
  CHECK_THROWS_AS(SpendingSequence::parse("linear"), Error);
}

TEST_CASE("first null batch spends only the scheduled budget") {
  OnlineFdrState s;
  std::vector<double> ones(4, 1.0);
  auto out = next_batch(s, ones);
  CHECK(out.alpha_used == doctest::Approx(0.1 * s.spending.gamma(1)));
  for (bool r : out.rejected) CHECK_FALSE(r);
  REQUIRE(out.state.batch_history.size() == 1);
  CHECK(out.state.batch_history[0].alpha == doctest::Approx(out.alpha_used));
}

TEST_CASE("empty batch leaves the state untouched") {
  OnlineFdrState s;
  auto first = next_batch(s, std::vector<double>{0.5, 0.001});
  auto out = next_batch(first.state, std::vector<double>{});
  CHECK(out.rejected.empty());
  CHECK(out.state.batch_history.size() == first.state.batch_history.size());
  CHECK(out.state.next_level(3) == doctest::Approx(first.state.next_level(3)));
}

TEST_CASE("p-values outside the unit interval are rejected") {
  OnlineFdrState s;
  CHECK_THROWS_AS(next_batch(s, std::vector<double>{1.5}), Error);
  CHECK_THROWS_AS(next_batch(s, std::vector<double>{-0.1}), Error);
}

TEST_CASE("R plus counts a zeroed p-value") {
  std::vector<double> p{0.01, 0.5, 0.9};
  CHECK(rejections_plus(p, 0.05) == 2);
  std::vector<double> none{0.9, 0.9};
  CHECK(rejections_plus(none, 0.05) == 1);
}

TEST_CASE("levels stay positive and rejections earn budget") {
  OnlineFdrState quiet, busy;
  std::vector<double> nulls(5, 0.8), hits(5, 1e-9);
  for (int t = 0; t < 10; ++t) {
    quiet = next_batch(quiet, nulls).state;
    busy = next_batch(busy, hits).state;
    CHECK(quiet.next_level(5) > 0.0);
    CHECK(busy.next_level(5) >= quiet.next_level(5));
  }
  CHECK(busy.total_rejections() == 50);
  CHECK(quiet.total_rejections() == 0);
}

TEST_CASE("the procedure is deterministic") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u;
  std::vector<std::vector<double>> stream(20, std::vector<double>(6));
  for (auto& b : stream)
    for (auto& p : b) p = std::pow(u(rng), 3);
  OnlineFdrState a, b;
  for (const auto& batch : stream) {
    auto ra = next_batch(a, batch);
    auto rb = next_batch(b, batch);
    CHECK(ra.rejected == rb.rejected);
    CHECK(ra.alpha_used == rb.alpha_used);
    a = ra.state;
    b = rb.state;
  }
}

TEST_CASE("all-null streams keep the FDR at alpha") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u;
  const int streams = 500;
  int any = 0;
  for (int r = 0; r < streams; ++r) {
    OnlineFdrState s;
    for (int t = 0; t < 50; ++t) {
      std::vector<double> batch(20);
      for (auto& p : batch) p = u(rng);
      s = next_batch(s, batch).state;
    }
    any += s.total_rejections() > 0;  // every rejection is false, so FDP is 0 or 1
  }
  CHECK(static_cast<double>(any) / streams <= 0.1 + 0.02);
}
