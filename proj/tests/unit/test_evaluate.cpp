// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "core/error.hpp"
#include "core/evaluate.hpp"

using namespace perturbdag;

namespace {

DagSummary summary_of(const GroundTruth& t, bool with_edges) {
  DagSummary s;
  s.genes = t.gene_names;
  for (auto k : topological_order(t)) s.ordering.push_back(t.gene_names[k]);
  if (with_edges) {
    for (auto [p, c] : t.edges()) {
      SummaryEdge e;
      e.parent = t.gene_names[p];
      e.child = t.gene_names[c];
      e.theta = t.theta(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(p));
      e.called = true;
      s.tested_edges.push_back(e);
    }
  }
  return s;
}

const std::vector<std::string> kRetained{"G1", "G2", "G3", "G4", "G5", "G6"};

}  // namespace

TEST_CASE("perfect recovery") {
  auto t = eight_gene_preset();
  auto m = evaluate(summary_of(t, true), t);
  CHECK(m.shd == 0);
  CHECK(m.precision == 1.0);
  CHECK(m.recall == 1.0);
  CHECK(m.ordering_validity == 1.0);
  CHECK(m.true_edges == 12);
}

TEST_CASE("empty estimate against six true edges") {
  auto t = restrict_truth(eight_gene_preset(), {0, 1, 2, 3, 4, 5});
  auto m = evaluate(summary_of(t, false), t);
  CHECK(m.true_edges == 6);
  CHECK(m.recall == 0.0);
  CHECK(m.shd == 6);
}

TEST_CASE("restriction evaluates the induced subgraph") {
  auto full = eight_gene_preset();
  auto sub = restrict_truth(full, {0, 1, 2, 3, 4, 5});
  auto m = evaluate(summary_of(sub, true), full, kRetained);
  CHECK(m.shd == 0);
  CHECK(m.true_edges == 6);
  CHECK_THROWS_AS(evaluate(summary_of(sub, true), full), Error);
}

TEST_CASE("a reversed edge and an extra edge") {
  auto t = restrict_truth(eight_gene_preset(), {0, 1, 2, 3, 4, 5});
  auto s = summary_of(t, true);
  std::swap(s.tested_edges[0].parent, s.tested_edges[0].child);
  SummaryEdge extra;
  extra.parent = "G1";
  extra.child = "G6";
  extra.called = true;
  s.tested_edges.push_back(extra);
  SummaryEdge uncalled;
  uncalled.parent = "G1";
  uncalled.child = "G4";
  s.tested_edges.push_back(uncalled);
  auto m = evaluate(s, t);
  CHECK(m.shd == 2);
  CHECK(m.true_positives == 5);
  CHECK(m.precision == doctest::Approx(5.0 / 7.0));
  CHECK(m.recall == doctest::Approx(5.0 / 6.0));
  CHECK(metrics_to_json_text(m).find("\"shd\"") != std::string::npos);
}
