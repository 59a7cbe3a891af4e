// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core/dag_search.hpp"
#include "core/simulator.hpp"

namespace perturbdag {

struct SummaryEdge {
  std::string parent;
  std::string child;
  double theta = 0.0;
  double se_mt = 0.0;
  double z = 0.0;
  double p = 1.0;
  double alpha_used = 0.0;
  bool called = false;
};

// Name-based view of an estimated DAG, as read back from dag.json.
struct DagSummary {
  std::vector<std::string> genes;
  std::vector<std::string> ordering;  // root-most first
  std::vector<SummaryEdge> tested_edges;

  static DagSummary from(const CausalDag& dag);
};

struct EdgeError {
  std::string parent;
  std::string child;
  double theta_true = 0.0;
  double theta_hat = 0.0;  // NaN when the pair was never regressed
  double error = 0.0;
  bool tested = false;
  bool called = false;
};

struct Metrics {
  std::vector<std::string> genes;
  std::size_t shd = 0;
  double precision = 1.0;
  double recall = 1.0;
  double ordering_validity = 1.0;
  std::size_t true_edges = 0;
  std::size_t estimated_edges = 0;
  std::size_t true_positives = 0;
  std::vector<EdgeError> edge_errors;  // true edges, then false calls
};

// Compares called edges against the truth. With `restriction`, the truth is
// cut down to the induced subgraph on those genes first; the estimated gene
// set must then equal the restriction. Mismatched universes throw.
Metrics evaluate(const DagSummary& dag, const GroundTruth& truth,
                 const std::optional<std::vector<std::string>>& restriction = std::nullopt);

std::string metrics_to_json_text(const Metrics& metrics);

}  // namespace perturbdag
