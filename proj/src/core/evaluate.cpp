// SPDX-License-Identifier: Apache-2.0
#include "core/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include <json.hpp>

#include "core/error.hpp"

namespace perturbdag {

DagSummary DagSummary::from(const CausalDag& dag) {
  DagSummary s;
  s.genes = dag.gene_names;
  for (auto g : dag.ordering) s.ordering.push_back(dag.gene_names.at(g));
  for (const auto& e : dag.tested_edges) {
    s.tested_edges.push_back({dag.gene_names.at(e.parent), dag.gene_names.at(e.child), e.theta,
                              e.se_mt, e.z, e.p, e.alpha_used, e.called});
  }
  return s;
}

Metrics evaluate(const DagSummary& dag, const GroundTruth& full_truth,
                 const std::optional<std::vector<std::string>>& restriction) {
  GroundTruth truth = full_truth;
  if (restriction) {
    std::vector<std::size_t> keep;
    for (const auto& name : *restriction) {
      const auto it = std::find(full_truth.gene_names.begin(), full_truth.gene_names.end(), name);
      require(it != full_truth.gene_names.end(), ErrorCode::kValidation,
              "restriction names gene '" + name + "' absent from the truth");
      keep.push_back(static_cast<std::size_t>(it - full_truth.gene_names.begin()));
    }
    truth = restrict_truth(full_truth, keep);
  }
  const std::set<std::string> est_genes(dag.genes.begin(), dag.genes.end());
  const std::set<std::string> true_genes(truth.gene_names.begin(), truth.gene_names.end());
  if (est_genes != true_genes) {
    std::string msg = "gene universes differ between the estimate and the truth";
    for (const auto& g : est_genes) {
      if (!true_genes.count(g)) msg += "; '" + g + "' only in the estimate";
    }
    for (const auto& g : true_genes) {
      if (!est_genes.count(g)) msg += "; '" + g + "' only in the truth";
    }
    if (!restriction) msg += " (pass a restriction to compare on a subset)";
    throw Error(ErrorCode::kValidation, msg);
  }
  require(dag.ordering.size() == dag.genes.size(), ErrorCode::kValidation,
          "estimated ordering does not list every gene once");

  std::map<std::string, std::size_t> pos;
  for (std::size_t r = 0; r < dag.ordering.size(); ++r) {
    require(pos.emplace(dag.ordering[r], r).second && est_genes.count(dag.ordering[r]),
            ErrorCode::kValidation, "estimated ordering is not a permutation of its genes");
  }

  using Pair = std::pair<std::string, std::string>;
  std::map<Pair, double> truth_edges;
  for (const auto& [k, j] : truth.edges()) {
    truth_edges[{truth.gene_names[k], truth.gene_names[j]}] =
        truth.theta(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
  }
  std::map<Pair, const SummaryEdge*> tested, called;
  for (const auto& e : dag.tested_edges) {
    require(est_genes.count(e.parent) && est_genes.count(e.child), ErrorCode::kValidation,
            "estimated edge names an unknown gene");
    tested[{e.parent, e.child}] = &e;
    if (e.called) called[{e.parent, e.child}] = &e;
  }

  Metrics m;
  m.genes = truth.gene_names;
  m.true_edges = truth_edges.size();
  m.estimated_edges = called.size();
  std::set<Pair> unordered;
  auto key = [](const std::string& a, const std::string& b) { return a < b ? Pair{a, b} : Pair{b, a}; };
  for (const auto& [e, w] : truth_edges) unordered.insert(key(e.first, e.second));
  for (const auto& [e, ptr] : called) unordered.insert(key(e.first, e.second));
  for (const auto& [a, b] : unordered) {
    const int t = truth_edges.count({a, b}) ? 1 : truth_edges.count({b, a}) ? 2 : 0;
    const int s = called.count({a, b}) ? 1 : called.count({b, a}) ? 2 : 0;
    if (t != s) ++m.shd;
  }
  std::size_t respected = 0;
  for (const auto& [e, w] : truth_edges) {
    EdgeError row;
    row.parent = e.first;
    row.child = e.second;
    row.theta_true = w;
    row.theta_hat = std::numeric_limits<double>::quiet_NaN();
    if (const auto it = tested.find(e); it != tested.end()) {
      row.tested = true;
      row.called = it->second->called;
      row.theta_hat = it->second->theta;
    }
    row.error = row.theta_hat - w;
    m.true_positives += row.called;
    respected += pos.at(e.first) < pos.at(e.second);
    m.edge_errors.push_back(row);
  }
  for (const auto& [e, ptr] : called) {
    if (truth_edges.count(e)) continue;
    m.edge_errors.push_back({e.first, e.second, 0.0, ptr->theta, ptr->theta, true, true});
  }
  if (m.estimated_edges) m.precision = static_cast<double>(m.true_positives) / static_cast<double>(m.estimated_edges);
  if (m.true_edges) {
    m.recall = static_cast<double>(m.true_positives) / static_cast<double>(m.true_edges);
    m.ordering_validity = static_cast<double>(respected) / static_cast<double>(m.true_edges);
  }
  return m;
}

std::string metrics_to_json_text(const Metrics& m) {
  nlohmann::ordered_json j;
  j["genes"] = m.genes;
  j["shd"] = m.shd;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["ordering_validity"] = m.ordering_validity;
  j["true_edges"] = m.true_edges;
  j["estimated_edges"] = m.estimated_edges;
  j["true_positives"] = m.true_positives;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& e : m.edge_errors) {
    nlohmann::ordered_json r;
    r["parent"] = e.parent;
    r["child"] = e.child;
    r["theta_true"] = e.theta_true;
    if (std::isfinite(e.theta_hat)) {
      r["theta_hat"] = e.theta_hat;
      r["error"] = e.error;
    } else {
      r["theta_hat"] = nullptr;
      r["error"] = nullptr;
    }
    r["tested"] = e.tested;
    r["called"] = e.called;
    rows.push_back(r);
  }
  j["edge_errors"] = rows;
  return j.dump(2) + "\n";
}

}  // namespace perturbdag
