// SPDX-License-Identifier: Apache-2.0
#include "core/dag_search.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <tuple>

#include "core/parallel.hpp"
#include "core/proxy_iv.hpp"

namespace perturbdag {

std::vector<std::size_t> CausalDag::positions() const {
  std::vector<std::size_t> pos(ordering.size());
  for (std::size_t r = 0; r < ordering.size(); ++r) pos.at(ordering[r]) = r;
  return pos;
}

std::size_t intervention_score(const GeneSets& des, const GeneSet& removed, std::size_t gene) {
  std::size_t n = 0;
  for (auto k : des.at(gene)) n += !removed.count(k);
  return n;
}

double continuous_tiebreak(const PairTestMatrix& tests, const GeneSets& des,
                           const GeneSet& removed, std::size_t gene,
                           std::vector<std::string>* warnings) {
  double s = 0.0;
  const auto g = static_cast<Eigen::Index>(gene);
  for (auto k : des.at(gene)) {
    if (removed.count(k)) continue;
    const auto kk = static_cast<Eigen::Index>(k);
    if (!tests.tested(g, kk)) {
      if (warnings) {
        warnings->push_back("tie-break: pair (" + std::to_string(gene) + ", " +
                            std::to_string(k) + ") untested; contributes 0");
      }
      continue;
    }
    s -= std::log10(std::max(tests.pvals(g, kk), 1e-300));
  }
  return s;
}

std::size_t select_most_sinklike(const PairTestMatrix& tests, const GeneSets& des,
                                 const GeneSet& removed, const GeneSet& remaining,
                                 std::vector<std::string>* warnings) {
  require(!remaining.empty(), ErrorCode::kInternal, "no gene left to order");
  std::optional<std::tuple<std::size_t, double, std::size_t>> best;
  for (auto g : remaining) {
    const auto key = std::make_tuple(intervention_score(des, removed, g),
                                     continuous_tiebreak(tests, des, removed, g, warnings), g);
    if (!best || key < *best) best = key;
  }
  return std::get<2>(*best);
}

namespace {

struct LayerFit {
  std::vector<EdgeStat> stats;
};

// Fits first stages for every candidate, then the second stage, dropping
// candidates whose fits fail until one second stage succeeds.
LayerFit fit_layer(const PerturbDataset& d, const AncestryResult& ancestry, std::size_t node,
                   LayerRecord& layer, const SearchOptions& options) {
  std::vector<std::optional<ProxyInput>> inputs(layer.candidates.size());
  std::vector<std::string> failures(layer.candidates.size());
  parallel_for(layer.candidates.size(), options.threads, [&](std::size_t idx) {
    const auto k = layer.candidates[idx];
    try {
      inputs[idx] = make_proxy_input(fit_proxy(d, k, ancestry.anc[k], options.glm), d);
    } catch (const Error& e) {
      failures[idx] = std::string("first stage failed: ") + e.what();
    }
  });
  std::map<std::size_t, ProxyInput> proxies;
  for (std::size_t idx = 0; idx < layer.candidates.size(); ++idx) {
    if (inputs[idx]) {
      proxies.emplace(layer.candidates[idx], std::move(*inputs[idx]));
    } else {
      layer.dropped.push_back({layer.candidates[idx], failures[idx]});
    }
  }

  SecondStageOptions second;
  second.tail = options.tail;
  second.glm = options.glm;
  second.condition_limit = options.condition_limit;
  second.threads = options.threads;
  while (!proxies.empty()) {
    try {
      auto fit = fit_second_stage(d, node, proxies, second);
      for (auto k : fit.dropped_proxies) layer.dropped.push_back({k, "near-collinear proxy"});
      for (auto& w : fit.warnings) layer.warnings.push_back(std::move(w));
      return {std::move(fit.edge_stats)};
    } catch (const ProxyCollinearityError& e) {
      const auto victim = std::max(e.genes().first, e.genes().second);
      layer.dropped.push_back({victim, e.what()});
      proxies.erase(victim);
    } catch (const Error& e) {
      for (const auto& [k, in] : proxies) {
        layer.dropped.push_back({k, std::string("second stage failed: ") + e.what()});
      }
      proxies.clear();
    }
  }
  return {};
}

}  // namespace

CausalDag search(const PerturbDataset& d, const AncestryResult& ancestry, double alpha,
                 const SearchOptions& options) {
  const std::size_t p = d.num_genes();
  require(p >= 2, ErrorCode::kInvalidArgument, "need at least 2 genes");
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::kInvalidArgument, "alpha must be in (0,1)");
  require(ancestry.des.size() == p && ancestry.anc.size() == p &&
              ancestry.pair_tests.num_genes() == p,
          ErrorCode::kInvalidArgument, "ancestry covers a different gene set than the dataset");
  const auto problems = check_ancestry(ancestry);
  if (!problems.empty()) {
    std::string msg = "inconsistent ancestry:";
    for (const auto& s : problems) msg += "\n  " + s;
    throw Error(ErrorCode::kInvalidArgument, msg);
  }

  CausalDag dag;
  dag.gene_names = d.gene_names;
  dag.fdr.alpha_total = alpha;
  dag.fdr.spending = options.spending;
  GeneSet removed, remaining;
  for (std::size_t g = 0; g < p; ++g) remaining.insert(g);
  std::vector<std::size_t> reverse_order;

  while (!remaining.empty()) {
    LayerRecord layer;
    const auto node = select_most_sinklike(ancestry.pair_tests, ancestry.des, removed, remaining);
    layer.node = node;
    layer.intervention_score = intervention_score(ancestry.des, removed, node);
    layer.tiebreak_score = continuous_tiebreak(ancestry.pair_tests, ancestry.des, removed, node,
                                               &layer.warnings);
    removed.insert(node);
    remaining.erase(node);
    reverse_order.push_back(node);

    for (auto k : ancestry.anc[node]) {
      if (!removed.count(k)) layer.candidates.push_back(k);
    }
    for (auto k : layer.candidates) {
      require(remaining.count(k), ErrorCode::kInternal,
              "candidate set contains an already-ordered gene");
    }

    if (!layer.candidates.empty()) {
      layer.regression_run = true;
      const auto fit = fit_layer(d, ancestry, node, layer, options);
      std::vector<double> pvals;
      for (const auto& s : fit.stats) {
        layer.regressed.push_back(s.parent);
        pvals.push_back(s.p);
      }
      if (!pvals.empty()) {
        auto outcome = next_batch(dag.fdr, pvals, d.gene_names[node]);
        dag.fdr = std::move(outcome.state);
        layer.batch = dag.fdr.batch_history.size();
        layer.alpha_used = outcome.alpha_used;
        for (std::size_t t = 0; t < fit.stats.size(); ++t) {
          const auto& s = fit.stats[t];
          EdgeEstimate e{s.parent, node,  s.theta, s.se_mt, s.se_sandwich,
                         s.z,      s.p,   outcome.alpha_used, static_cast<bool>(outcome.rejected[t])};
          layer.rejections += e.called;
          dag.tested_edges.push_back(e);
          if (e.called) dag.edges.push_back(e);
        }
      }
    }
    for (const auto& w : layer.warnings) dag.warnings.push_back(d.gene_names[node] + ": " + w);
    dag.layer_log.push_back(std::move(layer));
  }
  dag.ordering.assign(reverse_order.rbegin(), reverse_order.rend());
  require(is_consistent_dag(dag), ErrorCode::kInternal, "search produced an edge against the ordering");
  return dag;
}

bool is_consistent_dag(const CausalDag& dag) {
  const std::size_t p = dag.ordering.size();
  std::vector<bool> seen(p, false);
  for (auto g : dag.ordering) {
    if (g >= p || seen[g]) return false;
    seen[g] = true;
  }
  const auto pos = dag.positions();
  for (const auto& e : dag.edges) {
    if (e.parent >= p || e.child >= p || pos[e.parent] >= pos[e.child]) return false;
  }
  return true;
}

}  // namespace perturbdag
