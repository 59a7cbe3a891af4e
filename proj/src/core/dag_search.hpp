// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "core/descendants.hpp"
#include "core/fdr.hpp"
#include "core/glm.hpp"

namespace perturbdag {

struct EdgeEstimate {
  std::size_t parent = 0;
  std::size_t child = 0;
  double theta = 0.0;
  double se_mt = 0.0;
  double se_sandwich = 0.0;
  double z = 0.0;
  double p = 1.0;
  double alpha_used = 0.0;
  bool called = false;
};

struct CandidateDrop {
  std::size_t gene = 0;
  std::string reason;
};

// One step of the sink-to-root search: the node placed, the candidate
// ancestors regressed on, and the online-FDR batch it produced.
struct LayerRecord {
  std::size_t node = 0;
  std::size_t intervention_score = 0;
  double tiebreak_score = 0.0;
  std::vector<std::size_t> candidates;  // ascending
  std::vector<std::size_t> regressed;   // candidates that reached the batch
  std::vector<CandidateDrop> dropped;
  bool regression_run = false;
  std::size_t batch = 0;  // 1-based index into the FDR history, 0 if none
  double alpha_used = 0.0;
  std::size_t rejections = 0;
  std::vector<std::string> warnings;
};

struct CausalDag {
  std::vector<std::size_t> ordering;  // root-most first
  std::vector<EdgeEstimate> edges;    // called edges
  std::vector<EdgeEstimate> tested_edges;
  std::vector<LayerRecord> layer_log;  // in search order, sink first
  OnlineFdrState fdr;
  std::vector<std::string> gene_names;
  std::vector<std::string> warnings;

  // Position of each gene in `ordering`.
  std::vector<std::size_t> positions() const;
};

// |des(gene) \ removed|
std::size_t intervention_score(const GeneSets& des, const GeneSet& removed, std::size_t gene);

// -sum over des(gene) \ removed of log10 p(gene, k). Untested pairs add 0
// and a note to `warnings` when given.
double continuous_tiebreak(const PairTestMatrix& tests, const GeneSets& des,
                           const GeneSet& removed, std::size_t gene,
                           std::vector<std::string>* warnings = nullptr);

// argmin over `remaining` of (intervention score, tie-break score, index).
std::size_t select_most_sinklike(const PairTestMatrix& tests, const GeneSets& des,
                                 const GeneSet& removed, const GeneSet& remaining,
                                 std::vector<std::string>* warnings = nullptr);

struct SearchOptions {
  PvalueTail tail = PvalueTail::kTwoSided;
  SpendingSequence spending;
  GlmOptions glm;
  double condition_limit = 1e8;
  unsigned threads = 1;
};

CausalDag search(const PerturbDataset& dataset, const AncestryResult& ancestry, double alpha,
                 const SearchOptions& options = {});

// True when every edge points from an earlier to a later gene in the ordering
// and the ordering is a permutation.
bool is_consistent_dag(const CausalDag& dag);

}  // namespace perturbdag
