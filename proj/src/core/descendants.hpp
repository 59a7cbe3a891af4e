// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "core/dataset.hpp"
#include "core/glm.hpp"

namespace perturbdag {

using GeneSet = std::set<std::size_t>;
using GeneSets = std::vector<GeneSet>;  // indexed by gene

struct PairTest {
  double z = std::numeric_limits<double>::quiet_NaN();
  double p = 1.0;
  bool tested = false;
  std::string reason;  // why the pair is untested ("no-signal", ...)
};

struct PairTestOptions {
  PvalueTail tail = PvalueTail::kTwoSided;
  std::size_t min_perturbed_cells = 2;
  GlmOptions glm;
  unsigned threads = 1;
};

// Pairwise intervention tests. Row j is the perturbed gene, column k the
// response. The diagonal is untested (z = NaN, p = 1).
struct PairTestMatrix {
  Eigen::MatrixXd z;
  Eigen::MatrixXd pvals;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> tested;
  std::vector<std::vector<std::string>> reasons;

  std::size_t num_genes() const { return static_cast<std::size_t>(z.rows()); }
  static PairTestMatrix untested(std::size_t p);
};

// Fits Y_k ~ offset(log l) + 1 + D_j + X over {D_j = 1} plus controls and
// returns the Wald statistic of the D_j coefficient. Degenerate fits come
// back with tested == false and a reason; j == k or an empty perturbation
// subset throw.
PairTest test_descendant_pair(const PerturbDataset& dataset, std::size_t j, std::size_t k,
                              const PairTestOptions& options = {});

PairTestMatrix compute_pair_tests(const PerturbDataset& dataset,
                                  const PairTestOptions& options = {});

// Transitive closure of a per-gene relation. Genes that reach themselves
// are reported in `self_reaching` (a cycle in the input relation).
struct ClosureResult {
  GeneSets des;
  std::vector<std::size_t> self_reaching;
};

ClosureResult close_descendants(const GeneSets& des_i);

enum class AncestryMode { kClosure, kInfluential };

std::string to_string(AncestryMode mode);
AncestryMode parse_ancestry_mode(const std::string& text);

// A called intervention-descendant claim removed to break a cycle.
struct CycleConflict {
  std::size_t from = 0;
  std::size_t to = 0;
  double p = 1.0;
  std::string note;
};

struct AncestryResult {
  GeneSets des_i;
  GeneSets des;
  GeneSets anc;
  PairTestMatrix pair_tests;
  double alpha_adjusted_threshold = 0.0;
  AncestryMode mode = AncestryMode::kClosure;
  std::vector<CycleConflict> conflicts;
  std::size_t num_tested = 0;
  std::size_t num_untested = 0;
};

// BH over every tested off-diagonal pair, des_I from the rejections,
// cycles broken by dropping the weakest claim (largest p) in each cycle,
// then des per mode and anc by duality.
AncestryResult ancestry_from_pair_tests(const PairTestMatrix& tests, double alpha,
                                        AncestryMode mode);

AncestryResult estimate_ancestry(const PerturbDataset& dataset, double alpha, AncestryMode mode,
                                 const PairTestOptions& options = {});

// Duality always; transitivity and irreflexivity for closure mode.
std::vector<std::string> check_ancestry(const AncestryResult& ancestry);

// anc(k) = { j : k in des(j) }.
GeneSets invert_relation(const GeneSets& des);

// j<TAB>k<TAB>z<TAB>p<TAB>called for every tested pair.
void write_pair_tests_tsv(const AncestryResult& ancestry, const std::vector<std::string>& genes,
                          const std::filesystem::path& path);

}  // namespace perturbdag
