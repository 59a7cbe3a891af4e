// SPDX-License-Identifier: Apache-2.0
#include "core/descendants.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <limits>

#include "core/error.hpp"
#include "core/fdr.hpp"
#include "core/parallel.hpp"
#include "core/text.hpp"

namespace perturbdag {

PairTestMatrix PairTestMatrix::untested(std::size_t p) {
  const auto n = static_cast<Eigen::Index>(p);
  PairTestMatrix m;
  m.z = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
  m.pvals = Eigen::MatrixXd::Ones(n, n);
  m.tested = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, n, false);
  m.reasons.assign(p, std::vector<std::string>(p));
  for (std::size_t j = 0; j < p; ++j) m.reasons[j][j] = "diagonal";
  return m;
}

namespace {

std::string failure_reason(GlmFailure f) {
  switch (f) {
    case GlmFailure::kNoSignal: return "no-signal";
    case GlmFailure::kDiverged: return "separation";
    case GlmFailure::kRankDeficient: return "rank-deficient";
    case GlmFailure::kNotConverged: return "not-converged";
    case GlmFailure::kInvalidInput: return "too-few-cells";
  }
  return "glm-failure";
}

PairTest run_pair(const PerturbDataset& d, std::size_t j, std::size_t k,
                  const CellSubset& perturbed, const CellSubset& controls,
                  const PairTestOptions& options) {
  PairTest out;
  if (perturbed.size() < options.min_perturbed_cells) {
    out.reason = "too-few-cells";
    return out;
  }
  std::vector<std::size_t> cells;
  cells.reserve(perturbed.size() + controls.size());
  std::merge(perturbed.indices.begin(), perturbed.indices.end(), controls.indices.begin(),
             controls.indices.end(), std::back_inserter(cells));
  const auto n = static_cast<Eigen::Index>(cells.size());
  const auto nx = static_cast<Eigen::Index>(d.num_covariates());
  DesignMatrix design;
  design.rows.resize(n, 2 + nx);
  design.column_labels = {"intercept", "D:" + d.gene_names[j]};
  for (const auto& name : d.covariate_names) design.column_labels.push_back("X:" + name);
  Eigen::VectorXd y(n), offset(n);
  const auto jj = static_cast<Eigen::Index>(j);
  const auto kk = static_cast<Eigen::Index>(k);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto i = static_cast<Eigen::Index>(cells[static_cast<std::size_t>(r)]);
    y(r) = d.counts(i, kk);
    offset(r) = std::log(d.size_factors(i));
    design.rows(r, 0) = 1.0;
    design.rows(r, 1) = d.guides(i, jj);
    for (Eigen::Index c = 0; c < nx; ++c) design.rows(r, 2 + c) = d.covariates(i, c);
  }
  try {
    const auto fit = fit_poisson_qmle(y, design, offset, options.glm);
    const auto w = wald_z(fit.coefficients(1), fit.sandwich_covariance(1, 1), options.tail);
    out.z = w.z;
    out.p = w.p;
    out.tested = true;
  } catch (const GlmError& e) {
    out.reason = failure_reason(e.failure());
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNumerical) throw;
    out.reason = "zero-variance";
  }
  return out;
}

}  // namespace

PairTest test_descendant_pair(const PerturbDataset& d, std::size_t j, std::size_t k,
                              const PairTestOptions& options) {
  require(j < d.num_genes() && k < d.num_genes(), ErrorCode::kInvalidArgument,
          "pair test: gene index out of range");
  require(j != k, ErrorCode::kInvalidArgument, "pair test: j and k must differ");
  const auto perturbed = perturbation_cells(d, j);
  require(!perturbed.empty(), ErrorCode::kInvalidArgument,
          "pair test: no cells perturbed at gene '" + d.gene_names[j] + "'");
  return run_pair(d, j, k, perturbed, control_cells(d), options);
}

PairTestMatrix compute_pair_tests(const PerturbDataset& d, const PairTestOptions& options) {
  const std::size_t p = d.num_genes();
  auto out = PairTestMatrix::untested(p);
  const auto controls = control_cells(d);
  std::vector<CellSubset> perturbed(p);
  for (std::size_t j = 0; j < p; ++j) perturbed[j] = perturbation_cells(d, j);
  std::vector<PairTest> results(p * p);
  parallel_for(p * p, options.threads, [&](std::size_t idx) {
    const std::size_t j = idx / p, k = idx % p;
    if (j == k) return;
    if (perturbed[j].empty()) {
      results[idx].reason = "no-perturbed-cells";
      return;
    }
    results[idx] = run_pair(d, j, k, perturbed[j], controls, options);
  });
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = 0; k < p; ++k) {
      if (j == k) continue;
      const auto& r = results[j * p + k];
      const auto jj = static_cast<Eigen::Index>(j), kk = static_cast<Eigen::Index>(k);
      out.z(jj, kk) = r.z;
      out.pvals(jj, kk) = r.p;
      out.tested(jj, kk) = r.tested;
      out.reasons[j][k] = r.reason;
    }
  }
  return out;
}

ClosureResult close_descendants(const GeneSets& des_i) {
  const std::size_t p = des_i.size();
  ClosureResult out;
  out.des.resize(p);
  for (std::size_t j = 0; j < p; ++j) {
    std::vector<bool> seen(p, false);
    std::deque<std::size_t> frontier(des_i[j].begin(), des_i[j].end());
    for (auto k : des_i[j]) seen[k] = true;
    while (!frontier.empty()) {
      const auto m = frontier.front();
      frontier.pop_front();
      require(m < p, ErrorCode::kInvalidArgument, "closure: gene index out of range");
      for (auto next : des_i[m]) {
        if (!seen[next]) {
          seen[next] = true;
          frontier.push_back(next);
        }
      }
    }
    for (std::size_t k = 0; k < p; ++k) {
      if (seen[k]) out.des[j].insert(k);
    }
    if (seen[j]) out.self_reaching.push_back(j);
  }
  return out;
}

GeneSets invert_relation(const GeneSets& des) {
  GeneSets anc(des.size());
  for (std::size_t j = 0; j < des.size(); ++j) {
    for (auto k : des[j]) anc[k].insert(j);
  }
  return anc;
}

std::string to_string(AncestryMode mode) {
  return mode == AncestryMode::kClosure ? "closure" : "influential";
}

AncestryMode parse_ancestry_mode(const std::string& text) {
  if (text == "closure") return AncestryMode::kClosure;
  if (text == "influential") return AncestryMode::kInfluential;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown ancestry mode '" + text + "' (expected closure or influential)");
}

namespace {

// Removes called claims until the relation has no directed cycle. Two-way
// claims keep the smaller-p direction; longer cycles lose their weakest
// (largest p) claim, one at a time.
std::vector<CycleConflict> break_cycles(GeneSets& des_i, const Eigen::MatrixXd& pvals) {
  std::vector<CycleConflict> conflicts;
  const std::size_t p = des_i.size();
  auto pv = [&](std::size_t a, std::size_t b) {
    return pvals(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  };
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = a + 1; b < p; ++b) {
      if (des_i[a].count(b) && des_i[b].count(a)) {
        const bool drop_ab = pv(a, b) > pv(b, a);
        const auto from = drop_ab ? a : b, to = drop_ab ? b : a;
        des_i[from].erase(to);
        conflicts.push_back({from, to, pv(from, to), "two-way descendant claim; kept smaller p"});
      }
    }
  }
  while (true) {
    const auto closure = close_descendants(des_i);
    if (closure.self_reaching.empty()) break;
    bool found = false;
    std::size_t worst_from = 0, worst_to = 0;
    double worst_p = -1.0;
    for (std::size_t a = 0; a < p; ++a) {
      for (auto b : des_i[a]) {
        if (!closure.des[b].count(a)) continue;  // a -> b is not on a cycle
        if (!found || pv(a, b) > worst_p) {
          found = true;
          worst_p = pv(a, b);
          worst_from = a;
          worst_to = b;
        }
      }
    }
    require(found, ErrorCode::kInternal, "cycle breaking found no cycle edge");
    des_i[worst_from].erase(worst_to);
    conflicts.push_back({worst_from, worst_to, worst_p, "cycle in descendant claims; dropped weakest"});
  }
  return conflicts;
}

}  // namespace

AncestryResult ancestry_from_pair_tests(const PairTestMatrix& tests, double alpha,
                                        AncestryMode mode) {
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::kInvalidArgument, "alpha must be in (0,1)");
  const std::size_t p = tests.num_genes();
  AncestryResult out;
  out.pair_tests = tests;
  out.mode = mode;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<double> pv;
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = 0; k < p; ++k) {
      if (j == k) continue;
      const auto jj = static_cast<Eigen::Index>(j), kk = static_cast<Eigen::Index>(k);
      if (!tests.tested(jj, kk)) {
        ++out.num_untested;
        continue;
      }
      pairs.emplace_back(j, k);
      pv.push_back(tests.pvals(jj, kk));
    }
  }
  out.num_tested = pairs.size();
  const auto bh = bh_adjust(pv, alpha);
  out.alpha_adjusted_threshold = bh.threshold;
  out.des_i.assign(p, {});
  for (std::size_t t = 0; t < pairs.size(); ++t) {
    if (bh.rejected[t]) out.des_i[pairs[t].first].insert(pairs[t].second);
  }
  out.conflicts = break_cycles(out.des_i, tests.pvals);
  if (mode == AncestryMode::kClosure) {
    auto closure = close_descendants(out.des_i);
    require(closure.self_reaching.empty(), ErrorCode::kInternal,
            "descendant closure produced a self-loop after cycle breaking");
    out.des = std::move(closure.des);
  } else {
    out.des = out.des_i;
  }
  out.anc = invert_relation(out.des);
  return out;
}

AncestryResult estimate_ancestry(const PerturbDataset& dataset, double alpha, AncestryMode mode,
                                 const PairTestOptions& options) {
  require(dataset.num_genes() >= 2, ErrorCode::kInvalidArgument, "need at least 2 genes");
  auto tests = compute_pair_tests(dataset, options);
  auto result = ancestry_from_pair_tests(tests, alpha, mode);
  require(result.num_tested > 0, ErrorCode::kNumerical,
          "no testable gene pair (every pair test was degenerate)");
  return result;
}

std::vector<std::string> check_ancestry(const AncestryResult& a) {
  std::vector<std::string> problems;
  const std::size_t p = a.des.size();
  if (a.anc.size() != p) {
    problems.push_back("des and anc cover different gene counts");
    return problems;
  }
  for (std::size_t j = 0; j < p; ++j) {
    if (a.des[j].count(j)) problems.push_back("gene " + std::to_string(j) + " is its own descendant");
    for (auto k : a.des[j]) {
      if (k >= p) {
        problems.push_back("descendant index out of range");
        continue;
      }
      if (!a.anc[k].count(j)) {
        problems.push_back("duality: " + std::to_string(k) + " in des(" + std::to_string(j) +
                           ") but " + std::to_string(j) + " not in anc(" + std::to_string(k) + ")");
      }
      if (a.mode == AncestryMode::kClosure) {
        for (auto m : a.des[k]) {
          if (m != j && !a.des[j].count(m)) {
            problems.push_back("transitivity: " + std::to_string(m) + " in des(" +
                               std::to_string(k) + ") but not in des(" + std::to_string(j) + ")");
          }
        }
      }
    }
    for (auto k : a.anc[j]) {
      if (k >= p || !a.des[k].count(j)) {
        problems.push_back("duality: " + std::to_string(k) + " in anc(" + std::to_string(j) +
                           ") without matching descendant claim");
      }
    }
  }
  return problems;
}

void write_pair_tests_tsv(const AncestryResult& a, const std::vector<std::string>& genes,
                          const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write '" + path.string() + "'");
  out << "j\tk\tz\tp\tcalled\n";
  const std::size_t p = a.pair_tests.num_genes();
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = 0; k < p; ++k) {
      const auto jj = static_cast<Eigen::Index>(j), kk = static_cast<Eigen::Index>(k);
      if (j == k || !a.pair_tests.tested(jj, kk)) continue;
      out << genes[j] << '\t' << genes[k] << '\t' << format_real(a.pair_tests.z(jj, kk)) << '\t'
          << format_real(a.pair_tests.pvals(jj, kk)) << '\t' << (a.des_i[j].count(k) ? 1 : 0)
          << '\n';
    }
  }
}

}  // namespace perturbdag
