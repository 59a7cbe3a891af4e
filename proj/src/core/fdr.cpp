// SPDX-License-Identifier: Apache-2.0
#include "core/fdr.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "core/error.hpp"
#include "core/text.hpp"

namespace perturbdag {

BhResult bh_adjust(std::span<const double> pvals, double alpha) {
  BhResult out;
  const std::size_t m = pvals.size();
  out.rejected.assign(m, false);
  if (m == 0) return out;
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::kInvalidArgument, "BH: alpha must be in (0,1)");
  for (double p : pvals) {
    require(p >= 0.0 && p <= 1.0, ErrorCode::kInvalidArgument,
            "BH: p-value " + format_real(p) + " outside [0,1]");
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pvals[a] < pvals[b]; });
  std::size_t k_star = 0;
  for (std::size_t k = 1; k <= m; ++k) {
    if (pvals[order[k - 1]] <= static_cast<double>(k) * alpha / static_cast<double>(m)) k_star = k;
  }
  if (k_star == 0) return out;
  out.threshold = static_cast<double>(k_star) * alpha / static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (pvals[i] <= out.threshold) {
      out.rejected[i] = true;
      ++out.num_rejected;
    }
  }
  return out;
}

std::size_t rejections_plus(std::span<const double> pvals, double alpha) {
  std::size_t best = 0;
  std::vector<double> work(pvals.begin(), pvals.end());
  for (std::size_t i = 0; i < work.size(); ++i) {
    const double saved = work[i];
    work[i] = 0.0;
    best = std::max(best, bh_adjust(work, alpha).num_rejected);
    work[i] = saved;
  }
  return best;
}

double SpendingSequence::gamma(std::size_t t) const {
  if (t == 0) return 0.0;
  const double td = static_cast<double>(t);
  switch (kind) {
    case Kind::kInverseSquare:
      return 6.0 / (std::numbers::pi * std::numbers::pi * td * td);
    case Kind::kGeometric:
      return (1.0 - ratio) * std::pow(ratio, td - 1.0);
  }
  return 0.0;
}

std::string SpendingSequence::describe() const {
  return kind == Kind::kInverseSquare ? "inverse-square" : "geometric:" + format_real(ratio);
}

SpendingSequence SpendingSequence::parse(const std::string& text) {
  SpendingSequence s;
  if (text == "inverse-square") return s;
  const std::string prefix = "geometric:";
  if (text.rfind(prefix, 0) == 0) {
    s.kind = Kind::kGeometric;
    s.ratio = parse_real(text.substr(prefix.size()), "spending sequence");
    require(s.ratio > 0.0 && s.ratio < 1.0, ErrorCode::kInvalidArgument,
            "geometric spending ratio must be in (0,1)");
    return s;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown spending sequence '" + text + "' (expected inverse-square or geometric:<r>)");
}

std::size_t OnlineFdrState::total_rejections() const {
  std::size_t r = 0;
  for (const auto& b : batch_history) r += b.rejections;
  return r;
}

double OnlineFdrState::wealth() const {
  const std::size_t t = batch_history.size() + 1;
  double scheduled = 0.0;
  for (std::size_t s = 1; s <= t; ++s) scheduled += spending.gamma(s);
  const std::size_t all_rejections = total_rejections();
  double spent = 0.0;
  for (const auto& b : batch_history) {
    if (b.rejections_plus == 0) continue;
    const double others = static_cast<double>(all_rejections - b.rejections);
    const double rp = static_cast<double>(b.rejections_plus);
    spent += b.alpha * rp / (rp + others);
  }
  return alpha_total * scheduled - spent;
}

double OnlineFdrState::next_level(std::size_t batch_size) const {
  if (batch_size == 0) return 0.0;
  const double m = static_cast<double>(batch_size);
  return wealth() * (m + static_cast<double>(total_rejections())) / m;
}

BatchOutcome next_batch(const OnlineFdrState& state, std::span<const double> pvals,
                        const std::string& label) {
  for (double p : pvals) {
    require(p >= 0.0 && p <= 1.0 && !std::isnan(p), ErrorCode::kInvalidArgument,
            "online FDR: p-value " + format_real(p) + " outside [0,1]");
  }
  BatchOutcome out;
  out.state = state;
  if (pvals.empty()) return out;
  const double level = state.next_level(pvals.size());
  require(level > 0.0, ErrorCode::kInternal, "online FDR: non-positive test level");
  // BH needs alpha < 1; a level above one would reject everything anyway.
  const double bh_level = std::min(level, 1.0 - 1e-12);
  const auto bh = bh_adjust(pvals, bh_level);
  BatchRecord record;
  record.size = pvals.size();
  record.alpha = level;
  record.rejections = bh.num_rejected;
  record.rejections_plus = rejections_plus(pvals, bh_level);
  record.label = label;
  out.rejected = bh.rejected;
  out.alpha_used = level;
  out.state.batch_history.push_back(std::move(record));
  return out;
}

}  // namespace perturbdag
