// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace perturbdag {

struct BhResult {
  std::vector<bool> rejected;
  double threshold = 0.0;  // k* alpha / m; 0 when nothing is rejected
  std::size_t num_rejected = 0;
};

// Benjamini-Hochberg step-up at level alpha. Rejects p_i <= k* alpha / m for
// the largest k* with p_(k*) <= k* alpha / m.
BhResult bh_adjust(std::span<const double> pvals, double alpha);

// gamma_t for t = 1, 2, ...; nonnegative and summing to one.
struct SpendingSequence {
  enum class Kind { kInverseSquare, kGeometric };
  Kind kind = Kind::kInverseSquare;
  double ratio = 0.5;  // geometric only: gamma_t = (1 - r) r^(t-1)

  double gamma(std::size_t t) const;
  std::string describe() const;
  // Accepts "inverse-square" or "geometric:<r>" with 0 < r < 1.
  static SpendingSequence parse(const std::string& text);
};

struct BatchRecord {
  std::size_t size = 0;              // m_t
  double alpha = 0.0;                // alpha_t used for BH on this batch
  std::size_t rejections = 0;        // R_t
  std::size_t rejections_plus = 0;   // R_t^+: max rejections with one p set to 0
  std::string label;
};

// State of the online Batch-BH procedure (one BH run per batch, at a level
// that spends the gamma schedule and reinvests earlier rejections):
//   alpha_t = (alpha sum_{s<=t} gamma_s
//              - sum_{s<t} alpha_s R_s^+ / (R_s^+ + sum_{r<t, r!=s} R_r))
//             * (m_t + sum_{s<t} R_s) / m_t
struct OnlineFdrState {
  double alpha_total = 0.1;
  SpendingSequence spending;
  std::vector<BatchRecord> batch_history;

  // Budget left before the next batch's size multiplier is applied.
  double wealth() const;
  // alpha_t the next nonempty batch of `batch_size` p-values would get.
  double next_level(std::size_t batch_size) const;
  std::size_t total_rejections() const;
};

struct BatchOutcome {
  std::vector<bool> rejected;
  double alpha_used = 0.0;
  OnlineFdrState state;
};

// Empty batches return the state unchanged and consume no budget. Throws
// Error(kInvalidArgument) for p-values outside [0, 1].
BatchOutcome next_batch(const OnlineFdrState& state, std::span<const double> pvals,
                        const std::string& label = {});

// R^+ for a BH run at level alpha: the largest rejection count obtained by
// setting any single p-value to zero.
std::size_t rejections_plus(std::span<const double> pvals, double alpha);

}  // namespace perturbdag
