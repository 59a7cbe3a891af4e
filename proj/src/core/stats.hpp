// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>

namespace perturbdag {

// 1 - Phi(z) without cancellation for large z.
inline double normal_upper_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace perturbdag
