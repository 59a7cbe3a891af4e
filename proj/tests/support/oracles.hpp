// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "core/dataset.hpp"
#include "core/glm.hpp"

namespace oracle {

// Plain damped Newton on the Poisson log-likelihood; shares no code with
// the library's IRLS.
Eigen::VectorXd newton_poisson(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                               const Eigen::VectorXd& offset, int max_iter = 200);

// Reachability by breadth-first search from every node.
std::vector<std::set<std::size_t>> bfs_reachability(const std::vector<std::set<std::size_t>>& adj);

// Two-sided Wilcoxon rank-sum p-value, normal approximation with tie and
// continuity corrections.
double rank_sum_pvalue(const std::vector<double>& a, const std::vector<double>& b);

// One-sample Kolmogorov-Smirnov p-value against U(0, 1).
double ks_uniform_pvalue(std::vector<double> sample);

// True when the directed graph has no cycle (Kahn).
bool is_acyclic(std::size_t p, const std::vector<std::pair<std::size_t, std::size_t>>& edges);

// The naive foil: second stage with log(Y_k / l + 1) in place of the
// first-stage proxy. Returns the coefficients of the listed candidates.
std::vector<double> naive_proxy_thetas(const perturbdag::PerturbDataset& d, std::size_t j,
                                       const std::vector<std::size_t>& candidates);

}  // namespace oracle
