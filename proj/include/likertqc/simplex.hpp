/*
 * Copyright 2026 The likertqc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Mixture weights on the probability simplex.
//
// estimate_q_star solves
//     min_q ( sum_g q_g mu_g - mu_base )^2   s.t.  q >= 0, sum q = 1
// The reachable values of sum_g q_g mu_g are exactly [min mu, max mu], so the
// optimum residual is the squared distance from mu_base to that interval and
// the minimiser set is { q : q . mu = clamp(mu_base) }. Among those we return
// the point closest to q0 in L1. Moving mass from group s to group d changes
// q . mu by (mu_d - mu_s) per unit, so the cheapest way to close a gap r > 0
// is to pour mass into the highest-mean group, draining the lowest-mean groups
// first (a fractional knapsack); r < 0 is the mirror image. The result is the
// exact LP optimum for any number of groups.

#include <cstddef>
#include <span>
#include <vector>

namespace likertqc {

inline constexpr double kDefaultEps = 1e-9;

/// q . mu
double mixture_mean(std::span<const double> q, std::span<const double> group_means);

/// (q . mu - mu_base)^2
double squared_residual(std::span<const double> q, std::span<const double> group_means,
                        double mu_base);

double l1_distance(std::span<const double> a, std::span<const double> b);

/// Non-allocating core. `out` must have the size of `group_means`; `order`
/// is scratch of the same size.
void estimate_q_star_into(std::span<const double> group_means, double mu_base,
                          std::span<const double> q0, std::span<double> out,
                          std::span<std::size_t> order, double eps = kDefaultEps);

/// Residual-minimising simplex weights closest to q0 in L1. When all group
/// means agree within eps every q is optimal and q0 itself is returned.
std::vector<double> estimate_q_star(std::span<const double> group_means, double mu_base,
                                    std::span<const double> q0, double eps = kDefaultEps);

/// True when q is on the simplex within tol.
bool on_simplex(std::span<const double> q, double tol = 1e-9);

/// Draw counts floor(q0_g * n) plus the remainder handed out by largest
/// fractional part, ties to the earlier group. Sums to exactly n.
std::vector<std::size_t> allocate_draws(std::span<const double> q0, std::size_t n);

/// Two-group grid {(k*step, 1 - k*step)} covering [0, 1].
std::vector<std::vector<double>> two_group_grid(double step = 0.05);

/// All simplex points in `groups` dimensions whose coordinates are multiples of step.
std::vector<std::vector<double>> simplex_grid(std::size_t groups, double step = 0.05);

}  // namespace likertqc
