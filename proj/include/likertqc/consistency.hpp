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

// Logical-consistency checks of base-condition opinions against group opinions.
//
// Weak test: per claim, the base mean must lie between the smallest and the
// largest group mean. P = fraction of claims that pass, bootstrapped by
// resampling every cell; H0: P >= p0 is rejected when
// #{b : P_b >= p0} / B < alpha.
//
// Strong test: for a candidate mixture q0, L(q0) = mean over claims of
// ||q_hat - q0||_1, where q_hat is the simplex weight reconstructing the base
// mean. The null distribution resamples the group cells and replaces the base
// cell with a synthetic one drawn from the groups in proportion q0;
// p = #{b : L_b >= L_obs} / B, rejected when p < alpha_star.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "likertqc/model.hpp"
#include "likertqc/rng.hpp"
#include "likertqc/simplex.hpp"
#include "likertqc/stats.hpp"

namespace likertqc {

/// q_hat for two groups, or the base distance to the common mean when the
/// two group means coincide.
struct ImpliedWeight {
    std::optional<double> q;      // (mu_base - mu_g2) / (mu_g1 - mu_g2), unclipped
    double degenerate_gap = 0.0;  // |mu_base - mu_g1| when q is empty
};

ImpliedWeight implied_mixture_weight(double mu_base, double mu_g1, double mu_g2,
                                     double eps = kDefaultEps);

/// 1 iff min(group_means) - eps <= mu_base <= max(group_means) + eps.
bool hull_indicator(std::span<const double> group_means, double mu_base, double eps = kDefaultEps);

struct WeakTestConfig {
    std::vector<double> thresholds{0.7, 0.8, 0.9, 1.0};
    double alpha = 0.05;
    double eps = kDefaultEps;
    BootstrapConfig bootstrap;
};

struct WeakClaimResult {
    std::string claim_id;
    std::vector<double> group_means;
    double base_mean = 0.0;
    std::optional<double> q_hat;  // two-group runs only
    bool inside = false;
};

struct WeakThresholdResult {
    double p0 = 0.0;
    double p_value = 0.0;
    bool reject = false;
};

struct WeakTestReport {
    std::string topic;
    std::vector<std::string> groups;
    std::vector<WeakClaimResult> claims;
    double p_hat_observed = 0.0;
    std::vector<WeakThresholdResult> thresholds;
    std::size_t replicates = 0;
    std::uint64_t master_seed = 0;
    double alpha = 0.0;

    std::size_t claim_count() const { return claims.size(); }
    std::vector<double> feasible_thresholds() const;
};

WeakTestReport weak_topic_test(const TopicDataset& data, const WeakTestConfig& cfg);

struct StrongTestConfig {
    std::vector<std::vector<double>> grid;  // empty: 0.05 lattice on the simplex
    double grid_step = 0.05;
    double alpha_star = 0.0025;
    double eps = kDefaultEps;
    BootstrapConfig bootstrap;
};

struct StrongGridResult {
    std::vector<double> q0;
    double observed_l = 0.0;
    double p_value = 0.0;
    bool reject = false;
};

struct StrongClaimResult {
    std::string claim_id;
    std::vector<double> group_means;
    double base_mean = 0.0;
    std::size_t base_n = 0;
    std::vector<double> q_hat;  // tie-broken toward the uniform mixture
    double residual = 0.0;
};

struct StrongTestReport {
    std::string topic;
    std::vector<std::string> groups;
    std::vector<StrongClaimResult> claims;
    std::vector<StrongGridResult> grid;
    std::size_t replicates = 0;
    std::uint64_t master_seed = 0;
    double alpha_star = 0.0;

    std::vector<std::vector<double>> feasible() const;
};

/// Base sample of size n_tot drawn with replacement from the group cells:
/// allocate_draws(q0, n_tot)[g] labels from cell g, in group order.
std::vector<int> synthetic_base_sample(std::span<const std::span<const int>> group_cells,
                                       std::span<const double> q0, std::size_t n_tot,
                                       RngStream& rng);

StrongTestReport strong_topic_test(const TopicDataset& data, const StrongTestConfig& cfg);

/// Grid used when StrongTestConfig::grid is empty.
std::vector<std::vector<double>> default_strong_grid(std::size_t groups, double step);

}  // namespace likertqc
