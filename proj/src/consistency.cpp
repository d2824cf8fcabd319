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

#include "likertqc/consistency.hpp"

#include <algorithm>
#include <cmath>

#include "likertqc/error.hpp"
#include "likertqc/kernels.hpp"

namespace likertqc {

namespace {

// Replicate statistics equal to the observed one up to this slack count as ">=".
constexpr double kTieSlack = 1e-12;

void check_bootstrap(const BootstrapConfig& cfg) {
    if (cfg.replicates < 1) throw ValidationError("bootstrap replicate count must be at least 1");
}

std::vector<double> group_means_of(const TopicDataset& data, const CellMap& cells) {
    std::vector<double> means;
    means.reserve(data.groups.size());
    for (const auto& g : data.groups) means.push_back(cells.at(g).mean());
    return means;
}

const ClaimCell& base_cell(const std::string& claim_id, const CellMap& cells) {
    auto it = cells.find(kBaseCondition);
    if (it == cells.end() || it->second.labels.empty()) {
        throw ValidationError("claim '" + claim_id + "' has no base cell");
    }
    return it->second;
}

}  // namespace

ImpliedWeight implied_mixture_weight(double mu_base, double mu_g1, double mu_g2, double eps) {
    ImpliedWeight w;
    if (std::fabs(mu_g1 - mu_g2) > eps) {
        w.q = (mu_base - mu_g2) / (mu_g1 - mu_g2);
    } else {
        w.degenerate_gap = std::fabs(mu_base - mu_g1);
    }
    return w;
}

bool hull_indicator(std::span<const double> group_means, double mu_base, double eps) {
    if (group_means.empty()) throw ValidationError("hull_indicator: no group means");
    const auto [lo, hi] = std::minmax_element(group_means.begin(), group_means.end());
    return mu_base >= *lo - eps && mu_base <= *hi + eps;
}

std::vector<double> WeakTestReport::feasible_thresholds() const {
    std::vector<double> out;
    for (const auto& t : thresholds) {
        if (!t.reject) out.push_back(t.p0);
    }
    return out;
}

WeakTestReport weak_topic_test(const TopicDataset& data, const WeakTestConfig& cfg) {
    check_bootstrap(cfg.bootstrap);
    if (data.groups.size() < 2) throw ValidationError("weak test needs at least two groups");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ValidationError("alpha must be in (0, 1)");
    for (double p0 : cfg.thresholds) {
        if (!(p0 > 0.0 && p0 <= 1.0)) throw ValidationError("threshold p0 must be in (0, 1]");
    }

    WeakTestReport report;
    report.topic = data.topic;
    report.groups = data.groups;
    report.replicates = cfg.bootstrap.replicates;
    report.master_seed = cfg.bootstrap.master_seed;
    report.alpha = cfg.alpha;

    std::size_t inside_observed = 0;
    for (const auto& [claim_id, cells] : data.claims) {
        WeakClaimResult r;
        r.claim_id = claim_id;
        r.group_means = group_means_of(data, cells);
        r.base_mean = base_cell(claim_id, cells).mean();
        if (r.group_means.size() == 2) {
            r.q_hat = implied_mixture_weight(r.base_mean, r.group_means[0], r.group_means[1], cfg.eps).q;
        }
        r.inside = hull_indicator(r.group_means, r.base_mean, cfg.eps);
        inside_observed += r.inside ? 1 : 0;
        report.claims.push_back(std::move(r));
    }
    const auto n_claims = static_cast<double>(data.claim_count());
    report.p_hat_observed = static_cast<double>(inside_observed) / n_claims;

    const auto packed = kernels::pack_topic(data, cfg.bootstrap.master_seed, "qc1-weak");
    const auto counts =
        cfg.bootstrap.jobs > 1
            ? kernels::weak_bootstrap_parallel(packed, cfg.bootstrap.replicates, cfg.eps, cfg.bootstrap.jobs)
            : kernels::weak_bootstrap_serial(packed, cfg.bootstrap.replicates, cfg.eps);

    for (double p0 : cfg.thresholds) {
        // P_b >= p0 compared on counts to stay exact.
        const double needed = p0 * n_claims - 1e-9;
        std::size_t hits = 0;
        for (auto c : counts) hits += static_cast<double>(c) >= needed ? 1 : 0;
        WeakThresholdResult t;
        t.p0 = p0;
        t.p_value = static_cast<double>(hits) / static_cast<double>(counts.size());
        t.reject = t.p_value < cfg.alpha;
        report.thresholds.push_back(t);
    }
    return report;
}

std::vector<int> synthetic_base_sample(std::span<const std::span<const int>> group_cells,
                                       std::span<const double> q0, std::size_t n_tot,
                                       RngStream& rng) {
    if (n_tot < 1) throw ValidationError("synthetic_base_sample: n_tot must be at least 1");
    if (q0.size() != group_cells.size()) throw ValidationError("synthetic_base_sample: q0 has wrong length");
    const auto counts = allocate_draws(q0, n_tot);
    std::vector<int> out;
    out.reserve(n_tot);
    for (std::size_t g = 0; g < group_cells.size(); ++g) {
        if (counts[g] > 0 && group_cells[g].empty()) {
            throw ValidationError("synthetic_base_sample: empty group cell");
        }
        for (std::size_t j = 0; j < counts[g]; ++j) {
            out.push_back(group_cells[g][rng.below(group_cells[g].size())]);
        }
    }
    return out;
}

std::vector<std::vector<double>> default_strong_grid(std::size_t groups, double step) {
    return groups == 2 ? two_group_grid(step) : simplex_grid(groups, step);
}

std::vector<std::vector<double>> StrongTestReport::feasible() const {
    std::vector<std::vector<double>> out;
    for (const auto& g : grid) {
        if (!g.reject) out.push_back(g.q0);
    }
    return out;
}

StrongTestReport strong_topic_test(const TopicDataset& data, const StrongTestConfig& cfg) {
    check_bootstrap(cfg.bootstrap);
    const std::size_t k = data.groups.size();
    if (k < 2) throw ValidationError("strong test needs at least two groups");
    if (!(cfg.alpha_star > 0.0 && cfg.alpha_star < 1.0)) throw ValidationError("alpha_star must be in (0, 1)");

    const auto grid = cfg.grid.empty() ? default_strong_grid(k, cfg.grid_step) : cfg.grid;
    for (const auto& q0 : grid) {
        if (q0.size() != k) throw ValidationError("grid point dimension does not match group count");
        if (!on_simplex(q0)) throw ValidationError("grid point is not on the simplex");
    }

    StrongTestReport report;
    report.topic = data.topic;
    report.groups = data.groups;
    report.replicates = cfg.bootstrap.replicates;
    report.master_seed = cfg.bootstrap.master_seed;
    report.alpha_star = cfg.alpha_star;

    const std::vector<double> uniform(k, 1.0 / static_cast<double>(k));
    std::vector<std::vector<double>> means;
    std::vector<double> bases;
    for (const auto& [claim_id, cells] : data.claims) {
        StrongClaimResult r;
        r.claim_id = claim_id;
        r.group_means = group_means_of(data, cells);
        const auto& base = base_cell(claim_id, cells);
        r.base_mean = base.mean();
        r.base_n = base.size();
        r.q_hat = estimate_q_star(r.group_means, r.base_mean, uniform, cfg.eps);
        r.residual = squared_residual(r.q_hat, r.group_means, r.base_mean);
        means.push_back(r.group_means);
        bases.push_back(r.base_mean);
        report.claims.push_back(std::move(r));
    }

    const auto packed = kernels::pack_topic(data, cfg.bootstrap.master_seed, "qc1-strong");
    const std::size_t B = cfg.bootstrap.replicates;
    const auto boot = cfg.bootstrap.jobs > 1
                          ? kernels::strong_bootstrap_parallel(packed, grid, B, cfg.eps, cfg.bootstrap.jobs)
                          : kernels::strong_bootstrap_serial(packed, grid, B, cfg.eps);

    for (std::size_t qi = 0; qi < grid.size(); ++qi) {
        StrongGridResult g;
        g.q0 = grid[qi];
        double total = 0.0;
        for (std::size_t c = 0; c < means.size(); ++c) {
            total += l1_distance(estimate_q_star(means[c], bases[c], g.q0, cfg.eps), g.q0);
        }
        g.observed_l = total / static_cast<double>(means.size());
        std::size_t hits = 0;
        for (std::size_t b = 0; b < B; ++b) {
            hits += boot[qi * B + b] >= g.observed_l - kTieSlack ? 1 : 0;
        }
        g.p_value = static_cast<double>(hits) / static_cast<double>(B);
        g.reject = g.p_value < cfg.alpha_star;
        report.grid.push_back(std::move(g));
    }
    return report;
}

}  // namespace likertqc
