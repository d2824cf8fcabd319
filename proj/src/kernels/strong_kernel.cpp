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

#include <algorithm>
#include <vector>

#include <omp.h>

#include "likertqc/error.hpp"
#include "likertqc/kernels.hpp"
#include "likertqc/simplex.hpp"
#include "likertqc/stats.hpp"

namespace likertqc::kernels {

std::vector<std::size_t> plan_allocations(const PackedTopic& topic,
                                          std::span<const std::vector<double>> grid) {
    if (!topic.with_base) throw ValidationError("strong test needs a base cell for every claim");
    std::vector<std::size_t> plan;
    plan.reserve(grid.size() * topic.claims * topic.groups);
    for (const auto& q0 : grid) {
        if (q0.size() != topic.groups) throw ValidationError("grid point has wrong dimension");
        for (std::size_t c = 0; c < topic.claims; ++c) {
            const auto counts = allocate_draws(q0, topic.cell(c, topic.groups).size());
            plan.insert(plan.end(), counts.begin(), counts.end());
        }
    }
    return plan;
}

namespace {

struct Scratch {
    explicit Scratch(std::size_t groups) : means(groups), q(groups), order(groups) {}
    std::vector<double> means;
    std::vector<double> q;
    std::vector<std::size_t> order;
};

double strong_replicate_with(const PackedTopic& topic, std::span<const std::vector<double>> grid,
                             std::span<const std::size_t> allocations, std::size_t qi,
                             std::uint64_t b, double eps, Scratch& scratch) {
    const std::size_t k = topic.groups;
    const std::span<const double> q0 = grid[qi];
    double total = 0.0;
    for (std::size_t c = 0; c < topic.claims; ++c) {
        RngStream rng = topic.claim_keys[c].then(static_cast<std::uint64_t>(qi)).then(b).stream();
        for (std::size_t g = 0; g < k; ++g) scratch.means[g] = resample_mean(topic.cell(c, g), rng);

        const std::size_t* counts = allocations.data() + (qi * topic.claims + c) * k;
        long long sum = 0;
        std::size_t drawn = 0;
        for (std::size_t g = 0; g < k; ++g) {
            const auto cell = topic.cell(c, g);
            for (std::size_t j = 0; j < counts[g]; ++j) sum += cell[rng.below(cell.size())];
            drawn += counts[g];
        }
        const double base = static_cast<double>(sum) / static_cast<double>(drawn);

        estimate_q_star_into(scratch.means, base, q0, scratch.q, scratch.order, eps);
        total += l1_distance(scratch.q, q0);
    }
    return total / static_cast<double>(topic.claims);
}

}  // namespace

double strong_replicate(const PackedTopic& topic, std::span<const std::vector<double>> grid,
                        std::span<const std::size_t> allocations, std::size_t qi, std::uint64_t b,
                        double eps) {
    Scratch scratch(topic.groups);
    return strong_replicate_with(topic, grid, allocations, qi, b, eps, scratch);
}

std::vector<double> strong_bootstrap_serial(const PackedTopic& topic,
                                            std::span<const std::vector<double>> grid,
                                            std::size_t replicates, double eps) {
    const auto plan = plan_allocations(topic, grid);
    std::vector<double> out(grid.size() * replicates);
    Scratch scratch(topic.groups);
    for (std::size_t qi = 0; qi < grid.size(); ++qi) {
        for (std::size_t b = 0; b < replicates; ++b) {
            out[qi * replicates + b] = strong_replicate_with(topic, grid, plan, qi, b, eps, scratch);
        }
    }
    return out;
}

std::vector<double> strong_bootstrap_parallel(const PackedTopic& topic,
                                              std::span<const std::vector<double>> grid,
                                              std::size_t replicates, double eps, int jobs) {
    const auto plan = plan_allocations(topic, grid);
    std::vector<double> out(grid.size() * replicates);
    const auto n = static_cast<std::int64_t>(out.size());
#pragma omp parallel num_threads(std::max(1, jobs))
    {
        Scratch scratch(topic.groups);
#pragma omp for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) {
            const auto qi = static_cast<std::size_t>(i) / replicates;
            const auto b = static_cast<std::size_t>(i) % replicates;
            out[static_cast<std::size_t>(i)] =
                strong_replicate_with(topic, grid, plan, qi, b, eps, scratch);
        }
    }
    return out;
}

}  // namespace likertqc::kernels
