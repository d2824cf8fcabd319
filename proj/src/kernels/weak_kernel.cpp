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
#include "likertqc/stats.hpp"

namespace likertqc::kernels {

std::uint32_t weak_replicate(const PackedTopic& topic, std::uint64_t b, double eps,
                             std::span<double> scratch) {
    const std::size_t slots = topic.slots_per_claim();
    std::uint32_t inside = 0;
    for (std::size_t c = 0; c < topic.claims; ++c) {
        for (std::size_t s = 0; s < slots; ++s) {
            RngStream rng = topic.slot_keys[c * slots + s].then(b).stream();
            scratch[s] = resample_mean(topic.cell(c, s), rng);
        }
        const auto [lo, hi] = std::minmax_element(scratch.begin(), scratch.begin() + topic.groups);
        const double base = scratch[topic.groups];
        if (base >= *lo - eps && base <= *hi + eps) ++inside;
    }
    return inside;
}

namespace {

void require_base(const PackedTopic& topic) {
    if (!topic.with_base) throw ValidationError("weak test needs a base cell for every claim");
}

}  // namespace

std::vector<std::uint32_t> weak_bootstrap_serial(const PackedTopic& topic, std::size_t replicates,
                                                 double eps) {
    require_base(topic);
    std::vector<std::uint32_t> counts(replicates);
    std::vector<double> scratch(topic.slots_per_claim());
    for (std::size_t b = 0; b < replicates; ++b) counts[b] = weak_replicate(topic, b, eps, scratch);
    return counts;
}

std::vector<std::uint32_t> weak_bootstrap_parallel(const PackedTopic& topic, std::size_t replicates,
                                                   double eps, int jobs) {
    require_base(topic);
    std::vector<std::uint32_t> counts(replicates);
    const auto n = static_cast<std::int64_t>(replicates);
#pragma omp parallel num_threads(std::max(1, jobs))
    {
        std::vector<double> scratch(topic.slots_per_claim());
#pragma omp for schedule(static)
        for (std::int64_t b = 0; b < n; ++b) {
            counts[static_cast<std::size_t>(b)] =
                weak_replicate(topic, static_cast<std::uint64_t>(b), eps, scratch);
        }
    }
    return counts;
}

}  // namespace likertqc::kernels
