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

// Bootstrap kernels. Each kernel has a serial reference and an OpenMP
// version; both call the same per-replicate body and write replicate b into
// slot b, so their outputs are bitwise identical for any thread count.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "likertqc/model.hpp"
#include "likertqc/rng.hpp"

namespace likertqc::kernels {

/// A topic flattened for the inner loops. Slot (claim c, group g) holds the
/// labels of group g for c; slot (c, groups) holds the base cell, if any.
struct PackedTopic {
    std::size_t claims = 0;
    std::size_t groups = 0;
    bool with_base = false;
    std::vector<int> labels;
    std::vector<std::size_t> offsets;  // claims * slots_per_claim() + 1 entries
    std::vector<StreamKey> slot_keys;  // seed/test/topic/claim/condition
    std::vector<StreamKey> claim_keys; // seed/test/topic/claim

    std::size_t slots_per_claim() const { return groups + (with_base ? 1 : 0); }
    std::span<const int> cell(std::size_t claim, std::size_t slot) const {
        const std::size_t i = claim * slots_per_claim() + slot;
        return {labels.data() + offsets[i], offsets[i + 1] - offsets[i]};
    }
};

/// Packs `data` in (claim_id, groups..., base) order. Stream keys are derived
/// from condition names, so reordering groups does not change any draw.
PackedTopic pack_topic(const TopicDataset& data, std::uint64_t master_seed, std::string_view test);

// Weak test ---------------------------------------------------------------

/// Number of claims inside the hull in bootstrap replicate b.
std::uint32_t weak_replicate(const PackedTopic& topic, std::uint64_t b, double eps,
                             std::span<double> scratch);

std::vector<std::uint32_t> weak_bootstrap_serial(const PackedTopic& topic, std::size_t replicates,
                                                 double eps);
std::vector<std::uint32_t> weak_bootstrap_parallel(const PackedTopic& topic, std::size_t replicates,
                                                   double eps, int jobs);

// Strong test -------------------------------------------------------------

/// Per-(q0, claim) synthetic draw counts, flattened grid x claims x groups.
std::vector<std::size_t> plan_allocations(const PackedTopic& topic,
                                          std::span<const std::vector<double>> grid);

/// L_b(q0) for grid point qi in replicate b.
double strong_replicate(const PackedTopic& topic, std::span<const std::vector<double>> grid,
                        std::span<const std::size_t> allocations, std::size_t qi, std::uint64_t b,
                        double eps);

/// Row-major grid.size() x replicates matrix of L_b.
std::vector<double> strong_bootstrap_serial(const PackedTopic& topic,
                                            std::span<const std::vector<double>> grid,
                                            std::size_t replicates, double eps);
std::vector<double> strong_bootstrap_parallel(const PackedTopic& topic,
                                              std::span<const std::vector<double>> grid,
                                              std::size_t replicates, double eps, int jobs);

}  // namespace likertqc::kernels
