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

#include <string>

#include "likertqc/error.hpp"
#include "likertqc/kernels.hpp"

namespace likertqc::kernels {

PackedTopic pack_topic(const TopicDataset& data, std::uint64_t master_seed, std::string_view test) {
    if (data.groups.empty()) throw ValidationError("topic has no groups");
    PackedTopic packed;
    packed.claims = data.claim_count();
    packed.groups = data.groups.size();
    packed.with_base = data.has_base();

    const StreamKey topic_key = root_key(master_seed).then(test).then(std::string_view(data.topic));
    packed.offsets.push_back(0);
    for (const auto& [claim_id, cells] : data.claims) {
        const StreamKey claim_key = topic_key.then(std::string_view(claim_id));
        packed.claim_keys.push_back(claim_key);
        auto add = [&](std::string_view condition) {
            auto it = cells.find(condition);
            if (it == cells.end() || it->second.labels.empty()) {
                throw ValidationError("claim '" + claim_id + "' has no labels for '" +
                                      std::string(condition) + "'");
            }
            packed.labels.insert(packed.labels.end(), it->second.labels.begin(), it->second.labels.end());
            packed.offsets.push_back(packed.labels.size());
            packed.slot_keys.push_back(claim_key.then(condition));
        };
        for (const auto& g : data.groups) add(g);
        if (packed.with_base) add(kBaseCondition);
    }
    return packed;
}

}  // namespace likertqc::kernels
