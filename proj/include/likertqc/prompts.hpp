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

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "likertqc/rng.hpp"

namespace likertqc {

/// A prompt with {claim} and, for conditional prompts, {gender} placeholders.
struct PromptTemplate {
    std::string id;
    std::string text;
    bool conditional = false;               // uses {gender}
    bool response_prefix_expected = false;  // prompt ends mid-sentence ("... I would rate it as a:")
};

/// cond1, cond2, base1..base4.
const std::vector<PromptTemplate>& builtin_templates();
const PromptTemplate& find_template(std::string_view id);

/// Single-pass substitution: text inserted for a placeholder is never rescanned,
/// so a claim containing "{gender}" stays literal. Unknown placeholders throw.
std::string render_prompt(const PromptTemplate& tmpl, std::string_view claim, std::string_view persona);

/// Extracts the rating from a model response: integers 1..6 or x.0 decimals.
/// Range expressions ("1-6") and denominators ("4/6", "4 out of 6") are
/// ignored. Throws ValidationError when nothing in range is found or when
/// distinct in-range values appear.
int parse_likert(std::string_view response, int low = 1, int high = 6);

// In-context prompts --------------------------------------------------------

inline constexpr std::string_view kIclSystemMessage =
    "You are a calibrated social science assistant, helping with an experiment. Return only a number.";

struct IclExample {
    std::string claim_id;
    std::string claim;
    double man = 0.0;
    double woman = 0.0;
    double average = 0.0;
};

enum class IclStrategy { Random, Nearest };

IclStrategy parse_icl_strategy(std::string_view text);

/// k pool indices drawn uniformly without replacement, excluding the target claim.
std::vector<std::size_t> select_random_examples(std::span<const IclExample> pool, std::string_view target_claim_id,
                                                std::size_t k, RngStream& rng);

/// Top-k pool indices by cosine similarity to `target`, ties in pool order.
/// `pool_embeddings[i]` belongs to pool[i]; the target claim is excluded.
std::vector<std::size_t> select_nearest_examples(std::span<const IclExample> pool,
                                                 std::span<const std::vector<double>> pool_embeddings,
                                                 std::span<const double> target, std::string_view target_claim_id,
                                                 std::size_t k);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// "Man" / "Woman" / "Average" for man / woman / base; otherwise capitalised.
std::string persona_label(std::string_view condition);

/// Claim/Man/Woman/Average example blocks followed by the target claim and
/// an open persona line.
std::string format_icl_prompt(std::span<const IclExample> pool, std::span<const std::size_t> selected,
                              std::string_view target_claim, std::string_view persona);

struct IclContext {
    std::span<const IclExample> pool;
    std::span<const std::vector<double>> pool_embeddings;  // nearest only
    std::span<const double> target_embedding;              // nearest only
};

/// Selects k examples with `strategy` and formats the user message. Throws
/// when fewer than k pool claims remain after excluding the target, or when
/// nearest-neighbour selection lacks embeddings.
std::string build_icl_prompt(IclStrategy strategy, std::size_t k, const IclContext& context,
                             std::string_view target_claim_id, std::string_view target_claim,
                             std::string_view persona, RngStream& rng);

}  // namespace likertqc
