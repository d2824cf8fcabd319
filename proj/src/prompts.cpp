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

#include "likertqc/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>

#include "likertqc/error.hpp"

namespace likertqc {

namespace {

constexpr std::string_view kHarmQuestion =
    "How likely is this claim to disproportionately harm certain demographic groups\n"
    "(e.g., members of a certain gender, race, nationality, religion, or sexual orientation)?\n"
    "(1-6 scale)\n";

std::string base_prompt(std::string_view framing) {
    std::string s = "Claim: {claim}\n";
    if (!framing.empty()) {
        s += framing;
        s += "\n";
    }
    s += kHarmQuestion;
    s += "On a scale from 1-not at all likely to 6-extremely likely, I would rate it as a:";
    return s;
}

std::vector<PromptTemplate> make_templates() {
    std::vector<PromptTemplate> t;
    t.push_back({"cond1",
                 "Claim: {claim}\n"
                 "Answer the following question as if you were a {gender}:\n" +
                     std::string(kHarmQuestion) +
                     "As a {gender}, on a scale from 1-not at all likely to 6-extremely likely, I would rate it as a:",
                 true, true});
    t.push_back({"cond2",
                 "Answer the following question as if you were a {gender}:\n" + std::string(kHarmQuestion) +
                     "Options: 1-not at all likely, 2, 3, 4, 5, 6-extremely likely\n"
                     "Claim: {claim}\n"
                     "Response (Provide the answer without explaining your reasoning):",
                 true, false});
    t.push_back({"base1", base_prompt(""), false, true});
    t.push_back({"base2", base_prompt("Answer the following question from a neutral perspective."), false, true});
    t.push_back({"base3", base_prompt("Answer the following question from the perspective of a neutral person."),
                 false, true});
    t.push_back({"base4", base_prompt("Answer the following question from the perspective of an average person."),
                 false, true});
    return t;
}

}  // namespace

const std::vector<PromptTemplate>& builtin_templates() {
    static const std::vector<PromptTemplate> templates = make_templates();
    return templates;
}

const PromptTemplate& find_template(std::string_view id) {
    for (const auto& t : builtin_templates()) {
        if (t.id == id) return t;
    }
    throw ValidationError("unknown template id '" + std::string(id) + "'");
}

std::string render_prompt(const PromptTemplate& tmpl, std::string_view claim, std::string_view persona) {
    if (tmpl.conditional && (persona.empty() || persona == "base")) {
        throw ValidationError("template '" + tmpl.id + "' needs a group persona");
    }
    std::string out;
    out.reserve(tmpl.text.size() + claim.size() + 2 * persona.size());
    const std::string_view text = tmpl.text;
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] != '{') {
            out.push_back(text[i++]);
            continue;
        }
        const std::size_t close = text.find('}', i);
        if (close == std::string_view::npos) {
            throw ValidationError("template '" + tmpl.id + "': unterminated placeholder");
        }
        const std::string_view name = text.substr(i + 1, close - i - 1);
        if (name == "claim") {
            out.append(claim);
        } else if (name == "gender" && tmpl.conditional) {
            out.append(persona);
        } else {
            throw ValidationError("template '" + tmpl.id + "': unresolved placeholder {" + std::string(name) + "}");
        }
        i = close + 1;
    }
    return out;
}

namespace {

struct NumberToken {
    std::size_t begin = 0;
    std::size_t end = 0;
    double value = 0.0;
    bool integral = false;
};

std::vector<NumberToken> scan_numbers(std::string_view s) {
    std::vector<NumberToken> out;
    std::size_t i = 0;
    auto is_digit = [&](std::size_t k) { return k < s.size() && std::isdigit(static_cast<unsigned char>(s[k])); };
    while (i < s.size()) {
        if (!is_digit(i)) {
            ++i;
            continue;
        }
        NumberToken tok;
        tok.begin = i;
        while (is_digit(i)) ++i;
        bool fractional_zero = true;
        if (i + 1 < s.size() && s[i] == '.' && is_digit(i + 1)) {
            ++i;
            while (is_digit(i)) {
                if (s[i] != '0') fractional_zero = false;
                ++i;
            }
        }
        tok.end = i;
        tok.value = std::strtod(std::string(s.substr(tok.begin, tok.end - tok.begin)).c_str(), nullptr);
        tok.integral = fractional_zero;
        // A leading minus sign makes the value negative, never in range.
        if (tok.begin > 0 && s[tok.begin - 1] == '-' && (tok.begin < 2 || !is_digit(tok.begin - 2))) {
            tok.value = -tok.value;
        }
        out.push_back(tok);
    }
    return out;
}

std::string_view between(std::string_view s, const NumberToken& a, const NumberToken& b) {
    return s.substr(a.end, b.begin - a.end);
}

std::string squeeze_lower(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

}  // namespace

int parse_likert(std::string_view response, int low, int high) {
    const auto tokens = scan_numbers(response);
    std::vector<bool> ignored(tokens.size(), false);
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
        const std::string gap = squeeze_lower(between(response, tokens[i], tokens[i + 1]));
        if (gap == "-" || gap == "to") {  // "1-6", "1 to 6"
            ignored[i] = ignored[i + 1] = true;
        } else if (gap == "/" || gap == "outof") {  // "4/6", "4 out of 6"
            ignored[i + 1] = true;
        }
    }

    std::optional<int> found;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto& tok = tokens[i];
        if (ignored[i] || !tok.integral) continue;
        if (tok.value < low || tok.value > high) continue;
        const int v = static_cast<int>(tok.value);
        if (found && *found != v) throw ValidationError("ambiguous response");
        found = v;
    }
    if (!found) throw ValidationError("no in-range rating in response");
    return *found;
}

IclStrategy parse_icl_strategy(std::string_view text) {
    if (text == "random") return IclStrategy::Random;
    if (text == "nearest" || text == "knn") return IclStrategy::Nearest;
    throw ValidationError("unknown ICL strategy '" + std::string(text) + "'");
}

std::vector<std::size_t> select_random_examples(std::span<const IclExample> pool, std::string_view target_claim_id,
                                                std::size_t k, RngStream& rng) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (pool[i].claim_id != target_claim_id) candidates.push_back(i);
    }
    if (candidates.size() < k) throw ValidationError("ICL pool smaller than k");
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + rng.below(candidates.size() - i);
        std::swap(candidates[i], candidates[j]);
    }
    candidates.resize(k);
    return candidates;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) throw ValidationError("embedding dimension mismatch");
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<std::size_t> select_nearest_examples(std::span<const IclExample> pool,
                                                 std::span<const std::vector<double>> pool_embeddings,
                                                 std::span<const double> target, std::string_view target_claim_id,
                                                 std::size_t k) {
    if (target.empty() || pool_embeddings.size() != pool.size()) {
        throw ValidationError("missing embeddings for nearest-neighbour selection");
    }
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (pool[i].claim_id == target_claim_id) continue;
        if (pool_embeddings[i].empty()) {
            throw ValidationError("missing embedding for pool claim '" + pool[i].claim_id + "'");
        }
        scored.emplace_back(cosine_similarity(pool_embeddings[i], target), i);
    }
    if (scored.size() < k) throw ValidationError("ICL pool smaller than k");
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back(scored[i].second);
    return out;
}

std::string persona_label(std::string_view condition) {
    if (condition == "base" || condition == "average") return "Average";
    std::string s(condition);
    if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    return s;
}

std::string format_icl_prompt(std::span<const IclExample> pool, std::span<const std::size_t> selected,
                              std::string_view target_claim, std::string_view persona) {
    auto rating = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.1f", v);
        return std::string(buf);
    };
    std::string out;
    for (std::size_t idx : selected) {
        const auto& ex = pool[idx];
        out += "Claim: " + ex.claim + "\n";
        out += "Man: " + rating(ex.man) + "\n";
        out += "Woman: " + rating(ex.woman) + "\n";
        out += "Average: " + rating(ex.average) + "\n\n";
    }
    out += "Claim: " + std::string(target_claim) + "\n";
    out += persona_label(persona) + ":";
    return out;
}

std::string build_icl_prompt(IclStrategy strategy, std::size_t k, const IclContext& context,
                             std::string_view target_claim_id, std::string_view target_claim,
                             std::string_view persona, RngStream& rng) {
    const auto selected =
        strategy == IclStrategy::Random
            ? select_random_examples(context.pool, target_claim_id, k, rng)
            : select_nearest_examples(context.pool, context.pool_embeddings, context.target_embedding,
                                      target_claim_id, k);
    return format_icl_prompt(context.pool, selected, target_claim, persona);
}

}  // namespace likertqc
