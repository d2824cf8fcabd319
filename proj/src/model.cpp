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

#include "likertqc/model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <numeric>
#include <set>
#include <tuple>

#include "likertqc/error.hpp"

namespace likertqc {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string_view required_field(const RawRecord& raw, std::string_view name) {
    auto it = raw.find(name);
    if (it == raw.end()) throw ValidationError("missing field '" + std::string(name) + "'");
    return it->second;
}

std::string_view optional_field(const RawRecord& raw, std::string_view name) {
    auto it = raw.find(name);
    return it == raw.end() ? std::string_view{} : std::string_view{it->second};
}

// "base", "base3", "Base Prompt 3", "base_prompt_3" -> ("base", "base3").
bool fold_base_variant(std::string_view condition, std::string& variant) {
    std::string key = lower(condition);
    std::erase_if(key, [](char c) { return c == ' ' || c == '_' || c == '-'; });
    if (key == kBaseCondition) return true;
    for (std::string_view prefix : {"baseprompt", "base"}) {
        if (key.size() > prefix.size() && key.starts_with(prefix)) {
            std::string_view digits = std::string_view(key).substr(prefix.size());
            if (std::all_of(digits.begin(), digits.end(),
                            [](unsigned char c) { return std::isdigit(c) != 0; })) {
                variant = "base" + std::string(digits);
                return true;
            }
        }
    }
    return false;
}

}  // namespace

std::string_view to_string(Veracity v) {
    switch (v) {
        case Veracity::True: return "true";
        case Veracity::False: return "false";
        case Veracity::Unknown: return "unknown";
    }
    return "unknown";
}

Veracity parse_veracity(std::string_view text) {
    std::string key = lower(trim(text));
    if (key == "true") return Veracity::True;
    if (key == "false") return Veracity::False;
    if (key.empty() || key == "unknown") return Veracity::Unknown;
    throw ValidationError("veracity must be true, false or unknown, got '" + std::string(text) + "'");
}

Source Source::human(std::string prompt_id) {
    return Source{Kind::Human, {}, std::move(prompt_id)};
}

Source Source::llm(std::string model, std::string prompt_id) {
    return Source{Kind::Model, std::move(model), std::move(prompt_id)};
}

std::string Source::tag() const {
    return is_human() ? std::string("human") : "model:" + model;
}

Source parse_source(std::string_view tag, std::string_view prompt_id) {
    tag = trim(tag);
    if (tag == "human") return Source::human(std::string(trim(prompt_id)));
    constexpr std::string_view prefix = "model:";
    if (tag.starts_with(prefix) && !trim(tag.substr(prefix.size())).empty()) {
        return Source::llm(std::string(trim(tag.substr(prefix.size()))), std::string(trim(prompt_id)));
    }
    throw ValidationError("malformed source '" + std::string(tag) + "' (expected human or model:<name>)");
}

AnnotationRecord validate_record(const RawRecord& raw, const LikertScale& scale) {
    AnnotationRecord rec;

    rec.claim_id = std::string(trim(required_field(raw, "claim_id")));
    if (rec.claim_id.empty()) throw ValidationError("empty claim_id");

    rec.topic = std::string(trim(required_field(raw, "topic")));
    rec.veracity = parse_veracity(optional_field(raw, "veracity"));

    std::string_view condition = trim(required_field(raw, "condition"));
    if (condition.empty()) throw ValidationError("empty condition");

    std::string prompt_id(trim(optional_field(raw, "prompt_id")));
    std::string variant;
    if (fold_base_variant(condition, variant)) {
        rec.condition = std::string(kBaseCondition);
        if (prompt_id.empty()) prompt_id = variant;
    } else {
        rec.condition = std::string(condition);
    }
    rec.source = parse_source(required_field(raw, "source"), prompt_id);

    std::string_view label = trim(required_field(raw, "label"));
    int value = 0;
    auto [end, ec] = std::from_chars(label.data(), label.data() + label.size(), value);
    if (ec != std::errc{} || end != label.data() + label.size()) {
        throw ValidationError("label is not an integer: '" + std::string(label) + "'");
    }
    if (!scale.contains(value)) {
        throw ValidationError("label out of range: " + std::to_string(value));
    }
    rec.label = value;
    rec.annotator_id = std::string(trim(optional_field(raw, "annotator_id")));
    return rec;
}

double ClaimCell::mean() const {
    if (labels.empty()) return 0.0;
    return static_cast<double>(std::accumulate(labels.begin(), labels.end(), 0LL)) /
           static_cast<double>(labels.size());
}

bool TopicDataset::has_base() const {
    return !claims.empty() && claims.begin()->second.contains(kBaseCondition);
}

const ClaimCell& TopicDataset::cell(std::string_view claim_id, std::string_view condition) const {
    auto claim = claims.find(claim_id);
    if (claim == claims.end()) throw ValidationError("unknown claim '" + std::string(claim_id) + "'");
    auto c = claim->second.find(condition);
    if (c == claim->second.end()) {
        throw ValidationError("claim '" + std::string(claim_id) + "' has no '" + std::string(condition) +
                              "' cell");
    }
    return c->second;
}

BuildResult build_topic_dataset(std::span<const AnnotationRecord> records, std::string_view topic,
                                std::span<const std::string> required_conditions,
                                const BuildOptions& options) {
    if (records.empty()) throw ValidationError("no records");

    // Sort by a total key so that input order never matters.
    std::vector<const AnnotationRecord*> selected;
    for (const auto& r : records) {
        if (r.topic == topic) selected.push_back(&r);
    }
    auto key = [](const AnnotationRecord* r) {
        return std::tie(r->claim_id, r->condition, r->source, r->annotator_id, r->label);
    };
    std::sort(selected.begin(), selected.end(),
              [&](const AnnotationRecord* a, const AnnotationRecord* b) { return key(a) < key(b); });
    for (std::size_t i = 1; i < selected.size(); ++i) {
        const auto* a = selected[i - 1];
        const auto* b = selected[i];
        if (a->claim_id == b->claim_id && a->condition == b->condition && a->source == b->source &&
            a->annotator_id == b->annotator_id) {
            throw ValidationError("duplicate record for claim '" + a->claim_id + "', condition '" +
                                  a->condition + "', annotator '" + a->annotator_id + "'");
        }
    }

    std::vector<std::string> required(required_conditions.begin(), required_conditions.end());
    if (required.empty()) {
        std::set<std::string> seen;
        for (const auto* r : selected) seen.insert(r->condition);
        required.assign(seen.begin(), seen.end());
    }

    BuildResult result;
    TopicDataset& ds = result.dataset;
    ds.topic = std::string(topic);
    ds.scale = options.scale;
    for (const auto& c : required) {
        if (c != kBaseCondition &&
            std::find(ds.groups.begin(), ds.groups.end(), c) == ds.groups.end()) {
            ds.groups.push_back(c);
        }
    }

    std::map<std::string, CellMap, std::less<>> all;
    for (const auto* r : selected) {
        ClaimCell& cell = all[r->claim_id][r->condition];
        cell.claim_id = r->claim_id;
        cell.condition = r->condition;
        cell.labels.push_back(r->label);
    }

    for (auto& [claim_id, cells] : all) {
        std::string problem;
        for (const auto& cond : required) {
            auto it = cells.find(cond);
            if (it == cells.end()) {
                problem = "missing '" + cond + "' cell";
                break;
            }
            if (it->second.size() < options.min_labels) {
                problem = "'" + cond + "' cell has " + std::to_string(it->second.size()) +
                          " labels (< " + std::to_string(options.min_labels) + ")";
                break;
            }
        }
        if (!problem.empty()) {
            result.warnings.push_back("claim '" + claim_id + "' excluded: " + problem);
            continue;
        }
        CellMap kept;
        for (const auto& cond : required) kept.emplace(cond, std::move(cells.at(cond)));
        ds.claims.emplace(claim_id, std::move(kept));
    }

    if (ds.claims.empty()) {
        throw ValidationError("empty topic dataset for topic '" + std::string(topic) + "'");
    }
    return result;
}

}  // namespace likertqc
