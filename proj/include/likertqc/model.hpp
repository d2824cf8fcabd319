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

// Annotation data model shared by every check.

#include <compare>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace likertqc {

inline constexpr std::string_view kBaseCondition = "base";

enum class Veracity { True, False, Unknown };

std::string_view to_string(Veracity v);
Veracity parse_veracity(std::string_view text);

/// Who produced a label: a human annotator or a model queried with a prompt.
struct Source {
    enum class Kind { Human, Model };

    Kind kind = Kind::Human;
    std::string model;      // empty for human data
    std::string prompt_id;  // template id for model data, usually empty for humans

    static Source human(std::string prompt_id = {});
    static Source llm(std::string model, std::string prompt_id);

    bool is_human() const { return kind == Kind::Human; }

    /// Wire form used in the `source` column: "human" or "model:<name>".
    std::string tag() const;

    auto operator<=>(const Source&) const = default;
};

/// Parses the `source` column. `prompt_id` comes from its own column.
Source parse_source(std::string_view tag, std::string_view prompt_id);

/// Inclusive bounds of the response scale.
struct LikertScale {
    int low = 1;
    int high = 6;

    bool contains(int label) const { return label >= low && label <= high; }
    bool operator==(const LikertScale&) const = default;
};

/// One Likert label for (claim, condition, source).
struct AnnotationRecord {
    std::string claim_id;
    std::string topic;
    Veracity veracity = Veracity::Unknown;
    std::string condition;
    Source source;
    int label = 0;
    std::string annotator_id;

    bool operator==(const AnnotationRecord&) const = default;
};

/// Field name -> raw text, as read from a CSV row or a JSON object.
using RawRecord = std::map<std::string, std::string, std::less<>>;

/// Validates one raw record. Prompt-variant conditions such as "base2" or
/// "Base Prompt 2" are folded to "base" with the variant kept as prompt_id.
/// Throws ValidationError naming the offending field.
AnnotationRecord validate_record(const RawRecord& raw, const LikertScale& scale = {});

/// Labels for one (claim, condition).
struct ClaimCell {
    std::string claim_id;
    std::string condition;
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }
    double mean() const;
};

using CellMap = std::map<std::string, ClaimCell, std::less<>>;

/// Claims of one topic with per-condition label vectors.
struct TopicDataset {
    std::string topic;
    std::map<std::string, CellMap, std::less<>> claims;
    std::vector<std::string> groups;  // non-base conditions, in caller order
    LikertScale scale;

    std::size_t claim_count() const { return claims.size(); }
    bool has_base() const;
    const ClaimCell& cell(std::string_view claim_id, std::string_view condition) const;
};

struct BuildOptions {
    std::size_t min_labels = 2;
    LikertScale scale;
};

struct BuildResult {
    TopicDataset dataset;
    std::vector<std::string> warnings;
};

/// Groups records of `topic` into a dataset. Claims missing a required
/// condition, or with a cell smaller than min_labels, are dropped with a
/// warning. When `required_conditions` is empty every condition seen in the
/// topic is required. The result does not depend on record order.
BuildResult build_topic_dataset(std::span<const AnnotationRecord> records,
                                std::string_view topic,
                                std::span<const std::string> required_conditions,
                                const BuildOptions& options = {});

}  // namespace likertqc
