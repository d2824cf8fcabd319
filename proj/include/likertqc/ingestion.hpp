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

// Annotation files, the gold-question worker filter, and dataset summaries.
//
// CSV header (required, any column order):
//   claim_id,topic,veracity,condition,source,prompt_id,annotator_id,label
// JSONL: one object per line with the same keys.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "likertqc/model.hpp"

namespace likertqc {

enum class FileFormat { Csv, Jsonl };

/// Picks the format from the file extension (.csv, .jsonl, .json).
FileFormat format_from_path(const std::filesystem::path& path);

inline constexpr const char* kCsvColumns[] = {"claim_id", "topic",        "veracity", "condition",
                                              "source",   "prompt_id",    "annotator_id", "label"};

/// Splits CSV text into rows of fields (RFC 4180 quoting, CRLF tolerant).
std::vector<std::vector<std::string>> parse_csv(std::istream& in);
std::string csv_escape(std::string_view field);

std::vector<AnnotationRecord> parse_annotations_csv(std::istream& in, const LikertScale& scale = {});
std::vector<AnnotationRecord> parse_annotations_jsonl(std::istream& in, const LikertScale& scale = {});

/// Reads and validates every row; the first bad row aborts with its row number.
std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path, FileFormat format,
                                               const LikertScale& scale = {});
std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path,
                                               const LikertScale& scale = {});

void write_annotations_csv(std::ostream& out, std::span<const AnnotationRecord> records);
std::string to_jsonl_line(const AnnotationRecord& record);

// Gold-question filter ------------------------------------------------------

enum class GoldVerdict { ClearlyTrue, ClearlyFalse };

struct GoldSpec {
    std::string claim_id;
    GoldVerdict expected = GoldVerdict::ClearlyTrue;
};

/// CSV with header claim_id,expected_verdict (clearly_true | clearly_false).
std::vector<GoldSpec> load_gold(const std::filesystem::path& path);
std::vector<GoldSpec> parse_gold_csv(std::istream& in);

struct GoldFilterOptions {
    double accuracy_threshold = 0.8;  // kept only when accuracy is strictly above
    std::size_t min_gold = 2;
    LikertScale scale;
};

struct WorkerGoldScore {
    std::string annotator_id;
    std::size_t answered = 0;
    std::size_t correct = 0;
    bool kept = false;
    std::string reason;  // empty when kept

    double accuracy() const { return answered == 0 ? 0.0 : static_cast<double>(correct) / answered; }
};

struct GoldFilterResult {
    std::vector<AnnotationRecord> kept;
    std::vector<std::string> dropped_workers;
    std::vector<WorkerGoldScore> scores;
    std::size_t duplicates_removed = 0;
};

/// Labels of gold claims are read as perceived falsehood (higher = more
/// false): an answer is correct when it lands on the matching half of the
/// scale. Repeated (worker, claim) responses after the first are removed
/// before scoring. Throws when no gold claim appears in `records`.
GoldFilterResult filter_workers_by_gold_accuracy(std::span<const AnnotationRecord> records,
                                                 std::span<const GoldSpec> gold,
                                                 const GoldFilterOptions& options = {});

// Summaries -----------------------------------------------------------------

struct ConditionSummary {
    std::string topic;
    std::string condition;
    std::size_t count = 0;
    double mean = 0.0;
    double sd = 0.0;     // sample sd, 0 when count == 1
    bool single = false; // count == 1, sd undefined
};

struct TopicClaimCounts {
    std::string topic;
    std::size_t true_claims = 0;
    std::size_t false_claims = 0;
    std::size_t unknown_claims = 0;
};

struct SummaryTable {
    std::vector<ConditionSummary> conditions;  // sorted by (topic, condition)
    std::vector<TopicClaimCounts> topics;      // sorted by topic

    const ConditionSummary* find(std::string_view topic, std::string_view condition) const;
};

SummaryTable summarize_dataset(std::span<const AnnotationRecord> records);

}  // namespace likertqc
