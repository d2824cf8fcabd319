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

#include "likertqc/ingestion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "likertqc/error.hpp"
#include "likertqc/stats.hpp"

namespace likertqc {

using json = nlohmann::json;

FileFormat format_from_path(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".csv") return FileFormat::Csv;
    if (ext == ".jsonl" || ext == ".json" || ext == ".ndjson") return FileFormat::Jsonl;
    throw ValidationError("cannot infer file format from '" + path.string() + "'");
}

std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    char c = 0;

    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
        row.clear();
    };

    while (in.get(c)) {
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field_started && field.empty()) {
                    quoted = true;
                    field_started = true;
                } else {
                    field.push_back(c);
                }
                break;
            case ',': end_field(); break;
            case '\r': break;
            case '\n': end_row(); break;
            default:
                field.push_back(c);
                field_started = true;
        }
    }
    if (quoted) throw ValidationError("unterminated quoted CSV field");
    if (!field.empty() || !row.empty() || field_started) end_row();

    // Strip a UTF-8 byte order mark from the first field.
    if (!rows.empty() && !rows[0].empty() && rows[0][0].starts_with("\xEF\xBB\xBF")) {
        rows[0][0].erase(0, 3);
    }
    return rows;
}

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::vector<AnnotationRecord> parse_annotations_csv(std::istream& in, const LikertScale& scale) {
    const auto rows = parse_csv(in);
    if (rows.empty()) throw ValidationError("CSV has no header");
    const auto& header = rows[0];
    std::map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < header.size(); ++i) column[header[i]] = i;
    for (const char* name : kCsvColumns) {
        if (!column.contains(name)) {
            throw ValidationError(std::string("schema mismatch: missing column '") + name + "'");
        }
    }

    std::vector<AnnotationRecord> out;
    out.reserve(rows.size() - 1);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != header.size()) {
            throw ValidationError("row " + std::to_string(r) + ": expected " + std::to_string(header.size()) +
                                  " fields, got " + std::to_string(row.size()));
        }
        RawRecord raw;
        for (const auto& [name, idx] : column) raw.emplace(name, row[idx]);
        try {
            out.push_back(validate_record(raw, scale));
        } catch (const ValidationError& e) {
            throw ValidationError("row " + std::to_string(r) + ": " + e.what());
        }
    }
    return out;
}

std::vector<AnnotationRecord> parse_annotations_jsonl(std::istream& in, const LikertScale& scale) {
    std::vector<AnnotationRecord> out;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ++row;
        try {
            const json obj = json::parse(line);
            if (!obj.is_object()) throw ValidationError("not a JSON object");
            RawRecord raw;
            for (const auto& [key, value] : obj.items()) {
                if (value.is_string()) raw.emplace(key, value.get<std::string>());
                else if (value.is_number_integer()) raw.emplace(key, std::to_string(value.get<long long>()));
                else if (value.is_null()) raw.emplace(key, "");
                else raw.emplace(key, value.dump());
            }
            out.push_back(validate_record(raw, scale));
        } catch (const json::exception& e) {
            throw ValidationError("row " + std::to_string(row) + ": " + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError("row " + std::to_string(row) + ": " + e.what());
        }
    }
    return out;
}

std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path, FileFormat format,
                                               const LikertScale& scale) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read '" + path.string() + "'");
    try {
        return format == FileFormat::Csv ? parse_annotations_csv(in, scale) : parse_annotations_jsonl(in, scale);
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path, const LikertScale& scale) {
    return load_annotations(path, format_from_path(path), scale);
}

void write_annotations_csv(std::ostream& out, std::span<const AnnotationRecord> records) {
    for (std::size_t i = 0; i < std::size(kCsvColumns); ++i) out << (i ? "," : "") << kCsvColumns[i];
    out << '\n';
    for (const auto& r : records) {
        out << csv_escape(r.claim_id) << ',' << csv_escape(r.topic) << ',' << to_string(r.veracity) << ','
            << csv_escape(r.condition) << ',' << csv_escape(r.source.tag()) << ','
            << csv_escape(r.source.prompt_id) << ',' << csv_escape(r.annotator_id) << ',' << r.label << '\n';
    }
}

std::string to_jsonl_line(const AnnotationRecord& r) {
    json obj = {{"claim_id", r.claim_id},
                {"topic", r.topic},
                {"veracity", std::string(to_string(r.veracity))},
                {"condition", r.condition},
                {"source", r.source.tag()},
                {"prompt_id", r.source.prompt_id},
                {"annotator_id", r.annotator_id},
                {"label", r.label}};
    return obj.dump();
}

std::vector<GoldSpec> parse_gold_csv(std::istream& in) {
    const auto rows = parse_csv(in);
    if (rows.empty()) throw ValidationError("gold CSV has no header");
    const auto& header = rows[0];
    const auto claim_col = std::find(header.begin(), header.end(), "claim_id");
    const auto verdict_col = std::find(header.begin(), header.end(), "expected_verdict");
    if (claim_col == header.end() || verdict_col == header.end()) {
        throw ValidationError("gold CSV needs columns claim_id,expected_verdict");
    }
    const auto ci = static_cast<std::size_t>(claim_col - header.begin());
    const auto vi = static_cast<std::size_t>(verdict_col - header.begin());
    std::vector<GoldSpec> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != header.size()) {
            throw ValidationError("gold row " + std::to_string(r) + ": wrong field count");
        }
        GoldSpec g;
        g.claim_id = rows[r][ci];
        const auto& v = rows[r][vi];
        if (v == "clearly_true") g.expected = GoldVerdict::ClearlyTrue;
        else if (v == "clearly_false") g.expected = GoldVerdict::ClearlyFalse;
        else throw ValidationError("gold row " + std::to_string(r) + ": unknown verdict '" + v + "'");
        out.push_back(std::move(g));
    }
    return out;
}

std::vector<GoldSpec> load_gold(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read '" + path.string() + "'");
    return parse_gold_csv(in);
}

GoldFilterResult filter_workers_by_gold_accuracy(std::span<const AnnotationRecord> records,
                                                 std::span<const GoldSpec> gold,
                                                 const GoldFilterOptions& options) {
    if (!(options.accuracy_threshold >= 0.0 && options.accuracy_threshold <= 1.0)) {
        throw ValidationError("accuracy threshold must be in [0, 1]");
    }
    std::map<std::string, GoldVerdict, std::less<>> expected;
    for (const auto& g : gold) expected.emplace(g.claim_id, g.expected);

    GoldFilterResult result;

    // First response per (source, worker, claim) wins.
    std::set<std::tuple<std::string, std::string, std::string>> seen;
    std::vector<AnnotationRecord> unique;
    unique.reserve(records.size());
    for (const auto& r : records) {
        if (seen.emplace(r.source.tag(), r.annotator_id, r.claim_id).second) {
            unique.push_back(r);
        } else {
            ++result.duplicates_removed;
        }
    }

    const int midpoint = (options.scale.low + options.scale.high) / 2;
    std::map<std::string, WorkerGoldScore> scores;
    bool any_gold = false;
    for (const auto& r : unique) {
        auto& s = scores[r.annotator_id];
        s.annotator_id = r.annotator_id;
        auto it = expected.find(r.claim_id);
        if (it == expected.end()) continue;
        any_gold = true;
        ++s.answered;
        const bool says_true = r.label <= midpoint;
        if (says_true == (it->second == GoldVerdict::ClearlyTrue)) ++s.correct;
    }
    if (!any_gold) throw ValidationError("no gold claims present in records");

    for (auto& [worker, s] : scores) {
        if (s.answered < options.min_gold) {
            s.reason = "insufficient gold coverage";
        } else if (!(s.accuracy() > options.accuracy_threshold)) {
            s.reason = "gold accuracy too low";
        } else {
            s.kept = true;
        }
        if (!s.kept) result.dropped_workers.push_back(worker);
        result.scores.push_back(s);
    }
    for (auto& r : unique) {
        if (scores.at(r.annotator_id).kept) result.kept.push_back(std::move(r));
    }
    return result;
}

const ConditionSummary* SummaryTable::find(std::string_view topic, std::string_view condition) const {
    for (const auto& c : conditions) {
        if (c.topic == topic && c.condition == condition) return &c;
    }
    return nullptr;
}

SummaryTable summarize_dataset(std::span<const AnnotationRecord> records) {
    if (records.empty()) throw ValidationError("summarize: no records");
    std::map<std::pair<std::string, std::string>, std::vector<int>> labels;
    std::map<std::string, std::map<std::string, Veracity>> claims;
    for (const auto& r : records) {
        labels[{r.topic, r.condition}].push_back(r.label);
        claims[r.topic].emplace(r.claim_id, r.veracity);
    }

    SummaryTable table;
    for (const auto& [key, values] : labels) {
        ConditionSummary s;
        s.topic = key.first;
        s.condition = key.second;
        s.count = values.size();
        s.mean = mean(values);
        s.sd = sample_sd(values);
        s.single = values.size() == 1;
        table.conditions.push_back(std::move(s));
    }
    for (const auto& [topic, by_claim] : claims) {
        TopicClaimCounts t;
        t.topic = topic;
        for (const auto& [claim, v] : by_claim) {
            switch (v) {
                case Veracity::True: ++t.true_claims; break;
                case Veracity::False: ++t.false_claims; break;
                case Veracity::Unknown: ++t.unknown_claims; break;
            }
        }
        table.topics.push_back(std::move(t));
    }
    return table;
}

}  // namespace likertqc
