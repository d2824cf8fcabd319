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

// Report serialisation, summary tables and feasibility plots.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "likertqc/alignment.hpp"
#include "likertqc/consistency.hpp"

namespace likertqc {

// JSON round trip. Doubles are written in shortest round-trip form, so
// parsing a rendered report restores every statistic exactly. Infinite
// values are written as the strings "inf" / "-inf".

std::string to_json(const WeakTestReport& report);
std::string to_json(const StrongTestReport& report);
std::string to_json(const AlignmentReport& report);

WeakTestReport weak_report_from_json(std::string_view text);
StrongTestReport strong_report_from_json(std::string_view text);
AlignmentReport alignment_report_from_json(std::string_view text);

// Topic tables --------------------------------------------------------------

struct TopicRow {
    std::string source;  // model name or "human"
    std::string prompt;
    AlignmentReport report;
};

/// "blue" / "red" for prior checks (agrees / contradicts); for checks against
/// a human reference "pos" / "neg" marks a significant gap by sign and an
/// insignificant one is untagged.
std::string color_tag(const AlignmentReport& report);

/// Mean to two decimals followed by its stars, e.g. "0.45***".
std::string format_gap(double mean, int stars);

struct RenderedTables {
    std::string markdown;
    std::string csv;
    std::string json;
};

/// One row per (source, prompt, topic). Throws "nothing to render" on empty input.
RenderedTables render_topic_tables(std::span<const TopicRow> rows);

// Benchmark summary ---------------------------------------------------------

struct CheckScore {
    std::size_t passed = 0;
    std::size_t total = 0;

    double fraction() const { return total == 0 ? 0.0 : static_cast<double>(passed) / static_cast<double>(total); }
    /// Whole-number percentage, e.g. "44%".
    std::string percent() const;
};

struct MethodReports {
    std::string method;
    std::vector<WeakTestReport> qc1a;
    std::vector<StrongTestReport> qc1b;
    std::vector<AlignmentReport> qc2a;
    std::vector<AlignmentReport> qc2b;
};

struct BenchmarkRow {
    std::string method;
    CheckScore qc1a;  // feasible (topic, p0) cells
    CheckScore qc1b;  // topics with a non-empty feasible q0 set
    CheckScore qc2a;  // topics whose verdict agrees with the prior
    CheckScore qc2b;  // topics with no significant divergence from humans
};

struct BenchmarkSummary {
    std::vector<BenchmarkRow> rows;

    std::string markdown() const;
    std::string json() const;
};

/// QC1a counts each report at each p0 in `thresholds`; a threshold missing
/// from a report throws. A method without reports for some check throws.
BenchmarkSummary benchmark_summary(std::span<const MethodReports> methods, std::span<const double> thresholds,
                                   double alpha = 0.05);

// Feasibility plots ---------------------------------------------------------

struct FeasibilityPanel {
    std::string model;
    std::string prompt;
    std::string topic;
    std::size_t groups = 2;
    std::vector<double> thresholds;           // every p0 tested
    std::vector<double> feasible_p0;          // not rejected
    std::vector<std::vector<double>> grid;    // every q0 tested
    std::vector<std::vector<double>> feasible_q0;
};

FeasibilityPanel make_panel(std::string model, std::string prompt, const WeakTestReport& weak,
                            const StrongTestReport& strong);

/// Maximal runs of consecutive feasible grid points, as [first, last] values
/// of the first weight component. Grid order is taken as given.
std::vector<std::pair<double, double>> feasible_intervals(std::span<const std::vector<double>> grid,
                                                          std::span<const std::vector<double>> feasible);

struct FeasibilityPlot {
    std::string svg;
    std::string json;
};

/// Self-contained SVG with one panel per input plus the JSON series. Panels
/// with more than two groups show p0 markers only; their q0 sets are in the JSON.
FeasibilityPlot emit_feasibility_plot(std::span<const FeasibilityPanel> panels);

/// {run_id}/{check}/{model}_{prompt}_{topic}.{ext}, with path separators and
/// spaces in the name parts replaced by '_'.
std::filesystem::path report_path(const std::filesystem::path& root, std::string_view run_id, std::string_view check,
                                  std::string_view model, std::string_view prompt, std::string_view topic,
                                  std::string_view ext);

/// Writes `content` to `path`, creating parent directories.
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace likertqc
