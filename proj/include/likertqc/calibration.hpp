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

// Synthetic topics with known ground truth, used to measure the size and
// power of the consistency and alignment tests.
//
// Spec file (JSON):
//   {
//     "topic": "synthetic",                      optional
//     "groups": [{"name": "man",   "distribution": [0,1,0,0,0,0]},
//                {"name": "woman", "distribution": [0,0,0,1,0,0]}],
//     "true_mixture": [0.5, 0.5],
//     "claims": 20,
//     "n_per_cell": 30,
//     "base_n": 30,                              optional, defaults to n_per_cell
//     "seed": 1
//   }
// Each distribution lists probabilities for labels low..high of the scale.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "likertqc/model.hpp"

namespace likertqc {

struct SyntheticGroup {
    std::string name;
    std::vector<double> distribution;
};

struct SyntheticSpec {
    std::string topic = "synthetic";
    std::vector<SyntheticGroup> groups;
    std::vector<double> true_mixture;
    std::size_t claims = 20;
    std::size_t n_per_cell = 30;
    std::size_t base_n = 0;  // 0: same as n_per_cell
    std::uint64_t seed = 0;
    LikertScale scale;

    /// Throws ValidationError unless distributions and the mixture are on the simplex.
    void validate() const;
};

SyntheticSpec parse_synthetic_spec(std::string_view json_text);
SyntheticSpec load_synthetic_spec(const std::filesystem::path& path);
std::string to_json(const SyntheticSpec& spec);

/// n i.i.d. labels per group cell and base_n base labels from the mixture
/// sum_g q_g D_g, for every claim. Deterministic in spec.seed.
TopicDataset generate_synthetic_topic(const SyntheticSpec& spec);

enum class CalibratedTest { Weak, Strong, Alignment };

std::string_view to_string(CalibratedTest t);
CalibratedTest parse_calibrated_test(std::string_view text);

struct CalibrationOptions {
    CalibratedTest test = CalibratedTest::Strong;
    std::size_t runs = 200;
    std::size_t replicates = 2000;
    std::vector<double> thresholds{0.7, 0.8, 0.9, 1.0};
    double grid_step = 0.05;
    double alpha = 0.05;
    double alpha_star = 0.0025;
    double confidence = 0.95;  // for the Wilson interval
    int jobs = 1;              // runs in flight; never changes results
};

struct CalibrationPoint {
    std::vector<double> parameter;  // p0, q0, or the null gap (0)
    std::size_t rejections = 0;
    double rate = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

struct CalibrationSummary {
    CalibratedTest test = CalibratedTest::Strong;
    std::size_t runs = 0;
    std::uint64_t seed = 0;
    double level = 0.0;  // alpha or alpha_star
    double confidence = 0.0;
    std::vector<CalibrationPoint> points;

    /// Point whose parameter matches `parameter` within 1e-9; throws if absent.
    const CalibrationPoint& at(std::span<const double> parameter) const;
};

struct WilsonInterval {
    double low = 0.0;
    double high = 0.0;
};

WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double confidence);

/// Repeats generate + test with seeds derived from (spec.seed, run index).
/// Alignment runs use a zero prior on the first two groups, plus = woman and
/// minus = man when both names are present, else groups[1] - groups[0].
CalibrationSummary run_calibration(const SyntheticSpec& spec, const CalibrationOptions& options);

std::string to_json(const CalibrationSummary& summary);

}  // namespace likertqc
