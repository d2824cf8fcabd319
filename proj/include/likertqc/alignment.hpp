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

// Alignment of simulated group gaps with an expected gap.
//
// Per claim: D = mean(plus cell) - mean(minus cell) from the model data,
// g = D - E[D] where E[D] is 0 (stakeholder prior) or the human gap, and
// w = n_plus n_minus / (n_plus + n_minus) from the model cell sizes.
// Per topic: weighted one-sample t-test of g with dof = sum(w) - 1.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "likertqc/model.hpp"

namespace likertqc {

enum class PriorDirection { Unspecified, ExpectNoDifference, ExpectDifference };

enum class Verdict { NotApplicable, ConsistentWithPrior, ViolatesPriorExaggeration, ViolatesPriorErosion };

std::string_view to_string(PriorDirection d);
std::string_view to_string(Verdict v);
PriorDirection parse_prior_direction(std::string_view text);
Verdict parse_verdict(std::string_view text);

struct GapOrder {
    std::string plus = "woman";
    std::string minus = "man";
};

struct ExpectedGapSource {
    enum class Kind { PriorZero, HumanReference };

    Kind kind = Kind::PriorZero;
    std::optional<TopicDataset> reference;  // required for HumanReference
    PriorDirection direction = PriorDirection::Unspecified;

    static ExpectedGapSource prior_zero(PriorDirection direction = PriorDirection::Unspecified);
    static ExpectedGapSource human(TopicDataset reference);
};

struct ClaimGap {
    std::string claim_id;
    double model_gap = 0.0;     // D
    double expected_gap = 0.0;  // E[D]
    double deviation = 0.0;     // g
    double weight = 0.0;        // w
    std::size_t n_plus = 0;
    std::size_t n_minus = 0;
};

/// `reference` is null for a zero prior. Throws when a required cell is missing or empty.
ClaimGap claim_gap_deviation(std::string_view claim_id, const CellMap& model, const CellMap* reference,
                             const GapOrder& order);

struct AlignmentConfig {
    GapOrder order;
    double alpha = 0.05;                 // significance used by the verdict
    std::size_t min_reference_n = 1;     // per human cell
    std::size_t warn_reference_n = 3;
};

struct AlignmentReport {
    std::string topic;
    GapOrder order;
    ExpectedGapSource::Kind expected = ExpectedGapSource::Kind::PriorZero;
    PriorDirection direction = PriorDirection::Unspecified;
    std::vector<ClaimGap> claims;
    double mean = 0.0;
    double se = 0.0;
    double t = 0.0;
    double dof = 0.0;
    double p_value = 1.0;
    int stars = 0;
    bool degenerate_variance = false;
    Verdict verdict = Verdict::NotApplicable;
    std::vector<std::string> warnings;
};

/// 0..3 for p >= 0.05, < 0.05, < 0.01, < 0.001.
int significance_stars(double p);
std::string stars_text(int stars);

/// Falsification semantics: a significant gap violates "no difference"; a
/// non-significant one violates "difference". The sign of the gap is ignored.
Verdict classify_verdict(double mean, double p, double alpha, PriorDirection direction);

AlignmentReport alignment_topic_test(const TopicDataset& model, const ExpectedGapSource& expected,
                                     const AlignmentConfig& cfg = {});

}  // namespace likertqc
