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

#include "likertqc/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "likertqc/error.hpp"
#include "likertqc/stats.hpp"

namespace likertqc {

std::string_view to_string(PriorDirection d) {
    switch (d) {
        case PriorDirection::Unspecified: return "unspecified";
        case PriorDirection::ExpectNoDifference: return "expect_no_difference";
        case PriorDirection::ExpectDifference: return "expect_difference";
    }
    return "unspecified";
}

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::NotApplicable: return "n/a";
        case Verdict::ConsistentWithPrior: return "consistent_with_prior";
        case Verdict::ViolatesPriorExaggeration: return "violates_prior_exaggeration";
        case Verdict::ViolatesPriorErosion: return "violates_prior_erosion";
    }
    return "n/a";
}

PriorDirection parse_prior_direction(std::string_view text) {
    if (text.empty() || text == "unspecified") return PriorDirection::Unspecified;
    if (text == "expect_no_difference" || text == "none") return PriorDirection::ExpectNoDifference;
    if (text == "expect_difference" || text == "difference") return PriorDirection::ExpectDifference;
    throw ValidationError("unknown prior direction '" + std::string(text) + "'");
}

Verdict parse_verdict(std::string_view text) {
    for (auto v : {Verdict::NotApplicable, Verdict::ConsistentWithPrior, Verdict::ViolatesPriorExaggeration,
                   Verdict::ViolatesPriorErosion}) {
        if (to_string(v) == text) return v;
    }
    throw ValidationError("unknown verdict '" + std::string(text) + "'");
}

ExpectedGapSource ExpectedGapSource::prior_zero(PriorDirection direction) {
    ExpectedGapSource s;
    s.kind = Kind::PriorZero;
    s.direction = direction;
    return s;
}

ExpectedGapSource ExpectedGapSource::human(TopicDataset reference) {
    ExpectedGapSource s;
    s.kind = Kind::HumanReference;
    s.reference = std::move(reference);
    return s;
}

namespace {

const ClaimCell& need_cell(std::string_view claim_id, const CellMap& cells, const std::string& condition,
                           std::string_view what) {
    auto it = cells.find(condition);
    if (it == cells.end() || it->second.labels.empty()) {
        throw ValidationError("claim '" + std::string(claim_id) + "': missing " + std::string(what) + " '" +
                              condition + "' cell");
    }
    return it->second;
}

}  // namespace

ClaimGap claim_gap_deviation(std::string_view claim_id, const CellMap& model, const CellMap* reference,
                             const GapOrder& order) {
    const auto& plus = need_cell(claim_id, model, order.plus, "model");
    const auto& minus = need_cell(claim_id, model, order.minus, "model");

    ClaimGap gap;
    gap.claim_id = std::string(claim_id);
    gap.model_gap = plus.mean() - minus.mean();
    if (reference != nullptr) {
        const auto& ref_plus = need_cell(claim_id, *reference, order.plus, "reference");
        const auto& ref_minus = need_cell(claim_id, *reference, order.minus, "reference");
        gap.expected_gap = ref_plus.mean() - ref_minus.mean();
    }
    gap.deviation = gap.model_gap - gap.expected_gap;
    gap.n_plus = plus.size();
    gap.n_minus = minus.size();
    const auto np = static_cast<double>(gap.n_plus);
    const auto nm = static_cast<double>(gap.n_minus);
    gap.weight = np * nm / (np + nm);
    return gap;
}

int significance_stars(double p) {
    if (p < 0.001) return 3;
    if (p < 0.01) return 2;
    if (p < 0.05) return 1;
    return 0;
}

std::string stars_text(int stars) { return std::string(static_cast<std::size_t>(stars), '*'); }

Verdict classify_verdict(double /*mean*/, double p, double alpha, PriorDirection direction) {
    const bool significant = p < alpha;
    switch (direction) {
        case PriorDirection::ExpectNoDifference:
            return significant ? Verdict::ViolatesPriorExaggeration : Verdict::ConsistentWithPrior;
        case PriorDirection::ExpectDifference:
            return significant ? Verdict::ConsistentWithPrior : Verdict::ViolatesPriorErosion;
        case PriorDirection::Unspecified: break;
    }
    return Verdict::NotApplicable;
}

AlignmentReport alignment_topic_test(const TopicDataset& model, const ExpectedGapSource& expected,
                                     const AlignmentConfig& cfg) {
    AlignmentReport report;
    report.topic = model.topic;
    report.order = cfg.order;
    report.expected = expected.kind;
    report.direction = expected.direction;

    const bool use_reference = expected.kind == ExpectedGapSource::Kind::HumanReference;
    if (use_reference && !expected.reference) {
        throw ValidationError("human-reference alignment needs a reference dataset");
    }

    for (const auto& [claim_id, cells] : model.claims) {
        const CellMap* ref = nullptr;
        if (use_reference) {
            auto it = expected.reference->claims.find(claim_id);
            if (it == expected.reference->claims.end()) {
                report.warnings.push_back("claim '" + claim_id + "' skipped: no human reference");
                continue;
            }
            ref = &it->second;
            bool usable = true;
            for (const auto* cond : {&cfg.order.plus, &cfg.order.minus}) {
                auto c = ref->find(*cond);
                const std::size_t n = c == ref->end() ? 0 : c->second.size();
                if (n < std::max<std::size_t>(1, cfg.min_reference_n)) {
                    report.warnings.push_back("claim '" + claim_id + "' skipped: human '" + *cond +
                                              "' cell has " + std::to_string(n) + " labels");
                    usable = false;
                    break;
                }
                if (n < cfg.warn_reference_n) {
                    report.warnings.push_back("claim '" + claim_id + "': human '" + *cond + "' cell has only " +
                                              std::to_string(n) + " labels");
                }
            }
            if (!usable) continue;
        }
        auto plus = cells.find(cfg.order.plus);
        auto minus = cells.find(cfg.order.minus);
        if (plus == cells.end() || minus == cells.end() || plus->second.labels.empty() ||
            minus->second.labels.empty()) {
            report.warnings.push_back("claim '" + claim_id + "' skipped: missing model cell");
            continue;
        }
        report.claims.push_back(claim_gap_deviation(claim_id, cells, ref, cfg.order));
    }

    if (report.claims.size() < 2) {
        throw ValidationError("alignment test for topic '" + model.topic + "' needs at least 2 usable claims, got " +
                              std::to_string(report.claims.size()));
    }

    std::vector<double> g;
    std::vector<double> w;
    for (const auto& c : report.claims) {
        g.push_back(c.deviation);
        w.push_back(c.weight);
    }
    const auto summary = weighted_mean_se(g, w);
    report.mean = summary.mean;
    report.se = summary.se;
    report.dof = summary.dof;

    if (summary.se > 0.0) {
        report.t = summary.mean / summary.se;
        report.p_value = student_t_two_sided_p(report.t, summary.dof);
    } else if (summary.mean == 0.0) {
        report.t = 0.0;
        report.p_value = 1.0;
    } else {
        report.degenerate_variance = true;
        report.t = std::copysign(std::numeric_limits<double>::infinity(), summary.mean);
        report.p_value = 0.0;
        report.warnings.push_back("degenerate variance: every claim has the same nonzero deviation");
    }
    report.stars = significance_stars(report.p_value);
    report.verdict = classify_verdict(report.mean, report.p_value, cfg.alpha, report.direction);
    return report;
}

}  // namespace likertqc
