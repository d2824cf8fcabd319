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

#include "likertqc/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/math/distributions/normal.hpp>
#include <json.hpp>

#include "likertqc/alignment.hpp"
#include "likertqc/consistency.hpp"
#include "likertqc/error.hpp"
#include "likertqc/rng.hpp"

namespace likertqc {

using json = nlohmann::json;

namespace {

constexpr double kSimplexTol = 1e-9;

bool is_distribution(std::span<const double> p) {
    double sum = 0.0;
    for (double v : p) {
        if (!(v >= 0.0)) return false;
        sum += v;
    }
    return std::fabs(sum - 1.0) <= kSimplexTol;
}

// Inverse-CDF draw of an index from a probability vector.
std::size_t draw_index(std::span<const double> p, RngStream& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        acc += p[i];
        if (u < acc) return i;
    }
    // Rounding left u above the total: take the last index with mass.
    for (std::size_t i = p.size(); i-- > 0;) {
        if (p[i] > 0.0) return i;
    }
    return p.size() - 1;
}

}  // namespace

void SyntheticSpec::validate() const {
    if (groups.size() < 2) throw ValidationError("synthetic spec needs at least two groups");
    if (scale.high < scale.low) throw ValidationError("synthetic spec: empty scale");
    const auto levels = static_cast<std::size_t>(scale.high - scale.low + 1);
    for (const auto& g : groups) {
        if (g.name.empty() || g.name == kBaseCondition) {
            throw ValidationError("synthetic spec: invalid group name '" + g.name + "'");
        }
        if (g.distribution.size() != levels) {
            throw ValidationError("synthetic spec: group '" + g.name + "' needs " + std::to_string(levels) +
                                  " probabilities");
        }
        if (!is_distribution(g.distribution)) {
            throw ValidationError("synthetic spec: distribution of '" + g.name + "' does not sum to 1");
        }
    }
    if (true_mixture.size() != groups.size() || !is_distribution(true_mixture)) {
        throw ValidationError("synthetic spec: true_mixture must be a simplex vector over the groups");
    }
    if (claims < 2) throw ValidationError("synthetic spec: need at least two claims");
    if (n_per_cell < 1) throw ValidationError("synthetic spec: n_per_cell must be >= 1");
}

SyntheticSpec parse_synthetic_spec(std::string_view json_text) {
    SyntheticSpec spec;
    try {
        const json doc = json::parse(json_text);
        spec.topic = doc.value("topic", spec.topic);
        for (const auto& g : doc.at("groups")) {
            spec.groups.push_back({g.at("name").get<std::string>(), g.at("distribution").get<std::vector<double>>()});
        }
        spec.true_mixture = doc.at("true_mixture").get<std::vector<double>>();
        spec.claims = doc.at("claims").get<std::size_t>();
        spec.n_per_cell = doc.at("n_per_cell").get<std::size_t>();
        spec.base_n = doc.value("base_n", std::size_t{0});
        spec.seed = doc.value("seed", std::uint64_t{0});
        if (doc.contains("scale")) {
            spec.scale.low = doc["scale"].at("low").get<int>();
            spec.scale.high = doc["scale"].at("high").get<int>();
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("synthetic spec: ") + e.what());
    }
    spec.validate();
    return spec;
}

SyntheticSpec load_synthetic_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_synthetic_spec(ss.str());
}

std::string to_json(const SyntheticSpec& spec) {
    json groups = json::array();
    for (const auto& g : spec.groups) groups.push_back({{"name", g.name}, {"distribution", g.distribution}});
    return json{{"topic", spec.topic},
                {"groups", groups},
                {"true_mixture", spec.true_mixture},
                {"claims", spec.claims},
                {"n_per_cell", spec.n_per_cell},
                {"base_n", spec.base_n},
                {"seed", spec.seed},
                {"scale", {{"low", spec.scale.low}, {"high", spec.scale.high}}}}
        .dump(2);
}

TopicDataset generate_synthetic_topic(const SyntheticSpec& spec) {
    spec.validate();
    TopicDataset data;
    data.topic = spec.topic;
    data.scale = spec.scale;
    for (const auto& g : spec.groups) data.groups.push_back(g.name);

    const std::size_t base_n = spec.base_n == 0 ? spec.n_per_cell : spec.base_n;
    const std::size_t width = std::to_string(spec.claims).size();
    const StreamKey root = root_key(spec.seed).then("synthetic");
    for (std::size_t c = 0; c < spec.claims; ++c) {
        std::string id = std::to_string(c);
        id = "c" + std::string(width - id.size(), '0') + id;
        CellMap cells;
        for (const auto& g : spec.groups) {
            RngStream rng = root.then(c).then(g.name).stream();
            ClaimCell cell{id, g.name, {}};
            for (std::size_t i = 0; i < spec.n_per_cell; ++i) {
                cell.labels.push_back(spec.scale.low + static_cast<int>(draw_index(g.distribution, rng)));
            }
            cells.emplace(g.name, std::move(cell));
        }
        RngStream rng = root.then(c).then(kBaseCondition).stream();
        ClaimCell base{id, std::string(kBaseCondition), {}};
        for (std::size_t i = 0; i < base_n; ++i) {
            const auto& g = spec.groups[draw_index(spec.true_mixture, rng)];
            base.labels.push_back(spec.scale.low + static_cast<int>(draw_index(g.distribution, rng)));
        }
        cells.emplace(std::string(kBaseCondition), std::move(base));
        data.claims.emplace(id, std::move(cells));
    }
    return data;
}

std::string_view to_string(CalibratedTest t) {
    switch (t) {
        case CalibratedTest::Weak: return "weak";
        case CalibratedTest::Strong: return "strong";
        case CalibratedTest::Alignment: return "alignment";
    }
    return "?";
}

CalibratedTest parse_calibrated_test(std::string_view text) {
    if (text == "weak") return CalibratedTest::Weak;
    if (text == "strong") return CalibratedTest::Strong;
    if (text == "alignment") return CalibratedTest::Alignment;
    throw ValidationError("unknown calibration test '" + std::string(text) + "'");
}

WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double confidence) {
    if (trials == 0) throw ValidationError("wilson interval needs at least one trial");
    if (!(confidence > 0.0 && confidence < 1.0)) throw ValidationError("confidence must be in (0, 1)");
    const double z = boost::math::quantile(boost::math::normal_distribution<>(), 0.5 + confidence / 2.0);
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double centre = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    const double low = successes == 0 ? 0.0 : std::max(0.0, centre - half);
    const double high = successes == trials ? 1.0 : std::min(1.0, centre + half);
    return {low, high};
}

const CalibrationPoint& CalibrationSummary::at(std::span<const double> parameter) const {
    for (const auto& p : points) {
        if (p.parameter.size() != parameter.size()) continue;
        bool same = true;
        for (std::size_t i = 0; i < parameter.size(); ++i) same = same && std::fabs(p.parameter[i] - parameter[i]) <= 1e-9;
        if (same) return p;
    }
    throw ValidationError("no calibration point for the requested parameter");
}

namespace {

GapOrder alignment_order(const SyntheticSpec& spec) {
    auto has = [&](std::string_view name) {
        return std::any_of(spec.groups.begin(), spec.groups.end(), [&](const auto& g) { return g.name == name; });
    };
    if (has("woman") && has("man")) return {};
    return {spec.groups[1].name, spec.groups[0].name};
}

// Rejection flags of one run, one per calibration point.
std::vector<char> run_once(const SyntheticSpec& spec, const CalibrationOptions& options, std::size_t run,
                           std::size_t points) {
    const StreamKey run_key = root_key(spec.seed).then("calibration").then(run);
    SyntheticSpec run_spec = spec;
    run_spec.seed = run_key.then("data").value();
    const TopicDataset data = generate_synthetic_topic(run_spec);
    const std::uint64_t test_seed = run_key.then("test").value();

    std::vector<char> flags(points, 0);
    switch (options.test) {
        case CalibratedTest::Weak: {
            WeakTestConfig cfg;
            cfg.thresholds = options.thresholds;
            cfg.alpha = options.alpha;
            cfg.bootstrap = {options.replicates, test_seed, 1};
            const auto report = weak_topic_test(data, cfg);
            for (std::size_t i = 0; i < points; ++i) flags[i] = report.thresholds[i].reject;
            break;
        }
        case CalibratedTest::Strong: {
            StrongTestConfig cfg;
            cfg.grid_step = options.grid_step;
            cfg.alpha_star = options.alpha_star;
            cfg.bootstrap = {options.replicates, test_seed, 1};
            const auto report = strong_topic_test(data, cfg);
            for (std::size_t i = 0; i < points; ++i) flags[i] = report.grid[i].reject;
            break;
        }
        case CalibratedTest::Alignment: {
            AlignmentConfig cfg;
            cfg.order = alignment_order(spec);
            cfg.alpha = options.alpha;
            const auto report =
                alignment_topic_test(data, ExpectedGapSource::prior_zero(PriorDirection::ExpectNoDifference), cfg);
            flags[0] = report.p_value < options.alpha;
            break;
        }
    }
    return flags;
}

}  // namespace

CalibrationSummary run_calibration(const SyntheticSpec& spec, const CalibrationOptions& options) {
    spec.validate();
    if (options.runs < 1) throw ValidationError("calibration needs at least one run");

    CalibrationSummary summary;
    summary.test = options.test;
    summary.runs = options.runs;
    summary.seed = spec.seed;
    summary.confidence = options.confidence;
    std::vector<std::vector<double>> parameters;
    switch (options.test) {
        case CalibratedTest::Weak:
            summary.level = options.alpha;
            for (double p0 : options.thresholds) parameters.push_back({p0});
            break;
        case CalibratedTest::Strong:
            summary.level = options.alpha_star;
            parameters = default_strong_grid(spec.groups.size(), options.grid_step);
            break;
        case CalibratedTest::Alignment:
            summary.level = options.alpha;
            parameters.push_back({0.0});
            break;
    }

    const std::size_t points = parameters.size();
    std::vector<char> flags(options.runs * points, 0);
    std::exception_ptr failure;
    const long long runs = static_cast<long long>(options.runs);
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, options.jobs))
    for (long long r = 0; r < runs; ++r) {
        try {
            const auto f = run_once(spec, options, static_cast<std::size_t>(r), points);
            std::copy(f.begin(), f.end(), flags.begin() + r * static_cast<long long>(points));
        } catch (...) {
#pragma omp critical(likertqc_calibration_error)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);

    for (std::size_t i = 0; i < points; ++i) {
        CalibrationPoint p;
        p.parameter = parameters[i];
        for (std::size_t r = 0; r < options.runs; ++r) p.rejections += flags[r * points + i];
        p.rate = static_cast<double>(p.rejections) / static_cast<double>(options.runs);
        const auto ci = wilson_interval(p.rejections, options.runs, options.confidence);
        p.ci_low = ci.low;
        p.ci_high = ci.high;
        summary.points.push_back(std::move(p));
    }
    return summary;
}

std::string to_json(const CalibrationSummary& summary) {
    json points = json::array();
    for (const auto& p : summary.points) {
        points.push_back({{"parameter", p.parameter},
                          {"rejections", p.rejections},
                          {"rate", p.rate},
                          {"ci_low", p.ci_low},
                          {"ci_high", p.ci_high}});
    }
    return json{{"test", std::string(to_string(summary.test))},
                {"runs", summary.runs},
                {"seed", summary.seed},
                {"level", summary.level},
                {"confidence", summary.confidence},
                {"points", points}}
        .dump(2);
}

}  // namespace likertqc
