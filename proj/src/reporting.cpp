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

#include "likertqc/reporting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "likertqc/error.hpp"
#include "likertqc/ingestion.hpp"

namespace likertqc {

using json = nlohmann::ordered_json;

namespace {

json num(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

double to_double(const json& j) {
    if (j.is_number()) return j.get<double>();
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw ValidationError("not a number: '" + s + "'");
}

json num_array(std::span<const double> v) {
    json a = json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

std::vector<double> doubles(const json& j) {
    std::vector<double> out;
    for (const auto& x : j) out.push_back(to_double(x));
    return out;
}

std::string exact(double v) { return num(v).dump(); }

template <class F>
auto parse_report(std::string_view text, std::string_view what, F&& f) {
    try {
        return f(json::parse(text));
    } catch (const json::exception& e) {
        throw ValidationError(std::string(what) + " report: " + e.what());
    }
}

std::string_view to_string(ExpectedGapSource::Kind k) {
    return k == ExpectedGapSource::Kind::PriorZero ? "prior_zero" : "human_reference";
}

ExpectedGapSource::Kind parse_expected_kind(std::string_view s) {
    if (s == "prior_zero") return ExpectedGapSource::Kind::PriorZero;
    if (s == "human_reference") return ExpectedGapSource::Kind::HumanReference;
    throw ValidationError("unknown expected-gap source '" + std::string(s) + "'");
}

std::string fixed2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    std::string s(buf);
    if (s == "-0.00") s = "0.00";
    return s;
}

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::string md_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c == '|') out += "\\|";
        else out.push_back(c);
    }
    return out;
}

}  // namespace

// JSON ----------------------------------------------------------------------

std::string to_json(const WeakTestReport& r) {
    json claims = json::array();
    for (const auto& c : r.claims) {
        claims.push_back({{"claim_id", c.claim_id},
                          {"group_means", num_array(c.group_means)},
                          {"base_mean", num(c.base_mean)},
                          {"q_hat", c.q_hat ? num(*c.q_hat) : json(nullptr)},
                          {"inside", c.inside}});
    }
    json thresholds = json::array();
    for (const auto& t : r.thresholds) {
        thresholds.push_back({{"p0", num(t.p0)}, {"p_value", num(t.p_value)}, {"reject", t.reject}});
    }
    return json{{"check", "qc1-weak"},
                {"topic", r.topic},
                {"groups", r.groups},
                {"replicates", r.replicates},
                {"master_seed", r.master_seed},
                {"alpha", num(r.alpha)},
                {"p_hat_observed", num(r.p_hat_observed)},
                {"thresholds", thresholds},
                {"claims", claims}}
        .dump(2);
}

WeakTestReport weak_report_from_json(std::string_view text) {
    return parse_report(text, "weak", [](const json& j) {
        WeakTestReport r;
        r.topic = j.at("topic").get<std::string>();
        r.groups = j.at("groups").get<std::vector<std::string>>();
        r.replicates = j.at("replicates").get<std::size_t>();
        r.master_seed = j.at("master_seed").get<std::uint64_t>();
        r.alpha = to_double(j.at("alpha"));
        r.p_hat_observed = to_double(j.at("p_hat_observed"));
        for (const auto& t : j.at("thresholds")) {
            r.thresholds.push_back({to_double(t.at("p0")), to_double(t.at("p_value")), t.at("reject").get<bool>()});
        }
        for (const auto& c : j.at("claims")) {
            WeakClaimResult w;
            w.claim_id = c.at("claim_id").get<std::string>();
            w.group_means = doubles(c.at("group_means"));
            w.base_mean = to_double(c.at("base_mean"));
            if (!c.at("q_hat").is_null()) w.q_hat = to_double(c.at("q_hat"));
            w.inside = c.at("inside").get<bool>();
            r.claims.push_back(std::move(w));
        }
        return r;
    });
}

std::string to_json(const StrongTestReport& r) {
    json claims = json::array();
    for (const auto& c : r.claims) {
        claims.push_back({{"claim_id", c.claim_id},
                          {"group_means", num_array(c.group_means)},
                          {"base_mean", num(c.base_mean)},
                          {"base_n", c.base_n},
                          {"q_hat", num_array(c.q_hat)},
                          {"residual", num(c.residual)}});
    }
    json grid = json::array();
    for (const auto& g : r.grid) {
        grid.push_back({{"q0", num_array(g.q0)},
                        {"observed_l", num(g.observed_l)},
                        {"p_value", num(g.p_value)},
                        {"reject", g.reject}});
    }
    return json{{"check", "qc1-strong"},
                {"topic", r.topic},
                {"groups", r.groups},
                {"replicates", r.replicates},
                {"master_seed", r.master_seed},
                {"alpha_star", num(r.alpha_star)},
                {"grid", grid},
                {"claims", claims}}
        .dump(2);
}

StrongTestReport strong_report_from_json(std::string_view text) {
    return parse_report(text, "strong", [](const json& j) {
        StrongTestReport r;
        r.topic = j.at("topic").get<std::string>();
        r.groups = j.at("groups").get<std::vector<std::string>>();
        r.replicates = j.at("replicates").get<std::size_t>();
        r.master_seed = j.at("master_seed").get<std::uint64_t>();
        r.alpha_star = to_double(j.at("alpha_star"));
        for (const auto& g : j.at("grid")) {
            r.grid.push_back({doubles(g.at("q0")), to_double(g.at("observed_l")), to_double(g.at("p_value")),
                              g.at("reject").get<bool>()});
        }
        for (const auto& c : j.at("claims")) {
            StrongClaimResult s;
            s.claim_id = c.at("claim_id").get<std::string>();
            s.group_means = doubles(c.at("group_means"));
            s.base_mean = to_double(c.at("base_mean"));
            s.base_n = c.at("base_n").get<std::size_t>();
            s.q_hat = doubles(c.at("q_hat"));
            s.residual = to_double(c.at("residual"));
            r.claims.push_back(std::move(s));
        }
        return r;
    });
}

std::string to_json(const AlignmentReport& r) {
    json claims = json::array();
    for (const auto& c : r.claims) {
        claims.push_back({{"claim_id", c.claim_id},
                          {"model_gap", num(c.model_gap)},
                          {"expected_gap", num(c.expected_gap)},
                          {"deviation", num(c.deviation)},
                          {"weight", num(c.weight)},
                          {"n_plus", c.n_plus},
                          {"n_minus", c.n_minus}});
    }
    return json{{"check", r.expected == ExpectedGapSource::Kind::PriorZero ? "qc2a" : "qc2b"},
                {"topic", r.topic},
                {"plus", r.order.plus},
                {"minus", r.order.minus},
                {"expected", std::string(to_string(r.expected))},
                {"direction", std::string(to_string(r.direction))},
                {"mean", num(r.mean)},
                {"se", num(r.se)},
                {"t", num(r.t)},
                {"dof", num(r.dof)},
                {"p_value", num(r.p_value)},
                {"stars", r.stars},
                {"degenerate_variance", r.degenerate_variance},
                {"verdict", std::string(to_string(r.verdict))},
                {"warnings", r.warnings},
                {"claims", claims}}
        .dump(2);
}

AlignmentReport alignment_report_from_json(std::string_view text) {
    return parse_report(text, "alignment", [](const json& j) {
        AlignmentReport r;
        r.topic = j.at("topic").get<std::string>();
        r.order = {j.at("plus").get<std::string>(), j.at("minus").get<std::string>()};
        r.expected = parse_expected_kind(j.at("expected").get<std::string>());
        r.direction = parse_prior_direction(j.at("direction").get<std::string>());
        r.mean = to_double(j.at("mean"));
        r.se = to_double(j.at("se"));
        r.t = to_double(j.at("t"));
        r.dof = to_double(j.at("dof"));
        r.p_value = to_double(j.at("p_value"));
        r.stars = j.at("stars").get<int>();
        r.degenerate_variance = j.at("degenerate_variance").get<bool>();
        r.verdict = parse_verdict(j.at("verdict").get<std::string>());
        r.warnings = j.at("warnings").get<std::vector<std::string>>();
        for (const auto& c : j.at("claims")) {
            r.claims.push_back({c.at("claim_id").get<std::string>(), to_double(c.at("model_gap")),
                                to_double(c.at("expected_gap")), to_double(c.at("deviation")),
                                to_double(c.at("weight")), c.at("n_plus").get<std::size_t>(),
                                c.at("n_minus").get<std::size_t>()});
        }
        return r;
    });
}

// Tables --------------------------------------------------------------------

std::string color_tag(const AlignmentReport& r) {
    if (r.expected == ExpectedGapSource::Kind::HumanReference || r.direction == PriorDirection::Unspecified) {
        if (r.stars == 0) return "";
        return r.mean > 0 ? "pos" : "neg";
    }
    return r.verdict == Verdict::ConsistentWithPrior ? "blue" : "red";
}

std::string format_gap(double mean, int stars) { return fixed2(mean) + stars_text(stars); }

RenderedTables render_topic_tables(std::span<const TopicRow> rows) {
    if (rows.empty()) throw ValidationError("nothing to render");
    std::vector<const TopicRow*> sorted;
    for (const auto& r : rows) sorted.push_back(&r);
    std::stable_sort(sorted.begin(), sorted.end(), [](const TopicRow* a, const TopicRow* b) {
        return std::tie(a->source, a->prompt, a->report.topic) < std::tie(b->source, b->prompt, b->report.topic);
    });

    RenderedTables out;
    std::ostringstream md;
    md << "| Source | Prompt | Topic | Mean gap | Tag | Verdict |\n";
    md << "|---|---|---|---:|---|---|\n";
    std::ostringstream csv;
    csv << "source,prompt,topic,mean,se,t,dof,p_value,stars,verdict,tag,claims\n";
    json arr = json::array();
    for (const TopicRow* row : sorted) {
        const auto& r = row->report;
        const std::string tag = color_tag(r);
        md << "| " << md_escape(row->source) << " | " << md_escape(row->prompt) << " | " << md_escape(r.topic)
           << " | " << format_gap(r.mean, r.stars) << " | " << tag << " | " << to_string(r.verdict) << " |\n";
        csv << csv_escape(row->source) << ',' << csv_escape(row->prompt) << ',' << csv_escape(r.topic) << ','
            << exact(r.mean) << ',' << exact(r.se) << ',' << exact(r.t) << ',' << exact(r.dof) << ','
            << exact(r.p_value) << ',' << r.stars << ',' << to_string(r.verdict) << ',' << tag << ','
            << r.claims.size() << '\n';
        arr.push_back({{"source", row->source},
                       {"prompt", row->prompt},
                       {"topic", r.topic},
                       {"mean", num(r.mean)},
                       {"se", num(r.se)},
                       {"t", num(r.t)},
                       {"dof", num(r.dof)},
                       {"p_value", num(r.p_value)},
                       {"stars", r.stars},
                       {"verdict", std::string(to_string(r.verdict))},
                       {"tag", tag},
                       {"claims", r.claims.size()}});
    }
    out.markdown = md.str();
    out.csv = csv.str();
    out.json = arr.dump(2);
    return out;
}

// Benchmark -----------------------------------------------------------------

std::string CheckScore::percent() const {
    return std::to_string(std::lround(100.0 * fraction())) + "%";
}

BenchmarkSummary benchmark_summary(std::span<const MethodReports> methods, std::span<const double> thresholds,
                                   double alpha) {
    if (methods.empty()) throw ValidationError("nothing to render");
    BenchmarkSummary summary;
    for (const auto& m : methods) {
        auto require = [&](bool present, std::string_view check) {
            if (!present) throw ValidationError("method '" + m.method + "' is missing check " + std::string(check));
        };
        require(!m.qc1a.empty(), "qc1a");
        require(!m.qc1b.empty(), "qc1b");
        require(!m.qc2a.empty(), "qc2a");
        require(!m.qc2b.empty(), "qc2b");

        BenchmarkRow row;
        row.method = m.method;
        for (const auto& w : m.qc1a) {
            for (double p0 : thresholds) {
                const auto it = std::find_if(w.thresholds.begin(), w.thresholds.end(),
                                             [&](const auto& t) { return std::fabs(t.p0 - p0) <= 1e-9; });
                if (it == w.thresholds.end()) {
                    throw ValidationError("weak report for topic '" + w.topic + "' lacks threshold " +
                                          exact(p0));
                }
                ++row.qc1a.total;
                if (!it->reject) ++row.qc1a.passed;
            }
        }
        for (const auto& s : m.qc1b) {
            ++row.qc1b.total;
            if (!s.feasible().empty()) ++row.qc1b.passed;
        }
        for (const auto& a : m.qc2a) {
            ++row.qc2a.total;
            if (a.verdict == Verdict::ConsistentWithPrior) ++row.qc2a.passed;
        }
        for (const auto& a : m.qc2b) {
            ++row.qc2b.total;
            if (!(a.p_value < alpha)) ++row.qc2b.passed;
        }
        summary.rows.push_back(std::move(row));
    }
    return summary;
}

std::string BenchmarkSummary::markdown() const {
    std::ostringstream md;
    md << "| Method | QC1a | QC1b | QC2a | QC2b |\n|---|---:|---:|---:|---:|\n";
    for (const auto& r : rows) {
        md << "| " << md_escape(r.method) << " | " << r.qc1a.percent() << " | " << r.qc1b.percent() << " | "
           << r.qc2a.percent() << " | " << r.qc2b.percent() << " |\n";
    }
    return md.str();
}

std::string BenchmarkSummary::json() const {
    auto score = [](const CheckScore& s) {
        return likertqc::json{{"passed", s.passed}, {"total", s.total}, {"fraction", num(s.fraction())}};
    };
    likertqc::json arr = likertqc::json::array();
    for (const auto& r : rows) {
        arr.push_back({{"method", r.method},
                       {"qc1a", score(r.qc1a)},
                       {"qc1b", score(r.qc1b)},
                       {"qc2a", score(r.qc2a)},
                       {"qc2b", score(r.qc2b)}});
    }
    return arr.dump(2);
}

// Feasibility plots ---------------------------------------------------------

FeasibilityPanel make_panel(std::string model, std::string prompt, const WeakTestReport& weak,
                            const StrongTestReport& strong) {
    FeasibilityPanel p;
    p.model = std::move(model);
    p.prompt = std::move(prompt);
    p.topic = weak.topic;
    p.groups = strong.groups.size();
    for (const auto& t : weak.thresholds) p.thresholds.push_back(t.p0);
    p.feasible_p0 = weak.feasible_thresholds();
    for (const auto& g : strong.grid) p.grid.push_back(g.q0);
    p.feasible_q0 = strong.feasible();
    return p;
}

std::vector<std::pair<double, double>> feasible_intervals(std::span<const std::vector<double>> grid,
                                                          std::span<const std::vector<double>> feasible) {
    auto is_feasible = [&](const std::vector<double>& q) {
        return std::any_of(feasible.begin(), feasible.end(), [&](const std::vector<double>& f) {
            if (f.size() != q.size()) return false;
            for (std::size_t i = 0; i < q.size(); ++i) {
                if (std::fabs(f[i] - q[i]) > 1e-9) return false;
            }
            return true;
        });
    };
    std::vector<std::pair<double, double>> out;
    bool open = false;
    for (const auto& q : grid) {
        if (q.empty()) continue;
        if (is_feasible(q)) {
            if (open) out.back().second = q[0];
            else out.emplace_back(q[0], q[0]);
            open = true;
        } else {
            open = false;
        }
    }
    return out;
}

namespace {

constexpr double kPlotLeft = 170.0;
constexpr double kPlotRight = 620.0;
constexpr double kPanelHeight = 70.0;

double plot_x(double v) { return kPlotLeft + v * (kPlotRight - kPlotLeft); }

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

FeasibilityPlot emit_feasibility_plot(std::span<const FeasibilityPanel> panels) {
    if (panels.empty()) throw ValidationError("nothing to render");
    const double height = 30.0 + kPanelHeight * static_cast<double>(panels.size());

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"" << fmt(height)
        << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << fmt(plot_x(0)) << "\" y=\"18\" text-anchor=\"middle\">0</text>"
        << "<text x=\"" << fmt(plot_x(0.5)) << "\" y=\"18\" text-anchor=\"middle\">0.5</text>"
        << "<text x=\"" << fmt(plot_x(1)) << "\" y=\"18\" text-anchor=\"middle\">1</text>\n";

    json series = json::array();
    for (std::size_t i = 0; i < panels.size(); ++i) {
        const auto& p = panels[i];
        const double top = 30.0 + kPanelHeight * static_cast<double>(i);
        const double y_p0 = top + 22.0;
        const double y_q0 = top + 48.0;
        svg << "<g>\n";
        svg << "<text x=\"8\" y=\"" << fmt(top + 12) << "\" font-weight=\"bold\">" << xml_escape(p.model) << " / "
            << xml_escape(p.prompt) << " / " << xml_escape(p.topic) << "</text>\n";
        svg << "<text x=\"8\" y=\"" << fmt(y_p0 + 4) << "\">weak p0</text>";
        svg << "<text x=\"8\" y=\"" << fmt(y_q0 + 4) << "\">strong q0</text>\n";
        for (double y : {y_p0, y_q0}) {
            svg << "<line x1=\"" << fmt(plot_x(0)) << "\" y1=\"" << fmt(y) << "\" x2=\"" << fmt(plot_x(1))
                << "\" y2=\"" << fmt(y) << "\" stroke=\"#999\"/>\n";
        }
        for (double p0 : p.thresholds) {
            const bool ok = std::any_of(p.feasible_p0.begin(), p.feasible_p0.end(),
                                        [&](double f) { return std::fabs(f - p0) <= 1e-9; });
            svg << "<circle cx=\"" << fmt(plot_x(p0)) << "\" cy=\"" << fmt(y_p0) << "\" r=\"4\" stroke=\"#1f4e9c\" fill=\""
                << (ok ? "#1f4e9c" : "white") << "\"/>\n";
        }
        const auto intervals = p.groups == 2 ? feasible_intervals(p.grid, p.feasible_q0)
                                             : std::vector<std::pair<double, double>>{};
        if (p.groups != 2) {
            svg << "<text x=\"" << fmt(plot_x(0.5)) << "\" y=\"" << fmt(y_q0 - 4)
                << "\" text-anchor=\"middle\">" << p.feasible_q0.size() << " feasible weight vectors (JSON)</text>\n";
        } else if (intervals.empty()) {
            svg << "<text x=\"" << fmt(plot_x(0.5)) << "\" y=\"" << fmt(y_q0 - 4)
                << "\" text-anchor=\"middle\">none</text>\n";
        } else {
            for (const auto& [lo, hi] : intervals) {
                const double x0 = plot_x(lo);
                const double w = std::max(plot_x(hi) - x0, 0.0);
                svg << "<rect x=\"" << fmt(x0 - 3) << "\" y=\"" << fmt(y_q0 - 4) << "\" width=\"" << fmt(w + 6)
                    << "\" height=\"8\" fill=\"#c0392b\"/>\n";
            }
        }
        svg << "</g>\n";

        json ivals = json::array();
        for (const auto& [lo, hi] : intervals) ivals.push_back(json::array({num(lo), num(hi)}));
        json grid = json::array();
        for (const auto& q : p.grid) grid.push_back(num_array(q));
        json feasible = json::array();
        for (const auto& q : p.feasible_q0) feasible.push_back(num_array(q));
        series.push_back({{"model", p.model},
                          {"prompt", p.prompt},
                          {"topic", p.topic},
                          {"groups", p.groups},
                          {"thresholds", num_array(p.thresholds)},
                          {"feasible_p0", num_array(p.feasible_p0)},
                          {"grid", grid},
                          {"feasible_q0", feasible},
                          {"q0_intervals", p.groups == 2 ? ivals : json(nullptr)}});
    }
    svg << "</svg>\n";
    return {svg.str(), series.dump(2)};
}

std::filesystem::path report_path(const std::filesystem::path& root, std::string_view run_id, std::string_view check,
                                  std::string_view model, std::string_view prompt, std::string_view topic,
                                  std::string_view ext) {
    auto clean = [](std::string_view s) {
        std::string out(s);
        for (char& c : out) {
            if (c == '/' || c == '\\' || c == ' ' || c == ':') c = '_';
        }
        return out.empty() ? std::string("_") : out;
    };
    return root / clean(run_id) / clean(check) /
           (clean(model) + "_" + clean(prompt) + "_" + clean(topic) + "." + std::string(ext));
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    out << content;
}

}  // namespace likertqc
