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

#include "likertqc/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "likertqc/alignment.hpp"
#include "likertqc/calibration.hpp"
#include "likertqc/collector.hpp"
#include "likertqc/consistency.hpp"
#include "likertqc/error.hpp"
#include "likertqc/ingestion.hpp"
#include "likertqc/prompts.hpp"
#include "likertqc/reporting.hpp"

#ifndef LIKERTQC_VERSION
#define LIKERTQC_VERSION "0.0.0"
#endif

namespace likertqc {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string version() { return LIKERTQC_VERSION; }

namespace {

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read '" + path.string() + "'");
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 15]);
    }
    return out;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto piece = s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        if (!piece.empty()) out.emplace_back(piece);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

// Manifest ------------------------------------------------------------------

struct Manifest {
    std::string command;
    std::string run_id;
    json config = json::object();
    std::vector<fs::path> inputs;
    std::vector<std::string> outputs;

    void write(const fs::path& path) const {
        json in = json::array();
        for (const auto& p : inputs) {
            in.push_back({{"path", p.generic_string()}, {"sha256", sha256_file(p)}, {"bytes", fs::file_size(p)}});
        }
        std::vector<std::string> sorted = outputs;
        std::sort(sorted.begin(), sorted.end());
        const json doc = {{"tool", "likertqc"},  {"version", version()}, {"command", command},
                          {"run_id", run_id},    {"config", config},     {"inputs", in},
                          {"outputs", sorted}};
        write_text_file(path, doc.dump(2) + "\n");
    }
};

// Shared selection of records ------------------------------------------------

struct Selection {
    std::string source;       // "human" or "model:<name>"; empty: the only one present
    std::string prompt;       // prompt_id of group-condition records
    std::string base_prompt;  // prompt_id of base records
    std::vector<std::string> topics;
    std::string groups = "man,woman";
    std::size_t min_labels = 2;

    void add_options(CLI::App* cmd) {
        cmd->add_option("--source", source, "human or model:<name>");
        cmd->add_option("--prompt", prompt, "prompt id of group-conditioned records");
        cmd->add_option("--base-prompt", base_prompt, "prompt id of base records");
        cmd->add_option("--topic", topics, "topic to test (repeatable; default all)");
        cmd->add_option("--groups", groups, "comma-separated group conditions")->capture_default_str();
        cmd->add_option("--min-labels", min_labels, "minimum labels per cell")->capture_default_str();
    }

    json to_json() const {
        return {{"source", source}, {"prompt", prompt},   {"base_prompt", base_prompt},
                {"topics", topics}, {"groups", groups}, {"min_labels", min_labels}};
    }
};

struct Selected {
    std::vector<AnnotationRecord> records;
    std::string model;   // display name: "human" or the model name
    std::string prompt;  // display name
    std::vector<std::string> topics;
};

Selected select(const std::vector<AnnotationRecord>& all, const Selection& sel) {
    std::set<std::string> sources;
    for (const auto& r : all) sources.insert(r.source.tag());
    std::string tag = sel.source;
    if (tag.empty()) {
        if (sources.size() > 1) {
            std::string list;
            for (const auto& s : sources) list += (list.empty() ? "" : ", ") + s;
            throw ValidationError("input holds several sources (" + list + "); pass --source");
        }
        if (!sources.empty()) tag = *sources.begin();
    }
    Selected out;
    for (const auto& r : all) {
        if (r.source.tag() != tag) continue;
        const bool is_base = r.condition == kBaseCondition;
        if (!is_base && !sel.prompt.empty() && r.source.prompt_id != sel.prompt) continue;
        if (is_base && !sel.base_prompt.empty() && r.source.prompt_id != sel.base_prompt) continue;
        out.records.push_back(r);
    }
    if (out.records.empty()) throw ValidationError("no records match the selection");
    out.model = tag.rfind("model:", 0) == 0 ? tag.substr(6) : tag;
    out.prompt = sel.prompt.empty() ? "all" : sel.prompt;
    if (!sel.base_prompt.empty()) out.prompt += "+" + sel.base_prompt;
    if (sel.topics.empty()) {
        std::set<std::string> topics;
        for (const auto& r : out.records) topics.insert(r.topic);
        out.topics.assign(topics.begin(), topics.end());
    } else {
        out.topics = sel.topics;
    }
    return out;
}

TopicDataset build(const std::vector<AnnotationRecord>& records, const std::string& topic,
                   const std::vector<std::string>& required, std::size_t min_labels, std::ostream& err) {
    BuildOptions opts;
    opts.min_labels = min_labels;
    auto result = build_topic_dataset(records, topic, required, opts);
    for (const auto& w : result.warnings) err << "warning: " << topic << ": " << w << "\n";
    return std::move(result.dataset);
}

struct Output {
    std::string dir = "out";
    std::string run_id = "run";

    void add_options(CLI::App* cmd) {
        cmd->add_option("--out", dir, "output directory")->capture_default_str();
        cmd->add_option("--run-id", run_id, "run identifier")->capture_default_str();
    }
    fs::path run_dir() const { return fs::path(dir) / run_id; }
};

struct IndexEntry {
    std::string file;
    std::string model;
    std::string prompt;
    std::string topic;
};

void write_index(const fs::path& dir, const std::vector<IndexEntry>& entries) {
    json arr = json::array();
    for (const auto& e : entries) {
        arr.push_back({{"file", e.file}, {"model", e.model}, {"prompt", e.prompt}, {"topic", e.topic}});
    }
    write_text_file(dir / "index.json", arr.dump(2) + "\n");
}

std::vector<IndexEntry> read_index(const fs::path& dir) {
    std::vector<IndexEntry> out;
    if (!fs::exists(dir / "index.json")) return out;
    const json arr = json::parse(read_text(dir / "index.json"));
    for (const auto& e : arr) {
        out.push_back({e.at("file").get<std::string>(), e.at("model").get<std::string>(),
                       e.at("prompt").get<std::string>(), e.at("topic").get<std::string>()});
    }
    return out;
}

std::string relative_to(const fs::path& p, const fs::path& base) { return fs::relative(p, base).generic_string(); }

std::string weak_markdown(const WeakTestReport& r) {
    std::ostringstream md;
    md << "# " << r.topic << ": weak test\n\n";
    md << "Claims: " << r.claims.size() << ", observed pass rate: " << r.p_hat_observed << ", B = " << r.replicates
       << "\n\n| p0 | p-value | rejected |\n|---:|---:|---|\n";
    for (const auto& t : r.thresholds) {
        md << "| " << t.p0 << " | " << t.p_value << " | " << (t.reject ? "yes" : "no") << " |\n";
    }
    return md.str();
}

std::string strong_markdown(const StrongTestReport& r) {
    std::ostringstream md;
    md << "# " << r.topic << ": strong test\n\n";
    md << "Claims: " << r.claims.size() << ", B = " << r.replicates << ", alpha* = " << r.alpha_star << "\n\n";
    md << "| q0 | L | p-value | rejected |\n|---|---:|---:|---|\n";
    for (const auto& g : r.grid) {
        std::string q;
        for (double v : g.q0) q += (q.empty() ? "" : ", ") + std::to_string(v).substr(0, 4);
        md << "| (" << q << ") | " << g.observed_l << " | " << g.p_value << " | " << (g.reject ? "yes" : "no")
           << " |\n";
    }
    if (r.groups.size() == 2) {
        const auto grid = [&] {
            std::vector<std::vector<double>> g;
            for (const auto& x : r.grid) g.push_back(x.q0);
            return g;
        }();
        const auto feasible = r.feasible();
        const auto intervals = feasible_intervals(grid, feasible);
        md << "\nFeasible q0 (" << r.groups[0] << " weight): ";
        if (intervals.empty()) md << "none";
        for (std::size_t i = 0; i < intervals.size(); ++i) {
            md << (i ? ", " : "") << "[" << intervals[i].first << ", " << intervals[i].second << "]";
        }
        md << "\n";
    }
    return md.str();
}

// Subcommands -----------------------------------------------------------------

struct QcOptions {
    std::string input;
    Selection sel;
    Output output;
    std::size_t b = 10000;
    std::vector<double> p0{0.7, 0.8, 0.9, 1.0};
    double q0_step = 0.05;
    double alpha = 0.05;
    double alpha_star = 0.0025;
    std::uint64_t seed = 0;
    int jobs = 1;
};

int run_qc1(const QcOptions& o, bool strong, std::ostream& out, std::ostream& err) {
    const auto all = load_annotations(o.input);
    const auto chosen = select(all, o.sel);
    auto required = split_list(o.sel.groups);
    required.emplace_back(kBaseCondition);

    const std::string check = strong ? "qc1-strong" : "qc1-weak";
    Manifest manifest{check, o.output.run_id, {}, {o.input}, {}};
    manifest.config = {{"selection", o.sel.to_json()}, {"b", o.b}, {"seed", o.seed}};
    if (strong) {
        manifest.config["q0_step"] = o.q0_step;
        manifest.config["alpha_star"] = o.alpha_star;
    } else {
        manifest.config["p0"] = o.p0;
        manifest.config["alpha"] = o.alpha;
    }

    const fs::path run_dir = o.output.run_dir();
    std::vector<IndexEntry> index = read_index(run_dir / check);
    for (const auto& topic : chosen.topics) {
        const auto data = build(chosen.records, topic, required, o.sel.min_labels, err);
        std::string report_json;
        std::string md;
        if (strong) {
            StrongTestConfig cfg;
            cfg.grid_step = o.q0_step;
            cfg.alpha_star = o.alpha_star;
            cfg.bootstrap = {o.b, o.seed, o.jobs};
            const auto report = strong_topic_test(data, cfg);
            report_json = to_json(report);
            md = strong_markdown(report);
            out << topic << ": " << report.feasible().size() << " of " << report.grid.size() << " q0 feasible\n";
        } else {
            WeakTestConfig cfg;
            cfg.thresholds = o.p0;
            cfg.alpha = o.alpha;
            cfg.bootstrap = {o.b, o.seed, o.jobs};
            const auto report = weak_topic_test(data, cfg);
            report_json = to_json(report);
            md = weak_markdown(report);
            out << topic << ": observed pass rate " << report.p_hat_observed << ", feasible p0 "
                << report.feasible_thresholds().size() << " of " << report.thresholds.size() << "\n";
        }
        const auto json_path = report_path(o.output.dir, o.output.run_id, check, chosen.model, chosen.prompt, topic, "json");
        const auto md_path = report_path(o.output.dir, o.output.run_id, check, chosen.model, chosen.prompt, topic, "md");
        write_text_file(json_path, report_json + "\n");
        write_text_file(md_path, md);
        manifest.outputs.push_back(relative_to(json_path, run_dir));
        manifest.outputs.push_back(relative_to(md_path, run_dir));
        std::erase_if(index, [&](const IndexEntry& e) { return e.file == json_path.filename().string(); });
        index.push_back({json_path.filename().string(), chosen.model, chosen.prompt, topic});
    }
    std::sort(index.begin(), index.end(), [](const auto& a, const auto& b) { return a.file < b.file; });
    write_index(run_dir / check, index);
    manifest.write(run_dir / check / "manifest.json");
    return kExitOk;
}

void write_alignment_table(const fs::path& dir, const std::vector<IndexEntry>& index) {
    std::vector<TopicRow> rows;
    for (const auto& e : index) {
        rows.push_back({e.model, e.prompt, alignment_report_from_json(read_text(dir / e.file))});
    }
    if (rows.empty()) return;
    const auto tables = render_topic_tables(rows);
    write_text_file(dir / "table.md", tables.markdown);
    write_text_file(dir / "table.csv", tables.csv);
    write_text_file(dir / "table.json", tables.json + "\n");
}

struct AlignOptions {
    std::string model_input;
    std::string human_input;
    Selection sel;
    Output output;
    std::string direction = "expect_no_difference";
    std::string plus = "woman";
    std::string minus = "man";
    double alpha = 0.05;
    std::size_t min_reference_n = 1;
};

int run_alignment(const AlignOptions& o, bool human, std::ostream& out, std::ostream& err) {
    const auto all = load_annotations(o.model_input);
    const auto chosen = select(all, o.sel);
    const std::vector<std::string> required{o.plus, o.minus};

    std::vector<AnnotationRecord> human_records;
    if (human) {
        for (auto& r : load_annotations(o.human_input)) {
            if (r.source.is_human()) human_records.push_back(std::move(r));
        }
        if (human_records.empty()) throw ValidationError("no human records in '" + o.human_input + "'");
    }

    const std::string check = human ? "qc2b" : "qc2a";
    Manifest manifest{check, o.output.run_id, {}, {o.model_input}, {}};
    if (human) manifest.inputs.emplace_back(o.human_input);
    manifest.config = {{"selection", o.sel.to_json()}, {"plus", o.plus}, {"minus", o.minus}, {"alpha", o.alpha}};
    if (human) manifest.config["min_reference_n"] = o.min_reference_n;
    else manifest.config["direction"] = o.direction;

    AlignmentConfig cfg;
    cfg.order = {o.plus, o.minus};
    cfg.alpha = o.alpha;
    cfg.min_reference_n = o.min_reference_n;

    const fs::path run_dir = o.output.run_dir();
    const fs::path check_dir = run_dir / check;
    std::vector<IndexEntry> index = read_index(check_dir);
    for (const auto& topic : chosen.topics) {
        const auto data = build(chosen.records, topic, required, o.sel.min_labels, err);
        ExpectedGapSource expected =
            human ? ExpectedGapSource::human(build(human_records, topic, required, o.min_reference_n, err))
                  : ExpectedGapSource::prior_zero(parse_prior_direction(o.direction));
        const auto report = alignment_topic_test(data, expected, cfg);
        for (const auto& w : report.warnings) err << "warning: " << topic << ": " << w << "\n";
        out << topic << ": mean gap " << format_gap(report.mean, report.stars) << " (p = " << report.p_value
            << "), " << to_string(report.verdict) << "\n";
        const auto path = report_path(o.output.dir, o.output.run_id, check, chosen.model, chosen.prompt, topic, "json");
        write_text_file(path, to_json(report) + "\n");
        manifest.outputs.push_back(relative_to(path, run_dir));
        std::erase_if(index, [&](const IndexEntry& e) { return e.file == path.filename().string(); });
        index.push_back({path.filename().string(), chosen.model, chosen.prompt, topic});
    }
    std::sort(index.begin(), index.end(), [](const auto& a, const auto& b) { return a.file < b.file; });
    write_index(check_dir, index);
    write_alignment_table(check_dir, index);
    for (const char* f : {"table.md", "table.csv", "table.json"}) manifest.outputs.push_back(check + "/" + f);
    manifest.write(check_dir / "manifest.json");
    return kExitOk;
}

struct IngestOptions {
    std::string input;
    std::string gold;
    std::string out;
    double gold_threshold = 0.8;
    std::size_t min_gold = 2;
};

int run_ingest(const IngestOptions& o, std::ostream& out, std::ostream& err) {
    auto records = load_annotations(o.input);
    Manifest manifest{"ingest", "", {}, {o.input}, {}};
    manifest.config = {{"gold_threshold", o.gold_threshold}, {"min_gold", o.min_gold}};
    out << records.size() << " records read\n";
    if (!o.gold.empty()) {
        manifest.inputs.emplace_back(o.gold);
        const auto gold = load_gold(o.gold);
        GoldFilterOptions opts;
        opts.accuracy_threshold = o.gold_threshold;
        opts.min_gold = o.min_gold;
        auto result = filter_workers_by_gold_accuracy(records, gold, opts);
        for (const auto& s : result.scores) {
            if (!s.kept) err << "dropped worker " << s.annotator_id << ": " << s.reason << "\n";
        }
        out << result.dropped_workers.size() << " workers dropped, " << result.duplicates_removed
            << " duplicates removed, " << result.kept.size() << " records kept\n";
        records = std::move(result.kept);
    }
    if (!o.out.empty()) {
        std::ostringstream buf;
        if (format_from_path(o.out) == FileFormat::Csv) {
            write_annotations_csv(buf, records);
        } else {
            for (const auto& r : records) buf << to_jsonl_line(r) << '\n';
        }
        write_text_file(o.out, buf.str());
        manifest.outputs.push_back(fs::path(o.out).filename().string());
        manifest.write(fs::path(o.out).string() + ".manifest.json");
    }
    return kExitOk;
}

int run_summarize(const std::string& input, const std::string& out_dir, std::ostream& out) {
    const auto records = load_annotations(input);
    const auto table = summarize_dataset(records);
    std::ostringstream md;
    md << "| Topic | Condition | Count | Mean | SD |\n|---|---|---:|---:|---:|\n";
    json conditions = json::array();
    for (const auto& c : table.conditions) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "| %s | %s | %zu | %.3f | %s |\n", c.topic.c_str(), c.condition.c_str(),
                      c.count, c.mean, c.single ? "n/a" : std::to_string(c.sd).substr(0, 5).c_str());
        md << buf;
        conditions.push_back({{"topic", c.topic}, {"condition", c.condition}, {"count", c.count},
                              {"mean", c.mean},   {"sd", c.single ? json(nullptr) : json(c.sd)}});
    }
    md << "\n| Topic | True | False | Unknown |\n|---|---:|---:|---:|\n";
    json topics = json::array();
    for (const auto& t : table.topics) {
        md << "| " << t.topic << " | " << t.true_claims << " | " << t.false_claims << " | " << t.unknown_claims << " |\n";
        topics.push_back({{"topic", t.topic},
                          {"true_claims", t.true_claims},
                          {"false_claims", t.false_claims},
                          {"unknown_claims", t.unknown_claims}});
    }
    out << md.str();
    if (!out_dir.empty()) {
        write_text_file(fs::path(out_dir) / "summary.md", md.str());
        write_text_file(fs::path(out_dir) / "summary.json",
                        json{{"conditions", conditions}, {"topics", topics}}.dump(2) + "\n");
        Manifest manifest{"summarize", "", {}, {input}, {"summary.md", "summary.json"}};
        manifest.write(fs::path(out_dir) / "manifest.json");
    }
    return kExitOk;
}

struct CollectOptions {
    CollectorConfig cfg;
    std::string claims;
    std::string sink;
    std::string templates = "cond1,base1";
    std::string personas = "man,woman";
    std::string icl;
    std::string icl_pool;
    std::string icl_conditions = "man,woman,base";
    std::size_t k = 3;
    std::uint64_t seed = 0;
};

std::vector<CollectionClaim> load_claims(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read '" + path.string() + "'");
    const auto rows = parse_csv(in);
    if (rows.empty()) throw ValidationError(path.string() + ": empty claims file");
    auto col = [&](std::string_view name, bool required) -> std::ptrdiff_t {
        const auto it = std::find(rows[0].begin(), rows[0].end(), name);
        if (it == rows[0].end()) {
            if (required) throw ValidationError(path.string() + ": schema mismatch: missing column '" + std::string(name) + "'");
            return -1;
        }
        return it - rows[0].begin();
    };
    const auto id = col("claim_id", true);
    const auto text = col("claim", true);
    const auto topic = col("topic", true);
    const auto veracity = col("veracity", false);
    std::vector<CollectionClaim> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != rows[0].size()) {
            throw ValidationError(path.string() + ": row " + std::to_string(r) + ": wrong field count");
        }
        out.push_back({row[id], row[topic], veracity < 0 ? Veracity::Unknown : parse_veracity(row[veracity]), row[text]});
    }
    return out;
}

std::vector<IclExample> load_icl_pool(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read '" + path.string() + "'");
    const auto rows = parse_csv(in);
    if (rows.empty()) throw ValidationError(path.string() + ": empty pool file");
    std::map<std::string, std::size_t> cols;
    for (std::size_t i = 0; i < rows[0].size(); ++i) cols[rows[0][i]] = i;
    for (const char* name : {"claim_id", "claim", "man", "woman", "average"}) {
        if (!cols.contains(name)) throw ValidationError(path.string() + ": schema mismatch: missing column '" + std::string(name) + "'");
    }
    std::vector<IclExample> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        try {
            out.push_back({row.at(cols["claim_id"]), row.at(cols["claim"]), std::stod(row.at(cols["man"])),
                           std::stod(row.at(cols["woman"])), std::stod(row.at(cols["average"]))});
        } catch (const std::exception&) {
            throw ValidationError(path.string() + ": row " + std::to_string(r) + ": bad example");
        }
    }
    return out;
}

int run_collect(const CollectOptions& o, std::ostream& out, std::ostream& err) {
    const auto claims = load_claims(o.claims);
    std::vector<PromptPlan> plans;
    Manifest manifest{"collect", "", {}, {o.claims}, {}};
    if (!o.icl.empty()) {
        const auto strategy = parse_icl_strategy(o.icl);
        if (o.icl_pool.empty()) throw ValidationError("--icl needs --icl-pool");
        manifest.inputs.emplace_back(o.icl_pool);
        auto pool = load_icl_pool(o.icl_pool);
        std::map<std::string, std::vector<double>, std::less<>> embeddings;
        if (strategy == IclStrategy::Nearest) {
            if (o.cfg.embeddings_endpoint.empty()) throw ValidationError("nearest ICL needs --embeddings-endpoint");
            HttpEmbeddingClient client(o.cfg.embeddings_endpoint, o.cfg.embeddings_model,
                                       read_api_key(o.cfg.api_key_env), o.cfg.timeout);
            EmbeddingCache cache(client, o.sink + ".embeddings.jsonl");
            std::vector<std::string> ids;
            std::vector<std::string> texts;
            for (const auto& ex : pool) {
                ids.push_back(ex.claim_id);
                texts.push_back(ex.claim);
            }
            for (const auto& c : claims) {
                ids.push_back(c.claim_id);
                texts.push_back(c.text);
            }
            const auto vectors = cache.get(texts);
            for (std::size_t i = 0; i < ids.size(); ++i) embeddings[ids[i]] = vectors[i];
        }
        plans.push_back(icl_plan(strategy, o.k, std::move(pool), std::move(embeddings), split_list(o.icl_conditions), o.seed));
    } else {
        for (const auto& id : split_list(o.templates)) plans.push_back(template_plan(find_template(id), split_list(o.personas)));
    }

    HttpChatClient client(o.cfg.endpoint, read_api_key(o.cfg.api_key_env), o.cfg.timeout);
    const auto result = collect(claims, plans, o.cfg, client, o.sink);

    std::ostringstream retries;
    for (const auto& r : result.retries) retries << to_json_line(r) << '\n';
    std::ostringstream failures;
    for (const auto& f : result.failures) {
        failures << to_json_line(f) << '\n';
        err << "incomplete cell " << f.claim_id << "/" << f.condition << "/" << f.prompt_id << ": " << f.collected
            << " of " << f.wanted << " (" << f.reason << ")\n";
    }
    write_text_file(o.sink + ".retries.jsonl", retries.str());
    write_text_file(o.sink + ".failures.jsonl", failures.str());

    manifest.config = {{"endpoint", o.cfg.endpoint},      {"model", o.cfg.model},
                       {"temperature", o.cfg.temperature}, {"samples_per_cell", o.cfg.samples_per_cell},
                       {"max_retries", o.cfg.max_retries}, {"templates", o.icl.empty() ? o.templates : ""},
                       {"icl", o.icl},                     {"k", o.k},
                       {"seed", o.seed}};
    const auto name = fs::path(o.sink).filename().string();
    manifest.outputs = {name, name + ".retries.jsonl", name + ".failures.jsonl"};
    manifest.write(o.sink + ".manifest.json");

    out << result.resumed << " resumed, " << result.requested << " new, " << result.retries.size() << " retries, "
        << result.failures.size() << " incomplete cells\n";
    return result.partial() ? kExitPartial : kExitOk;
}

struct CalibrateOptions {
    std::string spec;
    Output output;
    CalibrationOptions opts;
    std::string test = "strong";
};

int run_calibrate(CalibrateOptions o, std::ostream& out) {
    const auto spec = load_synthetic_spec(o.spec);
    o.opts.test = parse_calibrated_test(o.test);
    const auto summary = run_calibration(spec, o.opts);
    for (const auto& p : summary.points) {
        std::string param;
        for (double v : p.parameter) param += (param.empty() ? "" : ",") + std::to_string(v).substr(0, 4);
        out << "(" << param << "): " << p.rejections << "/" << summary.runs << " rejected, rate " << p.rate << " ["
            << p.ci_low << ", " << p.ci_high << "]\n";
    }
    const fs::path dir = o.output.run_dir() / "calibrate";
    write_text_file(dir / (o.test + ".json"), to_json(summary) + "\n");
    Manifest manifest{"calibrate", o.output.run_id, {}, {o.spec}, {"calibrate/" + o.test + ".json"}};
    manifest.config = {{"test", o.test},
                       {"runs", o.opts.runs},
                       {"b", o.opts.replicates},
                       {"p0", o.opts.thresholds},
                       {"q0_step", o.opts.grid_step},
                       {"alpha", o.opts.alpha},
                       {"alpha_star", o.opts.alpha_star},
                       {"confidence", o.opts.confidence}};
    manifest.write(dir / "manifest.json");
    return kExitOk;
}

std::string method_of(const IndexEntry& e) { return e.model + " / " + e.prompt; }

int run_benchmark(const std::string& reports, const std::vector<double>& thresholds, double alpha, std::ostream& out) {
    const fs::path dir(reports);
    std::map<std::string, MethodReports> methods;
    auto get = [&](const IndexEntry& e) -> MethodReports& {
        auto& m = methods[method_of(e)];
        m.method = method_of(e);
        return m;
    };
    for (const auto& e : read_index(dir / "qc1-weak")) get(e).qc1a.push_back(weak_report_from_json(read_text(dir / "qc1-weak" / e.file)));
    for (const auto& e : read_index(dir / "qc1-strong")) get(e).qc1b.push_back(strong_report_from_json(read_text(dir / "qc1-strong" / e.file)));
    for (const auto& e : read_index(dir / "qc2a")) get(e).qc2a.push_back(alignment_report_from_json(read_text(dir / "qc2a" / e.file)));
    for (const auto& e : read_index(dir / "qc2b")) get(e).qc2b.push_back(alignment_report_from_json(read_text(dir / "qc2b" / e.file)));
    if (methods.empty()) throw ValidationError("no reports under '" + reports + "'");
    std::vector<MethodReports> list;
    for (auto& [name, m] : methods) list.push_back(std::move(m));
    const auto summary = benchmark_summary(list, thresholds, alpha);
    write_text_file(dir / "benchmark.md", summary.markdown());
    write_text_file(dir / "benchmark.json", summary.json() + "\n");
    out << summary.markdown();
    return kExitOk;
}

int run_report(const std::string& reports, std::ostream& out) {
    const fs::path dir(reports);
    std::size_t written = 0;
    for (const char* check : {"qc2a", "qc2b"}) {
        const auto index = read_index(dir / check);
        if (index.empty()) continue;
        write_alignment_table(dir / check, index);
        written += 3;
    }
    const auto weak_index = read_index(dir / "qc1-weak");
    const auto strong_index = read_index(dir / "qc1-strong");
    std::vector<FeasibilityPanel> panels;
    for (const auto& w : weak_index) {
        const auto it = std::find_if(strong_index.begin(), strong_index.end(), [&](const IndexEntry& s) {
            return s.model == w.model && s.prompt == w.prompt && s.topic == w.topic;
        });
        if (it == strong_index.end()) continue;
        const auto weak = weak_report_from_json(read_text(dir / "qc1-weak" / w.file));
        const auto strong = strong_report_from_json(read_text(dir / "qc1-strong" / it->file));
        auto panel = make_panel(w.model, w.prompt, weak, strong);
        const auto single = emit_feasibility_plot(std::span(&panel, 1));
        const auto stem = report_path(dir.parent_path(), dir.filename().string(), "feasibility", w.model, w.prompt, w.topic, "svg");
        write_text_file(stem, single.svg);
        write_text_file(fs::path(stem).replace_extension(".json"), single.json + "\n");
        written += 2;
        panels.push_back(std::move(panel));
    }
    if (!panels.empty()) {
        const auto all = emit_feasibility_plot(panels);
        write_text_file(dir / "feasibility" / "all.svg", all.svg);
        write_text_file(dir / "feasibility" / "all.json", all.json + "\n");
        written += 2;
    }
    if (written == 0) throw ValidationError("nothing to render");
    out << written << " files written under " << dir.generic_string() << "\n";
    return kExitOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Quality checks for simulated Likert opinion data", "likertqc"};
    app.set_version_flag("--version", version());
    app.require_subcommand(1);

    IngestOptions ingest;
    auto* ingest_cmd = app.add_subcommand("ingest", "Validate annotations and apply the gold-question filter");
    ingest_cmd->add_option("--input", ingest.input, "annotation file (.csv or .jsonl)")->required()->check(CLI::ExistingFile);
    ingest_cmd->add_option("--gold", ingest.gold, "gold claims CSV")->check(CLI::ExistingFile);
    ingest_cmd->add_option("--gold-threshold", ingest.gold_threshold, "keep workers above this accuracy")->capture_default_str();
    ingest_cmd->add_option("--min-gold", ingest.min_gold, "gold answers needed per worker")->capture_default_str();
    ingest_cmd->add_option("--out", ingest.out, "normalised output file (.csv or .jsonl)");

    std::string summarize_input;
    std::string summarize_out;
    auto* summarize_cmd = app.add_subcommand("summarize", "Per-topic, per-condition label statistics");
    summarize_cmd->add_option("--input", summarize_input, "annotation file")->required()->check(CLI::ExistingFile);
    summarize_cmd->add_option("--out", summarize_out, "directory for summary files");

    CollectOptions collect_opts;
    auto* collect_cmd = app.add_subcommand("collect", "Query a chat-completions endpoint for model labels");
    collect_cmd->add_option("--claims", collect_opts.claims, "CSV with claim_id, topic, claim[, veracity]")->required()->check(CLI::ExistingFile);
    collect_cmd->add_option("--endpoint", collect_opts.cfg.endpoint, "chat-completions URL")->required();
    collect_cmd->add_option("--model", collect_opts.cfg.model, "model name")->required();
    collect_cmd->add_option("--out", collect_opts.sink, "JSONL sink (appended, resumable)")->required();
    collect_cmd->add_option("--templates", collect_opts.templates, "comma-separated template ids")->capture_default_str();
    collect_cmd->add_option("--personas", collect_opts.personas, "personas for conditional templates")->capture_default_str();
    collect_cmd->add_option("--samples", collect_opts.cfg.samples_per_cell, "labels per cell")->capture_default_str();
    collect_cmd->add_option("--temperature", collect_opts.cfg.temperature, "sampling temperature")->capture_default_str();
    collect_cmd->add_option("--retries", collect_opts.cfg.max_retries, "retries per sample")->capture_default_str();
    auto* timeout_opt = collect_cmd->add_option("--timeout-ms", "request timeout in milliseconds");
    collect_cmd->add_option("--api-key-env", collect_opts.cfg.api_key_env, "environment variable holding the API key")->capture_default_str();
    collect_cmd->add_option("--parallel", collect_opts.cfg.parallelism, "concurrent requests")->capture_default_str();
    collect_cmd->add_option("--icl", collect_opts.icl, "in-context strategy: random or nearest");
    collect_cmd->add_option("--icl-pool", collect_opts.icl_pool, "CSV with claim_id, claim, man, woman, average");
    collect_cmd->add_option("--icl-conditions", collect_opts.icl_conditions, "conditions for ICL prompts")->capture_default_str();
    collect_cmd->add_option("--k", collect_opts.k, "in-context examples")->capture_default_str();
    collect_cmd->add_option("--embeddings-endpoint", collect_opts.cfg.embeddings_endpoint, "embeddings URL");
    collect_cmd->add_option("--embeddings-model", collect_opts.cfg.embeddings_model, "embeddings model");
    collect_cmd->add_option("--seed", collect_opts.seed, "seed for random example selection")->capture_default_str();

    QcOptions weak_opts;
    QcOptions strong_opts;
    auto add_qc = [&](QcOptions& o, const char* name, const char* help, bool strong) {
        auto* cmd = app.add_subcommand(name, help);
        cmd->add_option("--input", o.input, "annotation file")->required()->check(CLI::ExistingFile);
        o.sel.add_options(cmd);
        o.output.add_options(cmd);
        cmd->add_option("--b", o.b, "bootstrap replicates")->capture_default_str();
        cmd->add_option("--seed", o.seed, "master seed")->capture_default_str();
        cmd->add_option("--jobs", o.jobs, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
        if (strong) {
            cmd->add_option("--q0-step", o.q0_step, "grid step on the simplex")->capture_default_str();
            cmd->add_option("--alpha-star", o.alpha_star, "per-grid-point level")->capture_default_str();
        } else {
            cmd->add_option("--p0", o.p0, "thresholds")->delimiter(',')->capture_default_str();
            cmd->add_option("--alpha", o.alpha, "level")->capture_default_str();
        }
        return cmd;
    };
    auto* weak_cmd = add_qc(weak_opts, "qc1-weak", "Convex-hull consistency test", false);
    auto* strong_cmd = add_qc(strong_opts, "qc1-strong", "Fixed reference-population test", true);

    AlignOptions qc2a;
    AlignOptions qc2b;
    auto add_align = [&](AlignOptions& o, const char* name, const char* help, bool human) {
        auto* cmd = app.add_subcommand(name, help);
        cmd->add_option(human ? "--model-input" : "--input", o.model_input, "model annotation file")->required()->check(CLI::ExistingFile);
        if (human) {
            cmd->add_option("--human-input", o.human_input, "human annotation file")->required()->check(CLI::ExistingFile);
            cmd->add_option("--min-reference-n", o.min_reference_n, "minimum human labels per cell")->capture_default_str();
        } else {
            cmd->add_option("--direction", o.direction, "expect_no_difference or expect_difference")->capture_default_str();
        }
        o.sel.add_options(cmd);
        o.output.add_options(cmd);
        cmd->add_option("--plus", o.plus, "minuend group")->capture_default_str();
        cmd->add_option("--minus", o.minus, "subtrahend group")->capture_default_str();
        cmd->add_option("--alpha", o.alpha, "level")->capture_default_str();
        return cmd;
    };
    auto* qc2a_cmd = add_align(qc2a, "qc2a", "Group gap against a stakeholder prior", false);
    auto* qc2b_cmd = add_align(qc2b, "qc2b", "Group gap against human data", true);

    std::string bench_reports;
    std::vector<double> bench_thresholds{0.7, 0.8, 0.9, 1.0};
    double bench_alpha = 0.05;
    auto* bench_cmd = app.add_subcommand("benchmark", "Summarise a run directory per method");
    bench_cmd->add_option("--reports", bench_reports, "run directory")->required()->check(CLI::ExistingDirectory);
    bench_cmd->add_option("--p0", bench_thresholds, "thresholds counted for QC1a")->delimiter(',')->capture_default_str();
    bench_cmd->add_option("--alpha", bench_alpha, "level for QC2b")->capture_default_str();

    CalibrateOptions cal;
    auto* cal_cmd = app.add_subcommand("calibrate", "Size and power on synthetic topics");
    cal_cmd->add_option("--spec", cal.spec, "synthetic spec JSON")->required()->check(CLI::ExistingFile);
    cal_cmd->add_option("--test", cal.test, "weak, strong or alignment")->capture_default_str();
    cal_cmd->add_option("--runs", cal.opts.runs, "repetitions")->capture_default_str();
    cal_cmd->add_option("--b", cal.opts.replicates, "bootstrap replicates")->capture_default_str();
    cal_cmd->add_option("--p0", cal.opts.thresholds, "thresholds")->delimiter(',')->capture_default_str();
    cal_cmd->add_option("--q0-step", cal.opts.grid_step, "grid step")->capture_default_str();
    cal_cmd->add_option("--alpha", cal.opts.alpha, "level")->capture_default_str();
    cal_cmd->add_option("--alpha-star", cal.opts.alpha_star, "per-grid-point level")->capture_default_str();
    cal_cmd->add_option("--confidence", cal.opts.confidence, "interval confidence")->capture_default_str();
    cal_cmd->add_option("--jobs", cal.opts.jobs, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    cal.output.add_options(cal_cmd);

    std::string report_dir;
    auto* report_cmd = app.add_subcommand("report", "Render tables and feasibility plots for a run directory");
    report_cmd->add_option("--reports", report_dir, "run directory")->required()->check(CLI::ExistingDirectory);

    std::vector<std::string> argv_store{"likertqc"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitError;
    }

    try {
        if (*ingest_cmd) return run_ingest(ingest, out, err);
        if (*summarize_cmd) return run_summarize(summarize_input, summarize_out, out);
        if (*collect_cmd) {
            if (*timeout_opt) collect_opts.cfg.timeout = std::chrono::milliseconds(timeout_opt->as<long>());
            return run_collect(collect_opts, out, err);
        }
        if (*weak_cmd) return run_qc1(weak_opts, false, out, err);
        if (*strong_cmd) return run_qc1(strong_opts, true, out, err);
        if (*qc2a_cmd) return run_alignment(qc2a, false, out, err);
        if (*qc2b_cmd) return run_alignment(qc2b, true, out, err);
        if (*bench_cmd) return run_benchmark(bench_reports, bench_thresholds, bench_alpha, out);
        if (*cal_cmd) return run_calibrate(cal, out);
        if (*report_cmd) return run_report(report_dir, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}

}  // namespace likertqc
