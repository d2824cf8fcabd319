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

#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "likertqc/calibration.hpp"
#include "likertqc/cli.hpp"
#include "likertqc/ingestion.hpp"
#include "mock_server.hpp"

using namespace likertqc;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = dispatch(args, out, err);
    return {code, out.str(), err.str()};
}

void append_topic(std::vector<AnnotationRecord>& out, const TopicDataset& d, const Source& group_src,
                  const Source& base_src, bool with_base) {
    for (const auto& [id, cells] : d.claims) {
        for (const auto& [cond, cell] : cells) {
            if (cond == "base" && !with_base) continue;
            for (std::size_t i = 0; i < cell.labels.size(); ++i) {
                AnnotationRecord r;
                r.claim_id = d.topic + "-" + id;
                r.topic = d.topic;
                r.veracity = Veracity::False;
                r.condition = cond;
                r.source = cond == "base" ? base_src : group_src;
                r.label = cell.labels[i];
                r.annotator_id = std::to_string(i);
                out.push_back(r);
            }
        }
    }
}

SyntheticSpec spec_for(const std::string& topic, std::uint64_t seed) {
    SyntheticSpec s;
    s.topic = topic;
    s.groups = {{"man", {0.1, 0.4, 0.2, 0.1, 0.1, 0.1}}, {"woman", {0.05, 0.1, 0.15, 0.3, 0.3, 0.1}}};
    s.true_mixture = {0.5, 0.5};
    s.claims = 8;
    s.n_per_cell = 6;
    s.seed = seed;
    return s;
}

/// Model records (model:sim, cond1/base1) and human records for two topics.
fs::path write_dataset(const fs::path& dir) {
    std::vector<AnnotationRecord> rs;
    for (const auto& [topic, seed] : {std::pair<std::string, int>{"Abortion", 1}, {"Gold", 2}}) {
        append_topic(rs, generate_synthetic_topic(spec_for(topic, seed)), Source::llm("sim", "cond1"),
                     Source::llm("sim", "base1"), true);
        append_topic(rs, generate_synthetic_topic(spec_for(topic, seed + 10)), Source::human(), Source::human(),
                     false);
    }
    std::ostringstream csv;
    write_annotations_csv(csv, rs);
    testing::write_file(dir / "data.csv", csv.str());
    return dir / "data.csv";
}

const std::vector<std::string> kSel{"--source", "model:sim", "--prompt", "cond1", "--base-prompt", "base1"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("usage errors") {
        CHECK(run({}).code == kExitError);
        CHECK(run({"frobnicate"}).code == kExitError);
        CHECK(run({"--help"}).code == kExitOk);
        const auto v = run({"--version"});
        CHECK(v.code == kExitOk);
        CHECK(v.out.find(version()) != std::string::npos);
        CHECK(run({"qc1-weak", "--input", "/nonexistent.csv"}).code == kExitError);
    }

    TEST_CASE("ingest and summarize the fixture") {
        const auto dir = testing::scratch_dir("cli_ingest");
        const auto r = run({"ingest", "--input", LIKERTQC_FIXTURE_DIR "/human_subset.csv", "--gold",
                            LIKERTQC_FIXTURE_DIR "/gold.csv", "--out", (dir / "clean.csv").string()});
        REQUIRE(r.code == kExitOk);
        CHECK(r.out.find("424 records read") != std::string::npos);
        CHECK(r.out.find("398 records kept") != std::string::npos);
        CHECK(r.err.find("f98") != std::string::npos);
        CHECK(fs::exists(dir / "clean.csv.manifest.json"));
        const auto s = run({"summarize", "--input", (dir / "clean.csv").string(), "--out", (dir / "sum").string()});
        REQUIRE(s.code == kExitOk);
        CHECK(s.out.find("| Abortion | woman | 61 | 4.934 |") != std::string::npos);
        CHECK(s.out.find("| Abortion | man | 119 | 3.176 |") != std::string::npos);
        const auto j = nlohmann::json::parse(testing::read_file(dir / "sum" / "summary.json"));
        CHECK(j["topics"].size() == 3);
    }

    TEST_CASE("bad input row fails with its row number") {
        const auto dir = testing::scratch_dir("cli_bad");
        testing::write_file(dir / "bad.csv",
                            "claim_id,topic,veracity,condition,source,prompt_id,annotator_id,label\n"
                            "c1,T,true,man,human,,a,9\n");
        const auto r = run({"summarize", "--input", (dir / "bad.csv").string()});
        CHECK(r.code == kExitError);
        CHECK(r.err.find("row 1") != std::string::npos);
    }

    TEST_CASE("several sources need --source") {
        const auto dir = testing::scratch_dir("cli_sources");
        const auto data = write_dataset(dir);
        const auto r = run({"qc1-weak", "--input", data.string(), "--b", "10", "--out", dir.string()});
        CHECK(r.code == kExitError);
        CHECK(r.err.find("pass --source") != std::string::npos);
    }

    TEST_CASE("reports are byte-identical across --jobs") {
        const auto dir = testing::scratch_dir("cli_jobs");
        const auto data = write_dataset(dir);
        for (const char* cmd : {"qc1-weak", "qc1-strong"}) {
            for (const char* jobs : {"1", "4"}) {
                const auto r = run(with({cmd, "--input", data.string(), "--b", "300", "--seed", "7", "--jobs", jobs,
                                         "--out", (dir / ("j" + std::string(jobs))).string()},
                                        kSel));
                REQUIRE(r.code == kExitOk);
            }
        }
        std::size_t compared = 0;
        for (const auto& e : fs::recursive_directory_iterator(dir / "j1")) {
            if (!e.is_regular_file()) continue;
            const auto rel = fs::relative(e.path(), dir / "j1");
            CHECK(testing::read_file(e.path()) == testing::read_file(dir / "j4" / rel));
            ++compared;
        }
        // 2 topics x (json + md) x 2 checks, plus index and manifest per check.
        CHECK(compared == 12);
        CHECK(fs::exists(dir / "j1" / "run" / "qc1-weak" / "sim_cond1+base1_Abortion.json"));
    }

    TEST_CASE("full pipeline: checks, benchmark, report") {
        const auto dir = testing::scratch_dir("cli_pipeline");
        const auto data = write_dataset(dir);
        const auto out = (dir / "out").string();
        const std::vector<std::string> common{"--out", out, "--run-id", "r1"};
        REQUIRE(run(with(with({"qc1-weak", "--input", data.string(), "--b", "200"}, kSel), common)).code == kExitOk);
        REQUIRE(run(with(with({"qc1-strong", "--input", data.string(), "--b", "200"}, kSel), common)).code == kExitOk);
        const auto a = run(with(with({"qc2a", "--input", data.string(), "--direction", "expect_difference"}, kSel), common));
        REQUIRE(a.code == kExitOk);
        const auto b = run(with(with({"qc2b", "--model-input", data.string(), "--human-input", data.string()}, kSel), common));
        REQUIRE(b.code == kExitOk);
        const fs::path run_dir = dir / "out" / "r1";
        CHECK(fs::exists(run_dir / "qc2a" / "table.md"));
        CHECK(fs::exists(run_dir / "qc2b" / "table.csv"));

        const auto bench = run({"benchmark", "--reports", run_dir.string()});
        REQUIRE(bench.code == kExitOk);
        CHECK(bench.out.find("| sim / cond1+base1 |") != std::string::npos);
        const auto bj = nlohmann::json::parse(testing::read_file(run_dir / "benchmark.json"));
        CHECK(bj[0]["qc1a"]["total"] == 8);
        CHECK(bj[0]["qc1b"]["total"] == 2);

        const auto rep = run({"report", "--reports", run_dir.string()});
        REQUIRE(rep.code == kExitOk);
        CHECK(fs::exists(run_dir / "feasibility" / "all.svg"));
        CHECK(fs::exists(run_dir / "feasibility" / "sim_cond1+base1_Gold.json"));

        const auto manifest = nlohmann::json::parse(testing::read_file(run_dir / "qc1-weak" / "manifest.json"));
        CHECK(manifest["inputs"][0]["sha256"].get<std::string>().size() == 64);
        CHECK(manifest["outputs"].size() == 4);
    }

    TEST_CASE("calibrate") {
        const auto dir = testing::scratch_dir("cli_calibrate");
        auto spec = spec_for("syn", 3);
        testing::write_file(dir / "spec.json", to_json(spec));
        const auto r = run({"calibrate", "--spec", (dir / "spec.json").string(), "--test", "weak", "--runs", "4",
                            "--b", "50", "--out", dir.string()});
        REQUIRE(r.code == kExitOk);
        const auto j = nlohmann::json::parse(testing::read_file(dir / "run" / "calibrate" / "weak.json"));
        CHECK(j["points"].size() == 4);
        CHECK(j["runs"] == 4);
    }

    TEST_CASE("collect exit codes") {
        testing::MockChatServer server(testing::robustness_script);
        const auto dir = testing::scratch_dir("cli_collect");
        testing::write_file(dir / "claims.csv", "claim_id,topic,claim,veracity\nc1,T,steady claim,true\n");
        const std::vector<std::string> base{"collect", "--claims", (dir / "claims.csv").string(), "--endpoint",
                                            server.chat_url(), "--model", "mock", "--samples", "2"};
        const auto ok = run(with(base, {"--out", (dir / "ok.jsonl").string()}));
        CHECK(ok.code == kExitOk);
        CHECK(load_annotations(dir / "ok.jsonl").size() == 6);
        CHECK(fs::exists(dir / "ok.jsonl.manifest.json"));

        testing::write_file(dir / "claims.csv", "claim_id,topic,claim\nc1,T,steady claim\nc2,T,broken claim\n");
        const auto partial = run(with(base, {"--out", (dir / "p.jsonl").string(), "--retries", "1"}));
        CHECK(partial.code == kExitPartial);
        CHECK(testing::read_file(dir / "p.jsonl.failures.jsonl").find("\"c2\"") != std::string::npos);
    }
}
