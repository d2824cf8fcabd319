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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "likertqc/collector.hpp"
#include "likertqc/error.hpp"
#include "likertqc/ingestion.hpp"
#include "likertqc/prompts.hpp"
#include "mock_server.hpp"

using namespace likertqc;

namespace {

std::vector<IclExample> small_pool() {
    return {{"p1", "Claim one", 2.0, 3.5, 2.75},
            {"p2", "Claim two", 1.0, 1.0, 1.0},
            {"p3", "Claim three", 4.0, 5.0, 4.5},
            {"p4", "Claim four", 6.0, 5.0, 5.5}};
}

CollectorConfig config(const std::string& url, std::size_t n, std::size_t parallel = 1) {
    CollectorConfig cfg;
    cfg.endpoint = url;
    cfg.model = "mock-1";
    cfg.samples_per_cell = n;
    cfg.max_retries = 3;
    cfg.timeout = std::chrono::milliseconds(5000);
    cfg.parallelism = parallel;
    return cfg;
}

std::size_t count_lines(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::size_t n = 0;
    std::string line;
    while (std::getline(in, line)) n += line.empty() ? 0 : 1;
    return n;
}

}  // namespace

TEST_SUITE("prompts") {
    TEST_CASE("conditional prompt names the persona") {
        const auto s = render_prompt(find_template("cond1"), "X", "woman");
        CHECK(s.find("Answer the following question as if you were a woman") != std::string::npos);
        CHECK(s.find("Claim: X") != std::string::npos);
        CHECK_THROWS_AS(render_prompt(find_template("cond1"), "X", ""), ValidationError);
    }

    TEST_CASE("base prompt framing") {
        const auto s = render_prompt(find_template("base4"), "X", "");
        CHECK(s.find("the perspective of an average person") != std::string::npos);
        CHECK(builtin_templates().size() == 6);
        CHECK_THROWS_AS(find_template("cond9"), ValidationError);
    }

    TEST_CASE("placeholders inside the claim stay literal") {
        const auto s = render_prompt(find_template("cond1"), "Everyone {gender} agrees", "man");
        CHECK(s.find("Everyone {gender} agrees") != std::string::npos);
        CHECK(s.find("as if you were a man") != std::string::npos);
    }

    TEST_CASE("malformed templates") {
        PromptTemplate t{"x", "Claim: {claim} {other}", false, false};
        CHECK_THROWS_WITH_AS(render_prompt(t, "c", ""), doctest::Contains("unresolved placeholder"), ValidationError);
        t.text = "Claim: {claim";
        CHECK_THROWS_AS(render_prompt(t, "c", ""), ValidationError);
        t.text = "{gender}";
        CHECK_THROWS_AS(render_prompt(t, "c", "man"), ValidationError);
    }

    TEST_CASE("rating extraction") {
        CHECK(parse_likert("5") == 5);
        CHECK(parse_likert("5.0") == 5);
        CHECK(parse_likert("As a woman, I would rate it as a: 4") == 4);
        CHECK(parse_likert("On a scale of 1-6 I pick 2") == 2);
        CHECK(parse_likert("4 out of 6") == 4);
        CHECK(parse_likert("4/6") == 4);
        CHECK(parse_likert("3. Final answer: 3") == 3);
        CHECK_THROWS_AS(parse_likert("seven"), ValidationError);
        CHECK_THROWS_AS(parse_likert("0"), ValidationError);
        CHECK_THROWS_AS(parse_likert("4.5"), ValidationError);
        CHECK_THROWS_AS(parse_likert("-3"), ValidationError);
        CHECK_THROWS_WITH_AS(parse_likert("maybe 2 or maybe 5"), doctest::Contains("ambiguous"), ValidationError);
    }

    TEST_CASE("random selection is reproducible and excludes the target") {
        const auto pool = small_pool();
        auto a = derive_rng(3, {std::string_view("icl")});
        auto b = derive_rng(3, {std::string_view("icl")});
        const auto x = select_random_examples(pool, "p2", 3, a);
        CHECK(x == select_random_examples(pool, "p2", 3, b));
        CHECK(std::find(x.begin(), x.end(), 1u) == x.end());
        CHECK(std::set<std::size_t>(x.begin(), x.end()).size() == 3);
        CHECK_THROWS_AS(select_random_examples(pool, "p2", 4, a), ValidationError);
    }

    TEST_CASE("identical embedding ranks first") {
        const auto pool = small_pool();
        const std::vector<std::vector<double>> emb{{1, 0, 0}, {0, 1, 0}, {0.3, 0.3, 1}, {1, 1, 0}};
        const std::vector<double> target{0.3, 0.3, 1};
        const auto sel = select_nearest_examples(pool, emb, target, "other", 2);
        CHECK(sel[0] == 2);
    }

    TEST_CASE("nearest selection matches brute-force ranking") {
        std::mt19937_64 gen(8);
        std::normal_distribution<double> z;
        for (int rep = 0; rep < 10; ++rep) {
            std::vector<IclExample> pool;
            std::vector<std::vector<double>> emb;
            for (int i = 0; i < 3; ++i) {
                pool.push_back({"p" + std::to_string(i), "c", 1, 2, 1.5});
                emb.push_back({z(gen), z(gen), z(gen), z(gen)});
            }
            const std::vector<double> target{z(gen), z(gen), z(gen), z(gen)};
            std::vector<std::size_t> expect{0, 1, 2};
            auto cos = [&](std::size_t i) {
                double d = 0, na = 0, nb = 0;
                for (std::size_t j = 0; j < 4; ++j) {
                    d += emb[i][j] * target[j];
                    na += emb[i][j] * emb[i][j];
                    nb += target[j] * target[j];
                }
                return d / std::sqrt(na * nb);
            };
            std::sort(expect.begin(), expect.end(), [&](auto a, auto b) { return cos(a) > cos(b); });
            CHECK(select_nearest_examples(pool, emb, target, "t", 3) == expect);
        }
    }

    TEST_CASE("ICL prompt layout") {
        const auto pool = small_pool();
        const std::vector<std::size_t> sel{0};
        CHECK(format_icl_prompt(pool, sel, "Target", "woman") ==
              "Claim: Claim one\nMan: 2.0\nWoman: 3.5\nAverage: 2.8\n\nClaim: Target\nWoman:");
        CHECK(persona_label("base") == "Average");
        CHECK(cosine_similarity(std::vector<double>{0, 0}, std::vector<double>{1, 2}) == 0.0);
        CHECK_THROWS_AS(cosine_similarity(std::vector<double>{1}, std::vector<double>{1, 2}), ValidationError);
    }
}

TEST_SUITE("collector") {
    TEST_CASE("response parsing") {
        CHECK(parse_chat_response(R"({"choices":[{"message":{"role":"assistant","content":"5"}}]})") == "5");
        CHECK_THROWS_AS(parse_chat_response("{}"), TransportError);
        CHECK_THROWS_AS(parse_chat_response("nope"), TransportError);
    }

    TEST_CASE("endpoint split") {
        const auto e = split_endpoint("http://localhost:8080/v1/chat/completions");
        CHECK(e.base == "http://localhost:8080");
        CHECK(e.path == "/v1/chat/completions");
        CHECK_THROWS_AS(split_endpoint("localhost/v1"), ValidationError);
    }

    TEST_CASE("config validation") {
        CollectorConfig cfg;
        CHECK_THROWS_AS(cfg.validate(), ValidationError);
        cfg.model = "m";
        cfg.validate();
        cfg.temperature = -1;
        CHECK_THROWS_AS(cfg.validate(), ValidationError);
    }

    TEST_CASE("steady endpoint fills every cell") {
        testing::MockChatServer server(testing::robustness_script);
        const auto dir = testing::scratch_dir("collect_steady");
        const auto cfg = config(server.chat_url(), 4, 2);
        HttpChatClient client(cfg.endpoint, "", cfg.timeout);
        const std::vector<CollectionClaim> claims{{"c1", "T", Veracity::True, "steady one"},
                                                  {"c2", "T", Veracity::False, "steady two"}};
        const std::vector<PromptPlan> plans{template_plan(find_template("cond1")),
                                            template_plan(find_template("base1"))};
        const auto r = collect(claims, plans, cfg, client, dir / "out.jsonl");
        CHECK(r.records.size() == 2 * 3 * 4);
        CHECK(r.requested == 24);
        CHECK(r.retries.empty());
        CHECK_FALSE(r.partial());
        for (const auto& rec : r.records) {
            CHECK(rec.label == 3);
            CHECK(rec.source.model == "mock-1");
        }
        CHECK(load_annotations(dir / "out.jsonl").size() == 24);
    }

    TEST_CASE("retries, failures and resume") {
        testing::MockChatServer server(testing::robustness_script);
        const auto dir = testing::scratch_dir("collect_mixed");
        const auto sink = dir / "out.jsonl";
        const auto cfg = config(server.chat_url(), 3, 3);
        HttpChatClient client(cfg.endpoint, "", cfg.timeout);
        const std::vector<CollectionClaim> claims{{"a", "T", Veracity::True, "steady"},
                                                  {"b", "T", Veracity::True, "flaky"},
                                                  {"c", "T", Veracity::True, "broken"}};
        const std::vector<PromptPlan> plans{template_plan(find_template("cond1"))};
        const auto r = collect(claims, plans, cfg, client, sink);
        std::map<std::string, std::size_t> per_cell;
        for (const auto& rec : r.records) ++per_cell[rec.claim_id + "/" + rec.condition];
        CHECK(per_cell["a/man"] == 3);
        CHECK(per_cell["a/woman"] == 3);
        CHECK(per_cell["b/man"] == 3);
        CHECK(per_cell["b/woman"] == 3);
        CHECK(per_cell.count("c/man") == 0);
        // Two failed attempts per flaky sample.
        CHECK(r.retries.size() == 2 * 3 * 2 + 2 * 3);
        REQUIRE(r.failures.size() == 2);
        CHECK(r.failures[0].claim_id == "c");
        CHECK(r.failures[0].sample == 0);
        CHECK(r.failures[0].collected == 0);
        CHECK(r.failures[0].wanted == 3);
        CHECK(r.partial());

        const auto before = testing::read_file(sink);
        const auto again = collect(claims, plans, cfg, client, sink);
        CHECK(again.requested == 0);
        CHECK(again.resumed == 12);
        CHECK(again.records == r.records);
        CHECK(testing::read_file(sink) == before);
    }

    TEST_CASE("resume after an interrupted write") {
        testing::MockChatServer server(testing::robustness_script);
        const auto dir = testing::scratch_dir("collect_torn");
        const auto sink = dir / "out.jsonl";
        const auto cfg = config(server.chat_url(), 5);
        HttpChatClient client(cfg.endpoint, "", cfg.timeout);
        const std::vector<CollectionClaim> claims{{"a", "T", Veracity::True, "steady"}};
        const std::vector<PromptPlan> plans{template_plan(find_template("base2"))};
        const auto full = collect(claims, plans, cfg, client, sink);
        // Keep two lines and half of the third.
        const auto text = testing::read_file(sink);
        std::size_t cut = 0;
        for (int i = 0; i < 2; ++i) cut = text.find('\n', cut) + 1;
        testing::write_file(sink, text.substr(0, cut + 10));
        const auto resumed = collect(claims, plans, cfg, client, sink);
        CHECK(resumed.resumed == 2);
        CHECK(resumed.requested == 3);
        CHECK(resumed.records == full.records);
        CHECK(count_lines(sink) == 5);
    }

    TEST_CASE("authentication failure aborts") {
        testing::MockChatServer server(testing::robustness_script);
        const auto dir = testing::scratch_dir("collect_auth");
        const auto cfg = config(server.chat_url(), 2);
        HttpChatClient client(cfg.endpoint, "k", cfg.timeout);
        const std::vector<CollectionClaim> claims{{"a", "T", Veracity::True, "locked"}};
        const std::vector<PromptPlan> plans{template_plan(find_template("base1"))};
        CHECK_THROWS_AS(collect(claims, plans, cfg, client, dir / "o.jsonl"), AuthError);
        CHECK(server.calls() == 1);
    }

    TEST_CASE("unreachable endpoint is a transport error") {
        HttpChatClient client("http://127.0.0.1:1/v1/chat/completions", "", std::chrono::milliseconds(500));
        CHECK_THROWS_AS(client.complete({"m", {{"user", "x"}}, 0.0}), TransportError);
    }

    TEST_CASE("ICL plans send a system message") {
        testing::MockChatServer server(testing::robustness_script);
        const auto dir = testing::scratch_dir("collect_icl");
        const auto cfg = config(server.chat_url(), 1);
        HttpChatClient client(cfg.endpoint, "", cfg.timeout);
        const auto plan = icl_plan(IclStrategy::Random, 2, small_pool(), {}, {"man", "woman", "base"}, 4);
        CHECK(plan.prompt_id == "icl_random");
        const CollectionClaim claim{"p1", "T", Veracity::True, "steady"};
        const auto msgs = plan.build(claim, "base");
        REQUIRE(msgs.size() == 2);
        CHECK(msgs[0].role == "system");
        CHECK(msgs[1].content.find("Claim one") == std::string::npos);
        CHECK(msgs[1].content.size() > 5);
        CHECK(msgs[1].content.substr(msgs[1].content.size() - 8) == "Average:");
        CHECK(plan.build(claim, "base")[1].content == msgs[1].content);
        const auto r = collect({claim}, {plan}, cfg, client, dir / "o.jsonl");
        CHECK(r.records.size() == 3);
    }

    TEST_CASE("embedding cache only fetches missing texts") {
        testing::MockChatServer server(testing::robustness_script);
        const auto dir = testing::scratch_dir("embed_cache");
        HttpEmbeddingClient client(server.embeddings_url(), "e", "", std::chrono::milliseconds(5000));
        {
            EmbeddingCache cache(client, dir / "emb.jsonl");
            const auto v = cache.get({"alpha", "be"});
            CHECK(v[0] == std::vector<double>{5, 'a', 1});
            CHECK(v[1] == std::vector<double>{2, 'b', 1});
        }
        CHECK(server.embedding_calls() == 1);
        EmbeddingCache cache(client, dir / "emb.jsonl");
        CHECK(cache.size() == 2);
        cache.get({"alpha", "be"});
        CHECK(server.embedding_calls() == 1);
        cache.get({"alpha", "gamma"});
        CHECK(server.embedding_calls() == 2);
        CHECK(cache.size() == 3);
    }
}
