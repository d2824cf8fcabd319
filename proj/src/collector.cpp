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

#include "likertqc/collector.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include <httplib.h>
#include <json.hpp>

#include "likertqc/error.hpp"
#include "likertqc/ingestion.hpp"

namespace likertqc {

using json = nlohmann::json;

void CollectorConfig::validate() const {
    if (model.empty()) throw ValidationError("collector: model name is empty");
    if (!(temperature >= 0.0)) throw ValidationError("collector: temperature must be >= 0");
    if (samples_per_cell < 1) throw ValidationError("collector: samples per cell must be >= 1");
    if (parallelism < 1) throw ValidationError("collector: parallelism must be >= 1");
}

std::string to_request_json(const ChatRequest& request) {
    json messages = json::array();
    for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
    return json{{"model", request.model}, {"messages", messages}, {"temperature", request.temperature}}.dump();
}

std::string parse_chat_response(std::string_view body) {
    try {
        const json doc = json::parse(body);
        const json& content = doc.at("choices").at(0).at("message").at("content");
        if (!content.is_string()) throw TransportError("malformed response: content is not a string");
        return content.get<std::string>();
    } catch (const json::exception& e) {
        throw TransportError(std::string("malformed response: ") + e.what());
    }
}

Endpoint split_endpoint(std::string_view url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos) throw ValidationError("endpoint must include a scheme: " + std::string(url));
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") throw ValidationError("unsupported scheme: " + std::string(scheme));
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string_view::npos) return {std::string(url), "/"};
    return {std::string(url.substr(0, path_start)), std::string(url.substr(path_start))};
}

std::string read_api_key(std::string_view env_name) {
    if (env_name.empty()) return {};
    const char* value = std::getenv(std::string(env_name).c_str());
    return value ? std::string(value) : std::string();
}

namespace {

std::string post_json(const Endpoint& endpoint, const std::string& api_key, std::chrono::milliseconds timeout,
                      const std::string& body) {
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (endpoint.base.rfind("https://", 0) == 0) {
        throw TransportError("https endpoints need a build with TLS support");
    }
#endif
    httplib::Client client(endpoint.base);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
    auto res = client.Post(endpoint.path, headers, body, "application/json");
    if (!res) throw TransportError("request failed: " + httplib::to_string(res.error()));
    if (res->status == 401 || res->status == 403) {
        throw AuthError("authentication rejected (HTTP " + std::to_string(res->status) + ")");
    }
    if (res->status < 200 || res->status >= 300) {
        throw TransportError("HTTP " + std::to_string(res->status));
    }
    return res->body;
}

}  // namespace

HttpChatClient::HttpChatClient(std::string endpoint, std::string api_key, std::chrono::milliseconds timeout)
    : endpoint_(split_endpoint(endpoint)), api_key_(std::move(api_key)), timeout_(timeout) {}

std::string HttpChatClient::complete(const ChatRequest& request) {
    return parse_chat_response(post_json(endpoint_, api_key_, timeout_, to_request_json(request)));
}

HttpEmbeddingClient::HttpEmbeddingClient(std::string endpoint, std::string model, std::string api_key,
                                         std::chrono::milliseconds timeout)
    : endpoint_(split_endpoint(endpoint)), model_(std::move(model)), api_key_(std::move(api_key)),
      timeout_(timeout) {}

std::vector<std::vector<double>> HttpEmbeddingClient::embed(const std::vector<std::string>& texts) {
    if (texts.empty()) return {};
    const std::string body = json{{"model", model_}, {"input", texts}}.dump();
    const std::string reply = post_json(endpoint_, api_key_, timeout_, body);
    try {
        const json doc = json::parse(reply);
        const json& data = doc.at("data");
        if (data.size() != texts.size()) throw TransportError("embedding count mismatch");
        std::vector<std::vector<double>> out;
        out.reserve(texts.size());
        for (const auto& item : data) out.push_back(item.at("embedding").get<std::vector<double>>());
        return out;
    } catch (const json::exception& e) {
        throw TransportError(std::string("malformed embeddings response: ") + e.what());
    }
}

EmbeddingCache::EmbeddingCache(EmbeddingClient& client, std::filesystem::path file)
    : client_(client), file_(std::move(file)) {
    std::ifstream in(file_);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            const json obj = json::parse(line);
            cache_[obj.at("text").get<std::string>()] = obj.at("embedding").get<std::vector<double>>();
        } catch (const json::exception&) {
            // A torn last line from an interrupted write is refetched.
        }
    }
}

std::vector<std::vector<double>> EmbeddingCache::get(const std::vector<std::string>& texts) {
    std::vector<std::string> missing;
    std::set<std::string, std::less<>> seen;
    for (const auto& t : texts) {
        if (!cache_.contains(t) && seen.insert(t).second) missing.push_back(t);
    }
    if (!missing.empty()) {
        const auto fetched = client_.embed(missing);
        if (fetched.size() != missing.size()) throw TransportError("embedding count mismatch");
        std::ofstream out(file_, std::ios::app);
        for (std::size_t i = 0; i < missing.size(); ++i) {
            cache_[missing[i]] = fetched[i];
            out << json{{"text", missing[i]}, {"embedding", fetched[i]}}.dump() << '\n';
        }
    }
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(cache_.find(t)->second);
    return out;
}

PromptPlan template_plan(const PromptTemplate& tmpl, std::vector<std::string> personas) {
    PromptPlan plan;
    plan.prompt_id = tmpl.id;
    plan.conditions = tmpl.conditional ? std::move(personas) : std::vector<std::string>{std::string(kBaseCondition)};
    plan.build = [tmpl](const CollectionClaim& claim, std::string_view condition) {
        return std::vector<ChatMessage>{{"user", render_prompt(tmpl, claim.text, condition)}};
    };
    return plan;
}

PromptPlan icl_plan(IclStrategy strategy, std::size_t k, std::vector<IclExample> pool,
                    std::map<std::string, std::vector<double>, std::less<>> embeddings,
                    std::vector<std::string> conditions, std::uint64_t seed) {
    auto shared_pool = std::make_shared<const std::vector<IclExample>>(std::move(pool));
    auto pool_embeddings = std::make_shared<std::vector<std::vector<double>>>();
    if (strategy == IclStrategy::Nearest) {
        for (const auto& ex : *shared_pool) {
            const auto it = embeddings.find(ex.claim_id);
            if (it == embeddings.end()) throw ValidationError("missing embedding for pool claim '" + ex.claim_id + "'");
            pool_embeddings->push_back(it->second);
        }
    }
    auto shared_embeddings = std::make_shared<const decltype(embeddings)>(std::move(embeddings));

    PromptPlan plan;
    plan.prompt_id = strategy == IclStrategy::Random ? "icl_random" : "icl_knn";
    plan.conditions = std::move(conditions);
    plan.build = [=](const CollectionClaim& claim, std::string_view condition) {
        IclContext ctx;
        ctx.pool = *shared_pool;
        std::span<const double> target;
        if (strategy == IclStrategy::Nearest) {
            const auto it = shared_embeddings->find(claim.claim_id);
            if (it == shared_embeddings->end()) {
                throw ValidationError("missing embedding for target claim '" + claim.claim_id + "'");
            }
            target = it->second;
            ctx.pool_embeddings = *pool_embeddings;
            ctx.target_embedding = target;
        }
        RngStream rng = derive_rng(seed, {std::string_view("icl"), std::string_view(claim.claim_id), condition});
        return std::vector<ChatMessage>{
            {"system", std::string(kIclSystemMessage)},
            {"user", build_icl_prompt(strategy, k, ctx, claim.claim_id, claim.text, condition, rng)}};
    };
    return plan;
}

std::string to_json_line(const RetryLogEntry& e) {
    return json{{"claim_id", e.claim_id}, {"condition", e.condition}, {"prompt_id", e.prompt_id},
                {"sample", e.sample},     {"attempt", e.attempt},     {"reason", e.reason}}
        .dump();
}

std::string to_json_line(const FailureLogEntry& e) {
    return json{{"claim_id", e.claim_id}, {"condition", e.condition}, {"prompt_id", e.prompt_id},
                {"sample", e.sample},     {"collected", e.collected}, {"wanted", e.wanted},
                {"reason", e.reason}}
        .dump();
}

namespace {

using SampleKey = std::tuple<std::string, std::string, std::string, std::string>;

SampleKey key_of(const AnnotationRecord& r) {
    return {r.claim_id, r.condition, r.source.prompt_id, r.annotator_id};
}

// Loads the sink, dropping a torn final line left by an interrupted write.
std::vector<AnnotationRecord> load_sink(const std::filesystem::path& sink) {
    if (!std::filesystem::exists(sink)) return {};
    std::string text;
    {
        std::ifstream in(sink, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }
    if (!text.empty() && text.back() != '\n') {
        const auto cut = text.rfind('\n');
        text.resize(cut == std::string::npos ? 0 : cut + 1);
        std::ofstream out(sink, std::ios::binary | std::ios::trunc);
        out << text;
    }
    std::istringstream in(text);
    try {
        return parse_annotations_jsonl(in);
    } catch (const ValidationError& e) {
        throw ValidationError(sink.string() + ": " + e.what());
    }
}

struct CellJob {
    const CollectionClaim* claim;
    const PromptPlan* plan;
    std::string condition;
};

}  // namespace

CollectResult collect(const std::vector<CollectionClaim>& claims, const std::vector<PromptPlan>& plans,
                      const CollectorConfig& cfg, ChatClient& client, const std::filesystem::path& sink) {
    cfg.validate();
    const std::string source_tag = Source::llm(cfg.model, "").tag();

    CollectResult result;
    std::set<SampleKey> done;
    for (auto& r : load_sink(sink)) {
        if (r.source.tag() != source_tag) continue;
        if (done.insert(key_of(r)).second) {
            result.records.push_back(std::move(r));
            ++result.resumed;
        }
    }

    std::vector<CellJob> jobs;
    for (const auto& claim : claims) {
        for (const auto& plan : plans) {
            for (const auto& condition : plan.conditions) jobs.push_back({&claim, &plan, condition});
        }
    }

    if (!sink.parent_path().empty()) std::filesystem::create_directories(sink.parent_path());
    std::ofstream out(sink, std::ios::binary | std::ios::app);
    if (!out) throw ValidationError("cannot open sink '" + sink.string() + "'");

    std::mutex mu;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::exception_ptr fatal;

    auto run_cell = [&](const CellJob& job) {
        const auto& claim = *job.claim;
        const auto& plan = *job.plan;
        const auto messages = plan.build(claim, job.condition);
        const ChatRequest request{cfg.model, messages, cfg.temperature};
        std::size_t collected = 0;
        for (std::size_t s = 0; s < cfg.samples_per_cell; ++s) {
            AnnotationRecord rec;
            rec.claim_id = claim.claim_id;
            rec.topic = claim.topic;
            rec.veracity = claim.veracity;
            rec.condition = job.condition;
            rec.source = Source::llm(cfg.model, plan.prompt_id);
            rec.annotator_id = std::to_string(s);
            {
                std::lock_guard lock(mu);
                if (done.contains(key_of(rec))) {
                    ++collected;
                    continue;
                }
            }
            std::string last_error;
            bool ok = false;
            for (std::size_t attempt = 1; attempt <= cfg.max_retries + 1 && !abort; ++attempt) {
                try {
                    rec.label = parse_likert(client.complete(request));
                    ok = true;
                    break;
                } catch (const AuthError&) {
                    throw;
                } catch (const Error& e) {
                    last_error = e.what();
                }
                std::lock_guard lock(mu);
                result.retries.push_back({claim.claim_id, job.condition, plan.prompt_id, s, attempt, last_error});
            }
            if (abort) return;
            if (!ok) {
                std::lock_guard lock(mu);
                result.failures.push_back({claim.claim_id, job.condition, plan.prompt_id, s, collected,
                                           cfg.samples_per_cell, last_error});
                return;
            }
            std::lock_guard lock(mu);
            out << to_jsonl_line(rec) << '\n';
            out.flush();
            done.insert(key_of(rec));
            result.records.push_back(std::move(rec));
            ++result.requested;
            ++collected;
        }
    };

    auto worker = [&] {
        while (!abort) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            try {
                run_cell(jobs[i]);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!fatal) fatal = std::current_exception();
                abort = true;
            }
        }
    };

    const std::size_t threads = std::min(cfg.parallelism, std::max<std::size_t>(jobs.size(), 1));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (fatal) std::rethrow_exception(fatal);

    // The last failed attempt of an exhausted sample is reported as a failure, not a retry.
    auto failed_last = [&](const RetryLogEntry& r) {
        return std::any_of(result.failures.begin(), result.failures.end(), [&](const FailureLogEntry& f) {
            return f.claim_id == r.claim_id && f.condition == r.condition && f.prompt_id == r.prompt_id &&
                   f.sample == r.sample && r.attempt == cfg.max_retries + 1;
        });
    };
    std::erase_if(result.retries, failed_last);

    auto by_key = [](const AnnotationRecord& a, const AnnotationRecord& b) {
        const auto sa = a.annotator_id.size();
        const auto sb = b.annotator_id.size();
        return std::tie(a.claim_id, a.condition, a.source.prompt_id, sa, a.annotator_id) <
               std::tie(b.claim_id, b.condition, b.source.prompt_id, sb, b.annotator_id);
    };
    std::sort(result.records.begin(), result.records.end(), by_key);
    std::sort(result.retries.begin(), result.retries.end(), [](const auto& a, const auto& b) {
        return std::tie(a.claim_id, a.condition, a.prompt_id, a.sample, a.attempt) <
               std::tie(b.claim_id, b.condition, b.prompt_id, b.sample, b.attempt);
    });
    std::sort(result.failures.begin(), result.failures.end(), [](const auto& a, const auto& b) {
        return std::tie(a.claim_id, a.condition, a.prompt_id) < std::tie(b.claim_id, b.condition, b.prompt_id);
    });
    return result;
}

}  // namespace likertqc
