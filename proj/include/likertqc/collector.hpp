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

// Model-response collection over a chat-completions HTTP API.
//
// Request:  {"model": ..., "messages": [{"role": ..., "content": ...}], "temperature": ...}
// Response: choices[0].message.content
//
// Records are appended to a JSONL sink as they arrive. Re-running against
// the same sink skips every (claim, condition, prompt, sample) already there.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "likertqc/model.hpp"
#include "likertqc/prompts.hpp"

namespace likertqc {

struct CollectorConfig {
    std::string endpoint;  // full URL of the chat-completions route
    std::string model;
    double temperature = 0.5;
    std::size_t samples_per_cell = 10;
    std::size_t max_retries = 3;  // extra attempts per sample after the first
    std::chrono::milliseconds timeout{60000};
    std::string api_key_env = "OPENAI_API_KEY";
    std::size_t parallelism = 1;
    std::string embeddings_endpoint;
    std::string embeddings_model;

    /// Throws ValidationError on a negative temperature, zero samples or an empty model.
    void validate() const;
};

struct ChatMessage {
    std::string role;
    std::string content;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
};

std::string to_request_json(const ChatRequest& request);

/// choices[0].message.content; throws TransportError on any other shape.
std::string parse_chat_response(std::string_view body);

class ChatClient {
public:
    virtual ~ChatClient() = default;
    /// Returns the completion text. Throws AuthError or TransportError.
    virtual std::string complete(const ChatRequest& request) = 0;
};

/// Endpoint URL split into scheme://host[:port] and path.
struct Endpoint {
    std::string base;
    std::string path;
};

Endpoint split_endpoint(std::string_view url);

/// Reads the key from the named environment variable; empty when unset.
std::string read_api_key(std::string_view env_name);

class HttpChatClient final : public ChatClient {
public:
    HttpChatClient(std::string endpoint, std::string api_key, std::chrono::milliseconds timeout);
    std::string complete(const ChatRequest& request) override;

private:
    Endpoint endpoint_;
    std::string api_key_;
    std::chrono::milliseconds timeout_;
};

// Embeddings ----------------------------------------------------------------

class EmbeddingClient {
public:
    virtual ~EmbeddingClient() = default;
    virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;
};

class HttpEmbeddingClient final : public EmbeddingClient {
public:
    HttpEmbeddingClient(std::string endpoint, std::string model, std::string api_key,
                        std::chrono::milliseconds timeout);
    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;

private:
    Endpoint endpoint_;
    std::string model_;
    std::string api_key_;
    std::chrono::milliseconds timeout_;
};

/// Embedding lookups backed by a JSONL file of {"text", "embedding"} lines.
/// Only texts missing from the cache reach the client.
class EmbeddingCache {
public:
    EmbeddingCache(EmbeddingClient& client, std::filesystem::path file);
    std::vector<std::vector<double>> get(const std::vector<std::string>& texts);
    std::size_t size() const { return cache_.size(); }

private:
    EmbeddingClient& client_;
    std::filesystem::path file_;
    std::map<std::string, std::vector<double>, std::less<>> cache_;
};

// Collection ----------------------------------------------------------------

struct CollectionClaim {
    std::string claim_id;
    std::string topic;
    Veracity veracity = Veracity::Unknown;
    std::string text;
};

/// One prompt family: the conditions it is asked under and how to build the
/// messages for a (claim, condition) cell.
struct PromptPlan {
    std::string prompt_id;
    std::vector<std::string> conditions;
    std::function<std::vector<ChatMessage>(const CollectionClaim&, std::string_view condition)> build;
};

/// Single user message. Conditional templates run under `personas`; base
/// templates run once under "base".
PromptPlan template_plan(const PromptTemplate& tmpl, std::vector<std::string> personas = {"man", "woman"});

/// ICL system message plus k examples. Random selection is seeded by
/// (seed, claim, condition). Nearest selection needs `embeddings` for every
/// pool claim and every target claim, keyed by claim_id.
PromptPlan icl_plan(IclStrategy strategy, std::size_t k, std::vector<IclExample> pool,
                    std::map<std::string, std::vector<double>, std::less<>> embeddings,
                    std::vector<std::string> conditions, std::uint64_t seed);

struct RetryLogEntry {
    std::string claim_id;
    std::string condition;
    std::string prompt_id;
    std::size_t sample = 0;
    std::size_t attempt = 0;  // 1-based attempt that failed
    std::string reason;
};

struct FailureLogEntry {
    std::string claim_id;
    std::string condition;
    std::string prompt_id;
    std::size_t sample = 0;  // first sample that could not be collected
    std::size_t collected = 0;
    std::size_t wanted = 0;
    std::string reason;
};

struct CollectResult {
    std::vector<AnnotationRecord> records;  // resumed and new, sorted by key
    std::size_t resumed = 0;
    std::size_t requested = 0;  // new records fetched in this run
    std::vector<RetryLogEntry> retries;
    std::vector<FailureLogEntry> failures;

    bool partial() const { return !failures.empty(); }
};

/// Collects samples_per_cell labels for every (claim, plan, condition) cell.
/// Transport and parse failures share one retry budget per sample; a sample
/// that exhausts it ends its cell with a failure entry. AuthError aborts the run.
CollectResult collect(const std::vector<CollectionClaim>& claims, const std::vector<PromptPlan>& plans,
                      const CollectorConfig& cfg, ChatClient& client, const std::filesystem::path& sink);

std::string to_json_line(const RetryLogEntry& entry);
std::string to_json_line(const FailureLogEntry& entry);

}  // namespace likertqc
