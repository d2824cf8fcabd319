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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "likertqc/model.hpp"

namespace testing {

using Cells = std::map<std::string, std::vector<int>>;

/// Dataset built directly from per-claim cells, bypassing record validation.
inline likertqc::TopicDataset make_topic(const std::string& topic, std::vector<std::string> groups,
                                         const std::vector<std::pair<std::string, Cells>>& claims) {
    likertqc::TopicDataset d;
    d.topic = topic;
    d.groups = std::move(groups);
    for (const auto& [id, cells] : claims) {
        auto& map = d.claims[id];
        for (const auto& [cond, labels] : cells) map[cond] = likertqc::ClaimCell{id, cond, labels};
    }
    return d;
}

/// Random topic with groups man/woman and a base cell per claim.
inline likertqc::TopicDataset random_topic(std::uint64_t seed, std::size_t claims, std::size_t min_n = 3,
                                           std::size_t max_n = 12) {
    std::mt19937_64 gen(seed);
    std::uniform_int_distribution<int> label(1, 6);
    std::uniform_int_distribution<std::size_t> size(min_n, max_n);
    std::vector<std::pair<std::string, Cells>> rows;
    for (std::size_t c = 0; c < claims; ++c) {
        Cells cells;
        for (const char* cond : {"man", "woman", "base"}) {
            std::vector<int> v(size(gen));
            for (auto& x : v) x = label(gen);
            cells[cond] = v;
        }
        rows.emplace_back("c" + std::to_string(100 + c), cells);
    }
    return make_topic("T", {"man", "woman"}, rows);
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << text;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("likertqc_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testing
