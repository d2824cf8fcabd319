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

// Path-derived random streams.
//
// A stream is identified by a master seed plus a path of context labels
// (topic, claim, condition, replicate ...). The path is hashed into a 64-bit
// key which seeds a SplitMix64 generator, so a replicate's draws depend only
// on its own path and never on which thread or in which order it runs.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string_view>
#include <variant>

namespace likertqc {

constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t hash_label(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return mix64(h ^ (s.size() * 0x9e3779b97f4a7c15ULL));
}

class RngStream {
public:
    explicit constexpr RngStream(std::uint64_t key) : state_(key) {}

    constexpr std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }

    /// Uniform double in [0, 1).
    constexpr double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Unbiased integer in [0, n). n must be positive.
    std::size_t below(std::size_t n) {
        // Lemire's multiply-shift with rejection.
        std::uint64_t x = next();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - static_cast<std::uint64_t>(n)) % n;
            while (low < threshold) {
                x = next();
                m = static_cast<__uint128_t>(x) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::size_t>(m >> 64);
    }

private:
    std::uint64_t state_;
};

/// Hierarchical stream key. Extending with a label or an index yields a child key.
class StreamKey {
public:
    constexpr StreamKey() = default;
    explicit constexpr StreamKey(std::uint64_t value) : value_(value) {}

    constexpr StreamKey then(std::string_view label) const {
        return StreamKey(mix64(rotl(value_, 23) ^ hash_label(label)));
    }
    constexpr StreamKey then(std::uint64_t index) const {
        return StreamKey(mix64(rotl(value_, 17) ^ mix64(index ^ 0x6a09e667f3bcc909ULL)));
    }
    constexpr std::uint64_t value() const { return value_; }
    constexpr RngStream stream() const { return RngStream(value_); }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t value_ = 0;
};

constexpr StreamKey root_key(std::uint64_t master_seed) {
    return StreamKey(mix64(master_seed ^ 0x243f6a8885a308d3ULL));
}

using PathElement = std::variant<std::string_view, std::uint64_t>;

/// Stream for (master_seed, path). Identical inputs give identical streams.
RngStream derive_rng(std::uint64_t master_seed, std::span<const PathElement> path);
RngStream derive_rng(std::uint64_t master_seed, std::initializer_list<PathElement> path);

}  // namespace likertqc
