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
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "likertqc/consistency.hpp"
#include "likertqc/error.hpp"
#include "likertqc/kernels.hpp"
#include "likertqc/reporting.hpp"
#include "oracles.hpp"

using namespace likertqc;
using testing::Cells;
using testing::make_topic;

namespace {

WeakTestConfig weak_cfg(std::size_t B, std::uint64_t seed, int jobs = 1) {
    WeakTestConfig cfg;
    cfg.bootstrap.replicates = B;
    cfg.bootstrap.master_seed = seed;
    cfg.bootstrap.jobs = jobs;
    return cfg;
}

StrongTestConfig strong_cfg(std::size_t B, std::uint64_t seed, int jobs = 1) {
    StrongTestConfig cfg;
    cfg.bootstrap.replicates = B;
    cfg.bootstrap.master_seed = seed;
    cfg.bootstrap.jobs = jobs;
    return cfg;
}

}  // namespace

TEST_SUITE("qc1_weak") {
    TEST_CASE("implied mixture weight") {
        CHECK(*implied_mixture_weight(3, 2, 4).q == 0.5);
        CHECK(*implied_mixture_weight(5, 2, 4).q == -0.5);
        CHECK(*implied_mixture_weight(2, 2, 4).q == 1.0);
        const auto d = implied_mixture_weight(3.5, 3, 3);
        CHECK_FALSE(d.q.has_value());
        CHECK(d.degenerate_gap == 0.5);
    }

    TEST_CASE("hull indicator") {
        CHECK(hull_indicator(std::vector<double>{2, 4}, 3.5));
        CHECK_FALSE(hull_indicator(std::vector<double>{2, 4}, 5.0));
        CHECK(hull_indicator(std::vector<double>{1, 3, 5}, 5.0));
        CHECK(hull_indicator(std::vector<double>{3, 3}, 3.0));
        CHECK_FALSE(hull_indicator(std::vector<double>{3, 3}, 3.1));
    }

    TEST_CASE("hull indicator agrees with q_hat in [0, 1] for two distinct means") {
        std::mt19937_64 gen(5);
        std::uniform_real_distribution<double> u(1, 6);
        for (int i = 0; i < 500; ++i) {
            const double a = u(gen), b = u(gen), base = u(gen);
            if (std::fabs(a - b) < 1e-3) continue;
            const double q = *implied_mixture_weight(base, a, b).q;
            CHECK(hull_indicator(std::vector<double>{a, b}, base) == (q >= -1e-6 && q <= 1 + 1e-6));
        }
    }

    TEST_CASE("hull indicator is invariant to increasing affine maps") {
        std::mt19937_64 gen(6);
        std::uniform_real_distribution<double> u(1, 6);
        std::uniform_real_distribution<double> scale(0.1, 5);
        for (int i = 0; i < 500; ++i) {
            std::vector<double> m{u(gen), u(gen), u(gen)};
            const double base = u(gen);
            const double s = scale(gen), t = u(gen) - 3;
            std::vector<double> mapped;
            for (double x : m) mapped.push_back(s * x + t);
            const double lo = *std::min_element(m.begin(), m.end());
            const double hi = *std::max_element(m.begin(), m.end());
            if (std::fabs(base - lo) < 1e-6 || std::fabs(base - hi) < 1e-6) continue;
            CHECK(hull_indicator(m, base) == hull_indicator(mapped, s * base + t));
        }
    }

    TEST_CASE("constant cells: half the claims outside") {
        const auto d = make_topic("T", {"man", "woman"},
                                  {{"A", Cells{{"man", {2, 2}}, {"woman", {4, 4}}, {"base", {3, 3}}}},
                                   {"B", Cells{{"man", {2, 2}}, {"woman", {4, 4}}, {"base", {5, 5}}}}});
        const auto r = weak_topic_test(d, weak_cfg(200, 1));
        CHECK(r.p_hat_observed == 0.5);
        REQUIRE(r.thresholds.size() == 4);
        for (const auto& t : r.thresholds) {
            CHECK(t.p_value == 0.0);
            CHECK(t.reject);
        }
        CHECK(r.feasible_thresholds().empty());
    }

    TEST_CASE("constant cells: every claim inside") {
        const auto d = make_topic("T", {"man", "woman"},
                                  {{"A", Cells{{"man", {2, 2}}, {"woman", {4, 4}}, {"base", {3, 3}}}},
                                   {"B", Cells{{"man", {2, 2}}, {"woman", {4, 4}}, {"base", {3, 3}}}}});
        const auto r = weak_topic_test(d, weak_cfg(200, 1));
        for (const auto& t : r.thresholds) {
            CHECK(t.p_value == 1.0);
            CHECK_FALSE(t.reject);
        }
        CHECK(r.feasible_thresholds().size() == 4);
    }

    TEST_CASE("bootstrap matches an independent re-implementation") {
        const auto d = testing::random_topic(77, 10);
        constexpr std::size_t B = 400;
        const auto r = weak_topic_test(d, weak_cfg(B, 1234));
        const auto counts = oracle::weak_counts(d, 1234, B);
        for (const auto& t : r.thresholds) {
            std::size_t hits = 0;
            for (auto c : counts) hits += c >= t.p0 * 10 - 1e-9 ? 1 : 0;
            CHECK(t.p_value == static_cast<double>(hits) / B);
        }
    }

    TEST_CASE("serial and parallel kernels agree bitwise") {
        const auto d = testing::random_topic(78, 15);
        const auto packed = kernels::pack_topic(d, 99, "qc1-weak");
        const auto serial = kernels::weak_bootstrap_serial(packed, 500, 1e-9);
        for (int jobs : {1, 2, 3, 8}) CHECK(kernels::weak_bootstrap_parallel(packed, 500, 1e-9, jobs) == serial);
    }

    TEST_CASE("report is identical across job counts") {
        const auto d = testing::random_topic(79, 12);
        const auto a = to_json(weak_topic_test(d, weak_cfg(300, 5, 1)));
        CHECK(a == to_json(weak_topic_test(d, weak_cfg(300, 5, 4))));
    }

    TEST_CASE("group order does not change the report") {
        auto d = testing::random_topic(80, 12);
        const auto a = weak_topic_test(d, weak_cfg(300, 5));
        std::reverse(d.groups.begin(), d.groups.end());
        const auto b = weak_topic_test(d, weak_cfg(300, 5));
        REQUIRE(a.thresholds.size() == b.thresholds.size());
        for (std::size_t i = 0; i < a.thresholds.size(); ++i) CHECK(a.thresholds[i].p_value == b.thresholds[i].p_value);
        CHECK(a.p_hat_observed == b.p_hat_observed);
        for (std::size_t c = 0; c < a.claims.size(); ++c) CHECK(a.claims[c].inside == b.claims[c].inside);
    }

    TEST_CASE("p-values are non-increasing in p0") {
        for (std::uint64_t s = 0; s < 20; ++s) {
            const auto d = testing::random_topic(500 + s, 8, 2, 6);
            const auto r = weak_topic_test(d, weak_cfg(200, s));
            for (std::size_t i = 1; i < r.thresholds.size(); ++i) {
                CHECK(r.thresholds[i].p_value <= r.thresholds[i - 1].p_value);
            }
        }
    }

    TEST_CASE("invalid configuration") {
        const auto d = testing::random_topic(81, 3);
        auto cfg = weak_cfg(10, 1);
        cfg.alpha = 0;
        CHECK_THROWS_AS(weak_topic_test(d, cfg), ValidationError);
        cfg = weak_cfg(0, 1);
        CHECK_THROWS_AS(weak_topic_test(d, cfg), ValidationError);
        auto one = d;
        one.groups = {"man"};
        CHECK_THROWS_AS(weak_topic_test(one, weak_cfg(10, 1)), ValidationError);
    }
}

TEST_SUITE("qc1_strong") {
    TEST_CASE("synthetic base sample allocation") {
        const std::vector<int> twos{2, 2, 2};
        const std::vector<int> fours{4, 4};
        const std::vector<std::span<const int>> cells{twos, fours};
        RngStream rng(1);
        auto s = synthetic_base_sample(cells, std::vector<double>{1, 0}, 5, rng);
        CHECK(s == std::vector<int>{2, 2, 2, 2, 2});
        s = synthetic_base_sample(cells, std::vector<double>{0.5, 0.5}, 4, rng);
        CHECK(s == std::vector<int>{2, 2, 4, 4});
        CHECK(mean(std::span<const int>(s)) == 3.0);
    }

    TEST_CASE("deterministic claim at its own mixture") {
        const auto d = make_topic("T", {"man", "woman"},
                                  {{"A", Cells{{"man", {2, 2, 2}}, {"woman", {4, 4, 4}}, {"base", {3, 3, 3, 3}}}}});
        auto cfg = strong_cfg(100, 3);
        cfg.grid = {{0.5, 0.5}, {0.0, 1.0}};
        const auto r = strong_topic_test(d, cfg);
        CHECK(r.claims[0].q_hat == std::vector<double>{0.5, 0.5});
        CHECK(r.grid[0].observed_l == 0.0);
        CHECK(r.grid[0].p_value == 1.0);
        CHECK_FALSE(r.grid[0].reject);
        // Vector L1: |0.5 - 0| + |0.5 - 1|.
        CHECK(r.grid[1].observed_l == 1.0);
        CHECK(r.grid[1].p_value == 0.0);
        CHECK(r.grid[1].reject);
        CHECK(r.feasible() == std::vector<std::vector<double>>{{0.5, 0.5}});
    }

    TEST_CASE("default grid has 21 points") {
        const auto d = testing::random_topic(90, 4);
        const auto r = strong_topic_test(d, strong_cfg(50, 1));
        CHECK(r.grid.size() == 21);
        for (const auto& g : r.grid) {
            CHECK(g.observed_l >= 0.0);
            CHECK(g.p_value >= 0.0);
            CHECK(g.p_value <= 1.0);
        }
    }

    TEST_CASE("reported q_hat matches the two-group closed form") {
        const auto d = testing::random_topic(91, 20);
        const auto r = strong_topic_test(d, strong_cfg(10, 1));
        for (const auto& c : r.claims) {
            if (std::fabs(c.group_means[0] - c.group_means[1]) < 1e-9) continue;
            const double q = *implied_mixture_weight(c.base_mean, c.group_means[0], c.group_means[1]).q;
            CHECK(std::fabs(c.q_hat[0] - std::clamp(q, 0.0, 1.0)) < 1e-12);
        }
    }

    TEST_CASE("serial and parallel kernels agree bitwise") {
        const auto d = testing::random_topic(92, 10);
        const auto packed = kernels::pack_topic(d, 7, "qc1-strong");
        const auto grid = two_group_grid(0.1);
        const auto serial = kernels::strong_bootstrap_serial(packed, grid, 200, 1e-9);
        for (int jobs : {2, 5}) CHECK(kernels::strong_bootstrap_parallel(packed, grid, 200, 1e-9, jobs) == serial);
    }

    TEST_CASE("report is identical across job counts") {
        const auto d = testing::random_topic(93, 10);
        CHECK(to_json(strong_topic_test(d, strong_cfg(200, 8, 1))) ==
              to_json(strong_topic_test(d, strong_cfg(200, 8, 3))));
    }

    TEST_CASE("three groups on the simplex lattice") {
        std::mt19937_64 gen(4);
        std::vector<std::pair<std::string, Cells>> rows;
        for (int c = 0; c < 6; ++c) {
            Cells cells;
            for (const char* g : {"a", "b", "e", "base"}) {
                std::vector<int> v(6);
                for (auto& x : v) x = 1 + static_cast<int>(gen() % 6);
                cells[g] = v;
            }
            rows.emplace_back("k" + std::to_string(c), cells);
        }
        const auto d = make_topic("T", {"a", "b", "e"}, rows);
        auto cfg = strong_cfg(50, 2);
        cfg.grid_step = 0.25;
        const auto r = strong_topic_test(d, cfg);
        CHECK(r.grid.size() == 15);
        for (const auto& c : r.claims) CHECK(on_simplex(c.q_hat));
    }

    TEST_CASE("grid validation") {
        const auto d = testing::random_topic(94, 3);
        auto cfg = strong_cfg(10, 1);
        cfg.grid = {{0.6, 0.6}};
        CHECK_THROWS_AS(strong_topic_test(d, cfg), ValidationError);
        cfg.grid = {{1.0}};
        CHECK_THROWS_AS(strong_topic_test(d, cfg), ValidationError);
    }
}
