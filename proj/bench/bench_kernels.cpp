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

// Serial reference vs OpenMP bootstrap kernels.
//
//   bench_kernels --benchmark_filter=Weak

#include <benchmark/benchmark.h>
#include <omp.h>

#include "likertqc/calibration.hpp"
#include "likertqc/kernels.hpp"
#include "likertqc/simplex.hpp"

using namespace likertqc;

namespace {

const kernels::PackedTopic& topic() {
    static const kernels::PackedTopic packed = [] {
        SyntheticSpec s;
        s.groups = {{"man", {0.05, 0.75, 0.05, 0.05, 0.05, 0.05}}, {"woman", {0.05, 0.05, 0.05, 0.75, 0.05, 0.05}}};
        s.true_mixture = {0.5, 0.5};
        s.claims = 160;
        s.n_per_cell = 30;
        s.seed = 1;
        return kernels::pack_topic(generate_synthetic_topic(s), 1, "bench");
    }();
    return packed;
}

constexpr std::size_t kWeakB = 2000;
constexpr std::size_t kStrongB = 200;

void WeakSerial(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(kernels::weak_bootstrap_serial(topic(), kWeakB, 1e-9));
    st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * kWeakB));
}

void WeakParallel(benchmark::State& st) {
    const int jobs = static_cast<int>(st.range(0));
    for (auto _ : st) benchmark::DoNotOptimize(kernels::weak_bootstrap_parallel(topic(), kWeakB, 1e-9, jobs));
    st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * kWeakB));
}

void StrongSerial(benchmark::State& st) {
    const auto grid = two_group_grid(0.05);
    for (auto _ : st) benchmark::DoNotOptimize(kernels::strong_bootstrap_serial(topic(), grid, kStrongB, 1e-12));
    st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * kStrongB * grid.size()));
}

void StrongParallel(benchmark::State& st) {
    const int jobs = static_cast<int>(st.range(0));
    const auto grid = two_group_grid(0.05);
    for (auto _ : st)
        benchmark::DoNotOptimize(kernels::strong_bootstrap_parallel(topic(), grid, kStrongB, 1e-12, jobs));
    st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * kStrongB * grid.size()));
}

void Jobs(benchmark::internal::Benchmark* b) {
    for (int j = 1; j <= omp_get_max_threads(); j *= 2) b->Arg(j);
}

}  // namespace

BENCHMARK(WeakSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(WeakParallel)->Apply(Jobs)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(StrongSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(StrongParallel)->Apply(Jobs)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
