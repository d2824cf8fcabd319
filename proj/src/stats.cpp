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

#include "likertqc/stats.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "likertqc/error.hpp"

namespace likertqc {

RngStream derive_rng(std::uint64_t master_seed, std::span<const PathElement> path) {
    StreamKey key = root_key(master_seed);
    for (const auto& element : path) {
        key = std::visit([&](const auto& v) { return key.then(v); }, element);
    }
    return key.stream();
}

RngStream derive_rng(std::uint64_t master_seed, std::initializer_list<PathElement> path) {
    return derive_rng(master_seed, std::span<const PathElement>(path.begin(), path.size()));
}

double mean(std::span<const int> labels) {
    if (labels.empty()) return 0.0;
    return static_cast<double>(std::accumulate(labels.begin(), labels.end(), 0LL)) /
           static_cast<double>(labels.size());
}

double mean(std::span<const double> values) {
    if (values.empty()) return 0.0;
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double sample_sd(std::span<const int> labels) {
    if (labels.size() < 2) return 0.0;
    const double m = mean(labels);
    double ss = 0.0;
    for (int x : labels) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(labels.size() - 1));
}

double resample_mean(std::span<const int> labels, RngStream& rng) {
    if (labels.empty()) throw ValidationError("resample_mean: empty labels");
    const std::size_t n = labels.size();
    long long sum = 0;
    for (std::size_t i = 0; i < n; ++i) sum += labels[rng.below(n)];
    return static_cast<double>(sum) / static_cast<double>(n);
}

namespace {

// Continued fraction for I_x(a, b), modified Lentz. Converges quickly for
// x < (a + 1) / (a + b + 2).
double beta_continued_fraction(double a, double b, double x) {
    constexpr double kTiny = 1e-300;
    constexpr double kEps = 1e-16;
    constexpr int kMaxIter = 200000;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    throw Error("incomplete beta: continued fraction did not converge");
}

// I_x(a, b) with y = 1 - x supplied separately so callers can avoid cancellation.
double incomplete_beta_xy(double a, double b, double x, double y) {
    if (x <= 0.0) return 0.0;
    if (y <= 0.0) return 1.0;
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                             b * std::log(y);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, y) / b;
}

// P(|T| > |t|) for T ~ t_nu.
double two_sided_tail(double t, double nu) {
    if (std::isinf(t)) return 0.0;
    const double t2 = t * t;
    const double denom = nu + t2;
    return incomplete_beta_xy(0.5 * nu, 0.5, nu / denom, t2 / denom);
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw ValidationError("incomplete_beta: a and b must be positive");
    if (!(x >= 0.0 && x <= 1.0)) throw ValidationError("incomplete_beta: x outside [0, 1]");
    return incomplete_beta_xy(a, b, x, 1.0 - x);
}

double student_t_cdf(double t, double nu) {
    if (!(nu > 0.0)) throw ValidationError("student_t_cdf: degrees of freedom must be positive");
    if (std::isnan(t)) throw ValidationError("student_t_cdf: t is NaN");
    if (t == 0.0) return 0.5;
    const double half_tail = 0.5 * two_sided_tail(t, nu);
    return t > 0.0 ? 1.0 - half_tail : half_tail;
}

double student_t_two_sided_p(double t, double nu) {
    if (!(nu > 0.0)) throw ValidationError("student_t_two_sided_p: degrees of freedom must be positive");
    if (!std::isfinite(t)) throw ValidationError("student_t_two_sided_p: t must be finite");
    if (t == 0.0) return 1.0;
    return std::min(1.0, two_sided_tail(t, nu));
}

WeightedSummary weighted_mean_se(std::span<const double> values, std::span<const double> weights) {
    if (values.size() != weights.size()) throw ValidationError("weighted_mean_se: length mismatch");
    if (values.size() < 2) throw ValidationError("weighted_mean_se: need at least two values");
    double sw = 0.0;
    double swg = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(weights[i] > 0.0)) throw ValidationError("weighted_mean_se: weights must be positive");
        sw += weights[i];
        swg += weights[i] * values[i];
    }
    if (!(sw > 1.0)) throw ValidationError("weighted_mean_se: sum of weights must exceed 1");

    WeightedSummary out;
    out.mean = swg / sw;
    double ss = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = values[i] - out.mean;
        ss += weights[i] * d * d;
    }
    out.se = std::sqrt(ss / ((sw - 1.0) * sw));
    out.dof = sw - 1.0;
    return out;
}

}  // namespace likertqc
