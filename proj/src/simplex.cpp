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

#include "likertqc/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "likertqc/error.hpp"

namespace likertqc {

double mixture_mean(std::span<const double> q, std::span<const double> group_means) {
    double s = 0.0;
    for (std::size_t g = 0; g < q.size(); ++g) s += q[g] * group_means[g];
    return s;
}

double squared_residual(std::span<const double> q, std::span<const double> group_means,
                        double mu_base) {
    const double d = mixture_mean(q, group_means) - mu_base;
    return d * d;
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
    return s;
}

void estimate_q_star_into(std::span<const double> mu, double mu_base, std::span<const double> q0,
                          std::span<double> out, std::span<std::size_t> order, double eps) {
    const std::size_t k = mu.size();
    std::copy(q0.begin(), q0.end(), out.begin());

    const auto [lo_it, hi_it] = std::minmax_element(mu.begin(), mu.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    if (hi - lo <= eps) return;

    const double target = std::clamp(mu_base, lo, hi);
    double gap = target - mixture_mean(q0, mu);
    if (gap == 0.0) return;

    const bool raise = gap > 0.0;
    // First group (by index) attaining the extreme mean receives the mass.
    const std::size_t sink = static_cast<std::size_t>((raise ? hi_it : lo_it) - mu.begin());
    const double sink_mean = mu[sink];

    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (mu[a] != mu[b]) return raise ? mu[a] < mu[b] : mu[a] > mu[b];
        return a < b;
    });

    double remaining = std::fabs(gap);
    for (std::size_t i = 0; i < k && remaining > 0.0; ++i) {
        const std::size_t s = order[i];
        if (mu[s] == sink_mean) break;
        const double rate = std::fabs(sink_mean - mu[s]);
        const double capacity = out[s] * rate;
        if (capacity >= remaining) {
            const double moved = remaining / rate;
            out[s] -= moved;
            out[sink] += moved;
            remaining = 0.0;
        } else {
            out[sink] += out[s];
            out[s] = 0.0;
            remaining -= capacity;
        }
    }

    // Base outside the hull: every non-extreme group must be empty.
    if (mu_base >= hi || mu_base <= lo) {
        for (std::size_t g = 0; g < k; ++g) {
            if (mu[g] != sink_mean && out[g] != 0.0) {
                out[sink] += out[g];
                out[g] = 0.0;
            }
        }
    }
    for (double& v : out) {
        if (v < 0.0) v = 0.0;
    }
}

std::vector<double> estimate_q_star(std::span<const double> group_means, double mu_base,
                                    std::span<const double> q0, double eps) {
    if (group_means.size() < 2) throw ValidationError("estimate_q_star: need at least two groups");
    if (q0.size() != group_means.size()) throw ValidationError("estimate_q_star: q0 has wrong length");
    std::vector<double> out(group_means.size());
    std::vector<std::size_t> order(group_means.size());
    estimate_q_star_into(group_means, mu_base, q0, out, order, eps);
    return out;
}

bool on_simplex(std::span<const double> q, double tol) {
    double s = 0.0;
    for (double v : q) {
        if (v < -tol) return false;
        s += v;
    }
    return std::fabs(s - 1.0) <= tol;
}

std::vector<std::size_t> allocate_draws(std::span<const double> q0, std::size_t n) {
    const std::size_t k = q0.size();
    std::vector<std::size_t> counts(k, 0);
    std::vector<double> frac(k, 0.0);
    std::size_t assigned = 0;
    for (std::size_t g = 0; g < k; ++g) {
        const double exact = std::max(0.0, q0[g]) * static_cast<double>(n);
        // 1e-9 slack so 0.35 * 20 lands on 7 despite binary rounding.
        const double whole = std::floor(exact + 1e-9);
        counts[g] = static_cast<std::size_t>(whole);
        frac[g] = std::max(0.0, exact - whole);
        assigned += counts[g];
    }
    if (assigned > n) throw ValidationError("allocate_draws: q0 sums above 1");
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return frac[a] > frac[b] + 1e-9;
    });
    for (std::size_t i = 0; assigned < n; i = (i + 1) % k) {
        ++counts[order[i]];
        ++assigned;
    }
    return counts;
}

std::vector<std::vector<double>> two_group_grid(double step) {
    if (!(step > 0.0 && step <= 1.0)) throw ValidationError("grid step must be in (0, 1]");
    const auto steps = static_cast<long>(std::llround(1.0 / step));
    if (std::fabs(static_cast<double>(steps) * step - 1.0) > 1e-9) {
        throw ValidationError("grid step must divide 1");
    }
    std::vector<std::vector<double>> grid;
    for (long i = 0; i <= steps; ++i) {
        const double q = static_cast<double>(i) / static_cast<double>(steps);
        grid.push_back({q, static_cast<double>(steps - i) / static_cast<double>(steps)});
    }
    return grid;
}

namespace {

void simplex_grid_rec(std::size_t dim, long remaining, long steps, std::vector<long>& current,
                      std::vector<std::vector<double>>& out) {
    if (current.size() + 1 == dim) {
        current.push_back(remaining);
        std::vector<double> point;
        for (long c : current) point.push_back(static_cast<double>(c) / static_cast<double>(steps));
        out.push_back(std::move(point));
        current.pop_back();
        return;
    }
    for (long c = remaining; c >= 0; --c) {
        current.push_back(c);
        simplex_grid_rec(dim, remaining - c, steps, current, out);
        current.pop_back();
    }
}

}  // namespace

std::vector<std::vector<double>> simplex_grid(std::size_t groups, double step) {
    if (groups < 2) throw ValidationError("simplex_grid: need at least two groups");
    if (groups == 2) {
        auto g = two_group_grid(step);
        return g;
    }
    if (!(step > 0.0 && step <= 1.0)) throw ValidationError("grid step must be in (0, 1]");
    const auto steps = static_cast<long>(std::llround(1.0 / step));
    if (std::fabs(static_cast<double>(steps) * step - 1.0) > 1e-9) {
        throw ValidationError("grid step must divide 1");
    }
    std::vector<std::vector<double>> out;
    std::vector<long> current;
    simplex_grid_rec(groups, steps, steps, current, out);
    return out;
}

}  // namespace likertqc
