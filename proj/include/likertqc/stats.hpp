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

#include <cstddef>
#include <cstdint>
#include <span>

#include "likertqc/rng.hpp"

namespace likertqc {

struct BootstrapConfig {
    std::size_t replicates = 10000;
    std::uint64_t master_seed = 0;
    int jobs = 1;  // worker threads; never changes results
};

double mean(std::span<const int> labels);
double mean(std::span<const double> values);

/// Sample standard deviation (n - 1 denominator); 0 when fewer than two values.
double sample_sd(std::span<const int> labels);

/// Mean of |labels| draws with replacement. Throws on empty input.
double resample_mean(std::span<const int> labels, RngStream& rng);

/// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
double incomplete_beta(double a, double b, double x);

/// Student-t CDF for real (possibly fractional) degrees of freedom.
double student_t_cdf(double t, double nu);

/// 2 * (1 - F_nu(|t|)). Throws when nu <= 0 or t is not finite.
double student_t_two_sided_p(double t, double nu);

struct WeightedSummary {
    double mean = 0.0;
    double se = 0.0;
    double dof = 0.0;  // sum(w) - 1
};

/// Weighted mean, its standard error
///   SE = sqrt( sum w (g - gbar)^2 / ((sum w - 1) sum w) )
/// and dof = sum w - 1. Weights are used as given, not normalised.
WeightedSummary weighted_mean_se(std::span<const double> values, std::span<const double> weights);

}  // namespace likertqc
