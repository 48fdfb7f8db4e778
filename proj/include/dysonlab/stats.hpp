#pragma once

#include <span>
#include <vector>

#include "dysonlab/core.hpp"

namespace dysonlab {

/// N_p = E|Z|^p for a standard normal Z.
double normal_abs_moment(double p);

/// Two-sample Kolmogorov-Smirnov statistic sup_x |F_1(x) - F_2(x)|.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Kish effective sample size (sum w)^2 / sum w^2 from log-weights.
double effective_sample_size(std::span<const double> log_weights);

/// Self-normalized importance-sampling estimate of E[g] with delta-method SE.
McEstimate self_normalized_mean(std::span<const double> log_weights, std::span<const double> values,
                                std::uint64_t seed = 0);

/// Normalized weights exp(lw - max) / sum, computed stably.
std::vector<double> normalized_weights(std::span<const double> log_weights);

double log_sum_exp(std::span<const double> xs);

inline double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

}  // namespace dysonlab
