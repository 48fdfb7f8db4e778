#include "dysonlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dysonlab {

double normal_abs_moment(double p) {
  if (!(p > -1.0)) throw std::invalid_argument("normal_abs_moment: p must exceed -1");
  return std::pow(2.0, 0.5 * p) * std::tgamma(0.5 * (p + 1.0)) / std::sqrt(std::numbers::pi);
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double log_sum_exp(std::span<const double> xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

std::vector<double> normalized_weights(std::span<const double> log_weights) {
  const double lse = log_sum_exp(log_weights);
  if (!std::isfinite(lse)) throw std::domain_error("normalized_weights: all weights vanish");
  std::vector<double> w(log_weights.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_weights[i] - lse);
  return w;
}

double effective_sample_size(std::span<const double> log_weights) {
  const auto w = normalized_weights(log_weights);
  double s2 = 0.0;
  for (double x : w) s2 += x * x;
  return 1.0 / s2;
}

McEstimate self_normalized_mean(std::span<const double> log_weights, std::span<const double> values,
                                std::uint64_t seed) {
  if (log_weights.size() != values.size()) throw std::invalid_argument("self_normalized_mean: size mismatch");
  const auto w = normalized_weights(log_weights);
  McEstimate e;
  e.seed = seed;
  e.n_replicas = static_cast<std::int64_t>(values.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) mean += w[i] * values[i];
  double var = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) var += w[i] * w[i] * (values[i] - mean) * (values[i] - mean);
  e.mean = mean;
  e.std_error = std::sqrt(var);
  return e;
}

}  // namespace dysonlab
