#include "dysonlab/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dysonlab {

TimeGrid TimeGrid::uniform(double a, double b, int n_steps) {
  if (!(a < b)) throw std::invalid_argument("TimeGrid::uniform: require a < b");
  if (n_steps < 1) throw std::invalid_argument("TimeGrid::uniform: require n_steps >= 1");
  std::vector<double> t(static_cast<std::size_t>(n_steps) + 1);
  for (int i = 0; i <= n_steps; ++i) t[static_cast<std::size_t>(i)] = a + (b - a) * i / n_steps;
  t.back() = b;
  return TimeGrid(std::move(t));
}

TimeGrid TimeGrid::from_times(std::vector<double> times) {
  if (times.size() < 2) throw std::invalid_argument("TimeGrid: need at least two times");
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    if (!(times[i] < times[i + 1])) throw std::invalid_argument("TimeGrid: times must be strictly increasing");
  }
  return TimeGrid(std::move(times));
}

double TimeGrid::max_spacing() const {
  double h = 0.0;
  for (std::size_t i = 0; i + 1 < times_.size(); ++i) h = std::max(h, times_[i + 1] - times_[i]);
  return h;
}

std::optional<int> TimeGrid::index_of(double t) const {
  const double tol = 1e-9 * (b() - a());
  auto it = std::lower_bound(times_.begin(), times_.end(), t - tol);
  if (it != times_.end() && std::abs(*it - t) <= tol) return static_cast<int>(it - times_.begin());
  return std::nullopt;
}

int TimeGrid::require_index(double t) const {
  auto i = index_of(t);
  if (!i) throw std::invalid_argument("time " + std::to_string(t) + " is not a grid point");
  return *i;
}

TimeGrid TimeGrid::restrict(double lo, double hi) const {
  const int i0 = require_index(lo);
  const int i1 = require_index(hi);
  if (i1 <= i0) throw std::invalid_argument("TimeGrid::restrict: empty window");
  return TimeGrid(std::vector<double>(times_.begin() + i0, times_.begin() + i1 + 1));
}

PathBundle::PathBundle(TimeGrid grid, LayerRange layers, Matrix values, bool ordered)
    : grid_(std::move(grid)), layers_(layers), values_(std::move(values)), ordered_(ordered) {
  if (layers_.size() < 1) throw std::invalid_argument("PathBundle: empty layer range");
  if (values_.rows() != layers_.size() || values_.cols() != grid_.size()) {
    throw std::invalid_argument("PathBundle: values shape does not match layers x grid");
  }
  if (ordered_) {
    for (int c = 0; c < values_.cols(); ++c) {
      if (!check_weyl(values_.col(c))) throw std::invalid_argument("PathBundle: ordered flag set but column not in Weyl chamber");
    }
  }
}

PathBundle PathBundle::restrict(double lo, double hi) const {
  const int i0 = grid_.require_index(lo);
  const int i1 = grid_.require_index(hi);
  TimeGrid sub = grid_.restrict(lo, hi);
  return PathBundle(std::move(sub), layers_, values_.middleCols(i0, i1 - i0 + 1), ordered_);
}

DysonParams DysonParams::at_origin(double beta, int n, double horizon) {
  DysonParams p;
  p.beta = beta;
  p.n_particles = n;
  p.x_start = Vector::Zero(n);
  p.horizon = horizon;
  return p;
}

void DysonParams::validate() const {
  if (!(beta >= 2.0)) throw std::invalid_argument("DysonParams: beta must be >= 2");
  if (n_particles < 1) throw std::invalid_argument("DysonParams: n_particles must be positive");
  if (x_start.size() != n_particles) throw std::invalid_argument("DysonParams: x_start has wrong dimension");
  for (int i = 0; i + 1 < n_particles; ++i) {
    if (x_start(i) < x_start(i + 1)) throw std::invalid_argument("DysonParams: x_start must be weakly decreasing");
  }
  if (!(horizon > 0.0)) throw std::invalid_argument("DysonParams: horizon must be positive");
  if (!(dt_base > 0.0) || !(dt_min > 0.0)) throw std::invalid_argument("DysonParams: step sizes must be positive");
  if (dt_min > dt_base) throw std::invalid_argument("DysonParams: dt_min must not exceed dt_base");
  if (!(gap_safety > 0.0 && gap_safety < 1.0)) throw std::invalid_argument("DysonParams: gap_safety must lie in (0,1)");
}

McEstimate McEstimate::from_samples(std::span<const double> samples, std::uint64_t seed) {
  McEstimate e;
  e.seed = seed;
  e.n_replicas = static_cast<std::int64_t>(samples.size());
  if (samples.empty()) return e;
  double sum = 0.0;
  for (double s : samples) sum += s;
  e.mean = sum / static_cast<double>(samples.size());
  if (samples.size() > 1) {
    double ss = 0.0;
    for (double s : samples) ss += (s - e.mean) * (s - e.mean);
    const double var = ss / static_cast<double>(samples.size() - 1);
    e.std_error = std::sqrt(var / static_cast<double>(samples.size()));
  }
  return e;
}

McEstimate McEstimate::from_samples(const Vector& samples, std::uint64_t seed) {
  return from_samples(std::span<const double>(samples.data(), static_cast<std::size_t>(samples.size())), seed);
}

Matrix EstimateTable::means() const {
  Matrix m(rows_, cols_);
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c) m(r, c) = (*this)(r, c).mean;
  return m;
}

Matrix EstimateTable::std_errors() const {
  Matrix m(rows_, cols_);
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c) m(r, c) = (*this)(r, c).std_error;
  return m;
}

}  // namespace dysonlab
