#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace dysonlab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// True iff x_1 > x_2 > ... > x_N. Ties are a violation; no tolerance is applied.
template <typename Derived>
bool check_weyl(const Eigen::DenseBase<Derived>& x) {
  if (x.size() == 0) throw std::invalid_argument("check_weyl: empty vector");
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
    if (!(x(i) > x(i + 1))) return false;
  }
  return true;
}

/// Smallest adjacent gap x_i - x_{i+1}; +inf for a single coordinate.
template <typename Derived>
typename Derived::Scalar min_gap(const Eigen::DenseBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  Scalar g = std::numeric_limits<Scalar>::infinity();
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i) g = std::min<Scalar>(g, x(i) - x(i + 1));
  return g;
}

/// Strictly increasing sampling times on [a, b], endpoints included.
class TimeGrid {
 public:
  TimeGrid() = default;

  static TimeGrid uniform(double a, double b, int n_steps);
  static TimeGrid from_times(std::vector<double> times);

  double a() const { return times_.front(); }
  double b() const { return times_.back(); }
  int size() const { return static_cast<int>(times_.size()); }
  double operator[](int i) const { return times_[static_cast<std::size_t>(i)]; }
  const std::vector<double>& times() const { return times_; }
  double max_spacing() const;

  /// Index of a grid point equal to t up to a relative 1e-9 of the grid span.
  std::optional<int> index_of(double t) const;
  int require_index(double t) const;

  /// Grid points lying in [lo, hi] (both must be grid points).
  TimeGrid restrict(double lo, double hi) const;

  bool operator==(const TimeGrid&) const = default;

 private:
  explicit TimeGrid(std::vector<double> t) : times_(std::move(t)) {}
  std::vector<double> times_{0.0, 1.0};
};

/// Inclusive layer index range [first, last].
struct LayerRange {
  int first = 1;
  int last = 1;
  int size() const { return last - first + 1; }
  bool operator==(const LayerRange&) const = default;
};

/// Values of N indexed curves on a TimeGrid; rows are layers, columns are times.
class PathBundle {
 public:
  PathBundle() = default;
  PathBundle(TimeGrid grid, LayerRange layers, Matrix values, bool ordered = false);

  const TimeGrid& grid() const { return grid_; }
  const LayerRange& layers() const { return layers_; }
  const Matrix& values() const { return values_; }
  bool ordered() const { return ordered_; }
  int n_layers() const { return static_cast<int>(values_.rows()); }
  int n_times() const { return static_cast<int>(values_.cols()); }

  /// Layer row by 0-based offset.
  auto row(int offset) const { return values_.row(offset); }
  auto column(int time_index) const { return values_.col(time_index); }

  /// Restriction to the sub-grid covering [lo, hi].
  PathBundle restrict(double lo, double hi) const;

 private:
  TimeGrid grid_;
  LayerRange layers_;
  Matrix values_;
  bool ordered_ = false;
};

/// (beta, N, x*, horizon) plus integrator controls for the Dyson SDE.
struct DysonParams {
  double beta = 2.0;
  int n_particles = 1;
  Vector x_start = Vector::Zero(1);
  double horizon = 1.0;
  double dt_base = 1e-3;
  double dt_min = 1e-12;
  double gap_safety = 0.1;
  bool implicit_fallback = true;

  static DysonParams at_origin(double beta, int n, double horizon);
  void validate() const;
};

/// Monte Carlo point estimate with its standard error.
struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t n_replicas = 0;
  std::uint64_t seed = 0;

  static McEstimate from_samples(std::span<const double> samples, std::uint64_t seed = 0);
  static McEstimate from_samples(const Vector& samples, std::uint64_t seed = 0);

  double relative_error() const { return mean == 0.0 ? 0.0 : std_error / std::abs(mean); }
};

/// Dense (rows x cols) table of estimates, row-major.
class EstimateTable {
 public:
  EstimateTable() = default;
  EstimateTable(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows * cols)) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  McEstimate& operator()(int r, int c) { return data_[static_cast<std::size_t>(r * cols_ + c)]; }
  const McEstimate& operator()(int r, int c) const { return data_[static_cast<std::size_t>(r * cols_ + c)]; }
  Matrix means() const;
  Matrix std_errors() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<McEstimate> data_;
};

}  // namespace dysonlab
