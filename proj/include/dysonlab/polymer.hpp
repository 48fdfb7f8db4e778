#pragma once

#include <utility>
#include <vector>

#include "dysonlab/core.hpp"
#include "dysonlab/dyson.hpp"
#include "dysonlab/rng.hpp"
#include "dysonlab/scaling.hpp"

namespace dysonlab {

/// Semi-discrete polymer through N Brownian levels with drifts lambda on [0, t_max].
struct PolymerParams {
  int n_levels = 2;
  Vector drift = Vector::Zero(2);  // weakly decreasing
  double t_max = 1.0;
  int m_steps = 100;
  long n_replicas = 1000;

  static PolymerParams driftless(int n, double t_max, int m_steps, long n_replicas);
  /// Rejects m_steps < 50 N as too coarse for the top-line statistics.
  void validate() const;
  TimeGrid grid() const { return TimeGrid::uniform(0.0, t_max, m_steps); }
};

/// log of the partition function over up-right paths through all levels,
/// Z(t) = int_{0 < s_1 < ... < s_{N-1} < t} exp(B_1(s_1) + (B_2(s_2) - B_2(s_1)) + ...
///                                               + (B_N(t) - B_N(s_{N-1}))) ds,
/// at every grid time. `levels` holds B_i(t_k) (N x (m+1)) on a uniform grid of spacing dt.
///
/// The jump times are integrated by nested trapezoid rules, evaluated level by
/// level in log space:
///   Z_i(k) = e^{dB_i} Z_i(k-1) + (dt/2) (e^{dB_i} Z_{i-1}(k-1) + Z_{i-1}(k)),
/// with Z_1 = exp(B_1). For N >= 2 the value at t = 0 is -inf.
Vector polymer_log_partition(const Matrix& levels, double dt);

/// Direct trapezoid quadrature over the single jump time for two levels:
/// log sum_j w_j exp(B_1(s_j) + B_2(t_k) - B_2(s_j)) over s_j <= t_k.
Vector two_level_log_quadrature(const Matrix& levels, double dt);

/// Brownian levels with drift, N x (m+1), started at 0.
Matrix sample_polymer_levels(const PolymerParams& params, RngStream& rng);

/// One top line t -> log Z(t) on params.grid().
PathBundle polymer_free_energy(const PolymerParams& params, RngStream& rng);

/// Replica r uses rng.substream(r); output does not depend on `workers`.
PathEnsemble polymer_ensemble(const PolymerParams& params, long n_replicas, const RngStream& rng, int workers = 1);

/// Top lines restricted to `window`, centered by an independent mean batch
/// (substream "centering"), then passed through build_modulus_report.
/// Pairs default to default_pairs(b - a) shifted to start at a.
ModulusReport oy_modulus_suite(const PolymerParams& params, double alpha, std::pair<double, double> window,
                               const RngStream& rng, int workers = 1, const std::vector<double>& p_values = {2.0},
                               std::vector<TimePair> pairs = {});

}  // namespace dysonlab
