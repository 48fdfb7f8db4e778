#pragma once

#include <limits>
#include <stdexcept>
#include <vector>

#include "dysonlab/core.hpp"
#include "dysonlab/rng.hpp"

namespace dysonlab {

struct IntegratorReport {
  long n_substeps_total = 0;
  double min_gap_seen = std::numeric_limits<double>::infinity();
  long dt_rejections = 0;
  long implicit_steps = 0;  // drift-implicit substeps taken at the dt_min floor

  void merge(const IntegratorReport& other);
};

/// Raised when adaptive substepping cannot keep the particles ordered at dt >= dt_min.
class IntegratorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DbmSample {
  PathBundle path;
  IntegratorReport report;
};

/// Replica collection on a shared grid; values[r] is layers x times.
struct PathEnsemble {
  TimeGrid grid;
  LayerRange layers;
  std::vector<Matrix> values;

  long size() const { return static_cast<long>(values.size()); }
  int n_layers() const { return layers.size(); }
  PathBundle at(long r) const { return PathBundle(grid, layers, values[static_cast<std::size_t>(r)]); }
  PathEnsemble restrict(double lo, double hi) const;
};

struct DbmEnsemble {
  PathEnsemble paths;
  IntegratorReport report;
};

/// (beta/2) sum_{i != j} 1/(x_j - x_i) for each coordinate j.
Vector dbm_drift(double beta, const Vector& x);

/// Expected growth rate of sum_j X_j^2: N + beta N (N-1) / 2.
double second_moment_rate(double beta, int n);

/// One path of beta-Dyson Brownian motion sampled on `grid` (grid.a() must be 0).
///
/// Adaptive Euler-Maruyama: the local step is clamp(gap_safety g^2 / beta,
/// dt_min, dt_base) with g the smallest gap. A substep that would break the
/// ordering is bisected, the midpoint of its Brownian increment drawn from the
/// bridge, so the driving path is refined rather than resampled. Tied starting
/// coordinates are spread by 1e-3 sqrt(dt_min), and the first substep of
/// length min(dt_base, grid[1]) is then a drift-implicit Euler step, which
/// always lands strictly inside the chamber. The recorded t = 0 column holds
/// the spread configuration. When bisection reaches dt_min the substep is
/// taken drift-implicitly if params.implicit_fallback is set; otherwise
/// IntegratorError is thrown.
DbmSample simulate_dbm(const DysonParams& params, const TimeGrid& grid, RngStream& rng);

/// Replica r uses rng.substream(r); output does not depend on `workers`.
DbmEnsemble simulate_ensemble(const DysonParams& params, const TimeGrid& grid, long n_replicas,
                              const RngStream& rng, int workers = 1);

/// Ordered eigenvalues of a Hermitian matrix with diagonal variance t and
/// off-diagonal real/imaginary variance t/2 (beta = 2 law at time t from 0).
Vector sample_hermitian_oracle(int n, double t, RngStream& rng);

/// Tridiagonal beta-ensemble sample scaled by sqrt(t) * tridiagonal_scale().
Vector sample_tridiagonal_oracle(double beta, int n, double t, RngStream& rng);

/// Positive constant c such that c^2 E[tr H^2] = N + beta N (N-1)/2 for the
/// tridiagonal model H (diagonal N(0,1), off-diagonals chi_{beta k}/sqrt 2).
double tridiagonal_scale(double beta, int n);

/// Exact time-t marginal of beta-DBM started at the origin.
/// beta == 2 uses the Hermitian construction, other beta the tridiagonal one.
Vector sample_fixed_time_oracle(double beta, int n, double t, RngStream& rng);

/// Per (layer, time) Monte Carlo means of X_j(t).
EstimateTable estimate_mean_curves(const DysonParams& params, const TimeGrid& grid, long n_replicas,
                                   const RngStream& rng, int workers = 1);

/// Mean curves of an existing ensemble (layers x times).
EstimateTable ensemble_means(const PathEnsemble& ensemble, std::uint64_t seed = 0);

}  // namespace dysonlab
