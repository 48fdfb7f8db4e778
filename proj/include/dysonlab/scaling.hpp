#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dysonlab/core.hpp"
#include "dysonlab/dyson.hpp"

namespace dysonlab {

/// Edge-scaling window: scaled times t in [t_lo, t_hi] on n_steps uniform panels.
struct EdgeScalingParams {
  double beta = 2.0;
  int n_particles = 1;
  double t_lo = 0.0;
  double t_hi = 1.0;
  int n_steps = 10;

  void validate() const;
};

/// Unscaled time (2/beta)(1 + t N^{-1/3}) feeding scaled time t.
double edge_preimage_time(double beta, int n, double t);

/// N^{1/6} x - 2 N^{2/3} - t N^{1/3} + t^2/4.
double edge_scale_value(int n, double t, double x);

TimeGrid edge_scaled_grid(const EdgeScalingParams& p);
/// {0} followed by the pre-images of the scaled grid, for simulate_dbm.
TimeGrid edge_preimage_grid(const EdgeScalingParams& p);

/// Applies the edge scaling to every layer. The input grid must contain each pre-image time.
PathBundle edge_scale(const PathBundle& path, const EdgeScalingParams& p);
PathEnsemble edge_scale(const PathEnsemble& paths, const EdgeScalingParams& p);

/// Subtracts per-(layer, time) means; `means` is layers x times.
PathEnsemble center_paths(const PathEnsemble& paths, const Matrix& means);
PathBundle center_path(const PathBundle& path, const Matrix& means);

struct TimePair {
  double s = 0.0;
  double t = 0.0;
};

/// E|z_j(t) - z_j(s)|^p per layer (rows) and pair (columns).
EstimateTable increment_moment(const PathEnsemble& centered, double p, const std::vector<TimePair>& pairs);

/// sup over grid pairs in [a,b] of |z(t)-z(s)| / sqrt(|t-s| log(2(b-a)/|t-s|)), per layer.
Vector sup_modulus_statistic(const PathBundle& path, double a, double b);
/// sup over grid pairs in [a,b] of |z(t)-z(s)| / |t-s|^alpha, per layer.
Vector holder_norm(const PathBundle& path, double alpha, double a, double b);

/// Replica x layer samples of the statistics above.
Matrix sup_modulus_samples(const PathEnsemble& centered, double a, double b);
Matrix holder_norm_samples(const PathEnsemble& centered, double alpha, double a, double b);

struct TailPoint {
  double k = 0.0;
  double probability = 0.0;
  double std_error = 0.0;
};

/// Empirical exceedance curve with a least-squares fit log p = log C1 - C2 K^2
/// over thresholds whose probability is at least 10 / n.
struct TailCurve {
  std::vector<TailPoint> points;
  double log_c1 = 0.0;
  double c2 = 0.0;
  int n_fit_points = 0;

  double c1() const { return std::exp(log_c1); }
  double envelope(double k) const { return std::exp(log_c1 - c2 * k * k); }
};

TailCurve tail_curve(const std::vector<double>& samples, const std::vector<double>& k_grid);

struct MomentEntry {
  int layer = 1;
  TimePair pair;
  double p = 2.0;
  McEstimate moment;
  double bound = 0.0;  // N_p |t-s|^{p/2}

  /// moment <= bound (1 + k_sigma * relative SE)
  bool within_bound(double k_sigma = 3.0) const;
};

/// Increment moments, sup statistics and Holder norms of one centered ensemble.
struct ModulusReport {
  double a = 0.0;
  double b = 1.0;
  double alpha = 0.25;
  std::vector<MomentEntry> moments;
  Matrix sup_samples;     // replica x layer
  Matrix holder_samples;  // replica x layer
  int first_layer = 1;

  /// Mean of ||z_j||^power over replicas with its SE.
  McEstimate holder_moment(int layer_offset, double power) const;
  std::string to_csv() const;
};

ModulusReport build_modulus_report(const PathEnsemble& centered, const std::vector<double>& p_values,
                                   const std::vector<TimePair>& pairs, double alpha, double a, double b);

/// Default 20 increment pairs on a grid of step 0.05 in [0, 1] (scaled by `length`).
std::vector<TimePair> default_pairs(double length = 1.0);

}  // namespace dysonlab
