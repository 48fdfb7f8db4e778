#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dysonlab/convex.hpp"
#include "dysonlab/core.hpp"
#include "dysonlab/girsanov.hpp"
#include "dysonlab/rng.hpp"

namespace dysonlab {

/// Unnormalized density exp(-V(x)) phi(x) evaluated on [-half_width, half_width].
struct TiltedGaussian1D {
  std::string name = "gaussian";
  std::function<double(double)> tilt;  // V; empty means the standard Gaussian
  double half_width = 12.0;
  int n_grid = 4097;

  static TiltedGaussian1D standard();
  /// V(x) = f(x e_1) for a catalog function on R^dim (dim 2 exposes pairwise terms as f(x, 0)).
  static TiltedGaussian1D from_convex(const ConvexFn& f, int dim = 1);

  double log_density(double x) const;
};

/// Tabulated map on the resolved interior of the source grid.
struct TabulatedMap {
  Vector x;
  Vector y;
};

/// Monotone rearrangement F_target^{-1} o F_source between two 1-D densities.
///
/// Cell masses come from 8-point Gauss-Legendre quadrature on the common grid;
/// quantiles below 1/2 are matched on lower cumulative sums and the rest on
/// upper sums, and each inverse is solved to machine precision inside its cell.
class MonotoneMap1D {
 public:
  MonotoneMap1D(const TiltedGaussian1D& source, const TiltedGaussian1D& target);

  double operator()(double x) const;
  /// Map at source nodes whose lower and upper tail masses both exceed tail_cut.
  TabulatedMap tabulate(double tail_cut = 1e-12) const;

  const Vector& grid() const { return nodes_; }

 private:
  struct Tables {
    Vector lower;  // mass of [x_0, x_k], normalized
    Vector upper;  // mass of [x_k, x_last], normalized
    double log_scale = 0.0;
    double total = 0.0;
  };

  Tables build(const TiltedGaussian1D& d) const;
  double partial_mass(const TiltedGaussian1D& d, const Tables& t, double lo, double hi) const;
  double invert(double q_lower, double q_upper) const;

  TiltedGaussian1D source_;
  TiltedGaussian1D target_;
  Vector nodes_;
  double h_ = 0.0;
  Tables src_;
  Tables tgt_;
};

/// brenier_1d: tabulated monotone map from source to target.
TabulatedMap brenier_1d(const TiltedGaussian1D& source, const TiltedGaussian1D& target, double tail_cut = 1e-12);

/// Largest adjacent finite-difference slope |dT/dx|.
double contraction_check(const TabulatedMap& map);

struct WeightedDraw {
  Vector w;
  double log_weight = 0.0;  // log dmu/dgamma up to a constant
};

/// Draws w from the Gaussian reference together with the tilt's log-weight.
using TiltSampler = std::function<WeightedDraw(RngStream&)>;

/// Gaussian N(mean, cov) tilted by exp(-V).
TiltSampler gaussian_tilt_sampler(Vector mean, const Matrix& cov, ScalarField neg_log_tilt);

/// Marginal at `times` (layer-major) of bridges weighted by exp(-H).
TiltSampler bridge_marginal_sampler(HamiltonianSpec spec, BridgeSpec bridge, std::vector<double> times);

struct TestFunction {
  std::string name;
  ScalarField g;
};

struct HargeRow {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double lhs_se = 0.0;
  double rhs_se = 0.0;
  bool convex = true;
  bool pass = false;

  double pooled_se() const { return std::sqrt(lhs_se * lhs_se + rhs_se * rhs_se); }
};

struct TransportCheckReport {
  double max_lipschitz_estimate = 0.0;
  std::vector<HargeRow> harge_table;
  double ess = 0.0;

  bool all_pass() const;
};

/// E_mu[g(w - mean_mu)] <= E_gamma[g(w - mean_gamma)] + k_sigma pooled SE for each g.
/// Means, mu-side and gamma-side expectations use three independent batches.
/// Test functions failing a 1000-triple midpoint scan are reported as non-convex and fail.
TransportCheckReport harge_check(const TiltSampler& sampler, int dim, const std::vector<TestFunction>& test_fns,
                                 long n_replicas, const RngStream& rng, int workers = 1, double k_sigma = 3.0);

/// Convex test functions used by default: |w|^2, sum |w_i|, sum w_i^4, max_i w_i, log sum exp(w_i).
std::vector<TestFunction> default_convex_tests();

struct SinkhornResult {
  Matrix map;  // barycentric image of each source point
  int iterations = 0;
  double marginal_error = 0.0;
  bool converged = false;
};

/// Entropic OT with cost |x-y|^2/2 and uniform weights by alternating scaling,
/// stopped when the row-marginal L1 error is below tol.
SinkhornResult sinkhorn_map_2d(const Matrix& source, const Matrix& target, double epsilon, int n_iter,
                               double tol = 1e-6);

/// Max secant slope |T(x_i) - T(x_j)| / |x_i - x_j| over random pairs of
/// source points with |x| <= max_radius.
double pairwise_lipschitz(const Matrix& source, const Matrix& mapped, long n_pairs, RngStream& rng,
                          double max_radius = std::numeric_limits<double>::infinity());

struct ConcavityViolation {
  int i0 = 0, j0 = 0, i1 = 0, j1 = 0;
  double deficit = 0.0;  // (l(u)+l(v))/2 - l(mid)
  double tolerance = 0.0;
};

/// Axis-aligned and diagonal midpoint triples with l(mid) < (l(u)+l(v))/2 - tol.
std::vector<ConcavityViolation> logconcavity_scan(const Matrix& log_values, double tol);
/// Per-triple tolerance k_sigma * sqrt(se_mid^2 + (se_u^2 + se_v^2)/4).
std::vector<ConcavityViolation> logconcavity_scan(const Matrix& log_values, const Matrix& log_se, double k_sigma);

}  // namespace dysonlab
