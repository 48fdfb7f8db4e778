#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "dysonlab/convex.hpp"
#include "dysonlab/core.hpp"
#include "dysonlab/rng.hpp"

namespace dysonlab {

/// Gaps below this are treated as collisions when weighting discrete paths.
inline constexpr double kCollisionGap = 1e-12;

/// log prod_{i<j} |x_i - x_j|^{beta/2} on the Weyl chamber, -inf off it.
template <typename Derived>
double log_h_beta(double beta, const Eigen::MatrixBase<Derived>& x) {
  if (!check_weyl(x)) return -std::numeric_limits<double>::infinity();
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    for (Eigen::Index j = i + 1; j < x.size(); ++j) s += std::log(x(i) - x(j));
  return 0.5 * beta * s;
}

template <typename Derived>
double h_beta(double beta, const Eigen::MatrixBase<Derived>& x) {
  return std::exp(log_h_beta(beta, x));
}

/// beta (beta-2)/4 sum_{i<j} (x_i - x_j)^-2 on the chamber, +inf off it.
template <typename Derived>
double v_beta(double beta, const Eigen::MatrixBase<Derived>& x) {
  if (!check_weyl(x)) return std::numeric_limits<double>::infinity();
  const double coef = 0.25 * beta * (beta - 2.0);
  if (coef == 0.0) return 0.0;
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    for (Eigen::Index j = i + 1; j < x.size(); ++j) {
      const double g = x(i) - x(j);
      s += 1.0 / (g * g);
    }
  return coef * s;
}

/// log M_beta(t0) for a discrete path on [0, t0]; trapezoid rule for the V integral.
/// Returns -inf when any recorded state leaves the chamber or has a gap below kCollisionGap.
/// Throws if the starting state is not strictly ordered.
double log_path_weight_m_beta(double beta, const PathBundle& path);
double path_weight_m_beta(double beta, const PathBundle& path);

struct PointTerm {
  double t = 0.0;
  ConvexFn f;
};

/// F(t, x) = w(t) f(x) with w >= 0; an empty weight means w = 1.
struct Integrand {
  ConvexFn f;
  std::function<double(double)> time_weight;

  double operator()(double t, const Eigen::Ref<const Vector>& x) const {
    return (time_weight ? time_weight(t) : 1.0) * f(x);
  }
};

/// Convex path functional sum_i f_i(z(t_i)) + int_a^b F(t, z(t)) dt on layers x [a, b].
/// The integral uses the trapezoid rule over `quadrature` uniform panels.
struct HamiltonianSpec {
  LayerRange layers;
  double a = 0.0;
  double b = 1.0;
  std::vector<PointTerm> point_terms;
  std::optional<Integrand> integrand;
  int quadrature = 64;

  void validate() const;
  /// Uniform panel nodes merged with the point-term times.
  TimeGrid quadrature_grid() const;
};

/// Evaluates H on a path whose grid contains all panel nodes and point times.
double eval_hamiltonian(const HamiltonianSpec& spec, const PathBundle& path);

/// Boundary data of a bridge region: entry x, exit y, shift eta with eta(a) = eta(b) = 0.
struct BridgeSpec {
  Vector x;
  Vector y;
  std::function<double(int layer_offset, double t)> eta;
};

/// Independent Brownian bridges per layer from x at a to y at b (plus eta) on `grid`.
PathBundle sample_bridge(const LayerRange& layers, const BridgeSpec& bridge, const TimeGrid& grid, RngStream& rng);

/// Monte Carlo estimate of Z_H(x, y) = E_{x,y}[exp(-H(z))] over Brownian bridges.
McEstimate estimate_partition_bridge(const HamiltonianSpec& spec, const BridgeSpec& bridge, long n_replicas,
                                     const RngStream& rng, int workers = 1);

/// Independent Brownian motions from x_start on `grid`.
PathBundle sample_brownian(const Vector& x_start, const TimeGrid& grid, RngStream& rng);

/// H_eps(z) = -log h_{beta,eps}(z(t0)) + int_0^t0 V_{beta,eps}(z(s)) ds for N particles.
HamiltonianSpec mollified_dbm_hamiltonian(double beta, double eps, int n, double t0, int quadrature);

/// -log h_beta(z(t0)) + int V_beta, trapezoid on the path grid; +inf off the chamber.
double dbm_hamiltonian(double beta, const PathBundle& path);

class DegenerateWeightsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using PathFunctional = std::function<double(const PathBundle&)>;

struct WeightedEstimate {
  McEstimate estimate;
  double ess = 0.0;
  long n_zero_weight = 0;
};

/// Self-normalized estimate of E_DBM[G] from Brownian paths weighted by M_beta.
/// Throws DegenerateWeightsError when the effective sample size falls below min_ess.
WeightedEstimate weighted_expectation(double beta, const PathFunctional& functional, const DysonParams& params,
                                      const TimeGrid& grid, long n_replicas, const RngStream& rng,
                                      int workers = 1, double min_ess = 10.0);

}  // namespace dysonlab
