#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "dysonlab/core.hpp"
#include "dysonlab/rng.hpp"

namespace dysonlab {

/// Convex C^1 extension of -log s below eps (tangent line at eps).
inline double q1_eps(double s, double eps) { return s >= eps ? -std::log(s) : -std::log(eps) - (s - eps) / eps; }

/// Convex C^1 extension of s^-2 below eps.
inline double q2_eps(double s, double eps) {
  return s >= eps ? 1.0 / (s * s) : 1.0 / (eps * eps) - 2.0 / (eps * eps * eps) * (s - eps);
}

/// Hinge penalty: 0 on s >= 0, -s/eps below.
inline double q3_eps(double s, double eps) { return s >= 0.0 ? 0.0 : -s / eps; }

namespace convex {

/// c |x|^2
struct Quadratic {
  double c = 1.0;
};
/// <a, x> + c; an empty `a` means the constant c.
struct Linear {
  Vector a;
  double c = 0.0;
};
/// c sum x_i^4
struct Quartic {
  double c = 0.25;
};
/// -log h_{beta,eps}(x) = (beta/2) sum_{i<j} q1_eps(x_i - x_j)
struct LogBarrierEps {
  double beta = 2.0;
  double eps = 0.1;
};
/// V_{beta,eps}(x) = beta (beta-2)/4 sum_{i<j} q2_eps(x_i - x_j), beta > 2
struct InvSquareEps {
  double beta = 4.0;
  double eps = 0.1;
};
/// V_{2,eps}(x) = sum_{i<j} q3_eps(x_i - x_j)
struct HingeEps {
  double eps = 0.1;
};
/// sum_i exp(x_{i+1} - x_i)
struct SoftExpGaps {};
/// c sum_i exp(x_i)
struct ExpSum {
  double c = 1.0;
};
/// sum_i phi(x_i) with phi piecewise linear through tabulated values on
/// x0 + k h, extended linearly past both ends.
struct CustomGrid {
  double x0 = 0.0;
  double h = 1.0;
  std::vector<double> values;
};

}  // namespace convex

using ConvexFnId = std::variant<convex::Quadratic, convex::Linear, convex::Quartic, convex::LogBarrierEps,
                                convex::InvSquareEps, convex::HingeEps, convex::SoftExpGaps, convex::ExpSum, convex::CustomGrid>;

/// A member of the convex function catalog, evaluable on R^N.
class ConvexFn {
 public:
  ConvexFn() : id_(convex::Quadratic{}) {}
  /// Validates the parameters; custom tables must pass a midpoint-convexity scan.
  explicit ConvexFn(ConvexFnId id);

  double operator()(const Eigen::Ref<const Vector>& x) const;
  double operator()(double x) const { return (*this)(Vector::Constant(1, x)); }

  const ConvexFnId& id() const { return id_; }
  std::string name() const;

 private:
  ConvexFnId id_;
};

using ScalarField = std::function<double(const Vector&)>;

struct MidpointScanResult {
  int n_checked = 0;
  int n_violations = 0;
  double worst_excess = 0.0;
};

/// Checks f((x+y)/2) <= (f(x)+f(y))/2 + tol on random pairs x, y ~ N(0, scale^2 I_dim).
MidpointScanResult midpoint_convexity_scan(const ScalarField& f, int dim, int n_triples, RngStream& rng,
                                           double scale = 2.0, double tol = 1e-12);

/// Second-difference scan of a tabulated function; true when convex up to tol.
bool tabulated_is_convex(const std::vector<double>& values, double tol = 1e-12);

}  // namespace dysonlab
