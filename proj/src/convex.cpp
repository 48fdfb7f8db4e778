#include "dysonlab/convex.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dysonlab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

template <typename Profile>
double pairwise_sum(const Eigen::Ref<const Vector>& x, Profile&& q) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    for (Eigen::Index j = i + 1; j < x.size(); ++j) s += q(x(i) - x(j));
  return s;
}

double custom_profile(const convex::CustomGrid& g, double x) {
  const auto n = static_cast<long>(g.values.size());
  const double u = (x - g.x0) / g.h;
  long k = static_cast<long>(std::floor(u));
  k = std::clamp(k, 0L, n - 2);
  const double frac = u - static_cast<double>(k);
  return g.values[static_cast<std::size_t>(k)] +
         frac * (g.values[static_cast<std::size_t>(k + 1)] - g.values[static_cast<std::size_t>(k)]);
}

}  // namespace

bool tabulated_is_convex(const std::vector<double>& values, double tol) {
  for (std::size_t k = 1; k + 1 < values.size(); ++k) {
    if (values[k - 1] + values[k + 1] - 2.0 * values[k] < -tol) return false;
  }
  return true;
}

ConvexFn::ConvexFn(ConvexFnId id) : id_(std::move(id)) {
  std::visit(overloaded{
                 [](const convex::Quadratic& q) {
                   if (!(q.c >= 0.0)) throw std::invalid_argument("quadratic: c must be >= 0");
                 },
                 [](const convex::Linear&) {},
                 [](const convex::Quartic& q) {
                   if (!(q.c >= 0.0)) throw std::invalid_argument("quartic: c must be >= 0");
                 },
                 [](const convex::LogBarrierEps& q) {
                   if (!(q.beta > 0.0) || !(q.eps > 0.0)) throw std::invalid_argument("log_barrier_eps: beta, eps > 0");
                 },
                 [](const convex::InvSquareEps& q) {
                   if (!(q.beta > 2.0) || !(q.eps > 0.0)) throw std::invalid_argument("inv_square_eps: beta > 2, eps > 0");
                 },
                 [](const convex::HingeEps& q) {
                   if (!(q.eps > 0.0)) throw std::invalid_argument("hinge_eps: eps > 0");
                 },
                 [](const convex::SoftExpGaps&) {},
                 [](const convex::ExpSum& e) {
                   if (!(e.c >= 0.0)) throw std::invalid_argument("exp_sum: c must be >= 0");
                 },
                 [](const convex::CustomGrid& g) {
                   if (g.values.size() < 2 || !(g.h > 0.0)) throw std::invalid_argument("custom_grid: need >= 2 values and h > 0");
                   if (!tabulated_is_convex(g.values)) throw std::invalid_argument("custom_grid: table is not convex");
                 },
             },
             id_);
}

double ConvexFn::operator()(const Eigen::Ref<const Vector>& x) const {
  return std::visit(
      overloaded{
          [&](const convex::Quadratic& q) { return q.c * x.squaredNorm(); },
          [&](const convex::Linear& l) {
            if (l.a.size() == 0) return l.c;
            if (l.a.size() != x.size()) throw std::invalid_argument("linear: dimension mismatch");
            return l.a.dot(x) + l.c;
          },
          [&](const convex::Quartic& q) { return q.c * x.array().pow(4).sum(); },
          [&](const convex::LogBarrierEps& q) {
            return 0.5 * q.beta * pairwise_sum(x, [&](double s) { return q1_eps(s, q.eps); });
          },
          [&](const convex::InvSquareEps& q) {
            return 0.25 * q.beta * (q.beta - 2.0) * pairwise_sum(x, [&](double s) { return q2_eps(s, q.eps); });
          },
          [&](const convex::HingeEps& q) { return pairwise_sum(x, [&](double s) { return q3_eps(s, q.eps); }); },
          [&](const convex::SoftExpGaps&) {
            double s = 0.0;
            for (Eigen::Index i = 0; i + 1 < x.size(); ++i) s += std::exp(x(i + 1) - x(i));
            return s;
          },
          [&](const convex::ExpSum& e) { return e.c * x.array().exp().sum(); },
          [&](const convex::CustomGrid& g) {
            double s = 0.0;
            for (Eigen::Index i = 0; i < x.size(); ++i) s += custom_profile(g, x(i));
            return s;
          },
      },
      id_);
}

std::string ConvexFn::name() const {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const convex::Quadratic& q) { os << "quadratic(c=" << q.c << ")"; },
                 [&](const convex::Linear& l) { os << "linear(dim=" << l.a.size() << ",c=" << l.c << ")"; },
                 [&](const convex::Quartic& q) { os << "quartic(c=" << q.c << ")"; },
                 [&](const convex::LogBarrierEps& q) { os << "log_barrier_eps(beta=" << q.beta << ",eps=" << q.eps << ")"; },
                 [&](const convex::InvSquareEps& q) { os << "inv_square_eps(beta=" << q.beta << ",eps=" << q.eps << ")"; },
                 [&](const convex::HingeEps& q) { os << "hinge_eps(eps=" << q.eps << ")"; },
                 [&](const convex::SoftExpGaps&) { os << "soft_exp_gaps"; },
                 [&](const convex::ExpSum& e) { os << "exp_sum(c=" << e.c << ")"; },
                 [&](const convex::CustomGrid& g) { os << "custom_grid(n=" << g.values.size() << ")"; },
             },
             id_);
  return os.str();
}

MidpointScanResult midpoint_convexity_scan(const ScalarField& f, int dim, int n_triples, RngStream& rng,
                                           double scale, double tol) {
  MidpointScanResult res;
  Vector x(dim), y(dim);
  for (int k = 0; k < n_triples; ++k) {
    for (int i = 0; i < dim; ++i) {
      x(i) = scale * rng.normal();
      y(i) = scale * rng.normal();
    }
    const double fx = f(x);
    const double fy = f(y);
    const double fm = f(0.5 * (x + y));
    ++res.n_checked;
    // Relative slack keeps large-magnitude catalog values from tripping on rounding.
    const double slack = tol * std::max({1.0, std::abs(fx), std::abs(fy)});
    const double excess = fm - 0.5 * (fx + fy);
    if (excess > slack) {
      ++res.n_violations;
      res.worst_excess = std::max(res.worst_excess, excess);
    }
  }
  return res;
}

}  // namespace dysonlab
