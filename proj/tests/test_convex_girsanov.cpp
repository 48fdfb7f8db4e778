#include <doctest.h>

#include <cmath>

#include "dysonlab/convex.hpp"
#include "dysonlab/dyson.hpp"
#include "dysonlab/girsanov.hpp"

using namespace dysonlab;

namespace {

PathBundle constant_path(const Vector& x, double b, int steps) {
  const auto grid = TimeGrid::uniform(0.0, b, steps);
  Matrix v(x.size(), grid.size());
  for (int k = 0; k < grid.size(); ++k) v.col(k) = x;
  return PathBundle(grid, LayerRange{1, static_cast<int>(x.size())}, v);
}

}  // namespace

TEST_CASE("mollifiers") {
  CHECK(q1_eps(0.25, 0.5) == doctest::Approx(1.19315).epsilon(1e-5));
  CHECK(q1_eps(2.0, 0.5) == doctest::Approx(-std::log(2.0)));
  CHECK(q2_eps(2.0, 0.5) == doctest::Approx(0.25));
  CHECK(q2_eps(0.25, 0.5) == doctest::Approx(4.0 + 16.0 * 0.25));
  CHECK(q3_eps(1.0, 0.1) == 0.0);
  CHECK(q3_eps(-0.2, 0.1) == doctest::Approx(2.0));
}

TEST_CASE("convex catalog values and validation") {
  const Eigen::Vector2d x(1.0, -2.0);
  CHECK(ConvexFn(convex::Quadratic{2.0})(x) == doctest::Approx(10.0));
  CHECK(ConvexFn(convex::Quartic{0.25})(x) == doctest::Approx(0.25 * 17.0));
  CHECK(ConvexFn(convex::Linear{Eigen::Vector2d(1.0, 1.0), 3.0})(x) == doctest::Approx(2.0));
  CHECK(ConvexFn(convex::ExpSum{1.0})(x) == doctest::Approx(std::exp(1.0) + std::exp(-2.0)));
  CHECK(ConvexFn(convex::SoftExpGaps{})(x) == doctest::Approx(std::exp(-3.0)));
  CHECK(ConvexFn(convex::LogBarrierEps{2.0, 0.1})(x) == doctest::Approx(-std::log(3.0)));
  CHECK(ConvexFn(convex::HingeEps{0.5})(Eigen::Vector2d(0.0, 1.0)) == doctest::Approx(2.0));
  const ConvexFn grid(convex::CustomGrid{0.0, 1.0, {1.0, 0.0, 1.0}});
  CHECK(grid(0.5) == doctest::Approx(0.5));
  CHECK(grid(3.0) == doctest::Approx(2.0));
  CHECK_THROWS_AS(ConvexFn(convex::CustomGrid{0.0, 1.0, {0.0, 1.0, 0.0}}), std::invalid_argument);
  CHECK_THROWS_AS(ConvexFn(convex::InvSquareEps{2.0, 0.1}), std::invalid_argument);
  CHECK_THROWS_AS(ConvexFn(convex::Quadratic{-1.0}), std::invalid_argument);
}

TEST_CASE("midpoint scan separates convex from concave") {
  RngStream rng(1, 0);
  const ScalarField convex_f = [](const Vector& w) { return w.squaredNorm(); };
  const ScalarField concave_f = [](const Vector& w) { return -w.squaredNorm(); };
  CHECK(midpoint_convexity_scan(convex_f, 3, 1000, rng).n_violations == 0);
  CHECK(midpoint_convexity_scan(concave_f, 3, 1000, rng).n_violations > 0);
  CHECK(tabulated_is_convex({4, 1, 0, 1, 4}));
  CHECK_FALSE(tabulated_is_convex({0, 1, 0}));
}

TEST_CASE("h and V on known points") {
  CHECK(h_beta(2.0, Eigen::Vector2d(2.0, 0.0)) == doctest::Approx(2.0));
  CHECK(h_beta(3.0, Eigen::Vector2d(1.0, 1.0)) == 0.0);
  CHECK(h_beta(4.0, Eigen::Vector3d(1.0, 0.0, -1.0)) == doctest::Approx(4.0));
  CHECK(v_beta(2.0, Eigen::Vector3d(3.0, 0.1, -1.0)) == 0.0);
  CHECK(v_beta(4.0, Eigen::Vector2d(1.0, 0.0)) == doctest::Approx(2.0));
  CHECK(std::isinf(v_beta(3.0, Eigen::Vector2d(0.0, 0.0))));
}

TEST_CASE("path weight on constant and colliding paths") {
  const auto z = constant_path(Eigen::Vector2d(1.0, 0.0), 1.0, 10);
  CHECK(path_weight_m_beta(2.0, z) == doctest::Approx(1.0));
  CHECK(path_weight_m_beta(4.0, z) == doctest::Approx(std::exp(-2.0)));
  Matrix v = z.values();
  v(1, 5) = 1.0;
  CHECK(path_weight_m_beta(3.0, PathBundle(z.grid(), z.layers(), v)) == 0.0);
  CHECK_THROWS_AS(path_weight_m_beta(3.0, constant_path(Eigen::Vector2d(0.0, 0.0), 1.0, 2)), std::invalid_argument);
}

TEST_CASE("hamiltonian evaluation") {
  HamiltonianSpec spec;
  spec.layers = {1, 2};
  spec.point_terms.push_back({1.0, ConvexFn(convex::Quadratic{1.0})});
  CHECK(eval_hamiltonian(spec, constant_path(Eigen::Vector2d(1.0, -1.0), 1.0, 4)) == doctest::Approx(2.0));

  HamiltonianSpec flat;
  flat.layers = {1, 1};
  flat.a = 0.0;
  flat.b = 2.0;
  flat.integrand = Integrand{ConvexFn(convex::Linear{Vector(), 1.5}), {}};
  for (int q : {1, 3, 64}) {
    flat.quadrature = q;
    const auto grid = flat.quadrature_grid();
    Matrix v = Matrix::Random(1, grid.size());
    CHECK(eval_hamiltonian(flat, PathBundle(grid, flat.layers, v)) == doctest::Approx(3.0));
  }
}

TEST_CASE("bridge partition function oracles") {
  BridgeSpec bridge{Vector::Zero(1), Vector::Zero(1), {}};
  HamiltonianSpec empty;
  empty.layers = {1, 1};
  const auto z0 = estimate_partition_bridge(empty, bridge, 100, RngStream(2, 0));
  CHECK(z0.mean == doctest::Approx(1.0));
  CHECK(z0.std_error == 0.0);

  HamiltonianSpec constant = empty;
  constant.integrand = Integrand{ConvexFn(convex::Linear{Vector(), 0.7}), {}};
  CHECK(estimate_partition_bridge(constant, bridge, 100, RngStream(2, 0)).mean == doctest::Approx(std::exp(-0.7)));

  HamiltonianSpec middle = empty;
  middle.point_terms.push_back({0.5, ConvexFn(convex::Quadratic{1.0})});
  const auto zm = estimate_partition_bridge(middle, bridge, 40000, RngStream(2, 1), 2);
  CHECK(std::abs(zm.mean - 1.0 / std::sqrt(1.5)) <= 3.0 * zm.std_error);
}

TEST_CASE("mollified hamiltonian dominates the limit on chamber paths") {
  const auto spec = mollified_dbm_hamiltonian(4.0, 0.05, 2, 1.0, 16);
  const auto grid = spec.quadrature_grid();
  const auto z = constant_path(Eigen::Vector2d(1.0, 0.0), 1.0, grid.size() - 1);
  CHECK(eval_hamiltonian(spec, z) == doctest::Approx(dbm_hamiltonian(4.0, z)));
  CHECK(dbm_hamiltonian(4.0, z) == doctest::Approx(2.0));
}

TEST_CASE("weighted expectation oracles") {
  const auto grid = TimeGrid::uniform(0.0, 1.0, 10);
  auto p = DysonParams::at_origin(2.0, 1, 1.0);
  const PathFunctional end = [](const PathBundle& z) { return z.values()(0, z.n_times() - 1); };
  const auto bm = weighted_expectation(2.0, end, p, grid, 5000, RngStream(4, 0));
  CHECK(bm.ess == doctest::Approx(5000.0));
  CHECK(std::abs(bm.estimate.mean) <= 3.0 * bm.estimate.std_error);

  p = DysonParams::at_origin(3.0, 2, 0.25);
  p.x_start = Eigen::Vector2d(1.0, -1.0);
  const PathFunctional one = [](const PathBundle&) { return 1.0; };
  const auto w1 = weighted_expectation(3.0, one, p, TimeGrid::uniform(0.0, 0.25, 50), 2000, RngStream(4, 1));
  CHECK(w1.estimate.mean == doctest::Approx(1.0));

  auto degenerate = DysonParams::at_origin(3.0, 2, 1.0);
  degenerate.x_start = Eigen::Vector2d(1e-3, -1e-3);
  CHECK_THROWS_AS(weighted_expectation(3.0, one, degenerate, TimeGrid::uniform(0.0, 1.0, 400), 200, RngStream(4, 2),
                                       1, 150.0),
                  DegenerateWeightsError);
}

TEST_CASE("weighted and direct estimates agree") {
  auto p = DysonParams::at_origin(3.0, 2, 0.25);
  p.x_start = Eigen::Vector2d(1.0, -1.0);
  const auto grid = TimeGrid::uniform(0.0, 0.25, 100);
  const PathFunctional g = [](const PathBundle& z) {
    const auto last = z.n_times() - 1;
    return std::tanh(z.values()(0, last) - z.values()(1, last));
  };
  const auto w = weighted_expectation(3.0, g, p, grid, 20000, RngStream(8, 0));
  const auto direct = simulate_ensemble(p, TimeGrid::uniform(0.0, 0.25, 1), 20000, RngStream(8, 1));
  std::vector<double> vals;
  for (const auto& v : direct.paths.values) vals.push_back(std::tanh(v(0, 1) - v(1, 1)));
  const auto d = McEstimate::from_samples(vals);
  CHECK(std::abs(w.estimate.mean - d.mean) <= 1.96 * (w.estimate.std_error + d.std_error));
}
