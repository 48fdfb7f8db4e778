#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dysonlab/dyson.hpp"
#include "dysonlab/stats.hpp"

using namespace dysonlab;

TEST_CASE("drift is antisymmetric and opens the gap") {
  const Vector d = dbm_drift(2.0, Eigen::Vector2d(1.0, -1.0));
  CHECK(d(0) == doctest::Approx(0.5));
  CHECK(d(1) == doctest::Approx(-0.5));
  CHECK(d(0) - d(1) > 0.0);
  const Vector d3 = dbm_drift(4.0, Eigen::Vector3d(2.0, 0.5, -1.0));
  CHECK(std::abs(d3.sum()) < 1e-14);
  CHECK(second_moment_rate(2.0, 3) == doctest::Approx(9.0));
  CHECK(second_moment_rate(4.0, 3) == doctest::Approx(15.0));
}

TEST_CASE("single particle is Brownian motion") {
  auto p = DysonParams::at_origin(3.0, 1, 1.0);
  p.x_start = Vector::Constant(1, 0.7);
  const auto grid = TimeGrid::uniform(0.0, 1.0, 4);
  const auto ens = simulate_ensemble(p, grid, 20000, RngStream(5, 0));
  const auto means = ensemble_means(ens.paths);
  for (int k = 0; k < grid.size(); ++k) CHECK(std::abs(means(0, k).mean - 0.7) <= 3.0 * means(0, k).std_error + 1e-12);
  double var = 0.0;
  for (const auto& v : ens.paths.values) var += (v(0, 2) - 0.7) * (v(0, 2) - 0.7);
  CHECK(var / 20000.0 == doctest::Approx(0.5).epsilon(0.03));
}

TEST_CASE("tied start stays ordered and symmetric") {
  const auto p = DysonParams::at_origin(2.0, 2, 1.0);
  const auto grid = TimeGrid::uniform(0.0, 1.0, 5);
  const auto ens = simulate_ensemble(p, grid, 4000, RngStream(9, 0));
  for (const auto& v : ens.paths.values)
    for (int k = 1; k < grid.size(); ++k) REQUIRE(v(0, k) > v(1, k));
  const auto means = ensemble_means(ens.paths);
  for (int k = 1; k < grid.size(); ++k) {
    const double se = std::hypot(means(0, k).std_error, means(1, k).std_error);
    CHECK(std::abs(means(0, k).mean + means(1, k).mean) <= 3.0 * se);
  }
}

TEST_CASE("sum and second moment identities") {
  for (double beta : {2.0, 4.0}) {
    const auto p = DysonParams::at_origin(beta, 3, 1.0);
    const auto ens = simulate_ensemble(p, TimeGrid::uniform(0.0, 1.0, 1), 10000, RngStream(13, 0), 2);
    std::vector<double> sums, squares;
    for (const auto& v : ens.paths.values) {
      sums.push_back(v.col(1).sum());
      squares.push_back(v.col(1).squaredNorm());
    }
    const auto sq = McEstimate::from_samples(squares);
    CHECK(std::abs(sq.mean - second_moment_rate(beta, 3)) <= 3.0 * sq.std_error);
    std::vector<double> sums2;
    for (double s : sums) sums2.push_back(s * s);
    const auto v = McEstimate::from_samples(sums2);
    CHECK(std::abs(v.mean - 3.0) <= 3.0 * v.std_error);
  }
}

TEST_CASE("ensemble is independent of worker count") {
  const auto p = DysonParams::at_origin(2.0, 3, 1.0);
  const auto grid = TimeGrid::uniform(0.0, 1.0, 3);
  const auto a = simulate_ensemble(p, grid, 64, RngStream(3, 1), 1);
  const auto b = simulate_ensemble(p, grid, 64, RngStream(3, 1), 4);
  for (std::size_t r = 0; r < a.paths.values.size(); ++r) REQUIRE(a.paths.values[r] == b.paths.values[r]);
  CHECK(a.report.n_substeps_total == b.report.n_substeps_total);
}

TEST_CASE("integrator failure is loud when the fallback is disabled") {
  auto p = DysonParams::at_origin(2.0, 4, 1.0);
  p.x_start = Eigen::Vector4d(0.9, 0.3, -0.3, -0.9);
  p.dt_base = 0.1;
  p.dt_min = 0.1;
  p.implicit_fallback = false;
  int failures = 0;
  for (int s = 0; s < 50; ++s) {
    RngStream rng(s, 0);
    try {
      simulate_dbm(p, TimeGrid::uniform(0.0, 1.0, 1), rng);
    } catch (const IntegratorError&) {
      ++failures;
    }
  }
  CHECK(failures > 0);
  p.implicit_fallback = true;
  for (int s = 0; s < 50; ++s) {
    RngStream rng(s, 0);
    const auto out = simulate_dbm(p, TimeGrid::uniform(0.0, 1.0, 1), rng);
    CHECK(check_weyl(out.path.column(1)));
  }
}

TEST_CASE("hermitian oracle: one and two particles") {
  RngStream rng(21, 0);
  const int n = 100000;
  double s1 = 0, s2 = 0, g1 = 0, g2 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = sample_hermitian_oracle(1, 1.0, rng)(0);
    s1 += z;
    s2 += z * z;
    const Vector e = sample_hermitian_oracle(2, 1.0, rng);
    REQUIRE(e(0) > e(1));
    g1 += e(0) - e(1);
    g2 += (e(0) - e(1)) * (e(0) - e(1));
  }
  CHECK(std::abs(s1 / n) < 0.015);
  CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.015));
  // density proportional to s^2 exp(-s^2/4): E s = 4/sqrt(pi), E s^2 = 6
  CHECK(g1 / n == doctest::Approx(4.0 / std::sqrt(std::numbers::pi)).epsilon(0.01));
  CHECK(g2 / n == doctest::Approx(6.0).epsilon(0.015));
}

TEST_CASE("oracle second moments") {
  for (double beta : {2.0, 3.0, 4.0}) {
    RngStream rng(31, static_cast<std::uint64_t>(beta));
    const int n = 40000;
    std::vector<double> sq;
    for (int i = 0; i < n; ++i) {
      const Vector e = sample_fixed_time_oracle(beta, 4, 0.5, rng);
      REQUIRE(check_weyl(e));
      sq.push_back(e.squaredNorm());
    }
    const auto est = McEstimate::from_samples(sq);
    CHECK(std::abs(est.mean - 0.5 * second_moment_rate(beta, 4)) <= 4.0 * est.std_error);
  }
}
