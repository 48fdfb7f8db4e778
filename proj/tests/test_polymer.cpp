#include <doctest.h>

#include <cmath>

#include "dysonlab/polymer.hpp"

using namespace dysonlab;

namespace {

Matrix random_levels(int n, int m, double dt, RngStream& rng) {
  Matrix b = Matrix::Zero(n, m + 1);
  for (int i = 0; i < n; ++i)
    for (int k = 1; k <= m; ++k) b(i, k) = b(i, k - 1) + std::sqrt(dt) * rng.normal();
  return b;
}

}  // namespace

TEST_CASE("single level partition function is the exponential of the path") {
  RngStream rng(1, 0);
  const Matrix b = random_levels(1, 20, 0.05, rng);
  const Vector lz = polymer_log_partition(b, 0.05);
  CHECK((lz - b.row(0).transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("two level recursion matches direct quadrature") {
  RngStream rng(2, 0);
  for (int draw = 0; draw < 20; ++draw) {
    const Matrix b = random_levels(2, 8, 1.0 / 8.0, rng);
    const Vector dp = polymer_log_partition(b, 1.0 / 8.0);
    const Vector quad = two_level_log_quadrature(b, 1.0 / 8.0);
    CHECK(std::isinf(dp(0)));
    for (int k = 1; k <= 8; ++k) REQUIRE(std::abs(std::expm1(dp(k) - quad(k))) < 1e-6);
  }
}

TEST_CASE("shifting the first level shifts log Z") {
  RngStream rng(3, 0);
  const Matrix b = random_levels(3, 30, 0.1, rng);
  Matrix shifted = b;
  shifted.row(0).array() += 0.75;
  const Vector base = polymer_log_partition(b, 0.1);
  const Vector moved = polymer_log_partition(shifted, 0.1);
  for (int k = 1; k <= 30; ++k) CHECK(moved(k) - base(k) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("partition function grows with time for positive integrands") {
  const Matrix zero = Matrix::Zero(3, 41);
  const Vector lz = polymer_log_partition(zero, 0.05);
  for (int k = 3; k <= 40; ++k) CHECK(lz(k) > lz(k - 1));
  // int_{0<s1<s2<t} ds = t^2 / 2
  CHECK(std::exp(lz(40)) == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("polymer parameters are validated") {
  auto p = PolymerParams::driftless(2, 1.0, 99, 10);
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.m_steps = 100;
  CHECK_NOTHROW(p.validate());
  p.drift = Eigen::Vector2d(-1.0, 1.0);
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("one level free energy is Brownian") {
  const auto p = PolymerParams::driftless(1, 1.0, 50, 4000);
  const auto e = polymer_ensemble(p, 4000, RngStream(4, 0));
  double s = 0.0, s2 = 0.0;
  for (const auto& v : e.values) {
    s += v(0, 50);
    s2 += v(0, 50) * v(0, 50);
  }
  CHECK(std::abs(s / 4000.0) < 3.0 * std::sqrt(1.0 / 4000.0));
  CHECK(s2 / 4000.0 == doctest::Approx(1.0).epsilon(0.07));
}

TEST_CASE("polymer ensemble is independent of worker count") {
  const auto p = PolymerParams::driftless(2, 1.0, 100, 50);
  const auto a = polymer_ensemble(p, 50, RngStream(5, 0), 1);
  const auto b = polymer_ensemble(p, 50, RngStream(5, 0), 3);
  for (std::size_t r = 0; r < a.values.size(); ++r) REQUIRE(a.values[r] == b.values[r]);
}

TEST_CASE("second moment inequality and window scaling of the top line") {
  auto p = PolymerParams::driftless(2, 5.0, 500, 3000);
  const auto short_rep = oy_modulus_suite(p, 0.25, {1.0, 2.0}, RngStream(6, 0));
  for (const auto& m : short_rep.moments) CHECK(m.within_bound(3.0));
  const auto long_rep = oy_modulus_suite(p, 0.25, {1.0, 5.0}, RngStream(6, 1));
  const double ratio = long_rep.holder_moment(0, 2.0).mean / short_rep.holder_moment(0, 2.0).mean;
  CHECK(ratio == doctest::Approx(2.0).epsilon(0.3));
}
