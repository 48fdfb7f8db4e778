#include <doctest.h>

#include <cmath>

#include "dysonlab/transport.hpp"

using namespace dysonlab;

namespace {

TiltedGaussian1D tilt(std::string name, std::function<double(double)> v) {
  TiltedGaussian1D d;
  d.name = std::move(name);
  d.tilt = std::move(v);
  return d;
}

Matrix gaussian_cloud(long n, double sd, RngStream& rng) {
  Matrix m(n, 2);
  for (long i = 0; i < n; ++i) m.row(i) << sd * rng.normal(), sd * rng.normal();
  return m;
}

}  // namespace

TEST_CASE("identity rearrangement") {
  const auto map = brenier_1d(TiltedGaussian1D::standard(), TiltedGaussian1D::standard());
  CHECK((map.y - map.x).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(contraction_check(map) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("gaussian to gaussian rearrangement") {
  const auto target = tilt("half_variance", [](double x) { return 0.5 * x * x; });
  const auto map = brenier_1d(TiltedGaussian1D::standard(), target);
  for (Eigen::Index i = 0; i < map.x.size(); i += 97) CHECK(map.y(i) == doctest::Approx(map.x(i) / std::sqrt(2.0)));
  CHECK(contraction_check(map) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-6));
  const MonotoneMap1D t(TiltedGaussian1D::standard(), target);
  CHECK(t(1.3) == doctest::Approx(1.3 / std::sqrt(2.0)));
}

TEST_CASE("log-concave tilts give contractions") {
  const auto quartic = brenier_1d(TiltedGaussian1D::standard(), tilt("quartic", [](double x) { return 0.25 * x * x * x * x; }));
  CHECK(contraction_check(quartic) <= 1.0 + 1e-4);
  const auto linear = brenier_1d(TiltedGaussian1D::standard(), tilt("linear", [](double x) { return 0.8 * x; }));
  CHECK(contraction_check(linear) == doctest::Approx(1.0).epsilon(1e-8));
  const auto from_catalog = TiltedGaussian1D::from_convex(ConvexFn(convex::LogBarrierEps{2.0, 0.1}), 2);
  CHECK(contraction_check(brenier_1d(TiltedGaussian1D::standard(), from_catalog)) <= 1.0 + 1e-4);
}

TEST_CASE("contraction check controls") {
  TabulatedMap doubling{Vector::LinSpaced(11, -1.0, 1.0), Vector::LinSpaced(11, -2.0, 2.0)};
  CHECK(contraction_check(doubling) == doctest::Approx(2.0));
  TabulatedMap shrink{Vector::LinSpaced(11, -1.0, 1.0), Vector::LinSpaced(11, -1.0, 1.0) / std::sqrt(2.0)};
  CHECK(contraction_check(shrink) == doctest::Approx(0.70711).epsilon(1e-5));
  TabulatedMap tiny{Vector::LinSpaced(2, 0.0, 1.0), Vector::LinSpaced(2, 0.0, 1.0)};
  CHECK_THROWS_AS(contraction_check(tiny), std::invalid_argument);
}

TEST_CASE("harge inequality for a gaussian tilt") {
  const auto sampler = gaussian_tilt_sampler(Vector::Zero(1), Matrix::Identity(1, 1),
                                             [](const Vector& w) { return 0.5 * w.squaredNorm(); });
  const std::vector<TestFunction> fns{{"square", [](const Vector& w) { return w.squaredNorm(); }}};
  const auto rep = harge_check(sampler, 1, fns, 40000, RngStream(3, 0));
  REQUIRE(rep.harge_table.size() == 1);
  const auto& row = rep.harge_table[0];
  CHECK(row.lhs == doctest::Approx(0.5).epsilon(0.03));
  CHECK(row.rhs == doctest::Approx(1.0).epsilon(0.03));
  CHECK(row.pass);
}

TEST_CASE("harge equality and negative control") {
  const auto identical = gaussian_tilt_sampler(Vector::Zero(2), Matrix::Identity(2, 2), [](const Vector&) { return 0.0; });
  auto fns = default_convex_tests();
  CHECK(fns.size() == 5);
  fns.push_back({"concave", [](const Vector& w) { return -w.squaredNorm(); }});
  const auto rep = harge_check(identical, 2, fns, 20000, RngStream(3, 1));
  for (const auto& row : rep.harge_table) {
    CHECK(std::abs(row.lhs - row.rhs) <= 3.0 * row.pooled_se());
    if (row.name == "concave") {
      CHECK_FALSE(row.convex);
      CHECK_FALSE(row.pass);
    } else {
      CHECK(row.pass);
    }
  }
  CHECK_FALSE(rep.all_pass());
}

TEST_CASE("harge inequality on a bridge marginal") {
  HamiltonianSpec spec;
  spec.layers = {1, 1};
  spec.integrand = Integrand{ConvexFn(convex::Quadratic{1.0}), {}};
  spec.quadrature = 32;
  BridgeSpec bridge{Vector::Zero(1), Vector::Zero(1), {}};
  const auto sampler = bridge_marginal_sampler(spec, bridge, {0.3, 0.7});
  const auto rep = harge_check(sampler, 2, default_convex_tests(), 20000, RngStream(3, 2), 2);
  CHECK(rep.all_pass());
}

TEST_CASE("sinkhorn on identical clouds is near the identity") {
  RngStream rng(5, 0);
  const Matrix src = gaussian_cloud(2000, 1.0, rng);
  const double eps = 0.05;
  const auto res = sinkhorn_map_2d(src, src, eps, 20000);
  CHECK(res.converged);
  CHECK((res.map - src).rowwise().norm().mean() < 0.2);
  RngStream pairs(5, 1);
  CHECK(pairwise_lipschitz(src, res.map, 20000, pairs, 2.0) <= 1.0 + 3.0 * eps);
}

TEST_CASE("sinkhorn gaussian map shrinks by one over root two") {
  RngStream rng(6, 0);
  const Matrix src = gaussian_cloud(3000, 1.0, rng);
  const Matrix tgt = gaussian_cloud(3000, 1.0 / std::sqrt(2.0), rng);
  const auto res = sinkhorn_map_2d(src, tgt, 0.05, 20000);
  CHECK(res.converged);
  // least-squares slope of the fitted map
  const double slope = (src.array() * res.map.array()).sum() / src.squaredNorm();
  CHECK(slope == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.07));
  RngStream pairs(6, 1);
  CHECK(pairwise_lipschitz(src, res.map, 50000, pairs, 2.0) <= 1.05);
}

TEST_CASE("log-concavity scan") {
  const int n = 11;
  Matrix gauss(n, n), convex(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double x = -1.0 + 0.2 * i, y = -1.0 + 0.2 * j;
      gauss(i, j) = -0.5 * (x * x + y * y);
      convex(i, j) = x * x;
    }
  CHECK(logconcavity_scan(gauss, 1e-10).empty());
  CHECK_FALSE(logconcavity_scan(convex, 1e-10).empty());
  CHECK(logconcavity_scan(convex, Matrix::Constant(n, n, 10.0), 3.0).empty());
}
