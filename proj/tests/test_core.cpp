#include <doctest.h>

#include "dysonlab/core.hpp"

using namespace dysonlab;

TEST_CASE("uniform grid times") {
  const auto g = TimeGrid::uniform(0.0, 1.0, 2);
  CHECK(g.times() == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(TimeGrid::uniform(0.0, 1.0, 1).times() == std::vector<double>{0.0, 1.0});
  CHECK(TimeGrid::uniform(2.0, 4.0, 4).times() == std::vector<double>{2.0, 2.5, 3.0, 3.5, 4.0});
  CHECK_THROWS_AS(TimeGrid::uniform(1.0, 1.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(TimeGrid::uniform(0.0, 1.0, 0), std::invalid_argument);
}

TEST_CASE("grid lookup and restriction") {
  const auto g = TimeGrid::uniform(0.0, 1.0, 20);
  CHECK(g.index_of(0.35) == 7);
  CHECK_FALSE(g.index_of(0.351).has_value());
  CHECK_THROWS_AS(g.require_index(0.351), std::invalid_argument);
  const auto r = g.restrict(0.25, 0.5);
  CHECK(r.size() == 6);
  CHECK(r.a() == doctest::Approx(0.25));
  CHECK(r.b() == doctest::Approx(0.5));
  CHECK(g.max_spacing() == doctest::Approx(0.05));
  CHECK_THROWS_AS(TimeGrid::from_times({0.0, 0.5, 0.5}), std::invalid_argument);
}

TEST_CASE("weyl chamber membership") {
  CHECK(check_weyl(Eigen::Vector3d(2.0, 0.0, -1.0)));
  CHECK_FALSE(check_weyl(Eigen::Vector2d(1.0, 1.0)));
  CHECK_FALSE(check_weyl(Eigen::Vector2d(0.0, 5.0)));
  CHECK(check_weyl(Eigen::VectorXd::Constant(1, 3.0)));
  CHECK(min_gap(Eigen::Vector3d(2.0, 0.5, -1.0)) == doctest::Approx(1.5));
}

TEST_CASE("path bundle shape and ordering checks") {
  const auto g = TimeGrid::uniform(0.0, 1.0, 2);
  Matrix v(2, 3);
  v << 1, 2, 3, 0, 1, 2;
  const PathBundle p(g, {1, 2}, v, true);
  CHECK(p.n_layers() == 2);
  CHECK(p.n_times() == 3);
  const auto q = p.restrict(0.5, 1.0);
  CHECK(q.values()(0, 0) == 2.0);
  CHECK(q.n_times() == 2);
  Matrix bad = v;
  bad(1, 2) = 3.0;
  CHECK_THROWS_AS(PathBundle(g, {1, 2}, bad, true), std::invalid_argument);
  CHECK_THROWS_AS(PathBundle(g, {1, 3}, v), std::invalid_argument);
}

TEST_CASE("dyson parameter validation") {
  auto p = DysonParams::at_origin(2.0, 3, 1.0);
  CHECK_NOTHROW(p.validate());
  p.beta = 1.5;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = DysonParams::at_origin(2.0, 3, 1.0);
  p.x_start = Vector::Zero(2);
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("monte carlo estimate of known samples") {
  const Vector xs = (Vector(4) << 1.0, 2.0, 3.0, 4.0).finished();
  const auto e = McEstimate::from_samples(xs);
  CHECK(e.mean == doctest::Approx(2.5));
  CHECK(e.std_error == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  CHECK(e.n_replicas == 4);
}
