#include <doctest.h>

#include <cmath>

#include "dysonlab/girsanov.hpp"
#include "dysonlab/scaling.hpp"
#include "dysonlab/stats.hpp"

using namespace dysonlab;

namespace {

PathBundle affine_path(double a, double b, int steps, double slope) {
  const auto grid = TimeGrid::uniform(a, b, steps);
  Matrix v(1, grid.size());
  for (int k = 0; k < grid.size(); ++k) v(0, k) = slope * grid[k];
  return PathBundle(grid, LayerRange{1, 1}, v);
}

PathEnsemble brownian_ensemble(const Vector& start, const TimeGrid& grid, long n, const RngStream& rng) {
  PathEnsemble e{grid, LayerRange{1, static_cast<int>(start.size())}, {}};
  for (long r = 0; r < n; ++r) {
    RngStream s = rng.substream(static_cast<std::uint64_t>(r));
    e.values.push_back(sample_brownian(start, grid, s).values());
  }
  return e;
}

}  // namespace

TEST_CASE("edge scaling formula") {
  CHECK(edge_scale_value(1, 0.0, 3.0) == doctest::Approx(1.0));
  CHECK(edge_scale_value(1, 1.0, 3.0) == doctest::Approx(3.0 - 2.75));
  CHECK(edge_preimage_time(2.0, 1, 0.0) == doctest::Approx(1.0));
  CHECK(edge_preimage_time(2.0, 1, 1.0) == doctest::Approx(2.0));
  const int n = 8;
  const double t = 0.5;
  CHECK(edge_scale_value(n, t, 0.0) ==
        doctest::Approx(-2.0 * std::pow(n, 2.0 / 3.0) - t * std::cbrt(n) + 0.25 * t * t));
}

TEST_CASE("edge scaling of a path") {
  EdgeScalingParams p;
  p.beta = 2.0;
  p.n_particles = 1;
  p.t_lo = 0.0;
  p.t_hi = 1.0;
  p.n_steps = 1;
  const auto pre = edge_preimage_grid(p);
  CHECK(pre.times() == std::vector<double>{0.0, 1.0, 2.0});
  Matrix v(1, 3);
  v << 0.0, 3.0, 4.0;
  const auto scaled = edge_scale(PathBundle(pre, LayerRange{1, 1}, v), p);
  CHECK(scaled.grid().times() == std::vector<double>{0.0, 1.0});
  CHECK(scaled.values()(0, 0) == doctest::Approx(1.0));
  CHECK(scaled.values()(0, 1) == doctest::Approx(4.0 - 2.75));
}

TEST_CASE("centering") {
  const auto grid = TimeGrid::uniform(0.0, 1.0, 2);
  PathEnsemble e{grid, LayerRange{1, 1}, {Matrix::Constant(1, 3, 2.5), Matrix::Constant(1, 3, 2.5)}};
  const auto c = center_paths(e, Matrix::Constant(1, 3, 2.5));
  for (const auto& v : c.values) CHECK(v.isZero());
}

TEST_CASE("sup modulus statistic") {
  CHECK(sup_modulus_statistic(affine_path(0.0, 1.0, 20, 1.0), 0.0, 1.0)(0) ==
        doctest::Approx(1.0 / std::sqrt(std::log(2.0))));
  CHECK(sup_modulus_statistic(affine_path(0.0, 1.0, 20, 0.0), 0.0, 1.0)(0) == 0.0);
  const double base = sup_modulus_statistic(affine_path(0.0, 1.0, 20, 1.0), 0.0, 1.0)(0);
  CHECK(sup_modulus_statistic(affine_path(0.0, 1.0, 20, -3.0), 0.0, 1.0)(0) == doctest::Approx(3.0 * base));
}

TEST_CASE("holder norm") {
  CHECK(holder_norm(affine_path(0.0, 1.0, 20, 1.0), 0.5, 0.0, 1.0)(0) == doctest::Approx(1.0));
  CHECK(holder_norm(affine_path(0.0, 4.0, 40, 1.0), 0.5, 0.0, 4.0)(0) == doctest::Approx(2.0));
  CHECK(holder_norm(affine_path(0.0, 1.0, 20, 0.0), 0.5, 0.0, 1.0)(0) == 0.0);
}

TEST_CASE("tail curve") {
  const std::vector<double> zeros(100, 0.0);
  CHECK(tail_curve(zeros, {0.5}).points[0].probability == 0.0);
  const std::vector<double> positive{0.1, 0.2, 0.3};
  CHECK(tail_curve(positive, {0.0}).points[0].probability == 1.0);

  const auto grid = TimeGrid::uniform(0.0, 1.0, 20);
  const auto e = brownian_ensemble(Vector::Zero(1), grid, 4000, RngStream(17, 0));
  const Matrix s = sup_modulus_samples(e, 0.0, 1.0);
  std::vector<double> xs(s.data(), s.data() + s.size());
  std::vector<double> ks;
  for (double k = 0.5; k <= 3.0; k += 0.1) ks.push_back(k);
  const auto curve = tail_curve(xs, ks);
  CHECK(curve.n_fit_points >= 2);
  CHECK(curve.c2 > 0.0);
}

TEST_CASE("default pairs") {
  const auto pairs = default_pairs();
  CHECK(pairs.size() == 20);
  for (const auto& p : pairs) {
    CHECK(p.s < p.t);
    CHECK(p.s >= 0.0);
    CHECK(p.t <= 1.0);
  }
  CHECK(default_pairs(4.0)[4].t == doctest::Approx(4.0));
}

TEST_CASE("brownian increment moments") {
  const auto grid = TimeGrid::uniform(0.0, 1.0, 20);
  const Vector start = Vector::Constant(1, 0.3);
  const auto e = brownian_ensemble(start, grid, 20000, RngStream(19, 0));
  const auto centered = center_paths(e, Matrix::Constant(1, grid.size(), 0.3));
  const auto t = increment_moment(centered, 2.0, {{0.0, 0.5}, {0.25, 0.5}});
  CHECK(std::abs(t(0, 0).mean - 0.5) <= 3.0 * t(0, 0).std_error);
  CHECK(std::abs(t(0, 1).mean - 0.25) <= 3.0 * t(0, 1).std_error);
  const auto rep = build_modulus_report(centered, {1.0, 2.0, 4.0}, default_pairs(), 0.25, 0.0, 1.0);
  for (const auto& m : rep.moments) {
    CHECK(m.bound == doctest::Approx(normal_abs_moment(m.p) * std::pow(m.pair.t - m.pair.s, 0.5 * m.p)));
    CHECK(std::abs(m.moment.mean - m.bound) <= 3.5 * m.moment.std_error);
  }
  CHECK(rep.to_csv().find("layer") != std::string::npos);
}
