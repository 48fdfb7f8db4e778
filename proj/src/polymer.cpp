#include "dysonlab/polymer.hpp"

#include <cmath>
#include <string>

#include "dysonlab/parallel.hpp"
#include "dysonlab/stats.hpp"

namespace dysonlab {

PolymerParams PolymerParams::driftless(int n, double t_max, int m_steps, long n_replicas) {
  PolymerParams p;
  p.n_levels = n;
  p.drift = Vector::Zero(n);
  p.t_max = t_max;
  p.m_steps = m_steps;
  p.n_replicas = n_replicas;
  return p;
}

void PolymerParams::validate() const {
  if (n_levels < 1) throw std::invalid_argument("PolymerParams: n_levels must be >= 1");
  if (drift.size() != n_levels) throw std::invalid_argument("PolymerParams: drift must have n_levels entries");
  for (Eigen::Index i = 0; i + 1 < drift.size(); ++i) {
    if (drift(i) < drift(i + 1)) throw std::invalid_argument("PolymerParams: drift must be weakly decreasing");
  }
  if (!(t_max > 0.0)) throw std::invalid_argument("PolymerParams: t_max must be positive");
  if (m_steps < 50 * n_levels) {
    throw std::invalid_argument("PolymerParams: m_steps must be at least 50 * n_levels (got " +
                                std::to_string(m_steps) + ")");
  }
  if (n_replicas < 1) throw std::invalid_argument("PolymerParams: n_replicas must be positive");
}

Vector polymer_log_partition(const Matrix& levels, double dt) {
  if (levels.rows() < 1 || levels.cols() < 1) throw std::invalid_argument("polymer_log_partition: empty levels");
  if (!(dt > 0.0)) throw std::invalid_argument("polymer_log_partition: dt must be positive");
  const Eigen::Index n = levels.rows();
  const Eigen::Index cols = levels.cols();
  const double log_half_dt = std::log(0.5 * dt);
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();

  Vector prev = levels.row(0).transpose();
  Vector cur(cols);
  for (Eigen::Index i = 1; i < n; ++i) {
    cur(0) = neg_inf;
    for (Eigen::Index k = 1; k < cols; ++k) {
      const double db = levels(i, k) - levels(i, k - 1);
      const double jump = log_half_dt + log_add_exp(db + prev(k - 1), prev(k));
      cur(k) = log_add_exp(db + cur(k - 1), jump);
    }
    prev.swap(cur);
  }
  return prev;
}

Vector two_level_log_quadrature(const Matrix& levels, double dt) {
  if (levels.rows() != 2) throw std::invalid_argument("two_level_log_quadrature: need exactly two levels");
  const Eigen::Index cols = levels.cols();
  Vector out(cols);
  out(0) = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  for (Eigen::Index k = 1; k < cols; ++k) {
    terms.clear();
    for (Eigen::Index j = 0; j <= k; ++j) {
      const double w = (j == 0 || j == k) ? 0.5 * dt : dt;
      terms.push_back(std::log(w) + levels(0, j) + levels(1, k) - levels(1, j));
    }
    out(k) = log_sum_exp(terms);
  }
  return out;
}

Matrix sample_polymer_levels(const PolymerParams& params, RngStream& rng) {
  const int m = params.m_steps;
  const double dt = params.t_max / m;
  const double sd = std::sqrt(dt);
  Matrix levels(params.n_levels, m + 1);
  for (int i = 0; i < params.n_levels; ++i) {
    levels(i, 0) = 0.0;
    for (int k = 1; k <= m; ++k) levels(i, k) = levels(i, k - 1) + params.drift(i) * dt + sd * rng.normal();
  }
  return levels;
}

PathBundle polymer_free_energy(const PolymerParams& params, RngStream& rng) {
  params.validate();
  const Matrix levels = sample_polymer_levels(params, rng);
  const Vector top = polymer_log_partition(levels, params.t_max / params.m_steps);
  return PathBundle(params.grid(), LayerRange{1, 1}, top.transpose());
}

namespace {

PathEnsemble sample_top_lines(const PolymerParams& params, long n_replicas, const RngStream& rng, int workers,
                              const TimeGrid& window) {
  const TimeGrid full = params.grid();
  const int first = full.require_index(window.a());
  const int count = window.size();
  PathEnsemble out;
  out.grid = window;
  out.layers = LayerRange{1, 1};
  out.values.resize(static_cast<std::size_t>(n_replicas));
  const double dt = params.t_max / params.m_steps;
  parallel_for(n_replicas, workers, [&](long r) {
    RngStream s = rng.substream(static_cast<std::uint64_t>(r));
    const Vector top = polymer_log_partition(sample_polymer_levels(params, s), dt);
    out.values[static_cast<std::size_t>(r)] = top.segment(first, count).transpose();
  });
  return out;
}

}  // namespace

PathEnsemble polymer_ensemble(const PolymerParams& params, long n_replicas, const RngStream& rng, int workers) {
  params.validate();
  return sample_top_lines(params, n_replicas, rng, workers, params.grid());
}

ModulusReport oy_modulus_suite(const PolymerParams& params, double alpha, std::pair<double, double> window,
                               const RngStream& rng, int workers, const std::vector<double>& p_values,
                               std::vector<TimePair> pairs) {
  params.validate();
  const auto [a, b] = window;
  if (!(a > 0.0 && a < b && b <= params.t_max + 1e-12)) {
    throw std::invalid_argument("oy_modulus_suite: window must lie inside (0, t_max]");
  }
  if (pairs.empty()) {
    for (TimePair p : default_pairs(b - a)) pairs.push_back(TimePair{a + p.s, a + p.t});
  }
  const TimeGrid grid = params.grid().restrict(a, b);
  const Matrix means =
      ensemble_means(sample_top_lines(params, params.n_replicas, rng.substream("centering"), workers, grid)).means();
  const PathEnsemble centered =
      center_paths(sample_top_lines(params, params.n_replicas, rng.substream("paths"), workers, grid), means);
  return build_modulus_report(centered, p_values, pairs, alpha, a, b);
}

}  // namespace dysonlab
