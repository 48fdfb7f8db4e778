#include "dysonlab/girsanov.hpp"

#include <algorithm>
#include <cmath>

#include "dysonlab/parallel.hpp"
#include "dysonlab/stats.hpp"

namespace dysonlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool clear_of_collision(const Eigen::Ref<const Vector>& x) {
  return x.size() < 2 || (check_weyl(x) && min_gap(x) >= kCollisionGap);
}

double log_v_free_trapezoid(double beta, const PathBundle& path) {
  const auto& g = path.grid();
  double integral = 0.0;
  double prev = v_beta(beta, path.values().col(0));
  for (int k = 1; k < g.size(); ++k) {
    const double cur = v_beta(beta, path.values().col(k));
    integral += 0.5 * (g[k] - g[k - 1]) * (prev + cur);
    prev = cur;
  }
  return integral;
}

}  // namespace

double log_path_weight_m_beta(double beta, const PathBundle& path) {
  const auto& v = path.values();
  if (v.rows() > 1 && !check_weyl(v.col(0))) {
    throw std::invalid_argument("path_weight_m_beta: start is not in the Weyl chamber (h_beta(z(0)) = 0)");
  }
  for (int k = 0; k < v.cols(); ++k) {
    if (!clear_of_collision(v.col(k))) return -kInf;
  }
  const double lh0 = log_h_beta(beta, v.col(0));
  const double lh1 = log_h_beta(beta, v.col(v.cols() - 1));
  return lh1 - lh0 - log_v_free_trapezoid(beta, path);
}

double path_weight_m_beta(double beta, const PathBundle& path) { return std::exp(log_path_weight_m_beta(beta, path)); }

void HamiltonianSpec::validate() const {
  if (!(a < b)) throw std::invalid_argument("HamiltonianSpec: require a < b");
  if (quadrature < 1) throw std::invalid_argument("HamiltonianSpec: quadrature must be >= 1");
  if (layers.size() < 1) throw std::invalid_argument("HamiltonianSpec: empty layer range");
  for (const auto& pt : point_terms) {
    if (pt.t < a || pt.t > b) throw std::invalid_argument("HamiltonianSpec: point term outside [a,b]");
  }
}

TimeGrid HamiltonianSpec::quadrature_grid() const {
  validate();
  std::vector<double> t = TimeGrid::uniform(a, b, quadrature).times();
  const double tol = 1e-9 * (b - a);
  for (const auto& pt : point_terms) {
    const bool present = std::any_of(t.begin(), t.end(), [&](double s) { return std::abs(s - pt.t) <= tol; });
    if (!present) t.push_back(pt.t);
  }
  std::sort(t.begin(), t.end());
  return TimeGrid::from_times(std::move(t));
}

double eval_hamiltonian(const HamiltonianSpec& spec, const PathBundle& path) {
  spec.validate();
  if (path.n_layers() != spec.layers.size()) throw std::invalid_argument("eval_hamiltonian: layer count mismatch");
  const auto& g = path.grid();
  double h = 0.0;
  for (const auto& pt : spec.point_terms) {
    const auto k = g.index_of(pt.t);
    if (!k) throw std::invalid_argument("eval_hamiltonian: point-term time is not on the path grid");
    h += pt.f(path.values().col(*k));
  }
  if (spec.integrand) {
    const int n = spec.quadrature;
    const double width = (spec.b - spec.a) / n;
    double sum = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double tau = spec.a + (spec.b - spec.a) * i / n;
      const auto k = g.index_of(tau);
      if (!k) throw std::invalid_argument("eval_hamiltonian: quadrature node is not on the path grid");
      const double w = (i == 0 || i == n) ? 0.5 : 1.0;
      sum += w * (*spec.integrand)(tau, path.values().col(*k));
    }
    h += width * sum;
  }
  return h;
}

PathBundle sample_bridge(const LayerRange& layers, const BridgeSpec& bridge, const TimeGrid& grid, RngStream& rng) {
  const int n = layers.size();
  if (bridge.x.size() != n || bridge.y.size() != n) throw std::invalid_argument("sample_bridge: boundary size mismatch");
  const double a = grid.a();
  const double b = grid.b();
  Matrix z(n, grid.size());
  for (int l = 0; l < n; ++l) {
    double w = 0.0;
    z(l, 0) = bridge.x(l);
    for (int k = 1; k < grid.size(); ++k) {
      const double t0 = grid[k - 1];
      const double t1 = grid[k];
      if (k + 1 == grid.size()) {
        w = 0.0;
      } else {
        const double mean = w * (b - t1) / (b - t0);
        const double var = (t1 - t0) * (b - t1) / (b - t0);
        w = mean + std::sqrt(var) * rng.normal();
      }
      const double frac = (t1 - a) / (b - a);
      z(l, k) = w + bridge.x(l) + frac * (bridge.y(l) - bridge.x(l));
      if (bridge.eta) z(l, k) += bridge.eta(l, t1);
    }
  }
  return PathBundle(grid, layers, std::move(z));
}

McEstimate estimate_partition_bridge(const HamiltonianSpec& spec, const BridgeSpec& bridge, long n_replicas,
                                     const RngStream& rng, int workers) {
  const TimeGrid grid = spec.quadrature_grid();
  if (bridge.eta) {
    for (int l = 0; l < spec.layers.size(); ++l) {
      if (std::abs(bridge.eta(l, spec.a)) > 1e-12 || std::abs(bridge.eta(l, spec.b)) > 1e-12) {
        throw std::invalid_argument("estimate_partition_bridge: eta must vanish at both endpoints");
      }
    }
  }
  std::vector<double> samples(static_cast<std::size_t>(n_replicas));
  parallel_for(n_replicas, workers, [&](long r) {
    RngStream s = rng.substream(static_cast<std::uint64_t>(r));
    const PathBundle z = sample_bridge(spec.layers, bridge, grid, s);
    samples[static_cast<std::size_t>(r)] = std::exp(-eval_hamiltonian(spec, z));
  });
  return McEstimate::from_samples(samples, rng.master_seed());
}

PathBundle sample_brownian(const Vector& x_start, const TimeGrid& grid, RngStream& rng) {
  const auto n = static_cast<int>(x_start.size());
  Matrix z(n, grid.size());
  z.col(0) = x_start;
  for (int k = 1; k < grid.size(); ++k) {
    const double sd = std::sqrt(grid[k] - grid[k - 1]);
    for (int i = 0; i < n; ++i) z(i, k) = z(i, k - 1) + sd * rng.normal();
  }
  return PathBundle(grid, LayerRange{1, n}, std::move(z));
}

HamiltonianSpec mollified_dbm_hamiltonian(double beta, double eps, int n, double t0, int quadrature) {
  HamiltonianSpec spec;
  spec.layers = LayerRange{1, n};
  spec.a = 0.0;
  spec.b = t0;
  spec.quadrature = quadrature;
  spec.point_terms.push_back(PointTerm{t0, ConvexFn(convex::LogBarrierEps{beta, eps})});
  if (beta > 2.0) {
    spec.integrand = Integrand{ConvexFn(convex::InvSquareEps{beta, eps}), {}};
  } else {
    spec.integrand = Integrand{ConvexFn(convex::HingeEps{eps}), {}};
  }
  return spec;
}

double dbm_hamiltonian(double beta, const PathBundle& path) {
  const auto& v = path.values();
  for (int k = 0; k < v.cols(); ++k) {
    if (!check_weyl(v.col(k))) return kInf;
  }
  return -log_h_beta(beta, v.col(v.cols() - 1)) + log_v_free_trapezoid(beta, path);
}

WeightedEstimate weighted_expectation(double beta, const PathFunctional& functional, const DysonParams& params,
                                      const TimeGrid& grid, long n_replicas, const RngStream& rng, int workers,
                                      double min_ess) {
  params.validate();
  if (!check_weyl(params.x_start)) {
    throw std::invalid_argument("weighted_expectation: x_start must lie strictly inside the Weyl chamber");
  }
  if (grid.a() != 0.0) throw std::invalid_argument("weighted_expectation: grid must start at 0");
  std::vector<double> log_w(static_cast<std::size_t>(n_replicas));
  std::vector<double> g(static_cast<std::size_t>(n_replicas));
  parallel_for(n_replicas, workers, [&](long r) {
    RngStream s = rng.substream(static_cast<std::uint64_t>(r));
    const PathBundle z = sample_brownian(params.x_start, grid, s);
    const double lw = log_path_weight_m_beta(beta, z);
    log_w[static_cast<std::size_t>(r)] = lw;
    g[static_cast<std::size_t>(r)] = std::isfinite(lw) ? functional(z) : 0.0;
  });
  WeightedEstimate out;
  out.n_zero_weight = std::count_if(log_w.begin(), log_w.end(), [](double x) { return !std::isfinite(x); });
  if (out.n_zero_weight == n_replicas) throw DegenerateWeightsError("weighted_expectation: every path left the chamber");
  out.ess = effective_sample_size(log_w);
  if (out.ess < min_ess) {
    throw DegenerateWeightsError("weighted_expectation: effective sample size " + std::to_string(out.ess) +
                                 " below " + std::to_string(min_ess));
  }
  out.estimate = self_normalized_mean(log_w, g, rng.master_seed());
  return out;
}

}  // namespace dysonlab
