#include "dysonlab/dyson.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include <Eigen/Eigenvalues>

#include "dysonlab/parallel.hpp"

namespace dysonlab {

void IntegratorReport::merge(const IntegratorReport& other) {
  n_substeps_total += other.n_substeps_total;
  min_gap_seen = std::min(min_gap_seen, other.min_gap_seen);
  dt_rejections += other.dt_rejections;
  implicit_steps += other.implicit_steps;
}

PathEnsemble PathEnsemble::restrict(double lo, double hi) const {
  PathEnsemble out;
  const int i0 = grid.require_index(lo);
  const int i1 = grid.require_index(hi);
  out.grid = grid.restrict(lo, hi);
  out.layers = layers;
  out.values.reserve(values.size());
  for (const auto& v : values) out.values.emplace_back(v.middleCols(i0, i1 - i0 + 1));
  return out;
}

Vector dbm_drift(double beta, const Vector& x) {
  const Eigen::Index n = x.size();
  Vector d = Vector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double f = 0.5 * beta / (x(i) - x(j));
      d(i) += f;
      d(j) -= f;
    }
  }
  return d;
}

double second_moment_rate(double beta, int n) { return n + 0.5 * beta * n * (n - 1); }

namespace {

constexpr double kSpread = 1e-3;
constexpr int kMaxBisections = 200;

/// Backward-Euler step x = y + tau b(x): the unique minimizer over the ordered
/// chamber of |x - y|^2 / (2 tau) - (beta/2) sum_{i<j} log(x_i - x_j),
/// found by damped Newton iterations that never leave the chamber.
Vector implicit_drift_step(const Vector& y, double tau, double beta) {
  const Eigen::Index n = y.size();
  auto objective = [&](const Vector& x) {
    double f = 0.5 * (x - y).squaredNorm() / tau;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) f -= 0.5 * beta * std::log(x(i) - x(j));
    return f;
  };
  // Feasible start: y sorted decreasingly with gaps of at least half the drift scale.
  const double spacing = 0.5 * std::sqrt(0.5 * beta * tau);
  Vector x = y;
  std::sort(x.data(), x.data() + n, std::greater<double>());
  for (Eigen::Index i = 0; i + 1 < n; ++i) x(i + 1) = std::min(x(i + 1), x(i) - spacing);
  x.array() += y.mean() - x.mean();
  Vector grad(n);
  Matrix hess(n, n);
  for (int it = 0; it < 200; ++it) {
    grad = (x - y) / tau;
    hess = Matrix::Identity(n, n) / tau;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double d = x(i) - x(j);
        const double g = 0.5 * beta / d;
        const double w = 0.5 * beta / (d * d);
        grad(i) -= g;
        grad(j) += g;
        hess(i, i) += w;
        hess(j, j) += w;
        hess(i, j) -= w;
        hess(j, i) -= w;
      }
    }
    const Vector step = hess.llt().solve(grad);
    const double decrement = grad.dot(step);
    if (decrement <= 1e-24) break;
    const double f0 = objective(x);
    double lambda = 1.0;
    Vector trial = x - step;
    while (!check_weyl(trial) || objective(trial) > f0 - 0.25 * lambda * decrement) {
      lambda *= 0.5;
      if (lambda < 1e-30) return x;  // converged to rounding
      trial = x - lambda * step;
    }
    x = trial;
  }
  return x;
}

class EulerStepper {
 public:
  EulerStepper(const DysonParams& p, RngStream& rng, IntegratorReport& report)
      : p_(p), rng_(rng), report_(report), n_(p.n_particles), trial_(n_), drift_(n_) {}

  // Advances x over dt with Brownian increment dw, bisecting on ordering failure.
  void advance(Vector& x, double dt, const Vector& dw, int depth) {
    compute_drift(x);
    trial_ = x + drift_ * dt + dw;
    if (check_weyl(trial_)) {
      x = trial_;
      ++report_.n_substeps_total;
      report_.min_gap_seen = std::min(report_.min_gap_seen, min_gap(x));
      return;
    }
    const double half = 0.5 * dt;
    if (half < p_.dt_min || depth >= kMaxBisections) {
      if (p_.implicit_fallback) {
        trial_ = implicit_drift_step(x + dw, dt, p_.beta);
        if (!check_weyl(trial_) || !trial_.allFinite()) {
          throw IntegratorError("simulate_dbm: drift-implicit fallback left the chamber");
        }
        x = trial_;
        ++report_.n_substeps_total;
        ++report_.implicit_steps;
        report_.min_gap_seen = std::min(report_.min_gap_seen, min_gap(x));
        return;
      }
      throw IntegratorError("simulate_dbm: cannot keep particles ordered with dt >= dt_min (gap " +
                            std::to_string(min_gap(x)) + ")");
    }
    ++report_.dt_rejections;
    Vector mid(n_);
    const double s = std::sqrt(0.5 * half);
    for (int i = 0; i < n_; ++i) mid(i) = 0.5 * dw(i) + s * rng_.normal();
    const Vector rest = dw - mid;
    advance(x, half, mid, depth + 1);
    advance(x, half, rest, depth + 1);
  }

 private:
  void compute_drift(const Vector& x) {
    drift_.setZero();
    for (int i = 0; i < n_; ++i) {
      for (int j = i + 1; j < n_; ++j) {
        const double f = 0.5 * p_.beta / (x(i) - x(j));
        drift_(i) += f;
        drift_(j) -= f;
      }
    }
  }

  const DysonParams& p_;
  RngStream& rng_;
  IntegratorReport& report_;
  int n_;
  Vector trial_;
  Vector drift_;
};

Vector spread_ties(const Vector& x0, double dt_min) {
  Vector x = x0;
  const double delta = kSpread * std::sqrt(dt_min);
  const Eigen::Index n = x.size();
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j + 1 < n && x0(j + 1) == x0(i)) ++j;
    const Eigen::Index m = j - i + 1;
    if (m > 1) {
      for (Eigen::Index k = 0; k < m; ++k) x(i + k) = x0(i) + delta * (0.5 * static_cast<double>(m - 1) - static_cast<double>(k));
    }
    i = j + 1;
  }
  return x;
}

bool has_ties(const Vector& x) {
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i)
    if (x(i) == x(i + 1)) return true;
  return false;
}

}  // namespace

DbmSample simulate_dbm(const DysonParams& params, const TimeGrid& grid, RngStream& rng) {
  params.validate();
  if (grid.a() != 0.0) throw std::invalid_argument("simulate_dbm: grid must start at 0");
  if (std::abs(grid.b() - params.horizon) > 1e-12 * params.horizon) {
    throw std::invalid_argument("simulate_dbm: grid must end at the horizon");
  }
  const int n = params.n_particles;
  IntegratorReport report;
  EulerStepper stepper(params, rng, report);

  Vector x = spread_ties(params.x_start, params.dt_min);
  Matrix values(n, grid.size());
  values.col(0) = x;
  if (n > 1) report.min_gap_seen = min_gap(x);

  Vector dw(n);
  double t_seed = 0.0;
  if (n > 1 && has_ties(params.x_start)) {
    // Leave the boundary with one drift-implicit step, which always lands in the chamber.
    const double tau = std::min(params.dt_base, grid[1]);
    const double sd = std::sqrt(tau);
    for (int i = 0; i < n; ++i) dw(i) = sd * rng.normal();
    x = implicit_drift_step(x + dw, tau, params.beta);
    ++report.n_substeps_total;
    report.min_gap_seen = std::min(report.min_gap_seen, min_gap(x));
    t_seed = tau;
  }
  for (int k = 0; k + 1 < grid.size(); ++k) {
    double t = std::max(grid[k], t_seed);
    const double t_next = grid[k + 1];
    while (t < t_next) {
      double dt = params.dt_base;
      if (n > 1) {
        const double g = min_gap(x);
        dt = std::clamp(params.gap_safety * g * g / params.beta, params.dt_min, params.dt_base);
      }
      // Absorb a sliver remainder into this step instead of taking a tiny one.
      const bool last = t + dt >= t_next || t_next - (t + dt) < 1e-3 * dt;
      if (last) dt = t_next - t;
      const double sd = std::sqrt(dt);
      for (int i = 0; i < n; ++i) dw(i) = sd * rng.normal();
      stepper.advance(x, dt, dw, 0);
      t = last ? t_next : t + dt;
    }
    values.col(k + 1) = x;
  }
  return DbmSample{PathBundle(grid, LayerRange{1, n}, std::move(values), n > 1), report};
}

DbmEnsemble simulate_ensemble(const DysonParams& params, const TimeGrid& grid, long n_replicas,
                              const RngStream& rng, int workers) {
  params.validate();
  DbmEnsemble out;
  out.paths.grid = grid;
  out.paths.layers = LayerRange{1, params.n_particles};
  out.paths.values.resize(static_cast<std::size_t>(n_replicas));
  std::vector<IntegratorReport> reports(static_cast<std::size_t>(n_replicas));
  parallel_for(n_replicas, workers, [&](long r) {
    RngStream stream = rng.substream(static_cast<std::uint64_t>(r));
    DbmSample s = simulate_dbm(params, grid, stream);
    out.paths.values[static_cast<std::size_t>(r)] = s.path.values();
    reports[static_cast<std::size_t>(r)] = s.report;
  });
  for (const auto& rep : reports) out.report.merge(rep);
  return out;
}

Vector sample_hermitian_oracle(int n, double t, RngStream& rng) {
  if (!(t > 0.0)) throw std::invalid_argument("oracle: t must be positive");
  if (n < 1) throw std::invalid_argument("oracle: n must be positive");
  if (n == 1) return Vector::Constant(1, std::sqrt(t) * rng.normal());
  Eigen::MatrixXcd h(n, n);
  const double sd_diag = std::sqrt(t);
  const double sd_off = std::sqrt(0.5 * t);
  for (int i = 0; i < n; ++i) {
    h(i, i) = sd_diag * rng.normal();
    for (int j = i + 1; j < n; ++j) {
      const double re = sd_off * rng.normal();
      const double im = sd_off * rng.normal();
      h(j, i) = {re, im};
      h(i, j) = {re, -im};
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().reverse();
}

double tridiagonal_scale(double beta, int n) {
  // E[d_i^2] = 1 and E[e_k^2] = beta (n - k) / 2, so E tr H^2 = n + beta n (n-1) / 2.
  double trace_moment = n;
  for (int k = 1; k < n; ++k) trace_moment += 2.0 * 0.5 * beta * (n - k);
  return std::sqrt(second_moment_rate(beta, n) / trace_moment);
}

Vector sample_tridiagonal_oracle(double beta, int n, double t, RngStream& rng) {
  if (!(t > 0.0)) throw std::invalid_argument("oracle: t must be positive");
  if (n < 1) throw std::invalid_argument("oracle: n must be positive");
  if (!(beta > 0.0)) throw std::invalid_argument("oracle: beta must be positive");
  Vector diag(n);
  Vector sub(std::max(n - 1, 0));
  for (int i = 0; i < n; ++i) diag(i) = rng.normal();
  for (int k = 1; k < n; ++k) sub(k - 1) = rng.chi(beta * (n - k)) / std::sqrt(2.0);
  Vector ev;
  if (n == 1) {
    ev = diag;
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    ev = solver.eigenvalues().reverse();
  }
  return ev * (std::sqrt(t) * tridiagonal_scale(beta, n));
}

Vector sample_fixed_time_oracle(double beta, int n, double t, RngStream& rng) {
  if (beta == 2.0) return sample_hermitian_oracle(n, t, rng);
  return sample_tridiagonal_oracle(beta, n, t, rng);
}

EstimateTable ensemble_means(const PathEnsemble& ensemble, std::uint64_t seed) {
  const int rows = ensemble.n_layers();
  const int cols = ensemble.grid.size();
  const long n = ensemble.size();
  Matrix sum = Matrix::Zero(rows, cols);
  for (const auto& v : ensemble.values) sum += v;
  const Matrix mean = sum / static_cast<double>(n);
  Matrix ss = Matrix::Zero(rows, cols);
  for (const auto& v : ensemble.values) ss += (v - mean).array().square().matrix();
  EstimateTable table(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      McEstimate& e = table(r, c);
      e.mean = mean(r, c);
      e.std_error = n > 1 ? std::sqrt(ss(r, c) / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
      e.n_replicas = n;
      e.seed = seed;
    }
  }
  return table;
}

EstimateTable estimate_mean_curves(const DysonParams& params, const TimeGrid& grid, long n_replicas,
                                   const RngStream& rng, int workers) {
  if (n_replicas < 2) throw std::invalid_argument("estimate_mean_curves: need at least 2 replicas");
  const DbmEnsemble e = simulate_ensemble(params, grid, n_replicas, rng, workers);
  return ensemble_means(e.paths, rng.master_seed());
}

}  // namespace dysonlab
