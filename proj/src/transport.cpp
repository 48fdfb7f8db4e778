#include "dysonlab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dysonlab/parallel.hpp"
#include "dysonlab/stats.hpp"

namespace dysonlab {

namespace {

constexpr double kGaussNodes[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363};
constexpr double kGaussWeights[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

template <typename F>
double gauss_legendre(F&& f, double lo, double hi) {
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  double s = 0.0;
  for (int i = 0; i < 4; ++i) {
    s += kGaussWeights[i] * (f(mid - half * kGaussNodes[i]) + f(mid + half * kGaussNodes[i]));
  }
  return half * s;
}

}  // namespace

TiltedGaussian1D TiltedGaussian1D::standard() { return TiltedGaussian1D{}; }

TiltedGaussian1D TiltedGaussian1D::from_convex(const ConvexFn& f, int dim) {
  TiltedGaussian1D d;
  d.name = f.name();
  d.tilt = [f, dim](double x) {
    Vector v = Vector::Zero(dim);
    v(0) = x;
    return f(v);
  };
  return d;
}

double TiltedGaussian1D::log_density(double x) const { return -0.5 * x * x - (tilt ? tilt(x) : 0.0); }

MonotoneMap1D::MonotoneMap1D(const TiltedGaussian1D& source, const TiltedGaussian1D& target)
    : source_(source), target_(target) {
  if (source.n_grid != target.n_grid || source.half_width != target.half_width) {
    throw std::invalid_argument("brenier_1d: source and target must share the evaluation grid");
  }
  if (source.n_grid < 3) throw std::invalid_argument("brenier_1d: grid too coarse");
  const double L = source.half_width;
  nodes_ = Vector::LinSpaced(source.n_grid, -L, L);
  h_ = 2.0 * L / (source.n_grid - 1);
  src_ = build(source_);
  tgt_ = build(target_);
}

MonotoneMap1D::Tables MonotoneMap1D::build(const TiltedGaussian1D& d) const {
  const Eigen::Index n = nodes_.size();
  Tables t;
  t.log_scale = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < n; ++k) t.log_scale = std::max(t.log_scale, d.log_density(nodes_(k)));
  if (!std::isfinite(t.log_scale)) throw std::invalid_argument("brenier_1d: density vanishes on the grid");
  Vector cell(n - 1);
  for (Eigen::Index k = 0; k + 1 < n; ++k) cell(k) = partial_mass(d, t, nodes_(k), nodes_(k + 1));
  t.lower = Vector::Zero(n);
  t.upper = Vector::Zero(n);
  for (Eigen::Index k = 1; k < n; ++k) t.lower(k) = t.lower(k - 1) + cell(k - 1);
  for (Eigen::Index k = n - 2; k >= 0; --k) t.upper(k) = t.upper(k + 1) + cell(k);
  t.total = t.lower(n - 1);
  if (!(t.total > 0.0)) throw std::invalid_argument("brenier_1d: density has no mass on the grid");
  t.lower /= t.total;
  t.upper /= t.upper(0);
  return t;
}

double MonotoneMap1D::partial_mass(const TiltedGaussian1D& d, const Tables& t, double lo, double hi) const {
  if (hi <= lo) return 0.0;
  return gauss_legendre([&](double x) { return std::exp(d.log_density(x) - t.log_scale); }, lo, hi);
}

double MonotoneMap1D::invert(double q_lower, double q_upper) const {
  const Eigen::Index n = nodes_.size();
  double lo, hi, target_mass;
  bool from_left;
  if (q_lower <= 0.5) {
    // last node with lower <= q
    const double* begin = tgt_.lower.data();
    Eigen::Index j = std::upper_bound(begin, begin + n, q_lower) - begin - 1;
    j = std::clamp<Eigen::Index>(j, 0, n - 2);
    lo = nodes_(j);
    hi = nodes_(j + 1);
    target_mass = (q_lower - tgt_.lower(j)) * tgt_.total;
    from_left = true;
  } else {
    // first node with upper <= q (upper is decreasing)
    Eigen::Index j = 0;
    Eigen::Index a = 0, b = n - 1;
    while (a < b) {
      const Eigen::Index m = (a + b) / 2;
      if (tgt_.upper(m) <= q_upper) b = m; else a = m + 1;
    }
    j = std::clamp<Eigen::Index>(a, 1, n - 1);
    lo = nodes_(j - 1);
    hi = nodes_(j);
    target_mass = (q_upper - tgt_.upper(j)) * tgt_.total;
    from_left = false;
  }
  const double cell_lo = lo, cell_hi = hi;
  auto residual = [&](double y) {
    return from_left ? partial_mass(target_, tgt_, cell_lo, y) - target_mass
                     : target_mass - partial_mass(target_, tgt_, y, cell_hi);
  };
  double y = 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    const double r = residual(y);
    if (r > 0) hi = y; else lo = y;
    const double dens = std::exp(target_.log_density(y) - tgt_.log_scale);
    double next = dens > 0.0 ? y - r / dens : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - y) <= 1e-15 * std::max(1.0, std::abs(y)) || hi - lo <= 1e-15 * std::max(1.0, std::abs(y))) {
      return next;
    }
    y = next;
  }
  return y;
}

double MonotoneMap1D::operator()(double x) const {
  const Eigen::Index n = nodes_.size();
  const double L = source_.half_width;
  if (x <= -L) return nodes_(0);
  if (x >= L) return nodes_(n - 1);
  Eigen::Index k = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor((x + L) / h_)), 0, n - 2);
  const double ql = src_.lower(k) + partial_mass(source_, src_, nodes_(k), x) / src_.total;
  const double qu = src_.upper(k + 1) + partial_mass(source_, src_, x, nodes_(k + 1)) / src_.total;
  return invert(ql, qu);
}

TabulatedMap MonotoneMap1D::tabulate(double tail_cut) const {
  std::vector<double> xs, ys;
  for (Eigen::Index k = 0; k < nodes_.size(); ++k) {
    const double ql = src_.lower(k);
    const double qu = src_.upper(k);
    if (std::min(ql, qu) < tail_cut) continue;
    if (!xs.empty() && !(ql > src_.lower(k - 1))) {
      throw std::invalid_argument("brenier_1d: grid too coarse, source CDF not strictly increasing");
    }
    const double y = invert(ql, qu);
    if (!ys.empty() && !(y > ys.back())) {
      throw std::invalid_argument("brenier_1d: grid too coarse, target quantiles not strictly increasing");
    }
    xs.push_back(nodes_(k));
    ys.push_back(y);
  }
  if (xs.size() < 3) throw std::invalid_argument("brenier_1d: grid too coarse, fewer than 3 resolved nodes");
  TabulatedMap m;
  m.x = Eigen::Map<Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  m.y = Eigen::Map<Vector>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  return m;
}

TabulatedMap brenier_1d(const TiltedGaussian1D& source, const TiltedGaussian1D& target, double tail_cut) {
  return MonotoneMap1D(source, target).tabulate(tail_cut);
}

double contraction_check(const TabulatedMap& map) {
  if (map.x.size() < 3 || map.y.size() != map.x.size()) throw std::invalid_argument("contraction_check: need >= 3 points");
  double best = 0.0;
  for (Eigen::Index k = 0; k + 1 < map.x.size(); ++k) {
    best = std::max(best, std::abs((map.y(k + 1) - map.y(k)) / (map.x(k + 1) - map.x(k))));
  }
  return best;
}

TiltSampler gaussian_tilt_sampler(Vector mean, const Matrix& cov, ScalarField neg_log_tilt) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("gaussian_tilt_sampler: covariance not positive definite");
  Matrix chol = llt.matrixL();
  return [mean = std::move(mean), chol = std::move(chol), v = std::move(neg_log_tilt)](RngStream& rng) {
    Vector z(mean.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
    WeightedDraw d;
    d.w = mean + chol * z;
    d.log_weight = v ? -v(d.w) : 0.0;
    return d;
  };
}

TiltSampler bridge_marginal_sampler(HamiltonianSpec spec, BridgeSpec bridge, std::vector<double> times) {
  std::vector<double> t = spec.quadrature_grid().times();
  const double tol = 1e-9 * (spec.b - spec.a);
  for (double s : times) {
    if (s <= spec.a || s >= spec.b) throw std::invalid_argument("bridge_marginal_sampler: times must be interior");
    if (std::none_of(t.begin(), t.end(), [&](double u) { return std::abs(u - s) <= tol; })) t.push_back(s);
  }
  std::sort(t.begin(), t.end());
  TimeGrid grid = TimeGrid::from_times(std::move(t));
  std::vector<int> idx;
  for (double s : times) idx.push_back(grid.require_index(s));
  return [spec = std::move(spec), bridge = std::move(bridge), grid = std::move(grid), idx](RngStream& rng) {
    const PathBundle z = sample_bridge(spec.layers, bridge, grid, rng);
    const int layers = z.n_layers();
    WeightedDraw d;
    d.w.resize(layers * static_cast<int>(idx.size()));
    for (int l = 0; l < layers; ++l)
      for (std::size_t q = 0; q < idx.size(); ++q) d.w(l * static_cast<int>(idx.size()) + static_cast<int>(q)) = z.values()(l, idx[q]);
    d.log_weight = -eval_hamiltonian(spec, z);
    return d;
  };
}

bool TransportCheckReport::all_pass() const {
  return std::all_of(harge_table.begin(), harge_table.end(), [](const HargeRow& r) { return r.pass; });
}

TransportCheckReport harge_check(const TiltSampler& sampler, int dim, const std::vector<TestFunction>& test_fns,
                                 long n_replicas, const RngStream& rng, int workers, double k_sigma) {
  if (n_replicas < 2) throw std::invalid_argument("harge_check: need at least 2 replicas");
  auto draw_batch = [&](std::string_view tag) {
    std::vector<WeightedDraw> out(static_cast<std::size_t>(n_replicas));
    const RngStream base = rng.substream(tag);
    parallel_for(n_replicas, workers, [&](long r) {
      RngStream s = base.substream(static_cast<std::uint64_t>(r));
      out[static_cast<std::size_t>(r)] = sampler(s);
      if (out[static_cast<std::size_t>(r)].w.size() != dim) throw std::invalid_argument("harge_check: sampler dimension mismatch");
    });
    return out;
  };
  auto log_weights = [](const std::vector<WeightedDraw>& b) {
    std::vector<double> lw;
    lw.reserve(b.size());
    for (const auto& d : b) lw.push_back(d.log_weight);
    return lw;
  };

  const auto mean_batch = draw_batch("means");
  const auto mu_batch = draw_batch("mu");
  const auto gamma_batch = draw_batch("gamma");

  Vector mean_gamma = Vector::Zero(dim);
  Vector mean_mu = Vector::Zero(dim);
  {
    const auto w = normalized_weights(log_weights(mean_batch));
    for (std::size_t r = 0; r < mean_batch.size(); ++r) {
      mean_gamma += mean_batch[r].w;
      mean_mu += w[r] * mean_batch[r].w;
    }
    mean_gamma /= static_cast<double>(mean_batch.size());
  }

  TransportCheckReport report;
  const auto mu_lw = log_weights(mu_batch);
  report.ess = effective_sample_size(mu_lw);
  if (report.ess < 10.0) throw DegenerateWeightsError("harge_check: effective sample size below 10");

  RngStream screen = rng.substream("convexity-screen");
  for (const auto& tf : test_fns) {
    HargeRow row;
    row.name = tf.name;
    row.convex = midpoint_convexity_scan(tf.g, dim, 1000, screen).n_violations == 0;
    std::vector<double> g_mu(mu_batch.size()), g_gamma(gamma_batch.size());
    for (std::size_t r = 0; r < mu_batch.size(); ++r) g_mu[r] = tf.g(mu_batch[r].w - mean_mu);
    for (std::size_t r = 0; r < gamma_batch.size(); ++r) g_gamma[r] = tf.g(gamma_batch[r].w - mean_gamma);
    const McEstimate lhs = self_normalized_mean(mu_lw, g_mu, rng.master_seed());
    const McEstimate rhs = McEstimate::from_samples(g_gamma, rng.master_seed());
    row.lhs = lhs.mean;
    row.lhs_se = lhs.std_error;
    row.rhs = rhs.mean;
    row.rhs_se = rhs.std_error;
    row.pass = row.convex && row.lhs <= row.rhs + k_sigma * row.pooled_se();
    report.harge_table.push_back(row);
  }
  return report;
}

std::vector<TestFunction> default_convex_tests() {
  return {
      {"squared_norm", [](const Vector& w) { return w.squaredNorm(); }},
      {"abs_sum", [](const Vector& w) { return w.cwiseAbs().sum(); }},
      {"quartic_sum", [](const Vector& w) { return w.array().pow(4).sum(); }},
      {"max_coordinate", [](const Vector& w) { return w.maxCoeff(); }},
      {"log_sum_exp", [](const Vector& w) {
         std::vector<double> v(w.data(), w.data() + w.size());
         return log_sum_exp(v);
       }},
  };
}

SinkhornResult sinkhorn_map_2d(const Matrix& source, const Matrix& target, double epsilon, int n_iter, double tol) {
  if (source.rows() == 0 || target.rows() == 0) throw std::invalid_argument("sinkhorn_map_2d: empty sample set");
  if (source.cols() != target.cols()) throw std::invalid_argument("sinkhorn_map_2d: dimension mismatch");
  if (!(epsilon > 0.0)) throw std::invalid_argument("sinkhorn_map_2d: epsilon must be positive");
  const Eigen::Index n = source.rows();
  const Eigen::Index m = target.rows();
  Matrix kernel(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      kernel(i, j) = std::exp(-0.5 * (source.row(i) - target.row(j)).squaredNorm() / epsilon);
    }
  }
  const double a = 1.0 / static_cast<double>(n);
  const double b = 1.0 / static_cast<double>(m);
  Vector u = Vector::Constant(n, 1.0);
  Vector v = Vector::Constant(m, 1.0);
  SinkhornResult res;
  for (int it = 1; it <= n_iter; ++it) {
    v = (kernel.transpose() * u).cwiseInverse() * b;
    const Vector kv = kernel * v;
    if (it % 5 == 0 || it == n_iter) {
      res.marginal_error = (u.cwiseProduct(kv).array() - a).abs().sum();
      res.iterations = it;
      if (!std::isfinite(res.marginal_error)) throw std::runtime_error("sinkhorn_map_2d: scaling overflow; increase epsilon");
      if (res.marginal_error < tol) {
        res.converged = true;
        break;
      }
    }
    u = kv.cwiseInverse() * a;
  }
  // Barycentric projection: T(x_i) = sum_j K_ij v_j y_j / sum_j K_ij v_j.
  const Matrix weighted = kernel * v.asDiagonal() * target;
  const Vector mass = kernel * v;
  res.map = weighted.array().colwise() / mass.array();
  return res;
}

double pairwise_lipschitz(const Matrix& source, const Matrix& mapped, long n_pairs, RngStream& rng,
                          double max_radius) {
  if (mapped.rows() != source.rows()) throw std::invalid_argument("pairwise_lipschitz: size mismatch");
  std::vector<Eigen::Index> inside;
  for (Eigen::Index i = 0; i < source.rows(); ++i)
    if (source.row(i).norm() <= max_radius) inside.push_back(i);
  const auto n = static_cast<std::uint64_t>(inside.size());
  if (n < 2) throw std::invalid_argument("pairwise_lipschitz: need at least two points inside the radius");
  double best = 0.0;
  for (long k = 0; k < n_pairs; ++k) {
    const Eigen::Index i = inside[rng.next_u64() % n];
    const Eigen::Index j = inside[rng.next_u64() % n];
    if (i == j) continue;
    const double dx = (source.row(i) - source.row(j)).norm();
    if (dx == 0.0) continue;
    best = std::max(best, (mapped.row(i) - mapped.row(j)).norm() / dx);
  }
  return best;
}

namespace {

template <typename Tol>
std::vector<ConcavityViolation> scan_impl(const Matrix& l, Tol&& tol_of) {
  std::vector<ConcavityViolation> out;
  const int rows = static_cast<int>(l.rows());
  const int cols = static_cast<int>(l.cols());
  for (int i0 = 0; i0 < rows; ++i0) {
    for (int j0 = 0; j0 < cols; ++j0) {
      for (int i1 = i0; i1 < rows; ++i1) {
        for (int j1 = 0; j1 < cols; ++j1) {
          if (i1 == i0 && j1 <= j0) continue;
          const int di = i1 - i0;
          const int dj = j1 - j0;
          if (di % 2 != 0 || dj % 2 != 0) continue;
          if (!(di == 0 || dj == 0 || std::abs(di) == std::abs(dj))) continue;
          const int im = (i0 + i1) / 2;
          const int jm = (j0 + j1) / 2;
          const double deficit = 0.5 * (l(i0, j0) + l(i1, j1)) - l(im, jm);
          const double tol = tol_of(i0, j0, im, jm, i1, j1);
          if (deficit > tol) out.push_back(ConcavityViolation{i0, j0, i1, j1, deficit, tol});
        }
      }
    }
  }
  return out;
}

}  // namespace

std::vector<ConcavityViolation> logconcavity_scan(const Matrix& log_values, double tol) {
  return scan_impl(log_values, [tol](int, int, int, int, int, int) { return tol; });
}

std::vector<ConcavityViolation> logconcavity_scan(const Matrix& log_values, const Matrix& log_se, double k_sigma) {
  if (log_se.rows() != log_values.rows() || log_se.cols() != log_values.cols()) {
    throw std::invalid_argument("logconcavity_scan: SE table shape mismatch");
  }
  return scan_impl(log_values, [&](int i0, int j0, int im, int jm, int i1, int j1) {
    const double su = log_se(i0, j0), sv = log_se(i1, j1), sm = log_se(im, jm);
    return k_sigma * std::sqrt(sm * sm + 0.25 * (su * su + sv * sv));
  });
}

}  // namespace dysonlab
