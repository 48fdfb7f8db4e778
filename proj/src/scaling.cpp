#include "dysonlab/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "dysonlab/stats.hpp"

namespace dysonlab {

void EdgeScalingParams::validate() const {
  if (n_particles < 1) throw std::invalid_argument("EdgeScalingParams: n_particles must be positive");
  if (!(beta > 0.0)) throw std::invalid_argument("EdgeScalingParams: beta must be positive");
  if (!(t_lo < t_hi)) throw std::invalid_argument("EdgeScalingParams: require t_lo < t_hi");
  if (n_steps < 1) throw std::invalid_argument("EdgeScalingParams: n_steps must be >= 1");
  if (!(edge_preimage_time(beta, n_particles, t_lo) > 0.0)) {
    throw std::invalid_argument("EdgeScalingParams: pre-image times must be positive on the window");
  }
}

double edge_preimage_time(double beta, int n, double t) {
  return 2.0 / beta * (1.0 + t / std::cbrt(static_cast<double>(n)));
}

double edge_scale_value(int n, double t, double x) {
  const double nn = static_cast<double>(n);
  const double n13 = std::cbrt(nn);
  return std::pow(nn, 1.0 / 6.0) * x - 2.0 * n13 * n13 - t * n13 + 0.25 * t * t;
}

TimeGrid edge_scaled_grid(const EdgeScalingParams& p) {
  p.validate();
  return TimeGrid::uniform(p.t_lo, p.t_hi, p.n_steps);
}

TimeGrid edge_preimage_grid(const EdgeScalingParams& p) {
  const TimeGrid scaled = edge_scaled_grid(p);
  std::vector<double> t{0.0};
  for (double s : scaled.times()) t.push_back(edge_preimage_time(p.beta, p.n_particles, s));
  return TimeGrid::from_times(std::move(t));
}

namespace {

std::vector<int> preimage_indices(const TimeGrid& grid, const EdgeScalingParams& p, const TimeGrid& scaled) {
  std::vector<int> idx;
  for (double s : scaled.times()) {
    const double tau = edge_preimage_time(p.beta, p.n_particles, s);
    const auto k = grid.index_of(tau);
    if (!k) throw std::invalid_argument("edge_scale: input grid lacks pre-image time " + std::to_string(tau));
    idx.push_back(*k);
  }
  return idx;
}

Matrix scale_values(const Matrix& v, const std::vector<int>& idx, const TimeGrid& scaled, int n) {
  Matrix out(v.rows(), scaled.size());
  for (int c = 0; c < scaled.size(); ++c)
    for (int r = 0; r < v.rows(); ++r) out(r, c) = edge_scale_value(n, scaled[c], v(r, idx[static_cast<std::size_t>(c)]));
  return out;
}

}  // namespace

PathBundle edge_scale(const PathBundle& path, const EdgeScalingParams& p) {
  const TimeGrid scaled = edge_scaled_grid(p);
  const auto idx = preimage_indices(path.grid(), p, scaled);
  return PathBundle(scaled, path.layers(), scale_values(path.values(), idx, scaled, p.n_particles));
}

PathEnsemble edge_scale(const PathEnsemble& paths, const EdgeScalingParams& p) {
  const TimeGrid scaled = edge_scaled_grid(p);
  const auto idx = preimage_indices(paths.grid, p, scaled);
  PathEnsemble out{scaled, paths.layers, {}};
  out.values.reserve(paths.values.size());
  for (const auto& v : paths.values) out.values.push_back(scale_values(v, idx, scaled, p.n_particles));
  return out;
}

PathEnsemble center_paths(const PathEnsemble& paths, const Matrix& means) {
  if (means.rows() != paths.n_layers() || means.cols() != paths.grid.size()) {
    throw std::invalid_argument("center_paths: mean curves do not match the ensemble grid");
  }
  PathEnsemble out{paths.grid, paths.layers, {}};
  out.values.reserve(paths.values.size());
  for (const auto& v : paths.values) out.values.push_back(v - means);
  return out;
}

PathBundle center_path(const PathBundle& path, const Matrix& means) {
  if (means.rows() != path.n_layers() || means.cols() != path.n_times()) {
    throw std::invalid_argument("center_path: mean curves do not match the path grid");
  }
  return PathBundle(path.grid(), path.layers(), path.values() - means);
}

EstimateTable increment_moment(const PathEnsemble& centered, double p, const std::vector<TimePair>& pairs) {
  if (!(p >= 1.0)) throw std::invalid_argument("increment_moment: p must be >= 1");
  const int layers = centered.n_layers();
  const int n_pairs = static_cast<int>(pairs.size());
  std::vector<std::pair<int, int>> idx;
  for (const auto& pr : pairs) idx.emplace_back(centered.grid.require_index(pr.s), centered.grid.require_index(pr.t));
  EstimateTable table(layers, n_pairs);
  std::vector<double> buf(static_cast<std::size_t>(centered.size()));
  for (int l = 0; l < layers; ++l) {
    for (int q = 0; q < n_pairs; ++q) {
      const auto [i, j] = idx[static_cast<std::size_t>(q)];
      for (long r = 0; r < centered.size(); ++r) {
        const double d = std::abs(centered.values[static_cast<std::size_t>(r)](l, j) - centered.values[static_cast<std::size_t>(r)](l, i));
        buf[static_cast<std::size_t>(r)] = p == 2.0 ? d * d : std::pow(d, p);
      }
      table(l, q) = McEstimate::from_samples(buf);
    }
  }
  return table;
}

namespace {

// Pairwise normalizers for grid indices [i0, i1], row-major upper triangle.
struct PairTable {
  int i0 = 0;
  int i1 = 0;
  std::vector<double> inv_norm;  // (i, j) with i < j, packed

  template <typename Norm>
  PairTable(const TimeGrid& g, double a, double b, Norm&& norm) : i0(g.require_index(a)), i1(g.require_index(b)) {
    if (i1 <= i0) throw std::invalid_argument("modulus statistic: need at least two grid points in [a,b]");
    for (int i = i0; i <= i1; ++i)
      for (int j = i + 1; j <= i1; ++j) inv_norm.push_back(1.0 / norm(g[j] - g[i]));
  }

  template <typename Row>
  double sup(const Row& z) const {
    double best = 0.0;
    std::size_t k = 0;
    for (int i = i0; i <= i1; ++i) {
      const double zi = z(i);
      for (int j = i + 1; j <= i1; ++j) best = std::max(best, std::abs(z(j) - zi) * inv_norm[k++]);
    }
    return best;
  }
};

PairTable levy_table(const TimeGrid& g, double a, double b) {
  const double span = b - a;
  return PairTable(g, a, b, [span](double h) { return std::sqrt(h * std::log(2.0 * span / h)); });
}

PairTable holder_table(const TimeGrid& g, double alpha, double a, double b) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("holder_norm: alpha must lie in (0,1)");
  return PairTable(g, a, b, [alpha](double h) { return std::pow(h, alpha); });
}

Matrix ensemble_sup(const PathEnsemble& e, const PairTable& table) {
  Matrix out(e.size(), e.n_layers());
  for (long r = 0; r < e.size(); ++r) {
    const Matrix& v = e.values[static_cast<std::size_t>(r)];
    for (int l = 0; l < e.n_layers(); ++l) out(r, l) = table.sup(v.row(l));
  }
  return out;
}

}  // namespace

Vector sup_modulus_statistic(const PathBundle& path, double a, double b) {
  const PairTable table = levy_table(path.grid(), a, b);
  Vector out(path.n_layers());
  for (int l = 0; l < path.n_layers(); ++l) out(l) = table.sup(path.values().row(l));
  return out;
}

Vector holder_norm(const PathBundle& path, double alpha, double a, double b) {
  const PairTable table = holder_table(path.grid(), alpha, a, b);
  Vector out(path.n_layers());
  for (int l = 0; l < path.n_layers(); ++l) out(l) = table.sup(path.values().row(l));
  return out;
}

Matrix sup_modulus_samples(const PathEnsemble& centered, double a, double b) {
  return ensemble_sup(centered, levy_table(centered.grid, a, b));
}

Matrix holder_norm_samples(const PathEnsemble& centered, double alpha, double a, double b) {
  return ensemble_sup(centered, holder_table(centered.grid, alpha, a, b));
}

TailCurve tail_curve(const std::vector<double>& samples, const std::vector<double>& k_grid) {
  if (samples.empty()) throw std::invalid_argument("tail_curve: no samples");
  const double n = static_cast<double>(samples.size());
  TailCurve curve;
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (double k : k_grid) {
    const auto above = static_cast<double>(sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), k));
    const double p = above / n;
    curve.points.push_back(TailPoint{k, p, std::sqrt(p * (1.0 - p) / n)});
    if (p >= 10.0 / n && p > 0.0) {
      const double x = k * k;
      const double y = std::log(p);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++curve.n_fit_points;
    }
  }
  if (curve.n_fit_points >= 2) {
    const double m = curve.n_fit_points;
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    curve.c2 = -slope;
    curve.log_c1 = (sy - slope * sx) / m;
  }
  return curve;
}

bool MomentEntry::within_bound(double k_sigma) const {
  return moment.mean <= bound * (1.0 + k_sigma * moment.relative_error());
}

McEstimate ModulusReport::holder_moment(int layer_offset, double power) const {
  Vector v = holder_samples.col(layer_offset).array().pow(power);
  return McEstimate::from_samples(v);
}

std::string ModulusReport::to_csv() const {
  std::ostringstream os;
  char buf[512];
  os << "statistic,layer,s,t,p,value,std_error,n,baseline\n";
  for (const auto& m : moments) {
    std::snprintf(buf, sizeof buf, "increment_moment,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%lld,%.17g\n", m.layer, m.pair.s,
                  m.pair.t, m.p, m.moment.mean, m.moment.std_error, static_cast<long long>(m.moment.n_replicas), m.bound);
    os << buf;
  }
  for (int l = 0; l < sup_samples.cols(); ++l) {
    const McEstimate e = McEstimate::from_samples(Vector(sup_samples.col(l)));
    std::snprintf(buf, sizeof buf, "sup_modulus_mean,%d,%.17g,%.17g,,%.17g,%.17g,%lld,\n", first_layer + l, a, b, e.mean,
                  e.std_error, static_cast<long long>(e.n_replicas));
    os << buf;
  }
  for (int l = 0; l < holder_samples.cols(); ++l) {
    const McEstimate e = holder_moment(l, 2.0);
    std::snprintf(buf, sizeof buf, "holder_norm_sq_mean,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%lld,\n", first_layer + l, a, b,
                  alpha, e.mean, e.std_error, static_cast<long long>(e.n_replicas));
    os << buf;
  }
  return os.str();
}

ModulusReport build_modulus_report(const PathEnsemble& centered, const std::vector<double>& p_values,
                                   const std::vector<TimePair>& pairs, double alpha, double a, double b) {
  ModulusReport rep;
  rep.a = a;
  rep.b = b;
  rep.alpha = alpha;
  rep.first_layer = centered.layers.first;
  for (double p : p_values) {
    const EstimateTable t = increment_moment(centered, p, pairs);
    const double np = normal_abs_moment(p);
    for (int l = 0; l < t.rows(); ++l) {
      for (int q = 0; q < t.cols(); ++q) {
        const TimePair& pr = pairs[static_cast<std::size_t>(q)];
        rep.moments.push_back(
            MomentEntry{centered.layers.first + l, pr, p, t(l, q), np * std::pow(std::abs(pr.t - pr.s), 0.5 * p)});
      }
    }
  }
  rep.sup_samples = sup_modulus_samples(centered, a, b);
  rep.holder_samples = holder_norm_samples(centered, alpha, a, b);
  return rep;
}

std::vector<TimePair> default_pairs(double length) {
  static const double raw[20][2] = {{0.0, 0.05}, {0.0, 0.1},  {0.0, 0.25},  {0.0, 0.5},  {0.0, 1.0},
                                    {0.1, 0.7},  {0.2, 0.25}, {0.3, 0.35},  {0.45, 0.5}, {0.5, 0.6},
                                    {0.5, 0.75}, {0.6, 1.0},  {0.7, 0.8},   {0.8, 0.85}, {0.9, 0.95},
                                    {0.95, 1.0}, {0.25, 0.75}, {0.4, 0.9},  {0.15, 0.55}, {0.35, 0.65}};
  std::vector<TimePair> out;
  for (const auto& r : raw) out.push_back(TimePair{r[0] * length, r[1] * length});
  return out;
}

}  // namespace dysonlab
