#include "dysonlab/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dysonlab/rng.hpp"

namespace dysonlab {

namespace {

FieldSpec real_field(std::string name, double def, std::string doc, std::optional<double> min = std::nullopt,
                     std::optional<double> max = std::nullopt) {
  return FieldSpec{std::move(name), FieldType::Real, Json(def), std::move(doc), min, max, false};
}

FieldSpec positive_field(std::string name, double def, std::string doc) {
  return FieldSpec{std::move(name), FieldType::Real, Json(def), std::move(doc), std::nullopt, std::nullopt, true};
}

FieldSpec int_field(std::string name, long def, std::string doc, std::optional<double> min = 1.0) {
  return FieldSpec{std::move(name), FieldType::Integer, Json(def), std::move(doc), min, std::nullopt, false};
}

FieldSpec list_field(std::string name, std::vector<double> def, std::string doc) {
  return FieldSpec{std::move(name), FieldType::RealList, Json(def), std::move(doc), std::nullopt, std::nullopt, false};
}

FieldSpec beta_field(double def) { return real_field("beta", def, "inverse temperature beta (beta >= 2)", 2.0); }

std::vector<FieldSpec> integrator_fields() {
  return {
      positive_field("dt_base", 1e-3, "largest Euler-Maruyama substep"),
      positive_field("dt_min", 1e-12, "smallest substep before the integrator gives up"),
      positive_field("gap_safety", 0.1, "substep is at most gap_safety * (smallest gap)^2 / beta"),
  };
}

KindSchema with_integrator(KindSchema s) {
  for (auto& f : integrator_fields()) s.fields.push_back(std::move(f));
  return s;
}

std::vector<KindSchema> build_schemas() {
  std::vector<KindSchema> s;
  s.push_back(with_integrator(KindSchema{
      "dbm-simulate",
      "Simulate Dyson Brownian motion; report mean curves and the two exact moment identities at the horizon",
      {
          beta_field(2.0),
          int_field("n_particles", 3, "number of particles N"),
          list_field("x_start", {}, "ordered starting point (empty means the origin)"),
          positive_field("horizon", 1.0, "final time"),
          int_field("n_steps", 10, "recorded grid panels on [0, horizon]"),
          int_field("n_replicas", 10000, "Monte Carlo replicas", 2.0),
          positive_field("k_sigma", 3.0, "tolerance in standard errors for the identities"),
      }}));
  s.push_back(with_integrator(KindSchema{
      "oracle-compare",
      "Compare the SDE time-t marginal from the origin with the exact matrix-model sampler",
      {
          beta_field(2.0),
          int_field("n_particles", 3, "number of particles N"),
          positive_field("horizon", 1.0, "comparison time t"),
          int_field("n_replicas", 100000, "replicas on each side", 2.0),
          positive_field("ks_tol", 0.01, "largest accepted per-layer two-sample KS distance"),
      }}));
  s.push_back(with_integrator(KindSchema{
      "moment-check",
      "Centered increment moments against the Gaussian bound N_p |t-s|^(p/2)",
      {
          beta_field(2.0),
          int_field("n_particles", 4, "number of particles N"),
          list_field("x_start", {}, "ordered starting point (empty means the origin)"),
          positive_field("horizon", 1.0, "time window [0, horizon]; pairs lie on a grid of step horizon/20"),
          list_field("p_values", {1.0, 2.0, 4.0}, "moment orders p"),
          int_field("n_replicas", 100000, "replicas for the moments", 2.0),
          int_field("n_centering", 100000, "independent replicas for the centering means", 2.0),
          positive_field("k_sigma", 3.0, "relative slack in standard errors"),
      }}));
  s.push_back(with_integrator(KindSchema{
      "tail-check",
      "Sup-modulus tail of every layer against twice the fitted Brownian envelope C1 exp(-C2 K^2)",
      {
          beta_field(2.0),
          int_field("n_particles", 4, "number of particles N"),
          list_field("x_start", {}, "ordered starting point (empty means the origin)"),
          positive_field("horizon", 1.0, "window [0, horizon]"),
          int_field("n_steps", 50, "grid panels on the window"),
          int_field("n_replicas", 20000, "DBM replicas (and centering replicas)", 2.0),
          int_field("n_reference", 20000, "Brownian reference replicas for the envelope fit", 2.0),
          real_field("k_fit_lo", 1.0, "smallest threshold of the fit grid"),
          real_field("k_fit_hi", 4.0, "largest threshold of the fit grid"),
          positive_field("k_fit_step", 0.1, "spacing of the fit grid"),
          list_field("k_check", {1.0, 1.5, 2.0, 2.5}, "thresholds at which the envelope is tested"),
          positive_field("envelope_factor", 2.0, "multiplier on the fitted envelope"),
          positive_field("k_sigma", 3.0, "binomial slack in standard errors"),
      }}));
  s.push_back(with_integrator(KindSchema{
      "holder-check",
      "Ratio of mean squared Holder norms over a long and a short window against (L/l)^(1-2 alpha)",
      {
          beta_field(2.0),
          int_field("n_particles", 4, "number of particles N"),
          real_field("alpha", 0.25, "Holder exponent", 0.0, 0.5),
          positive_field("power", 2.0, "moment of the Holder norm"),
          positive_field("short_window", 1.0, "length l of the short window [0, l]"),
          positive_field("long_window", 4.0, "length L of the long window [0, L]"),
          int_field("n_panels", 20, "grid panels per window"),
          int_field("n_replicas", 20000, "replicas per window (and per centering batch)", 2.0),
          positive_field("ratio_tol", 0.3, "accepted relative deviation of the ratio"),
      }}));
  s.push_back(with_integrator(KindSchema{
      "girsanov-check",
      "Brownian paths weighted by the Dyson martingale against direct simulation, G = tanh(x_1 - x_2 at T)",
      {
          beta_field(3.0),
          int_field("n_particles", 2, "number of particles N"),
          list_field("x_start", {1.0, -1.0}, "strictly ordered starting point"),
          positive_field("horizon", 0.25, "final time T"),
          int_field("n_steps", 250, "grid panels for the weight's time integral"),
          int_field("n_replicas", 100000, "weighted Brownian replicas", 2.0),
          int_field("n_direct", 100000, "direct SDE replicas", 2.0),
          positive_field("min_ess", 1000.0, "smallest accepted effective sample size"),
          positive_field("ci_z", 1.96, "normal quantile of the confidence intervals"),
      }}));
  s.push_back(KindSchema{
      "edge-scale",
      "Edge-rescaled top particle of the time marginal at two sizes, compared by KS distance",
      {
          beta_field(2.0),
          int_field("n_small", 50, "smaller N"),
          int_field("n_large", 100, "larger N"),
          real_field("t_scaled", 0.0, "scaled time t"),
          int_field("n_samples", 10000, "samples at each size", 2.0),
          positive_field("ks_tol", 0.05, "largest accepted KS distance"),
      }});
  s.push_back(KindSchema{
      "transport-check",
      "Monotone-map contraction in 1-D, an entropic 2-D map, and convex-order comparisons for tilted Gaussians",
      {
          positive_field("half_width", 12.0, "1-D maps are tabulated on [-half_width, half_width]"),
          int_field("n_grid", 4097, "1-D grid nodes (odd keeps 0 on a node)", 3.0),
          positive_field("tail_cut", 1e-12, "nodes with less tail mass are excluded from the slope check"),
          positive_field("slope_tol", 1e-4, "accepted excess of the 1-D slope over 1"),
          positive_field("gaussian_slope_tol", 1e-3, "accepted deviation from 1/sqrt(2) for N(0,1) -> N(0,1/2)"),
          int_field("sinkhorn_samples", 5000, "samples on each side of the 2-D entropic problem", 2.0),
          positive_field("sinkhorn_eps", 0.05, "entropic regularization"),
          int_field("sinkhorn_iters", 20000, "iteration cap"),
          positive_field("sinkhorn_tol", 1e-6, "L1 marginal error at convergence"),
          positive_field("lipschitz_tol", 0.05, "accepted excess of the 2-D Lipschitz estimate over 1"),
          int_field("lipschitz_pairs", 200000, "random pairs for the secant estimate"),
          positive_field("lipschitz_radius", 2.0, "secants use source points with |x| <= radius"),
          int_field("harge_replicas", 100000, "replicas per batch for each convex-order comparison", 2.0),
          list_field("bridge_times", {0.3, 0.7}, "times of the bridge marginal, inside (0, 1)"),
          real_field("bridge_x", 0.0, "bridge entry value at time 0"),
          real_field("bridge_y", 0.0, "bridge exit value at time 1"),
          int_field("bridge_quadrature", 64, "trapezoid panels for the bridge Hamiltonian"),
          positive_field("k_sigma", 3.0, "slack in pooled standard errors"),
      }});
  s.push_back(KindSchema{
      "logconcavity-check",
      "Bridge partition function Z(x, y) for H = int exp(z) on a grid, scanned for log-concavity",
      {
          int_field("grid_points", 11, "nodes per axis", 3.0),
          real_field("grid_lo", -1.0, "lowest endpoint value"),
          real_field("grid_hi", 1.0, "highest endpoint value"),
          int_field("n_bridges", 10000, "bridges per node", 2.0),
          int_field("quadrature", 64, "trapezoid panels on [0, 1]"),
          positive_field("k_sigma", 3.0, "tolerance in pooled standard errors"),
      }});
  s.push_back(KindSchema{
      "oy-suite",
      "Semi-discrete polymer top line: dynamic program check and centered increment moments",
      {
          int_field("n_levels", 2, "number of Brownian levels N"),
          list_field("drift", {}, "weakly decreasing level drifts (empty means zero)"),
          positive_field("t_max", 2.0, "time horizon"),
          int_field("m_steps", 200, "time steps (at least 50 N)"),
          int_field("n_replicas", 100000, "replicas for the moments (and for centering)", 2.0),
          positive_field("window_a", 1.0, "window start"),
          positive_field("window_b", 2.0, "window end"),
          real_field("alpha", 0.25, "Holder exponent", 0.0, 0.5),
          list_field("p_values", {2.0}, "moment orders p"),
          positive_field("k_sigma", 3.0, "relative slack in standard errors"),
          int_field("dp_draws", 100, "noise draws for the two-level quadrature check"),
          int_field("dp_steps", 12, "time steps of the quadrature check"),
          positive_field("dp_tol", 1e-6, "accepted relative error of the quadrature check"),
      }});
  return s;
}

std::string type_name(FieldType t) {
  switch (t) {
    case FieldType::Real: return "real";
    case FieldType::Integer: return "integer";
    case FieldType::Boolean: return "boolean";
    case FieldType::String: return "string";
    case FieldType::RealList: return "list of reals";
  }
  return "?";
}

void check_range(const FieldSpec& f, double v, const std::string& where) {
  if (!std::isfinite(v)) throw ConfigError(where + ": value must be finite");
  if (f.positive && !(v > 0.0)) throw ConfigError(where + ": must be > 0");
  if (f.min && v < *f.min) throw ConfigError(where + ": must be >= " + Json(*f.min).dump());
  if (f.max && v > *f.max) throw ConfigError(where + ": must be <= " + Json(*f.max).dump());
}

Json normalize_field(const FieldSpec& f, const Json& v, const std::string& kind) {
  const std::string where = kind + ".params." + f.name;
  switch (f.type) {
    case FieldType::Real: {
      if (!v.is_number()) throw ConfigError(where + ": expected a real number");
      const double x = v.get<double>();
      check_range(f, x, where);
      return Json(x);
    }
    case FieldType::Integer: {
      if (!v.is_number_integer()) throw ConfigError(where + ": expected an integer");
      const long x = v.get<long>();
      check_range(f, static_cast<double>(x), where);
      return Json(x);
    }
    case FieldType::Boolean:
      if (!v.is_boolean()) throw ConfigError(where + ": expected true or false");
      return v;
    case FieldType::String:
      if (!v.is_string()) throw ConfigError(where + ": expected a string");
      return v;
    case FieldType::RealList: {
      if (!v.is_array()) throw ConfigError(where + ": expected a list of reals");
      Json out = Json::array();
      for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError(where + ": expected a list of reals");
        const double x = e.get<double>();
        check_range(f, x, where);
        out.push_back(x);
      }
      return out;
    }
  }
  throw ConfigError(where + ": unsupported type");
}

Json normalize_params(const KindSchema& schema, const Json& params) {
  if (!params.is_object()) throw ConfigError("params must be an object");
  for (const auto& [key, _] : params.items()) {
    if (!schema.find(key)) throw ConfigError("unknown parameter '" + key + "' for kind " + schema.kind);
  }
  Json out = Json::object();
  for (const auto& f : schema.fields) {
    out[f.name] = normalize_field(f, params.contains(f.name) ? params.at(f.name) : f.default_value, schema.kind);
  }
  return out;
}

const Json& param(const ExperimentConfig& c, const std::string& name) {
  if (!c.params.contains(name)) throw ConfigError("parameter '" + name + "' is not defined for kind " + c.kind);
  return c.params.at(name);
}

}  // namespace

const FieldSpec* KindSchema::find(const std::string& name) const {
  for (const auto& f : fields)
    if (f.name == name) return &f;
  return nullptr;
}

const std::vector<KindSchema>& experiment_schemas() {
  static const std::vector<KindSchema> schemas = build_schemas();
  return schemas;
}

const KindSchema& schema_for(const std::string& kind) {
  for (const auto& s : experiment_schemas())
    if (s.kind == kind) return s;
  throw ConfigError("unknown experiment kind '" + kind + "'");
}

double ExperimentConfig::real(const std::string& name) const { return param(*this, name).get<double>(); }
long ExperimentConfig::integer(const std::string& name) const { return param(*this, name).get<long>(); }
bool ExperimentConfig::flag(const std::string& name) const { return param(*this, name).get<bool>(); }
std::string ExperimentConfig::text(const std::string& name) const { return param(*this, name).get<std::string>(); }
std::vector<double> ExperimentConfig::reals(const std::string& name) const {
  return param(*this, name).get<std::vector<double>>();
}

ExperimentConfig ExperimentConfig::with(const std::string& name, Json value) const {
  Json j = config_to_json(*this);
  j["params"][name] = std::move(value);
  return config_from_json(j);
}

ExperimentConfig default_config(const std::string& kind) {
  ExperimentConfig c;
  c.kind = kind;
  c.params = normalize_params(schema_for(kind), Json::object());
  return c;
}

ExperimentConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::vector<std::string> allowed = {"schema_version", "kind", "master_seed", "n_workers", "output_dir",
                                                   "params"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown top-level key '" + key + "'");
    }
  }
  ExperimentConfig c;
  if (!j.contains("schema_version") || !j.at("schema_version").is_number_integer()) {
    throw ConfigError("schema_version (integer) is required");
  }
  c.schema_version = j.at("schema_version").get<int>();
  if (c.schema_version != kSchemaVersion) {
    throw ConfigError("unsupported schema_version " + std::to_string(c.schema_version) + " (expected " +
                      std::to_string(kSchemaVersion) + ")");
  }
  if (!j.contains("kind") || !j.at("kind").is_string()) throw ConfigError("kind (string) is required");
  c.kind = j.at("kind").get<std::string>();
  const KindSchema& schema = schema_for(c.kind);
  if (j.contains("master_seed")) {
    const Json& s = j.at("master_seed");
    if (!s.is_number_unsigned()) throw ConfigError("master_seed must be a non-negative integer");
    c.master_seed = s.get<std::uint64_t>();
  }
  if (j.contains("n_workers")) {
    const Json& w = j.at("n_workers");
    if (!w.is_number_integer() || w.get<long>() < 1) throw ConfigError("n_workers must be a positive integer");
    c.n_workers = w.get<int>();
  }
  if (j.contains("output_dir")) {
    if (!j.at("output_dir").is_string()) throw ConfigError("output_dir must be a string");
    c.output_dir = j.at("output_dir").get<std::string>();
  }
  c.params = normalize_params(schema, j.contains("params") ? j.at("params") : Json::object());
  return c;
}

ExperimentConfig parse_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

Json config_to_json(const ExperimentConfig& c) {
  Json j = Json::object();
  j["schema_version"] = c.schema_version;
  j["kind"] = c.kind;
  j["master_seed"] = c.master_seed;
  j["n_workers"] = c.n_workers;
  j["output_dir"] = c.output_dir;
  j["params"] = c.params;
  return j;
}

std::string dump_config(const ExperimentConfig& c) { return config_to_json(c).dump(2) + "\n"; }

std::string config_hash(const ExperimentConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash_tag(dump_config(c))));
  return buf;
}

std::string describe_schema(const std::string& kind) {
  const KindSchema& s = schema_for(kind);
  std::ostringstream os;
  os << s.kind << ": " << s.description << "\n";
  for (const auto& f : s.fields) {
    os << "  " << f.name << " (" << type_name(f.type) << ", default " << f.default_value.dump() << ")";
    if (f.positive) os << " > 0";
    if (f.min) os << " >= " << Json(*f.min).dump();
    if (f.max) os << " <= " << Json(*f.max).dump();
    os << ": " << f.doc << "\n";
  }
  return os.str();
}

}  // namespace dysonlab
