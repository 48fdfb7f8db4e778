#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "dysonlab/config.hpp"
#include "dysonlab/experiments.hpp"

using namespace dysonlab;

namespace {

constexpr std::uint64_t kSeed = 20240611;

struct Run {
  ExperimentConfig config;
  ExperimentResult result;
};

std::vector<Run> g_runs;

const ExperimentResult& run(ExperimentConfig c) {
  c.master_seed = kSeed;
  c.n_workers = 1;
  ExperimentResult r = run_experiment(c);
  g_runs.push_back({c, std::move(r)});
  return g_runs.back().result;
}

struct Outcome {
  bool pass = true;
  int n_checked = 0;
  int n_failed = 0;
  std::string detail;

  void absorb(const std::vector<Verdict>& vs, const std::function<bool(const Verdict&)>& keep = {}) {
    for (const auto& v : vs) {
      if (keep && !keep(v)) continue;
      ++n_checked;
      if (!v.pass) {
        ++n_failed;
        pass = false;
        std::printf("    failed: %s (lhs %.6g, rhs %.6g, se %.3g)\n", v.clause.c_str(), v.lhs, v.rhs, v.std_error);
      }
    }
  }
};

bool mentions(const Verdict& v, const char* word) { return v.clause.find(word) != std::string::npos; }

Outcome oracle_equivalence() {
  Outcome o;
  o.absorb(run(default_config("oracle-compare")).verdicts);
  return o;
}

Outcome ito_invariants() {
  Outcome o;
  for (double beta : {2.0, 4.0}) {
    const auto c = default_config("dbm-simulate")
                       .with("beta", beta)
                       .with("n_particles", 3)
                       .with("horizon", 1.0)
                       .with("n_steps", 10)
                       .with("n_replicas", 100000);
    o.absorb(run(c).verdicts);
  }
  return o;
}

Outcome moment_bounds() {
  Outcome o;
  for (double beta : {2.0, 4.0}) o.absorb(run(default_config("moment-check").with("beta", beta)).verdicts);
  return o;
}

Outcome tail_envelope() {
  Outcome o;
  o.absorb(run(default_config("tail-check")).verdicts);
  return o;
}

Outcome holder_scaling() {
  Outcome o;
  o.absorb(run(default_config("holder-check")).verdicts);
  return o;
}

Outcome girsanov() {
  Outcome o;
  o.absorb(run(default_config("girsanov-check")).verdicts);
  return o;
}

const ExperimentResult& transport_result() {
  static const ExperimentResult* cached = nullptr;
  if (!cached) cached = &run(default_config("transport-check"));
  return *cached;
}

Outcome contraction() {
  Outcome o;
  o.absorb(transport_result().verdicts, [](const Verdict& v) { return mentions(v, "map"); });
  return o;
}

Outcome harge() {
  Outcome o;
  o.absorb(transport_result().verdicts, [](const Verdict& v) { return !mentions(v, "map"); });
  return o;
}

Outcome log_concavity() {
  Outcome o;
  o.absorb(run(default_config("logconcavity-check")).verdicts);
  return o;
}

Outcome edge_stabilization() {
  Outcome o;
  o.absorb(run(default_config("edge-scale")).verdicts);
  return o;
}

Outcome polymer() {
  Outcome o;
  o.absorb(run(default_config("oy-suite")).verdicts);
  return o;
}

Outcome determinism() {
  Outcome o;
  const std::size_t n = g_runs.size();
  for (std::size_t i = 0; i < n; ++i) {
    ExperimentConfig c = g_runs[i].config;
    c.n_workers = 3;
    const ExperimentResult again = run_experiment(c);
    const auto& first = g_runs[i].result;
    ++o.n_checked;
    bool same = first.tables.size() == again.tables.size();
    for (std::size_t t = 0; same && t < first.tables.size(); ++t) {
      same = first.tables[t].name == again.tables[t].name && first.tables[t].csv == again.tables[t].csv;
    }
    if (!same) {
      ++o.n_failed;
      o.pass = false;
      std::printf("    failed: %s CSV output differs between 1 and 3 workers\n", c.kind.c_str());
    }
  }
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"oracle equivalence: beta=2 N=3 SDE vs Hermitian oracle, KS < 0.01 per layer", oracle_equivalence},
      {"sum variance and second moment identities, (beta,N) in {(2,3),(4,3)}", ito_invariants},
      {"increment moment bounds, beta in {2,4}, N=4, p in {1,2,4}", moment_bounds},
      {"sup-modulus tail below twice the Brownian envelope", tail_envelope},
      {"Holder norm window scaling ratio within 30% of 2", holder_scaling},
      {"weighted-Brownian vs direct SDE estimate, ESS >= 1000", girsanov},
      {"monotone and entropic transport maps are contractions", contraction},
      {"centered convex expectations under log-concave tilts", harge},
      {"bridge partition function is log-concave, control is not", log_concavity},
      {"edge-scaled top eigenvalue stabilizes, N=50 vs N=100", edge_stabilization},
      {"polymer recursion vs quadrature and top-line moment bound", polymer},
      {"byte-identical CSV outputs for 1 and 3 workers", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("error: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s  criterion %2zu: %s [%d/%d checks pass, %.1f s]%s%s\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), o.n_checked - o.n_failed, o.n_checked, secs, o.detail.empty() ? "" : " ",
                o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass || o.n_checked == 0) ++failures;
  }
  std::printf("%s: %zu criteria, %d failed\n", failures == 0 ? "ALL PASS" : "FAILURES", criteria.size(), failures);
  return failures == 0 ? 0 : 1;
}
