#pragma once
// Experiment configuration: JSON in, validated ExperimentConfig out.
// Every problem is reported as a Diagnostic carrying the dotted field path.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#if __has_include(<nlohmann/json.hpp>)
#include <nlohmann/json.hpp>
#else
#include "json.hpp"
#endif

#include "perron/model.hpp"

namespace perron {

using json = nlohmann::json;

struct Diagnostic {
  std::string path, message;
  std::string str() const { return path + ": " + message; }
};

enum class ExperimentKind {
  finite_h1h2,
  pde_converge,
  lyapunov_audit,
  sigma_audit,
  scenario_rotation,
  scenario_singular,
  full_theorem2_pipeline
};

inline const std::vector<std::pair<std::string, ExperimentKind>>& experiment_names() {
  static const std::vector<std::pair<std::string, ExperimentKind>> v = {
      {"finite_h1h2", ExperimentKind::finite_h1h2},
      {"pde_converge", ExperimentKind::pde_converge},
      {"lyapunov_audit", ExperimentKind::lyapunov_audit},
      {"sigma_audit", ExperimentKind::sigma_audit},
      {"scenario_rotation", ExperimentKind::scenario_rotation},
      {"scenario_singular", ExperimentKind::scenario_singular},
      {"full_theorem2_pipeline", ExperimentKind::full_theorem2_pipeline}};
  return v;
}

inline std::string to_string(ExperimentKind k) {
  for (const auto& [n, v] : experiment_names())
    if (v == k) return n;
  return "?";
}

struct NumericsConfig {
  double tol = 1e-12;          // power iteration
  int max_iter = 5000;
  int lambda_window = 10;
  std::size_t n_time = 11;     // crossing-time grid nodes
  std::optional<std::uint64_t> seed;
  std::size_t trials = 100;    // inequality (5)
  std::size_t max_level = 16;  // crossing-family level cap
  std::size_t stride = 16;     // K subsample for (H1')/(H2')
  std::size_t n_pairs = 10;    // (4) pairs
  std::size_t step3_kmax = 20;
  double residual_floor = 1e-8;
  double fit_quality = 0.99;
  double peak_ratio = 5.0;
  double minorization_tol = 1e-6;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::pde_converge;
  json raw;  // as given, after overrides; hashed into the manifest

  ModelSpec model;
  bool has_model = false;
  double L = 8.0;
  std::size_t n_cells = 2000;
  double tau = 0.4, horizon = 30.0, sample_dt = 0.04;
  std::vector<double> initial_diracs = {0.0};  // convergence start points

  // finite_h1h2
  // full generator rows; diagonal excess over -(exit rate) acts as a potential
  std::vector<std::vector<double>> generator;

  NumericsConfig numerics;
  std::string out_dir = "out";
  std::vector<std::string> formats = {"json", "csv"};

  Grid1D grid() const { return Grid1D::symmetric(L, n_cells); }
};

namespace detail {

struct Reader {
  std::vector<Diagnostic>& diags;
  void err(const std::string& p, const std::string& m) { diags.push_back({p, m}); }

  const json* obj(const json& j, const std::string& key, const std::string& path, bool required) {
    if (!j.contains(key)) {
      if (required) err(path, "missing required field");
      return nullptr;
    }
    if (!j.at(key).is_object()) {
      err(path, "must be an object");
      return nullptr;
    }
    return &j.at(key);
  }
  bool num(const json& j, const std::string& key, const std::string& path, double& out, bool required) {
    if (!j.contains(key)) {
      if (required) err(path, "missing required field");
      return false;
    }
    if (!j.at(key).is_number()) {
      err(path, "must be a number");
      return false;
    }
    out = j.at(key).get<double>();
    if (!std::isfinite(out)) {
      err(path, "must be finite");
      return false;
    }
    return true;
  }
  bool positive(const json& j, const std::string& key, const std::string& path, double& out, bool required) {
    if (!num(j, key, path, out, required)) return false;
    if (!(out > 0.0)) {
      err(path, "must be > 0");
      return false;
    }
    return true;
  }
  template <class U>
  bool count(const json& j, const std::string& key, const std::string& path, U& out, bool required,
             long long lo = 1) {
    if (!j.contains(key)) {
      if (required) err(path, "missing required field");
      return false;
    }
    if (!j.at(key).is_number_integer()) {
      err(path, "must be an integer");
      return false;
    }
    const auto v = j.at(key).get<long long>();
    if (v < lo) {
      err(path, "must be >= " + std::to_string(lo));
      return false;
    }
    out = static_cast<U>(v);
    return true;
  }
  bool str(const json& j, const std::string& key, const std::string& path, std::string& out, bool required) {
    if (!j.contains(key)) {
      if (required) err(path, "missing required field");
      return false;
    }
    if (!j.at(key).is_string()) {
      err(path, "must be a string");
      return false;
    }
    out = j.at(key).get<std::string>();
    return true;
  }
};

inline std::string resolve(const std::string& p, const std::filesystem::path& base) {
  std::filesystem::path q(p);
  return q.is_absolute() ? p : (base / q).string();
}

inline void read_potential(Reader& r, const json& j, const std::filesystem::path& base, ModelSpec& m) {
  std::string kind;
  if (!r.str(j, "kind", "model.potential.kind", kind, true)) return;
  if (kind == "quadratic") {
    double abar = 1.0, curv = 1.0;
    r.num(j, "abar", "model.potential.abar", abar, false);
    if (r.num(j, "curvature", "model.potential.curvature", curv, false) && curv < 0.0)
      r.err("model.potential.curvature", "must be >= 0");
    m.a = Potential::quadratic(abar, curv);
  } else if (kind == "table") {
    std::string path;
    if (!r.str(j, "path", "model.potential.path", path, true)) return;
    try {
      std::vector<double> xs, vs;
      read_xy_csv(resolve(path, base), xs, vs);
      m.a = Potential::from_table(Table(std::move(xs), std::move(vs)));
    } catch (const std::exception& e) {
      r.err("model.potential.path", e.what());
    }
  } else {
    r.err("model.potential.kind", "unknown potential '" + kind + "' (quadratic | table)");
  }
}

inline void read_kernel(Reader& r, const json& j, const std::filesystem::path& base, ModelSpec& m) {
  std::string kind;
  if (!r.str(j, "kind", "model.kernel.kind", kind, true)) return;
  if (kind == "uniform_band") {
    double k0 = 0.0, eps = 0.0;
    bool ok = r.num(j, "kappa0", "model.kernel.kappa0", k0, true);
    ok = r.positive(j, "epsilon", "model.kernel.epsilon", eps, true) && ok;
    if (ok && k0 < 0.0) {
      r.err("model.kernel.kappa0", "must be >= 0");
      ok = false;
    }
    if (ok) m.Q = Kernel::uniform_band(k0, eps);
  } else if (kind == "truncated_gaussian") {
    double A = 0.0, w = 0.0, cut = 0.0, eps = -1.0;
    bool ok = r.positive(j, "amplitude", "model.kernel.amplitude", A, true);
    ok = r.positive(j, "width", "model.kernel.width", w, true) && ok;
    ok = r.positive(j, "cutoff", "model.kernel.cutoff", cut, true) && ok;
    if (j.contains("epsilon")) ok = r.positive(j, "epsilon", "model.kernel.epsilon", eps, true) && ok;
    if (ok) m.Q = Kernel::gaussian(A, w, cut, eps);
  } else if (kind == "dirac_pair") {
    m.Q = Kernel::dirac_pair();
  } else if (kind == "table") {
    std::string path;
    if (!r.str(j, "path", "model.kernel.path", path, true)) return;
    try {
      std::vector<double> xs, vs;
      read_xy_csv(resolve(path, base), xs, vs);
      m.Q = Kernel::from_table(Table(std::move(xs), std::move(vs)));
    } catch (const std::exception& e) {
      r.err("model.kernel.path", e.what());
    }
  } else {
    r.err("model.kernel.kind", "unknown kernel '" + kind + "' (uniform_band | truncated_gaussian | dirac_pair | table)");
  }
}

}  // namespace detail

// Schema and cross-field checks. `base` resolves relative table paths.
inline std::vector<Diagnostic> parse_config(const json& j, ExperimentConfig& cfg,
                                            const std::filesystem::path& base = ".") {
  std::vector<Diagnostic> diags;
  detail::Reader r{diags};
  cfg.raw = j;
  if (!j.is_object()) {
    r.err("$", "config must be a JSON object");
    return diags;
  }
  static const std::vector<std::string> known = {"experiment", "model", "grid", "time", "initial",
                                                 "finite", "numerics", "output", "description"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) r.err(it.key(), "unknown top-level field");

  std::string kind;
  if (!r.str(j, "experiment", "experiment", kind, true)) return diags;
  bool found = false;
  for (const auto& [n, v] : experiment_names())
    if (n == kind) cfg.kind = v, found = true;
  if (!found) {
    r.err("experiment", "unknown experiment kind '" + kind + "'");
    return diags;
  }
  const auto K = cfg.kind;
  const bool needs_model = K != ExperimentKind::finite_h1h2 && K != ExperimentKind::scenario_rotation;
  const bool needs_band = K == ExperimentKind::sigma_audit || K == ExperimentKind::full_theorem2_pipeline;
  const bool randomized = needs_band;

  if (const json* m = r.obj(j, "model", "model", needs_model)) {
    if (const json* p = r.obj(*m, "potential", "model.potential", true)) detail::read_potential(r, *p, base, cfg.model);
    if (const json* q = r.obj(*m, "kernel", "model.kernel", true)) detail::read_kernel(r, *q, base, cfg.model);
    r.num(*m, "boundary_threshold", "model.boundary_threshold", cfg.model.boundary_threshold, false);
    cfg.has_model = true;
  }

  if (const json* g = r.obj(j, "grid", "grid", needs_model || K == ExperimentKind::scenario_rotation)) {
    if (K != ExperimentKind::scenario_rotation) r.positive(*g, "L", "grid.L", cfg.L, true);
    r.count(*g, "n_cells", "grid.n_cells", cfg.n_cells, true, 2);
  }

  const bool needs_horizon = K == ExperimentKind::pde_converge || K == ExperimentKind::scenario_rotation ||
                             K == ExperimentKind::scenario_singular || K == ExperimentKind::full_theorem2_pipeline;
  if (const json* t = r.obj(j, "time", "time", true)) {
    if (K != ExperimentKind::scenario_rotation) r.positive(*t, "tau", "time.tau", cfg.tau, true);
    else r.positive(*t, "tau", "time.tau", cfg.tau, false);
    r.positive(*t, "horizon", "time.horizon", cfg.horizon, needs_horizon);
    r.positive(*t, "sample_dt", "time.sample_dt", cfg.sample_dt, needs_horizon);
    if (needs_horizon && cfg.sample_dt > cfg.horizon) r.err("time.sample_dt", "must not exceed time.horizon");
    if (t->contains("dt")) r.err("time.dt", "the scheme locks dt = dx; remove this field");
  }

  if (j.contains("initial")) {
    const json& ini = j.at("initial");
    if (!ini.is_array() || ini.empty()) {
      r.err("initial", "must be a non-empty array of Dirac positions");
    } else {
      cfg.initial_diracs.clear();
      for (std::size_t i = 0; i < ini.size(); ++i) {
        if (!ini[i].is_number()) r.err("initial[" + std::to_string(i) + "]", "must be a number");
        else cfg.initial_diracs.push_back(ini[i].get<double>());
      }
    }
  }

  if (const json* f = r.obj(j, "finite", "finite", K == ExperimentKind::finite_h1h2)) {
    if (!f->contains("generator") || !f->at("generator").is_array()) {
      r.err("finite.generator", "missing or not an array of rows");
    } else {
      const json& G = f->at("generator");
      const std::size_t n = G.size();
      if (n == 0) r.err("finite.generator", "must have at least one row");
      for (std::size_t i = 0; i < n; ++i) {
        const std::string p = "finite.generator[" + std::to_string(i) + "]";
        if (!G[i].is_array() || G[i].size() != n) {
          r.err(p, "must be a row of length " + std::to_string(n));
          continue;
        }
        std::vector<double> row;
        for (std::size_t k = 0; k < n; ++k) {
          if (!G[i][k].is_number()) {
            r.err(p + "[" + std::to_string(k) + "]", "must be a number");
            row.push_back(0.0);
            continue;
          }
          const double v = G[i][k].get<double>();
          if (k != i && v < 0.0) r.err(p + "[" + std::to_string(k) + "]", "off-diagonal rate must be >= 0");
          row.push_back(v);
        }
        cfg.generator.push_back(std::move(row));
      }
    }
  }

  if (const json* n = r.obj(j, "numerics", "numerics", false)) {
    auto& N = cfg.numerics;
    r.positive(*n, "tol", "numerics.tol", N.tol, false);
    r.count(*n, "max_iter", "numerics.max_iter", N.max_iter, false);
    r.count(*n, "lambda_window", "numerics.lambda_window", N.lambda_window, false);
    r.count(*n, "n_time", "numerics.n_time", N.n_time, false, 2);
    r.count(*n, "trials", "numerics.trials", N.trials, false);
    r.count(*n, "max_level", "numerics.max_level", N.max_level, false);
    r.count(*n, "stride", "numerics.stride", N.stride, false);
    r.count(*n, "n_pairs", "numerics.n_pairs", N.n_pairs, false);
    r.count(*n, "step3_kmax", "numerics.step3_kmax", N.step3_kmax, false);
    r.positive(*n, "residual_floor", "numerics.residual_floor", N.residual_floor, false);
    r.positive(*n, "fit_quality", "numerics.fit_quality", N.fit_quality, false);
    r.positive(*n, "peak_ratio", "numerics.peak_ratio", N.peak_ratio, false);
    r.positive(*n, "minorization_tol", "numerics.minorization_tol", N.minorization_tol, false);
    if (n->contains("seed")) {
      const json& s = n->at("seed");
      if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
        r.err("numerics.seed", "must be a non-negative integer");
      else
        N.seed = s.get<std::uint64_t>();
    }
  }
  if (randomized && !cfg.numerics.seed)
    r.err("numerics.seed", "required: this experiment runs seeded random trials");

  if (const json* o = r.obj(j, "output", "output", false)) {
    r.str(*o, "directory", "output.directory", cfg.out_dir, false);
    if (o->contains("formats")) {
      const json& f = o->at("formats");
      if (!f.is_array()) {
        r.err("output.formats", "must be an array");
      } else {
        cfg.formats.clear();
        for (const auto& v : f) {
          if (!v.is_string() || (v != "json" && v != "csv")) r.err("output.formats", "entries must be \"json\" or \"csv\"");
          else cfg.formats.push_back(v.get<std::string>());
        }
      }
    }
  }

  // cross-field rules
  if (needs_band && cfg.has_model) {
    if (cfg.model.Q.kind == Kernel::Kind::dirac_pair)
      r.err("model.kernel.kind",
            "dirac_pair has no density lower bound Q(x,dy) >= kappa0 1_(x-eps,x+eps)(y) dy; crossing-time families "
            "need kappa0 > 0 and eps > 0");
    else if (!cfg.model.Q.has_density_lower_bound())
      r.err("model.kernel", "needs a band lower bound with kappa0 > 0 and epsilon > 0");
  }
  if (K == ExperimentKind::scenario_singular && cfg.has_model && cfg.model.Q.kind != Kernel::Kind::dirac_pair)
    r.err("model.kernel.kind", "scenario_singular expects dirac_pair");
  return diags;
}

inline std::vector<Diagnostic> load_config(const std::string& path, ExperimentConfig& cfg) {
  std::ifstream in(path);
  if (!in) return {{"$", "cannot read config file " + path}};
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    return {{"$", std::string("invalid JSON: ") + e.what()}};
  }
  return parse_config(j, cfg, std::filesystem::path(path).parent_path());
}

// 64-bit FNV-1a
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

}  // namespace perron
