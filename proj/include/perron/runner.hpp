#pragma once
// Experiment orchestration: config -> module calls -> files + manifest.
// Exit codes: 0 all checks pass, 1 some check failed, 2 bad configuration.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "perron/config.hpp"
#include "perron/eigentriplet.hpp"
#include "perron/ergodicity.hpp"
#include "perron/finite_semigroup.hpp"
#include "perron/lyapunov.hpp"
#include "perron/minorization.hpp"
#include "perron/pde_semigroup.hpp"
#include "perron/sigma.hpp"

namespace perron {

inline constexpr const char* kArtifactVersion = "0.1.0";

struct CheckVerdict {
  std::string name;
  bool pass = false;
  json detail;
};

struct RunManifest {
  std::string experiment, config_hash, version = kArtifactVersion;
  double wall_clock_seconds = 0.0;
  std::vector<CheckVerdict> verdicts;
  std::vector<std::string> files;
  std::vector<std::string> diagnostics;
  int exit_code = 0;
  std::string failing_check;
  json summary = json::object();

  json to_json() const {
    json v = json::object();
    for (const auto& c : verdicts) v[c.name] = {{"pass", c.pass}, {"detail", c.detail}};
    return {{"experiment", experiment},
            {"config_hash", config_hash},
            {"artifact_version", version},
            {"wall_clock_seconds", wall_clock_seconds},
            {"exit_code", exit_code},
            {"failing_check", failing_check},
            {"verdicts", v},
            {"diagnostics", diagnostics},
            {"files", files}};
  }
};

namespace detail {

inline void atomic_write(const std::filesystem::path& p, const std::string& content) {
  auto tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, p);
}

inline std::string fmt12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// finite doubles as numbers, the rest as strings, so dumps never fail
inline json num(double v) { return std::isfinite(v) ? json(v) : json(fmt12(v)); }

}  // namespace detail

class Artifacts {
 public:
  Artifacts(std::filesystem::path dir, bool json_on, bool csv_on)
      : dir_(std::move(dir)), json_(json_on), csv_(csv_on) {
    std::filesystem::create_directories(dir_);
  }
  void write_json(const std::string& name, const json& j, bool always = false) {
    if (!json_ && !always) return;
    detail::atomic_write(dir_ / name, j.dump(2) + "\n");
    files_.push_back(name);
  }
  void write_csv(const std::string& name, const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& cols) {
    if (!csv_) return;
    std::string s;
    for (std::size_t c = 0; c < header.size(); ++c) s += (c ? "," : "") + header[c];
    s += "\n";
    const std::size_t rows = cols.empty() ? 0 : cols.front().size();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols.size(); ++c) {
        if (c) s += ",";
        s += detail::fmt12(cols[c][r]);
      }
      s += "\n";
    }
    detail::atomic_write(dir_ / name, s);
    files_.push_back(name);
  }
  const std::vector<std::string>& files() const { return files_; }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  bool json_, csv_;
  std::vector<std::string> files_;
};

class Runner {
 public:
  Runner(const ExperimentConfig& cfg, Artifacts& out, std::ostream* log = nullptr)
      : cfg_(cfg), out_(out), log_(log) {}

  RunManifest run() {
    const auto t0 = std::chrono::steady_clock::now();
    M_.experiment = to_string(cfg_.kind);
    M_.config_hash = hex64(fnv1a(cfg_.raw.dump()));
    switch (cfg_.kind) {
      case ExperimentKind::finite_h1h2: finite(); break;
      case ExperimentKind::pde_converge: pde_converge(); break;
      case ExperimentKind::lyapunov_audit: lyapunov(); break;
      case ExperimentKind::sigma_audit: sigma(); break;
      case ExperimentKind::scenario_rotation: rotation(); break;
      case ExperimentKind::scenario_singular: singular(); break;
      case ExperimentKind::full_theorem2_pipeline: pipeline(); break;
    }
    for (const auto& c : M_.verdicts)
      if (!c.pass) {
        M_.exit_code = 1;
        M_.failing_check = c.name;
        break;
      }
    out_.write_json("summary.json", M_.summary);
    M_.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    M_.files = out_.files();
    M_.files.push_back("manifest.json");
    out_.write_json("manifest.json", M_.to_json(), true);
    return M_;
  }

 private:
  void note(const std::string& s) {
    if (log_) *log_ << s << std::endl;
  }
  void check(const std::string& name, bool pass, json detail = json::object()) {
    note("  [" + std::string(pass ? "pass" : "FAIL") + "] " + name);
    M_.verdicts.push_back({name, pass, std::move(detail)});
  }
  PowerOptions power_opts() const {
    PowerOptions p;
    p.tol = cfg_.numerics.tol;
    p.max_iter = cfg_.numerics.max_iter;
    p.lambda_window = cfg_.numerics.lambda_window;
    return p;
  }
  ProfileOptions profile_opts() const {
    ProfileOptions p;
    p.residual_floor = cfg_.numerics.residual_floor;
    p.fit_quality = cfg_.numerics.fit_quality;
    p.peak_ratio = cfg_.numerics.peak_ratio;
    return p;
  }

  static json triplet_json(const Eigentriplet& E) {
    return {{"lambda", detail::num(E.lambda)},         {"lambda_left", detail::num(E.lambda_left)},
            {"tau", E.tau},                            {"residual_h", detail::num(E.res_h)},
            {"residual_gamma", detail::num(E.res_gamma)}, {"normalization_h", E.normalization_h},
            {"normalization_gamma", E.normalization_gamma}, {"iterations", E.iterations},
            {"converged", E.converged},                {"status", E.status}};
  }
  static json profile_json(const ConvergenceReport& R) {
    return {{"verdict", R.verdict},
            {"omega", detail::num(R.omega)},
            {"C", detail::num(R.C)},
            {"fit_quality", detail::num(R.fit_quality)},
            {"fit_points", R.fit_points},
            {"window", {R.window_start, R.window_end}},
            {"at_floor", R.at_floor},
            {"mu_h", detail::num(R.mu_h)},
            {"dominant_period", detail::num(R.dominant_period)},
            {"peak_ratio", detail::num(R.peak_ratio)},
            {"late_max_residual", detail::num(R.late_max_residual)},
            {"warnings", R.warnings}};
  }
  void profile_csv(const std::string& name, const ConvergenceReport& R) {
    out_.write_csv(name, {"t", "residual_tv", "log_residual", "lambda_running"},
                   {R.t, R.residual, R.log_residual, R.lambda_running});
  }
  static json check_json(const CheckReport& c) {
    json k = json::object();
    for (const auto& [n, v] : c.constants) k[n] = detail::num(v);
    return {{"margin", detail::num(c.margin)},
            {"tolerance_budget", detail::num(c.tolerance_budget)},
            {"worst_cell", c.worst_cell},
            {"worst_x", c.worst_x},
            {"constants", k}};
  }

  // ------------------------------------------------------------------ finite
  void finite() {
    const std::size_t n = cfg_.generator.size();
    Eigen::MatrixXd Q(n, n);
    Eigen::VectorXd a(n);
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        Q(i, k) = i == k ? 0.0 : cfg_.generator[i][k];
        row += cfg_.generator[i][k];
      }
      a(i) = row;  // diagonal beyond the exit rate acts as a potential
    }
    FiniteGenerator full(Q, a), jump(Q);
    auto E = power_triplet(FiniteSemigroup(full), cfg_.tau, power_opts());
    check("power_triplet", E.converged, triplet_json(E));
    out_.write_csv("series_growth.csv", {"iteration", "growth_right", "growth_left"},
                   {iota(E.growth_right.size()), E.growth_right, pad(E.growth_left, E.growth_right.size())});

    // (H1)/(H2) on the jump chain; the potential lowers c by at most e^{tau min a}
    auto H1 = verify_h1(jump, cfg_.tau, std::max<std::size_t>(cfg_.numerics.n_time, 64));
    const double amin = a.minCoeff();
    const double c_full = H1.constants.c * std::exp(std::min(0.0, amin) * cfg_.tau);
    check("H1", H1.pass,
          {{"c", H1.constants.c}, {"c_with_potential", c_full}, {"C", H1.constants.C},
           {"min_p", H1.min_p}, {"worst_slack", detail::num(H1.worst_slack)}, {"max_tol", H1.max_tol},
           {"verdict", H1.verdict}});
    auto H2 = verify_h2(H1.laws);
    check("H2", H2.pass, {{"margin", H2.margin}, {"worst_x", H2.worst_x}, {"worst_xp", H2.worst_xp}});
    M_.summary = {{"lambda", detail::num(E.lambda)},
                  {"residual_h", E.res_h},
                  {"residual_gamma", E.res_gamma},
                  {"h", E.h},
                  {"gamma", E.gamma},
                  {"h1_c", H1.constants.c},
                  {"h1_c_with_potential", c_full},
                  {"h2_margin", H2.margin}};
    out_.write_json("report_finite.json", {{"triplet", triplet_json(E)}, {"summary", M_.summary}});
  }

  // ---------------------------------------------------------------- pde runs
  struct ConvergenceBundle {
    Eigentriplet E;
    std::vector<ConvergenceReport> runs;
    json runs_json;
  };
  ConvergenceBundle converge(const PDESemigroup& S) {
    ConvergenceBundle B;
    note("power iteration");
    B.E = power_triplet(S, cfg_.tau, power_opts());
    check("power_triplet", B.E.converged, triplet_json(B.E));
    for (std::size_t r = 0; r < cfg_.initial_diracs.size(); ++r) {
      const double x = cfg_.initial_diracs[r];
      note("convergence from a Dirac at " + detail::fmt12(x));
      auto mu = DiscreteMeasure::dirac(S.grid(), x).masses;
      B.runs.push_back(convergence_profile(S, B.E, mu, cfg_.horizon, cfg_.sample_dt, profile_opts()));
      profile_csv("series_convergence_" + std::to_string(r) + ".csv", B.runs.back());
    }
    bool expo = true;
    json runs = json::array();
    for (const auto& R : B.runs) {
      expo = expo && R.verdict == "exponential" && R.omega > 0.0;
      runs.push_back(profile_json(R));
    }
    check("convergence_exponential", expo, {{"runs", runs}});
    B.runs_json = runs;
    if (B.runs.size() >= 2) {
      double wmin = B.runs[0].omega, wmax = wmin, tv = 0.0;
      for (const auto& R : B.runs) wmin = std::min(wmin, R.omega), wmax = std::max(wmax, R.omega);
      for (std::size_t i = 0; i < B.runs.size(); ++i)
        for (std::size_t k = i + 1; k < B.runs.size(); ++k) {
          double s = 0.0;
          for (std::size_t c = 0; c < B.runs[i].terminal.size(); ++c)
            s += std::abs(B.runs[i].terminal[c] - B.runs[k].terminal[c]);
          tv = std::max(tv, s);
        }
      const double spread = (wmax - wmin) / wmax;
      check("rate_consistency", spread <= 0.1, {{"omega_min", wmin}, {"omega_max", wmax}, {"relative_spread", spread}});
      check("limit_independence", tv <= 1e-3, {{"max_pairwise_tv", tv}});
    }
    out_.write_csv("series_triplet.csv", {"x", "h", "gamma"}, {centers(S.grid()), B.E.h, B.E.gamma});
    return B;
  }

  json convergence_summary(const ConvergenceBundle& B) const {
    const auto& R = B.runs.front();
    return {{"lambda", detail::num(B.E.lambda)},   {"omega", detail::num(R.omega)},
            {"C", detail::num(R.C)},               {"verdict", R.verdict},
            {"residual_h", detail::num(B.E.res_h)}, {"residual_gamma", detail::num(B.E.res_gamma)}};
  }

  void pde_converge() {
    PDESemigroup S(cfg_.model, cfg_.grid());
    auto B = converge(S);
    M_.summary = convergence_summary(B);
    out_.write_json("report_convergence.json", {{"triplet", triplet_json(B.E)}, {"runs", B.runs_json}});
  }

  // ---------------------------------------------------------------- lyapunov
  std::optional<LyapunovConstruction> lyapunov_checks(const PDESemigroup& S) {
    LyapunovConstruction C;
    try {
      C = build_construction(cfg_.model, S.grid(), cfg_.tau);
    } catch (const InputError& e) {
      check("lyapunov_construction", false, {{"error", e.what()}});
      return std::nullopt;
    }
    json cj = json::object();
    for (const auto& [n, v] : C.constants()) cj[n] = detail::num(v);
    cj["K_cells"] = C.K.size();
    cj["K_contiguous"] = C.K_contiguous;
    cj["closed_form_fixed_point_converged"] = C.closed_fixed_point_converged;
    const bool inside = !C.K.empty() && C.K.front() > 0 && C.K.back() + 1 < S.grid().size();
    check("lyapunov_construction", !C.K.empty(), cj);
    check("alpha_lt_beta", C.log_alpha < C.log_beta, {{"log_alpha", C.log_alpha}, {"log_beta", C.log_beta}});
    check("K_inside_grid", inside, {{"K_lower", C.K_lower()}, {"K_upper", C.K_upper()}});
    json reps = json::object();
    for (const auto& r : check_generator_drift(cfg_.model, C)) {
      check(r.condition, r.pass, check_json(r));
      reps[r.condition] = check_json(r);
    }
    for (const auto& r : check_semigroup_drift(S, C)) {
      check(r.condition, r.pass, check_json(r));
      reps[r.condition] = check_json(r);
    }
    auto s3 = check_step3_bound(S, C, cfg_.numerics.step3_kmax);
    check("step3", s3.pass, check_json(s3));
    reps["step3"] = check_json(s3);
    out_.write_json("report_lyapunov.json", {{"construction", cj}, {"checks", reps}});
    std::vector<double> V(S.grid().size(), 1.0), inK(S.grid().size(), 0.0);
    for (std::size_t i : C.K) inK[i] = 1.0;
    out_.write_csv("series_lyapunov.csv", {"x", "psi0", "psi", "V", "in_K"},
                   {centers(S.grid()), C.psi0.values, C.psi.values, V, inK});
    return C;
  }

  void lyapunov() {
    PDESemigroup S(cfg_.model, cfg_.grid());
    auto C = lyapunov_checks(S);
    M_.summary = {{"lyapunov", C ? json(C->constants()) : json(nullptr)}};
  }

  // ------------------------------------------------------------------- sigma
  std::optional<H1H2PrimeReport> sigma_checks(const PDESemigroup& S, const LyapunovConstruction& C) {
    const Grid1D& g = S.grid();
    const double eps = cfg_.model.epsilon();
    // family at the centre of K, horizon tau or the largest dt multiple below eps/2
    std::size_t fam_steps = S.steps_for(cfg_.tau);
    if (!(static_cast<double>(fam_steps) * g.dx() < 0.5 * eps))
      fam_steps = static_cast<std::size_t>(std::ceil(0.5 * eps / g.dx())) - 1;
    std::size_t segs = std::min(cfg_.numerics.n_time - 1, fam_steps);
    while (fam_steps % segs != 0) --segs;
    SigmaOptions so;
    so.n_time = segs + 1;
    const double t_fam = static_cast<double>(fam_steps) * g.dx();
    const double y = g.center(C.K[C.K.size() / 2]);
    auto F = SigmaFamily::level1(cfg_.model, SigmaDomain::of(g), y, t_fam, so);
    persist_family(F);
    json levels = json::array();
    bool ok5 = true;
    double worst = std::numeric_limits<double>::infinity();
    for (int lvl = 1; lvl <= 2; ++lvl) {
      auto I = verify_inequality_5(F, S, cfg_.numerics.trials, *cfg_.numerics.seed + static_cast<std::uint64_t>(lvl));
      ok5 = ok5 && I.pass;
      worst = std::min(worst, I.min_ratio);
      levels.push_back({{"level", lvl}, {"trials", I.trials}, {"min_ratio", detail::num(I.min_ratio)},
                        {"zero_rhs", I.zero_rhs}, {"witness", {{"x", I.x}, {"y", I.y}, {"t", I.t}}},
                        {"relaxation", I.relaxation}});
      if (lvl < 2) F = F.induct();
    }
    check("inequality_5", ok5, {{"min_ratio", detail::num(worst)}, {"levels", levels}});

    H1H2PrimeOptions ho;
    ho.n_time = cfg_.numerics.n_time;
    ho.max_level = cfg_.numerics.max_level;
    ho.stride = cfg_.numerics.stride;
    note("crossing families on K");
    H1H2PrimeReport H;
    try {
      H = verify_h1prime_h2prime(S, C, ho);
    } catch (const InputError& e) {
      check("h1prime_h2prime", false, {{"error", e.what()}});
      return std::nullopt;
    }
    json hj = {{"level", H.level},        {"t_fam", H.t_fam},           {"composed", H.composed},
               {"n_time", H.n_time},      {"c", detail::num(H.c)},      {"c_raw", detail::num(H.c_raw)},
               {"C", detail::num(H.C)},   {"eps_overlap", detail::num(H.eps_overlap)},
               {"continuity_kappa", H.continuity_kappa}, {"samples", H.samples()}, {"message", H.message}};
    check("h1prime_h2prime", H.pass, hj);
    out_.write_json("report_sigma.json", {{"inequality_5", levels}, {"h1prime_h2prime", hj}});
    std::vector<double> xs, ys, cs;
    for (std::size_t a = 0; a < H.samples(); ++a)
      for (std::size_t b = 0; b < H.samples(); ++b) {
        xs.push_back(g.center(H.cells[a]));
        ys.push_back(g.center(H.cells[b]));
        cs.push_back(H.cxy[a * H.samples() + b]);
      }
    out_.write_csv("series_h1prime.csv", {"x", "y", "c"}, {xs, ys, cs});
    return H;
  }

  // JSON header plus the (w, t, s, g) table of one family
  void persist_family(const SigmaFamily& F) {
    out_.write_json("report_sigma_family.json",
                    {{"level", F.level()}, {"target", F.target()}, {"horizon", F.horizon()},
                     {"n_time", F.n_time()}, {"dw", F.dw()}, {"half_width", F.half_width()},
                     {"columns", {"w", "t", "s", "g"}}, {"table", "series_sigma_family.csv"}});
    std::vector<double> w, t, s, gv;
    for (long i = -F.half_index(); i <= F.half_index(); ++i)
      for (std::size_t j = 1; j < F.n_time(); ++j)
        for (std::size_t k = 0; k <= j; ++k) {
          w.push_back(static_cast<double>(i) * F.dw());
          t.push_back(F.time(j));
          s.push_back(F.time(k));
          gv.push_back(F.g(i, j, k));
        }
    out_.write_csv("series_sigma_family.csv", {"w", "t", "s", "g"}, {w, t, s, gv});
  }

  void sigma() {
    PDESemigroup S(cfg_.model, cfg_.grid());
    LyapunovConstruction C;
    try {
      C = build_construction(cfg_.model, S.grid(), cfg_.tau);
    } catch (const InputError& e) {
      check("lyapunov_construction", false, {{"error", e.what()}});
      return;
    }
    auto H = sigma_checks(S, C);
    M_.summary = {{"c", H ? detail::num(H->c) : json(nullptr)},
                  {"eps_overlap", H ? detail::num(H->eps_overlap) : json(nullptr)},
                  {"C", H ? detail::num(H->C) : json(nullptr)}};
  }

  // --------------------------------------------------------------- scenarios
  void rotation() {
    auto R = scenario_rotation(cfg_.n_cells, cfg_.horizon, cfg_.sample_dt);
    profile_csv("series_convergence_0.csv", R.report);
    check("mass_conservation", R.mass_error <= 1e-12, {{"mass_error", R.mass_error}});
    check("periodic", R.report.verdict == "periodic", profile_json(R.report));
    M_.summary = {{"lambda", R.triplet.lambda}, {"verdict", R.report.verdict},
                  {"dominant_period", R.report.dominant_period}, {"h2_margin", R.h2_margin},
                  {"mass_error", R.mass_error}};
    out_.write_json("report_rotation.json", {{"triplet", triplet_json(R.triplet)}, {"profile", profile_json(R.report)}});
  }

  void singular() {
    auto R = scenario_singular_kernel(cfg_.model, cfg_.grid(), cfg_.tau, cfg_.horizon, cfg_.sample_dt, power_opts());
    profile_csv("series_convergence_0.csv", R.report);
    const bool confirmed = R.report.verdict != "exponential" && R.report.late_max_residual >= 0.05;
    check("non_convergence_confirmed", confirmed, profile_json(R.report));
    M_.summary = {{"lambda", detail::num(R.triplet.lambda)}, {"verdict", R.report.verdict},
                  {"dominant_period", R.report.dominant_period},
                  {"late_max_residual", R.report.late_max_residual}};
    out_.write_json("report_singular.json", {{"triplet", triplet_json(R.triplet)}, {"profile", profile_json(R.report)}});
  }

  // ---------------------------------------------------------------- pipeline
  void pipeline() {
    PDESemigroup S(cfg_.model, cfg_.grid());
    note("lyapunov construction and drift checks");
    auto C = lyapunov_checks(S);
    std::optional<H1H2PrimeReport> H;
    if (C) H = sigma_checks(S, *C);
    auto B = converge(S);
    json summary = convergence_summary(B);
    summary["d"] = nullptr;
    summary["c_tilde"] = nullptr;
    if (C && H) {
      note("d and c~");
      MinorizationOptions mo;
      mo.n_pairs = cfg_.numerics.n_pairs;
      mo.seed = *cfg_.numerics.seed;
      mo.tolerance = cfg_.numerics.minorization_tol;
      auto R = estimate_d_and_ctilde(S, *C, *H, mo);
      json pairs = json::array();
      for (const auto& P : R.pairs)
        pairs.push_back({{"x", S.grid().center(P.x)}, {"x_prime", S.grid().center(P.xp)},
                         {"y", S.grid().center(P.y)}, {"m", P.m}, {"nu_mass_error", P.nu_mass_error},
                         {"worst_relative_margin", detail::num(P.worst_margin)}, {"holds", P.holds}});
      json mj = {{"d", detail::num(R.d)},          {"d_at", R.d_scan.d_at},  {"t_list", R.d_scan.t_list},
                 {"c", detail::num(R.c)},          {"eps_overlap", R.eps_overlap}, {"C", R.C},
                 {"c_tilde", detail::num(R.c_tilde)}, {"pairs", pairs},       {"message", R.message}};
      check("minorization", R.pass, mj);
      out_.write_json("report_minorization.json", mj);
      summary["d"] = detail::num(R.d);
      summary["c_tilde"] = detail::num(R.c_tilde);
    }
    bool all = true;
    json margins = json::object();
    for (const auto& c : M_.verdicts) {
      all = all && c.pass;
      margins[c.name] = c.detail.contains("margin") ? c.detail["margin"] : json(c.pass);
    }
    summary["hypotheses_certified"] = all;
    summary["certificate"] = std::string("hypotheses certified at grid level: ") + (all ? "yes" : "no");
    summary["margins"] = margins;
    M_.summary = summary;
    note(summary["certificate"].get<std::string>());
  }

  static std::vector<double> centers(const Grid1D& g) {
    std::vector<double> x(g.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = g.center(i);
    return x;
  }
  static std::vector<double> iota(std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>(i);
    return v;
  }
  static std::vector<double> pad(std::vector<double> v, std::size_t n) {
    v.resize(n, std::numeric_limits<double>::quiet_NaN());
    return v;
  }

  const ExperimentConfig& cfg_;
  Artifacts& out_;
  std::ostream* log_;
  RunManifest M_;
};

// Full entry point used by the CLI: load, override, validate, run.
struct RunRequest {
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

inline int validate_only(const std::string& path, std::ostream& err, std::optional<std::uint64_t> seed = {}) {
  ExperimentConfig cfg;
  std::vector<Diagnostic> d;
  std::ifstream in(path);
  if (!in) {
    err << "$: cannot read config file " << path << "\n";
    return 2;
  }
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    err << "$: invalid JSON: " << e.what() << "\n";
    return 2;
  }
  if (seed && j.is_object()) j["numerics"]["seed"] = *seed;
  d = parse_config(j, cfg, std::filesystem::path(path).parent_path());
  for (const auto& x : d) err << x.str() << "\n";
  return d.empty() ? 0 : 2;
}

inline int run_config(const RunRequest& rq, std::ostream& log, std::ostream& err, RunManifest* out = nullptr) {
  std::ifstream in(rq.config_path);
  if (!in) {
    err << "$: cannot read config file " << rq.config_path << "\n";
    return 2;
  }
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    err << "$: invalid JSON: " << e.what() << "\n";
    return 2;
  }
  if (rq.seed && j.is_object()) j["numerics"]["seed"] = *rq.seed;
  ExperimentConfig cfg;
  auto d = parse_config(j, cfg, std::filesystem::path(rq.config_path).parent_path());
  if (!d.empty()) {
    for (const auto& x : d) err << x.str() << "\n";
    return 2;
  }
  if (rq.out_dir) cfg.out_dir = *rq.out_dir;
  const bool js = std::find(cfg.formats.begin(), cfg.formats.end(), "json") != cfg.formats.end();
  const bool cs = std::find(cfg.formats.begin(), cfg.formats.end(), "csv") != cfg.formats.end();
  Artifacts art(cfg.out_dir, js, cs);
  Runner R(cfg, art, rq.quiet ? nullptr : &log);
  if (!rq.quiet) log << "experiment " << to_string(cfg.kind) << " -> " << cfg.out_dir << std::endl;
  RunManifest M;
  try {
    M = R.run();
  } catch (const InputError& e) {
    err << "run: " << e.what() << "\n";
    return 2;
  }
  if (M.exit_code != 0) err << "check failed: " << M.failing_check << "\n";
  else if (!rq.quiet) log << "all checks passed" << std::endl;
  if (out) *out = M;
  return M.exit_code;
}

}  // namespace perron
