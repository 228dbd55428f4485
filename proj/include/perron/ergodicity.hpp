#pragma once
// Long-time behaviour of e^{-lambda t} mu M_t: residual series, rate fit,
// periodogram and verdict; rotation and singular-kernel scenarios.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "perron/core_spaces.hpp"
#include "perron/eigentriplet.hpp"
#include "perron/oracle.hpp"
#include "perron/pde_semigroup.hpp"

namespace perron {

struct Periodogram {
  double peak_frequency = 0.0;
  double peak_ratio = 0.0;  // peak power / median power
  double period() const { return peak_frequency > 0.0 ? 1.0 / peak_frequency : 0.0; }
};

// Linear detrend, then |sum y_k e^{-2 pi i f t_k}|^2 on f in [2/W, Nyquist],
// step 1/(8W), parabolic refinement around the maximum.
inline Periodogram periodogram(const std::vector<double>& t, const std::vector<double>& y) {
  Periodogram out;
  const std::size_t n = t.size();
  if (n < 8) return out;
  double mt = 0, my = 0;
  for (std::size_t k = 0; k < n; ++k) {
    mt += t[k];
    my += y[k];
  }
  mt /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < n; ++k) {
    sxy += (t[k] - mt) * (y[k] - my);
    sxx += (t[k] - mt) * (t[k] - mt);
  }
  const double b = sxx > 0 ? sxy / sxx : 0.0;
  std::vector<double> r(n);
  double var = 0;
  for (std::size_t k = 0; k < n; ++k) {
    r[k] = y[k] - my - b * (t[k] - mt);
    var += r[k] * r[k];
  }
  if (!(var > 0.0)) return out;

  const double W = t.back() - t.front();
  const double dt = W / static_cast<double>(n - 1);
  const double f0 = 2.0 / W, f1 = 0.5 / dt, df = 1.0 / (8.0 * W);
  auto power = [&](double f) {
    double c = 0, s = 0;
    for (std::size_t k = 0; k < n; ++k) {
      double ph = 2.0 * std::numbers::pi * f * t[k];
      c += r[k] * std::cos(ph);
      s += r[k] * std::sin(ph);
    }
    return c * c + s * s;
  };
  std::vector<double> P;
  for (double f = f0; f <= f1; f += df) P.push_back(power(f));
  if (P.size() < 3) return out;
  auto it = std::max_element(P.begin(), P.end());
  const std::size_t i = static_cast<std::size_t>(it - P.begin());
  double fpk = f0 + df * static_cast<double>(i);
  if (i > 0 && i + 1 < P.size()) {
    double a = P[i - 1], c = P[i], d = P[i + 1];
    double den = a - 2 * c + d;
    if (den < 0) fpk += 0.5 * df * (a - d) / den;
  }
  std::vector<double> sorted = P;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double med = sorted[sorted.size() / 2];
  out.peak_frequency = fpk;
  out.peak_ratio = med > 0 ? *it / med : std::numeric_limits<double>::infinity();
  return out;
}

struct LinearFit {
  double slope = 0, intercept = 0, r2 = 0;
  std::size_t n = 0;
  double span = 0;
};

inline LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  LinearFit F;
  F.n = x.size();
  if (F.n < 2) return F;
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < F.n; ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= F.n;
  my /= F.n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t k = 0; k < F.n; ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  F.slope = sxx > 0 ? sxy / sxx : 0;
  F.intercept = my - F.slope * mx;
  double ssr = 0;
  for (std::size_t k = 0; k < F.n; ++k) {
    double e = y[k] - F.intercept - F.slope * x[k];
    ssr += e * e;
  }
  F.r2 = syy > 0 ? 1.0 - ssr / syy : 0.0;
  F.span = x.back() - x.front();
  return F;
}

struct ProfileOptions {
  double residual_floor = 1e-8;  // relative to ‖mu‖
  double fit_quality = 0.99;
  double peak_ratio = 5.0;
  double window_start_fraction = 0.25;
};

struct ConvergenceReport {
  std::vector<double> t, residual, log_residual, lambda_running, probe;
  double mu_h = 0.0, mu_norm = 0.0;
  double omega = std::numeric_limits<double>::quiet_NaN();
  double C = std::numeric_limits<double>::quiet_NaN();
  double fit_quality = 0.0;
  std::size_t fit_points = 0;
  double window_start = 0.0, window_end = 0.0;
  bool at_floor = false;
  Periodogram residual_peak, probe_peak;
  double dominant_period = 0.0;
  double peak_ratio = 0.0;
  double late_max_residual = 0.0;
  std::string verdict;  // exponential | periodic | stalled
  std::vector<double> terminal;  // e^{-lambda T} mu M_T / mu(h)
  std::vector<std::string> warnings;
};

// Classify a residual series already recorded in R.
inline void classify(ConvergenceReport& R, double horizon, const ProfileOptions& opt) {
  R.window_start = opt.window_start_fraction * horizon;
  R.window_end = horizon;
  std::vector<double> tw, lw, tall, rall, pall;
  const double floor = opt.residual_floor * R.mu_norm;
  for (std::size_t k = 0; k < R.t.size(); ++k) {
    if (R.t[k] < R.window_start - 1e-12) continue;
    tall.push_back(R.t[k]);
    rall.push_back(R.residual[k]);
    pall.push_back(R.probe[k]);
    R.late_max_residual = std::max(R.late_max_residual, R.residual[k]);
    if (R.residual[k] > floor) {
      tw.push_back(R.t[k]);
      lw.push_back(R.log_residual[k]);
    }
  }
  R.residual_peak = periodogram(tall, rall);
  R.probe_peak = periodogram(tall, pall);
  const Periodogram& best =
      R.probe_peak.peak_ratio > R.residual_peak.peak_ratio ? R.probe_peak : R.residual_peak;
  R.peak_ratio = best.peak_ratio;
  R.dominant_period = best.period();

  if (!tall.empty() && tw.size() < 4) {
    R.at_floor = true;
    R.fit_points = tw.size();
    double mx = 0;
    for (double r : rall) mx = std::max(mx, r);
    R.C = R.mu_norm > 0 ? mx / R.mu_norm : 0.0;
    R.fit_quality = 1.0;
    R.verdict = "exponential";
    return;
  }
  auto F = fit_line(tw, lw);
  R.fit_points = F.n;
  R.fit_quality = F.r2;
  R.omega = -F.slope;
  R.C = R.mu_norm > 0 ? std::exp(F.intercept) / R.mu_norm : 0.0;
  const bool exp_ok = F.slope < 0 && F.r2 >= opt.fit_quality && R.omega * F.span >= 1.0;
  if (exp_ok)
    R.verdict = "exponential";
  else if (R.peak_ratio >= opt.peak_ratio)
    R.verdict = "periodic";
  else
    R.verdict = "stalled";
}

// Evolve mu0 by the left action, renormalized by e^{-lambda t}, sampling
// every sample_dt; residual against mu(h) gamma in M(V).
template <SemigroupOracle S>
ConvergenceReport convergence_profile(const S& oracle, const Eigentriplet& E,
                                      const std::vector<double>& mu0, double horizon,
                                      double sample_dt, ProfileOptions opt = {}) {
  const std::size_t n = oracle.dimension();
  if (mu0.size() != n) throw InputError("convergence_profile: measure size mismatch");
  if (!(horizon > 0) || !(sample_dt > 0)) throw InputError("convergence_profile: bad horizon");
  ConvergenceReport R;
  if (!E.converged || E.res_h > 1e-6 || E.res_gamma > 1e-6)
    R.warnings.push_back("eigentriplet residuals above 1e-6; profile relative to an inexact triplet");
  const auto& V = E.V;
  R.mu_h = dot(mu0, E.h);
  R.mu_norm = detail::mnorm(mu0, V);
  std::vector<double> probe_f(n);
  for (std::size_t i = 0; i < n; ++i)
    probe_f[i] = (static_cast<double>(i) - 0.5 * static_cast<double>(n - 1)) / static_cast<double>(n);

  auto P = oracle.propagator(sample_dt);
  const double dts = P.time();
  if (!(dts > 0)) throw InputError("convergence_profile: sample_dt below the time step");
  const auto K = static_cast<std::size_t>(std::floor(horizon / dts + 1e-9));
  const double decay = std::exp(-E.lambda * dts);
  std::vector<double> nu = mu0;
  double log_scale = 0.0;  // nu_true = e^{log_scale} nu
  const double log_mu = std::log(std::max(l1_norm(mu0), 1e-300));
  std::vector<double> diff(n);
  for (std::size_t k = 1; k <= K; ++k) {
    nu = P.left(nu);
    for (auto& v : nu) v *= decay;
    double m = l1_norm(nu);
    if (m > 1e100 || (m > 0 && m < 1e-100)) {
      for (auto& v : nu) v /= m;
      log_scale += std::log(m);
      m = 1.0;
    }
    const double t = static_cast<double>(k) * dts;
    double r, lr, p = 0;
    if (std::abs(log_scale) < 600) {
      const double s = std::exp(log_scale);
      for (std::size_t i = 0; i < n; ++i) diff[i] = s * nu[i] - R.mu_h * E.gamma[i];
      r = detail::mnorm(diff, V);
      lr = r > 0 ? std::log(r) : -std::numeric_limits<double>::infinity();
      p = dot(diff, probe_f);
    } else {
      lr = log_scale + std::log(detail::mnorm(nu, V));
      r = std::exp(std::min(lr, 700.0));
      if (R.warnings.empty() || R.warnings.back() != "residual outside double range")
        R.warnings.push_back("residual outside double range");
    }
    R.t.push_back(t);
    R.residual.push_back(r);
    R.log_residual.push_back(lr);
    R.probe.push_back(p);
    R.lambda_running.push_back(E.lambda + (log_scale + std::log(std::max(m, 1e-300)) - log_mu) / t);
  }
  R.terminal.assign(n, 0.0);
  if (R.mu_h != 0.0 && std::abs(log_scale) < 600) {
    const double s = std::exp(log_scale) / R.mu_h;
    for (std::size_t i = 0; i < n; ++i) R.terminal[i] = s * nu[i];
  }
  classify(R, horizon, opt);
  return R;
}

struct ScenarioResult {
  Eigentriplet triplet;
  ConvergenceReport report;
  double mass_error = 0.0;  // rotation: max |M_t 1 - 1| over the horizon
  double h2_margin = 0.0;
};

// Unit rotation on N cells of [0,1) started from a Dirac mass.
inline ScenarioResult scenario_rotation(std::size_t N, double horizon, double sample_dt,
                                        double tau = 0.25) {
  CyclicShiftSemigroup S(N);
  ScenarioResult out;
  out.triplet = power_triplet(S, tau);
  std::vector<double> mu(N, 0.0);
  mu[N / 4] = 1.0;
  out.report = convergence_profile(S, out.triplet, mu, horizon, sample_dt);

  auto P = S.propagator(sample_dt);
  std::vector<double> one(N, 1.0);
  const auto K = static_cast<std::size_t>(std::floor(horizon / P.time() + 1e-9));
  for (std::size_t k = 0; k < K; ++k) {
    one = P.right(one);
    for (double v : one) out.mass_error = std::max(out.mass_error, std::abs(v - 1.0));
  }
  // crossing-time laws are the Diracs at (y - x) mod 1 (1 for x = y); two
  // of them share a node only when x = x'
  const std::size_t m = N + 1;
  double sup = 0.0;
  for (std::size_t x = 0; x < N && sup < 2.0; ++x)
    for (std::size_t xp = x + 1; xp < N && sup < 2.0; ++xp) {
      std::size_t a = (N - x) % N, b = (N - xp) % N;
      auto sa = TimeMeasure::dirac(1.0, m, a == 0 ? N : a);
      auto sb = TimeMeasure::dirac(1.0, m, b == 0 ? N : b);
      sup = std::max(sup, tv_distance(sa, sb));
    }
  out.h2_margin = 2.0 - sup;
  return out;
}

// Convergence run for a PDE model (any kernel) started from mu0.
inline ScenarioResult scenario_pde(const PDESemigroup& S, double tau, const std::vector<double>& mu0,
                                   double horizon, double sample_dt, PowerOptions popt = {},
                                   ProfileOptions opt = {}) {
  ScenarioResult out;
  out.triplet = power_triplet(S, tau, popt);
  out.report = convergence_profile(S, out.triplet, mu0, horizon, sample_dt, opt);
  return out;
}

inline ScenarioResult scenario_singular_kernel(const ModelSpec& m, const Grid1D& g, double tau,
                                               double horizon, double sample_dt,
                                               PowerOptions popt = {}) {
  if (m.Q.kind != Kernel::Kind::dirac_pair) throw InputError("scenario_singular_kernel: needs dirac_pair");
  const double q = 1.0 / g.dx();
  if (std::abs(q - std::round(q)) > 1e-9) throw InputError("scenario_singular_kernel: dx must divide 1");
  PDESemigroup S(m, g);
  auto mu = DiscreteMeasure::dirac(g, 0.0).masses;
  return scenario_pde(S, tau, mu, horizon, sample_dt, popt);
}

}  // namespace perron
