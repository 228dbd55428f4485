#pragma once
// Drift-condition pair (V = 1, psi) for the nonlocal transport model:
// psi0 = ((1 - (x/x0)^2)_+)^2, psi = M_tau psi0 / zeta, K = {V <= R psi}.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "perron/core_spaces.hpp"
#include "perron/model.hpp"
#include "perron/pde_semigroup.hpp"

namespace perron {

inline double psi0_at(double x, double x0) {
  const double u = x / x0, b = 1.0 - u * u;
  return b > 0.0 ? b * b : 0.0;
}
inline double psi0_derivative(double x, double x0) {
  const double u = x / x0, b = 1.0 - u * u;
  return b > 0.0 ? -4.0 * x / (x0 * x0) * b : 0.0;
}
// integral of psi0 over [lo, hi], exact
inline double psi0_integral(double lo, double hi, double x0) {
  auto F = [x0](double y) {
    const double u = std::clamp(y / x0, -1.0, 1.0);
    return x0 * (u - 2.0 * u * u * u / 3.0 + u * u * u * u * u / 5.0);
  };
  return hi > lo ? F(hi) - F(lo) : 0.0;
}

// int_{1-r}^1 (1-y)^2 (1+y)^2 dy in closed form, and its lower bound 8 r^3 / 15
// r^3 (4/3 - r + r^2/5), written over the common denominator so r = 1 gives 8/15 exactly
inline double band_identity_closed(double r) { return r * r * r * (20.0 - 15.0 * r + 3.0 * r * r) / 15.0; }
inline double band_identity_bound(double r) { return 8.0 * r * r * r / 15.0; }
// same integral by 3-point Gauss-Legendre on `pieces` subintervals
inline double band_identity_quadrature(double r, int pieces = 4) {
  static const double gx[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
  static const double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  const double a = 1.0 - r, h = r / pieces;
  double s = 0.0;
  for (int p = 0; p < pieces; ++p) {
    const double m = a + (p + 0.5) * h;
    for (int q = 0; q < 3; ++q) {
      const double y = m + 0.5 * h * gx[q];
      s += 0.5 * h * gw[q] * (1 - y) * (1 - y) * (1 + y) * (1 + y);
    }
  }
  return s;
}

struct CheckReport {
  std::string condition;
  bool pass = false;
  long worst_cell = -1;
  double worst_x = 0.0;
  double margin = 0.0;  // min over cells of (rhs - lhs) or the relevant slack
  double tolerance_budget = 0.0;
  std::map<std::string, double> constants;
};

struct LyapunovConstruction {
  Grid1D grid;
  double tau = 0.0;
  double x0 = 0.0, r0 = 0.0;
  double beta0 = 0.0, alpha0 = 0.0, theta0 = 0.0, zeta = 0.0, R = 0.0;
  double theta = 0.0;  // theta0 * zeta
  double log_alpha = 0.0, log_beta = 0.0;
  double alpha = 0.0, beta = 0.0;
  double abar = 0.0, qbar = 0.0;
  GridFunction psi0, psi;
  std::vector<std::size_t> K;
  bool K_contiguous = false;
  std::size_t candidates_scanned = 0;

  // the closed-form constants, for comparison
  double beta0_closed = 0.0, theta0_closed = 0.0, zeta_closed = 0.0;
  bool closed_fixed_point_converged = false;
  bool closed_x0_condition = false;  // x0 >= sqrt(2) r0

  bool in_K(std::size_t i) const { return std::binary_search(K.begin(), K.end(), i); }
  double K_lower() const { return K.empty() ? 0.0 : grid.center(K.front()); }
  double K_upper() const { return K.empty() ? 0.0 : grid.center(K.back()); }
  std::map<std::string, double> constants() const {
    return {{"x0", x0},           {"r0", r0},
            {"beta0", beta0},     {"alpha0", alpha0},
            {"theta0", theta0},   {"zeta", zeta},
            {"R", R},             {"theta", theta},
            {"log_alpha", log_alpha}, {"log_beta", log_beta},
            {"alpha", alpha},     {"beta", beta},
            {"tau", tau},         {"K_lower", K_lower()},
            {"K_upper", K_upper()}, {"beta0_closed_form", beta0_closed},
            {"theta0_closed_form", theta0_closed}, {"zeta_negative_exponent", zeta_closed}};
  }
};

struct LyapunovOptions {
  double x0_step = 0.05;
  double boundary_margin = 0.0;  // x0 must stay below grid.upper() - reach - margin
};

namespace detail {

struct Psi0Drift {
  double beta0 = 0.0, r0 = 0.0, theta0 = 0.0;
  bool admissible = false;
};

// beta0, r0, theta0 for one x0 using the grid kernel quadrature
inline Psi0Drift psi0_drift(const Grid1D& g, const KernelMatrix& W0,
                            const std::vector<double>& a, double x0, double qbar) {
  const std::size_t n = g.size();
  std::vector<double> p(n), Lp(n, 0.0), scratch;
  for (std::size_t i = 0; i < n; ++i) p[i] = psi0_at(g.center(i), x0);
  W0.apply(p.data(), Lp.data(), 1, 1.0, scratch);
  Psi0Drift d;
  d.beta0 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (!(p[i] > 0.0)) continue;
    const double x = g.center(i);
    Lp[i] += psi0_derivative(x, x0) + a[i] * p[i];
    d.beta0 = std::min(d.beta0, Lp[i] / p[i]);
  }
  const double alpha0 = d.beta0 - 1.0;
  d.admissible = std::isfinite(d.beta0);
  for (std::size_t i = 0; i < n && d.admissible; ++i) {
    const double lv = a[i] + qbar;
    if (lv < alpha0) continue;
    d.r0 = std::max(d.r0, std::abs(g.center(i)));
    if (!(p[i] > 0.0)) {
      d.admissible = false;
      break;
    }
    d.theta0 = std::max(d.theta0, (lv - alpha0) / p[i]);
  }
  return d;
}

inline double closed_beta0(const ModelSpec& m, const Grid1D& g, double x0) {
  return -30.0 / (m.kappa0() * std::pow(m.epsilon(), 3)) + m.a.inf_on(-x0, x0, g);
}

// the loop x0 -> beta0 -> alpha0 -> r0 -> x0 = max(eps, sqrt2 r0) with the closed-form beta0
inline bool closed_fixed_point(const ModelSpec& m, const Grid1D& g) {
  const double eps = m.epsilon(), qbar = m.qbar();
  double x0 = std::max(eps, std::sqrt(2.0) * eps);
  for (int it = 0; it < 50; ++it) {
    const double alpha0 = closed_beta0(m, g, x0) - 1.0;
    double r0 = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (m.a(g.center(i)) >= -qbar + alpha0) r0 = std::max(r0, std::abs(g.center(i)) + 0.5 * g.dx());
    if (r0 >= g.upper()) return false;
    const double nx = std::max(eps, std::sqrt(2.0) * r0);
    if (nx <= x0 + 1e-12) return true;
    x0 = nx;
  }
  return false;
}

}  // namespace detail

// alpha and K follow R; any R above theta zeta / (e^{alpha0 tau}(e^tau - 1)) keeps alpha < beta
inline void set_R(LyapunovConstruction& C, double R) {
  C.R = R;
  C.log_alpha = C.alpha0 * C.tau + std::log1p(C.theta / (R * std::exp(C.alpha0 * C.tau)));
  C.alpha = std::exp(C.log_alpha);
  C.K.clear();
  for (std::size_t i = 0; i < C.grid.size(); ++i)
    if (R * C.psi[i] >= 1.0) C.K.push_back(i);
  C.K_contiguous = !C.K.empty() && C.K.back() - C.K.front() + 1 == C.K.size();
}

inline LyapunovConstruction build_construction(const ModelSpec& m, const Grid1D& g, double tau,
                                               const LyapunovOptions& opt = {}) {
  if (!(tau > 0.0)) throw InputError("build_construction: tau must be > 0");
  if (!m.Q.has_density_lower_bound())
    throw InputError("build_construction: kernel has no band lower bound (kappa0, epsilon)");
  auto comp = m.compliance(g);
  if (!comp.ok()) throw InputError("build_construction: model is not confining on this grid");

  LyapunovConstruction C;
  C.grid = g;
  C.tau = tau;
  C.abar = m.abar();
  C.qbar = m.qbar();
  const std::size_t n = g.size();
  std::vector<double> a(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = m.a(g.center(i));
  KernelMatrix W0(m.Q, g, 0.0);

  const double eps = m.epsilon();
  C.zeta = std::exp((C.abar + C.qbar) * tau);
  const double log_gap = std::log(std::expm1(tau));
  const double x_lo = std::max(eps, std::sqrt(2.0) * eps);
  const double x_hi = g.upper() - m.Q.reach() - opt.boundary_margin;
  double best = std::numeric_limits<double>::infinity();
  detail::Psi0Drift pick;
  for (double x0 = x_lo; x0 <= x_hi + 1e-12; x0 += opt.x0_step) {
    ++C.candidates_scanned;
    auto d = detail::psi0_drift(g, W0, a, x0, C.qbar);
    if (!d.admissible || !(d.theta0 > 0.0)) continue;
    const double logR = std::log(2.0 * d.theta0 * C.zeta) - (d.beta0 - 1.0) * tau - log_gap;
    if (logR < best) {
      best = logR;
      pick = d;
      C.x0 = x0;
    }
  }
  if (!std::isfinite(best)) throw InputError("build_construction: no admissible (x0, r0)");

  C.beta0 = pick.beta0;
  C.alpha0 = pick.beta0 - 1.0;
  C.r0 = pick.r0;
  C.theta0 = pick.theta0;
  C.theta = C.theta0 * C.zeta;
  C.log_beta = C.beta0 * tau;
  C.beta = std::exp(C.log_beta);

  C.psi0 = GridFunction::sample(g, [&](double x) { return psi0_at(x, C.x0); });
  PDESemigroup S(m, g);
  auto v = C.psi0.values;
  S.dual_steps(v, 1, S.steps_for(tau));
  for (auto& x : v) x /= C.zeta;
  for (std::size_t i = 0; i < n; ++i)
    if (!(v[i] > 0.0))
      throw InputError("build_construction: psi vanishes at x = " + std::to_string(g.center(i)) +
                       " (grid or tau too small)");
  C.psi = GridFunction(g, std::move(v));
  set_R(C, std::exp(best));

  C.beta0_closed = detail::closed_beta0(m, g, C.x0);
  C.theta0_closed = 4.0 * (C.abar + C.qbar);
  C.zeta_closed = std::exp(-(C.abar + C.qbar) * tau);
  C.closed_fixed_point_converged = detail::closed_fixed_point(m, g);
  C.closed_x0_condition = C.x0 >= std::sqrt(2.0) * C.r0;
  return C;
}

namespace detail {

// int psi0(y) Q(x, dy) without grid quadrature: exact for band kernels,
// composite Gauss-Legendre on the density otherwise
inline double kernel_psi0(const Kernel& Q, double x, double x0, double h) {
  if (Q.kind == Kernel::Kind::uniform_band)
    return Q.kappa0 * psi0_integral(std::max(x - Q.epsilon, -x0), std::min(x + Q.epsilon, x0), x0);
  const double lo = std::max(x - Q.reach(), -x0), hi = std::min(x + Q.reach(), x0);
  if (!(hi > lo)) return 0.0;
  static const double gx[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
  static const double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  const int pieces = std::max(1, static_cast<int>(std::ceil((hi - lo) / h)));
  const double step = (hi - lo) / pieces;
  double s = 0.0;
  for (int p = 0; p < pieces; ++p) {
    const double mid = lo + (p + 0.5) * step;
    for (int q = 0; q < 3; ++q) {
      const double y = mid + 0.5 * step * gx[q];
      s += 0.5 * step * gw[q] * psi0_at(y, x0) * Q.density_at(y - x);
    }
  }
  return s;
}

inline double max_density(const Kernel& Q) {
  switch (Q.kind) {
    case Kernel::Kind::uniform_band:
      return Q.kappa0;
    case Kernel::Kind::truncated_gaussian:
      return Q.amplitude;
    case Kernel::Kind::table:
      return *std::max_element(Q.density.v.begin(), Q.density.v.end());
    case Kernel::Kind::dirac_pair:
      return 0.0;
  }
  return 0.0;
}

}  // namespace detail

// Cellwise L psi0 >= beta0 psi0 and L V <= alpha0 V + theta0 psi0, evaluated
// independently of the grid quadrature used to pick the constants. The budget
// covers the first-order difference between the two quadratures.
inline std::vector<CheckReport> check_generator_drift(const ModelSpec& m,
                                                      const LyapunovConstruction& C) {
  const Grid1D& g = C.grid;
  const double x0 = C.x0, dx = g.dx();
  const double dmax = 1.5396007178390020 / x0;  // max |psi0'| = 8 / (3 sqrt 3 x0)
  const double budget = 1e-8 + dx * (m.qbar() * dmax + 2.0 * detail::max_density(m.Q));

  CheckReport rp{"generator_psi0", true, -1, 0.0, std::numeric_limits<double>::infinity(), budget, {}};
  CheckReport rv{"generator_V", true, -1, 0.0, std::numeric_limits<double>::infinity(), budget, {}};
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.center(i), p = psi0_at(x, x0);
    const double Lp = psi0_derivative(x, x0) + m.a(x) * p + detail::kernel_psi0(m.Q, x, x0, dx / 4);
    const double sp = Lp - C.beta0 * p;
    if (sp < rp.margin) {
      rp.margin = sp;
      rp.worst_cell = static_cast<long>(i);
      rp.worst_x = x;
    }
    const double LV = m.a(x) + m.qbar();
    const double sv = C.alpha0 + C.theta0 * p - LV;
    if (sv < rv.margin) {
      rv.margin = sv;
      rv.worst_cell = static_cast<long>(i);
      rv.worst_x = x;
    }
  }
  rp.pass = rp.margin >= -budget;
  rv.pass = rv.margin >= -budget;
  rp.constants = {{"beta0", C.beta0}, {"x0", x0}};
  rv.constants = {{"alpha0", C.alpha0}, {"theta0", C.theta0}, {"r0", C.r0}};

  CheckReport id{"band_identity", true, -1, 0.0, 0.0, 1e-12, {}};
  for (double r : {1.0, 0.5, 0.25}) {
    const double cf = band_identity_closed(r), q = band_identity_quadrature(r);
    id.margin = std::max(id.margin, std::abs(cf - q));
    if (cf < band_identity_bound(r)) id.pass = false;
  }
  id.pass = id.pass && id.margin <= 1e-12 && band_identity_closed(1.0) == 8.0 / 15.0;
  id.constants = {{"value_r1", band_identity_closed(1.0)}, {"value_r_half", band_identity_closed(0.5)}};
  return {rp, rv, id};
}

// (A0), (A1), (A2) on the discrete semigroup, plus the K-boundedness report
inline std::vector<CheckReport> check_semigroup_drift(const PDESemigroup& S,
                                                      const LyapunovConstruction& C) {
  require_same_grid(S.grid(), C.grid, "check_semigroup_drift");
  const Grid1D& g = C.grid;
  const std::size_t n = g.size(), steps = S.steps_for(C.tau);
  const double growth = C.abar + C.qbar;
  const double dt = S.dt();

  // V and psi evolved together, sampled for (A0) along the way
  std::vector<double> blk(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    blk[2 * i] = 1.0;
    blk[2 * i + 1] = C.psi[i];
  }
  CheckReport a0u{"A0_upper", true, -1, 0.0, std::numeric_limits<double>::infinity(), 0.0, {}};
  CheckReport a0l{"A0_lower", true, -1, 0.0, std::numeric_limits<double>::infinity(), 0.0, {}};
  const std::size_t samples = 5;
  double sup_ratio_V = 0.0, inf_ratio_psi = std::numeric_limits<double>::infinity();
  std::size_t done = 0;
  for (std::size_t q = 1; q <= samples; ++q) {
    const std::size_t target = steps * q / samples;
    S.dual_steps(blk, 2, target - done);
    done = target;
    const double s = static_cast<double>(done) * dt;
    // the one-step factor e^{dt a} + dt Qbar may exceed e^{dt (a + Qbar)} by O(dt^2)
    const double bound = std::exp(growth * s) * (1.0 + static_cast<double>(done) * dt * dt * C.qbar * C.qbar);
    for (std::size_t i = 0; i < n; ++i) {
      const double mv = blk[2 * i], mp = blk[2 * i + 1] / C.psi[i];
      sup_ratio_V = std::max(sup_ratio_V, mv);
      inf_ratio_psi = std::min(inf_ratio_psi, mp);
      const double slack = bound - mv;
      if (slack < a0u.margin) {
        a0u.margin = slack;
        a0u.worst_cell = static_cast<long>(i);
        a0u.worst_x = g.center(i);
      }
      if (mp < a0l.margin) {
        a0l.margin = mp;
        a0l.worst_cell = static_cast<long>(i);
        a0l.worst_x = g.center(i);
      }
    }
  }
  a0u.tolerance_budget = 1e-8;
  a0u.pass = a0u.margin >= -a0u.tolerance_budget;
  a0u.constants = {{"sup_MsV", sup_ratio_V}, {"growth_rate", growth}};
  a0l.pass = a0l.margin > 0.0;
  a0l.constants = {{"inf_Mspsi_over_psi", inf_ratio_psi}};

  // (A1): M V <= alpha V + theta 1_K psi
  CheckReport a1{"A1", true, -1, 0.0, std::numeric_limits<double>::infinity(), 0.0, {}};
  // (A2): M psi >= beta psi, compared in log space
  CheckReport a2{"A2", true, -1, 0.0, std::numeric_limits<double>::infinity(), 0.0, {}};
  a1.tolerance_budget = 1e-8;
  a2.tolerance_budget = 1e-8;
  double min_log_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double mv = blk[2 * i], mp = blk[2 * i + 1];
    const double rhs = C.alpha + (C.in_K(i) ? C.theta * C.psi[i] : 0.0);
    const double s1 = (rhs - mv) / std::max(1.0, rhs);
    if (s1 < a1.margin) {
      a1.margin = s1;
      a1.worst_cell = static_cast<long>(i);
      a1.worst_x = g.center(i);
    }
    const double lr = std::log(mp) - std::log(C.psi[i]);
    min_log_ratio = std::min(min_log_ratio, lr);
    const double s2 = lr - C.log_beta;
    if (s2 < a2.margin) {
      a2.margin = s2;
      a2.worst_cell = static_cast<long>(i);
      a2.worst_x = g.center(i);
    }
  }
  a1.pass = a1.margin >= -a1.tolerance_budget;
  a2.pass = a2.margin >= -a2.tolerance_budget;
  a1.constants = {{"alpha", C.alpha}, {"theta", C.theta}, {"R", C.R}};

  // the same (A2) statement phrased on psi0: M_{2tau} psi0 >= e^{beta0 tau} M_tau psi0
  auto p0 = C.psi0.values;
  S.dual_steps(p0, 1, steps);
  auto p1 = p0;
  S.dual_steps(p1, 1, steps);
  double min_log_ratio0 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) min_log_ratio0 = std::min(min_log_ratio0, std::log(p1[i]) - std::log(p0[i]));
  a2.constants = {{"log_beta", C.log_beta},
                  {"min_log_ratio", min_log_ratio},
                  {"min_log_ratio_psi0_form", min_log_ratio0},
                  {"forms_agree", std::abs(min_log_ratio - min_log_ratio0) <= 1e-9 * std::max(1.0, std::abs(min_log_ratio)) ? 1.0 : 0.0}};

  CheckReport kb{"K_bounded", true, -1, 0.0, 0.0, 0.0, {}};
  kb.pass = !C.K.empty() && C.K.front() > 0 && C.K.back() + 1 < n;
  kb.margin = C.K.empty() ? 0.0 : std::min(C.K_lower() - g.lower(), g.upper() - C.K_upper());
  kb.constants = {{"K_lower", C.K_lower()},
                  {"K_upper", C.K_upper()},
                  {"K_cells", static_cast<double>(C.K.size())},
                  {"K_contiguous", C.K_contiguous ? 1.0 : 0.0},
                  {"alpha_lt_beta", C.log_alpha < C.log_beta ? 1.0 : 0.0}};
  kb.pass = kb.pass && C.log_alpha < C.log_beta;
  return {a0u, a0l, a1, a2, kb};
}

// (M_{k tau} V)/(M_{k tau} psi) <= (alpha/beta)^k V/psi + theta/(beta - alpha) for k = 1..k_max
inline CheckReport check_step3_bound(const PDESemigroup& S, const LyapunovConstruction& C,
                                     std::size_t k_max) {
  require_same_grid(S.grid(), C.grid, "check_step3_bound");
  if (!(C.log_alpha < C.log_beta)) throw InputError("check_step3_bound: needs alpha < beta");
  const Grid1D& g = C.grid;
  const std::size_t n = g.size(), steps = S.steps_for(C.tau);
  const double log_ab = C.log_alpha - C.log_beta;
  const double cst = C.theta / (C.beta - C.alpha);
  CheckReport r{"step3", true, -1, 0.0, std::numeric_limits<double>::infinity(), 1e-8, {}};
  std::vector<double> blk(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    blk[2 * i] = 1.0;
    blk[2 * i + 1] = C.psi[i];
  }
  double worst_k = 0.0, tail_K = 0.0;
  for (std::size_t k = 1; k <= k_max; ++k) {
    S.dual_steps(blk, 2, steps);
    for (std::size_t i = 0; i < n; ++i) {
      const double lhs = blk[2 * i] / blk[2 * i + 1];
      const double rhs = std::exp(static_cast<double>(k) * log_ab) / C.psi[i] + cst;
      const double slack = (rhs - lhs) / rhs;
      if (slack < r.margin) {
        r.margin = slack;
        r.worst_cell = static_cast<long>(i);
        r.worst_x = g.center(i);
        worst_k = static_cast<double>(k);
      }
      if (k == k_max && C.in_K(i)) tail_K = std::max(tail_K, lhs / cst);
    }
  }
  r.pass = r.margin >= -r.tolerance_budget;
  r.constants = {{"k_max", static_cast<double>(k_max)},
                 {"worst_k", worst_k},
                 {"theta_over_gap", cst},
                 {"tail_ratio_on_K", tail_K}};
  return r;
}

}  // namespace perron
