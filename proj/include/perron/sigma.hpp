#pragma once
// Crossing-time families (sigma^{t,n}_{x,y}, c^{t,n}_{x,y}) of the transport
// model with a band kernel, and their empirical certification.
//
// A family is built for one target y. Positions are stored in the drift
// coordinate w = x + t - y, so the band of admissible starting points is
// |w| <= n eps / 2 and the z-integration window of the recursion,
// [max(w - eps, -n eps/2), min(w + eps, n eps/2)], does not move with time.
// All levels share one uniform time grid s_k = k h; g(w, t_j, s_k) stores
// c * density, so c is its trapezoid mass in s.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "perron/core_spaces.hpp"
#include "perron/lyapunov.hpp"
#include "perron/model.hpp"
#include "perron/pde_semigroup.hpp"

namespace perron {

struct SigmaEntry {
  TimeMeasure sigma;
  double c = 0.0;
};

namespace detail {

// trapezoid weights of int_0^{s_k} on nodes 0..k of spacing h
inline double trap_w(std::size_t l, std::size_t k, double h) {
  if (k == 0) return 0.0;
  return (l == 0 || l == k) ? 0.5 * h : h;
}

inline void require_band(const ModelSpec& m, const char* what) {
  if (!m.Q.has_density_lower_bound())
    throw InputError(std::string(what) +
                     ": kernel has no density lower bound kappa0 on a band of width eps > 0");
}

}  // namespace detail

// n = 0: sigma = delta_t, c = exp(int_x^y a) by the composite midpoint rule
// on cells of width dx (the same factors the scheme multiplies along x -> x + t)
inline SigmaEntry sigma_level0(const ModelSpec& m, const Grid1D& g, double x, double y, double t,
                               std::size_t n_time = 256) {
  if (!(t > 0.0)) throw InputError("sigma_level0: t must be > 0");
  if (std::abs(y - x - t) > 1e-9 * std::max(1.0, std::abs(t)))
    throw InputError("sigma_level0: needs y = x + t");
  const double q = t / g.dx();
  std::size_t nsub = static_cast<std::size_t>(std::llround(q));
  if (std::abs(q - static_cast<double>(nsub)) > 1e-9 * std::max(1.0, q))
    nsub = static_cast<std::size_t>(std::ceil(q));
  nsub = std::max<std::size_t>(nsub, 1);
  const double step = t / static_cast<double>(nsub);
  double A = 0.0;
  for (std::size_t r = 0; r < nsub; ++r) A += step * m.a(x + (static_cast<double>(r) + 0.5) * step);
  return {TimeMeasure::dirac(t, n_time, n_time - 1), std::exp(A)};
}

struct SigmaDomain {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  static SigmaDomain of(const Grid1D& g) { return {g.lower(), g.upper()}; }
  bool holds(double a, double b) const { return a >= lower && b <= upper; }
};

// n = 1 at one (x, y, t): trapezoid on n_time nodes of [0, t]
inline SigmaEntry sigma_level1(const ModelSpec& m, double x, double y, double t,
                               std::size_t n_time = 256, SigmaDomain dom = {}) {
  detail::require_band(m, "sigma_level1");
  const double eps = m.epsilon(), k0 = m.kappa0();
  if (!(t > 0.0) || !(t < 0.5 * eps)) throw InputError("sigma_level1: needs 0 < t < eps/2");
  if (std::abs(y - x - t) > 0.5 * eps * (1 + 1e-12)) throw InputError("sigma_level1: y outside the reach band");
  if (n_time < 2) throw InputError("sigma_level1: n_time >= 2");
  const double h = t / static_cast<double>(n_time - 1);
  const double Fx = m.a.primitive(x), Fy = m.a.primitive(y);
  std::vector<double> gk(n_time, 0.0), ex(n_time);
  for (std::size_t l = 0; l < n_time; ++l) {
    const double s = static_cast<double>(l) * h;
    ex[l] = dom.holds(x, x + s) ? std::exp(m.a.primitive(x + s) - Fx) : 0.0;
  }
  for (std::size_t k = 1; k < n_time; ++k) {
    const double sk = static_cast<double>(k) * h;
    double acc = 0.0;
    for (std::size_t l = 0; l <= k; ++l) {
      const double z = y - sk + static_cast<double>(l) * h;
      if (ex[l] == 0.0 || !dom.holds(z, y)) continue;
      acc += detail::trap_w(l, k, h) * ex[l] * std::exp(Fy - m.a.primitive(z));
    }
    gk[k] = k0 * acc;
  }
  double c = 0.0;
  auto sig = TimeMeasure::from_density(t, gk, &c);
  return {std::move(sig), c};
}

struct SigmaOptions {
  std::size_t n_time = 11;  // nodes on [0, t_fam]
  double dw = 0.0;          // w lattice; 0 picks eps / ceil(eps / h)
};

class SigmaFamily {
 public:
  // level 1 tabulated on the lattice |w| <= eps/2, all t_j, s_k <= t_j
  static SigmaFamily level1(const ModelSpec& m, SigmaDomain dom, double y, double t_fam,
                            const SigmaOptions& opt = {}) {
    detail::require_band(m, "SigmaFamily");
    const double eps = m.epsilon();
    if (!(t_fam > 0.0) || !(t_fam < 0.5 * eps))
      throw InputError("SigmaFamily: horizon must lie in (0, eps/2)");
    if (opt.n_time < 2) throw InputError("SigmaFamily: n_time >= 2");
    SigmaFamily F;
    F.model_ = std::make_shared<const ModelSpec>(m);
    F.dom_ = dom;
    F.y_ = y;
    F.level_ = 1;
    F.m_ = opt.n_time;
    F.h_ = t_fam / static_cast<double>(F.m_ - 1);
    F.dw_ = opt.dw > 0.0 ? opt.dw : eps / std::ceil(eps / F.h_ - 1e-9);
    F.P_ = static_cast<long>(std::floor(eps / F.dw_ + 1e-9));
    F.I_ = F.half_index(1);
    F.alloc();
    for (long i = -F.I_; i <= F.I_; ++i)
      for (std::size_t j = 1; j < F.m_; ++j) F.fill_level1(i, j);
    F.finish();
    return F;
  }

  SigmaFamily induct() const {
    SigmaFamily N;
    N.model_ = model_;
    N.dom_ = dom_;
    N.y_ = y_;
    N.level_ = level_ + 1;
    N.m_ = m_;
    N.h_ = h_;
    N.dw_ = dw_;
    N.P_ = P_;
    N.I_ = half_index(N.level_);
    N.alloc();
    N.prev_ = std::make_shared<const SigmaFamily>(*this);
    std::vector<double> G(m_ * m_);
    for (long i = -N.I_; i <= N.I_; ++i) {
      prev_window(static_cast<double>(i) * dw_, G);
      for (std::size_t j = 1; j < m_; ++j) N.combine(static_cast<double>(i) * dw_, j, G, &N.g_[N.at(i, j, 0)]);
    }
    N.finish();
    return N;
  }

  std::size_t level() const { return level_; }
  double target() const { return y_; }
  double horizon() const { return h_ * static_cast<double>(m_ - 1); }
  double step() const { return h_; }
  std::size_t n_time() const { return m_; }
  double dw() const { return dw_; }
  double half_width() const { return static_cast<double>(I_) * dw_; }
  long half_index() const { return I_; }
  double time(std::size_t j) const { return static_cast<double>(j) * h_; }
  const ModelSpec& model() const { return *model_; }
  const SigmaDomain& domain() const { return dom_; }

  double g(long i, std::size_t j, std::size_t k) const { return g_[at(i, j, k)]; }
  double c(long i, std::size_t j) const { return c_[(static_cast<std::size_t>(i + I_)) * m_ + j]; }
  double min_c(std::size_t j) const {
    double r = std::numeric_limits<double>::infinity();
    for (long i = -I_; i <= I_; ++i) r = std::min(r, c(i, j));
    return r;
  }

  bool admissible(double x, std::size_t j) const {
    return j >= 1 && j < m_ && std::abs(x + time(j) - y_) <= half_width() + 1e-12;
  }

  // (sigma_{x,y}^{t_j}, c) at an arbitrary start x in the band: level 1 in
  // closed form, higher levels by one recursion step from the stored level below
  SigmaEntry entry(double x, std::size_t j) const {
    if (!admissible(x, j)) throw InputError("SigmaFamily::entry: x outside the reach band or bad time index");
    const double w = x + time(j) - y_;
    std::vector<double> gk(m_, 0.0);
    if (level_ == 1) {
      level1_row(x, j, gk.data());
    } else {
      std::vector<double> G(m_ * m_);
      prev_->prev_window(w, G);
      combine(w, j, G, gk.data());
    }
    gk.resize(j + 1);
    bool any = false;
    for (double v : gk) any = any || v > 0.0;
    if (!any) return {TimeMeasure::dirac(time(j), j + 1, j), 0.0};
    double c = 0.0;
    auto sig = TimeMeasure::from_density(time(j), gk, &c);
    return {std::move(sig), c};
  }

 private:
  std::size_t at(long i, std::size_t j, std::size_t k) const {
    return (static_cast<std::size_t>(i + I_) * m_ + j) * m_ + k;
  }
  long half_index(std::size_t n) const {
    return static_cast<long>(std::floor(0.5 * static_cast<double>(n) * model_->epsilon() / dw_ + 1e-9));
  }
  void alloc() {
    const auto nw = static_cast<std::size_t>(2 * I_ + 1);
    g_.assign(nw * m_ * m_, 0.0);
    c_.assign(nw * m_, 0.0);
  }
  void finish() {
    for (long i = -I_; i <= I_; ++i)
      for (std::size_t j = 1; j < m_; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k <= j; ++k) s += detail::trap_w(k, j, h_) * g_[at(i, j, k)];
        c_[static_cast<std::size_t>(i + I_) * m_ + j] = s;
      }
  }

  void level1_row(double x, std::size_t j, double* out) const {
    const ModelSpec& m = *model_;
    const double Fx = m.a.primitive(x), Fy = m.a.primitive(y_);
    for (std::size_t k = 0; k <= j; ++k) {
      double acc = 0.0;
      const double sk = time(k);
      for (std::size_t l = 0; l <= k; ++l) {
        const double sl = time(l), z = y_ - sk + sl;
        if (!dom_.holds(x, x + sl) || !dom_.holds(z, y_)) continue;
        acc += detail::trap_w(l, k, h_) * std::exp(m.a.primitive(x + sl) - Fx + Fy - m.a.primitive(z));
      }
      out[k] = m.kappa0() * acc;
    }
  }
  void fill_level1(long i, std::size_t j) {
    const double x = y_ + static_cast<double>(i) * dw_ - time(j);
    level1_row(x, j, &g_[at(i, j, 0)]);
  }

  // G(j', k') = int over the z-window of w of g(., j', k'), lattice nodes only:
  // partial end segments are dropped, which keeps the result a lower bound
  void prev_window(double w, std::vector<double>& G) const {
    std::fill(G.begin(), G.end(), 0.0);
    const double eps = model_->epsilon();
    const long lo = std::max(-I_, static_cast<long>(std::ceil((w - eps) / dw_ - 1e-9)));
    const long hi = std::min(I_, static_cast<long>(std::floor((w + eps) / dw_ + 1e-9)));
    if (hi <= lo) return;
    for (long i = lo; i <= hi; ++i) {
      const double wt = (i == lo || i == hi) ? 0.5 * dw_ : dw_;
      const double* src = &g_[at(i, 0, 0)];
      for (std::size_t q = 0; q < m_ * m_; ++q) G[q] += wt * src[q];
    }
  }
  // g_{n+1}(w, t_j, s_k) = kappa0 sum_l tw_l(k) e^{int_x^{x+s_l} a} G(j - l, k - l)
  void combine(double w, std::size_t j, const std::vector<double>& G, double* out) const {
    const ModelSpec& m = *model_;
    const double x = y_ + w - time(j);
    std::vector<double> ex(j + 1);
    const double Fx = m.a.primitive(x);
    for (std::size_t l = 0; l <= j; ++l)
      ex[l] = dom_.holds(x, x + time(l)) ? std::exp(m.a.primitive(x + time(l)) - Fx) : 0.0;
    for (std::size_t k = 0; k <= j; ++k) {
      double acc = 0.0;
      for (std::size_t l = 0; l <= k; ++l)
        if (ex[l] != 0.0) acc += detail::trap_w(l, k, h_) * ex[l] * G[(j - l) * m_ + (k - l)];
      out[k] = m.kappa0() * acc;
    }
  }

  std::shared_ptr<const ModelSpec> model_;
  std::shared_ptr<const SigmaFamily> prev_;
  SigmaDomain dom_;
  double y_ = 0.0, h_ = 0.0, dw_ = 0.0;
  std::size_t level_ = 0, m_ = 0;
  long P_ = 0, I_ = 0;
  std::vector<double> g_, c_;
};

inline SigmaFamily sigma_induct(const SigmaFamily& f) { return f.induct(); }

inline SigmaFamily build_family(const ModelSpec& m, SigmaDomain dom, double y, double t_fam,
                                std::size_t level, const SigmaOptions& opt = {}) {
  if (level < 1) throw InputError("build_family: level >= 1");
  auto F = SigmaFamily::level1(m, dom, y, t_fam, opt);
  while (F.level() < level) F = F.induct();
  return F;
}

// ---------------------------------------------------------------------------
// inequality (5) on the discrete semigroup

struct Ineq5Report {
  std::size_t trials = 0, zero_rhs = 0;
  double min_ratio = std::numeric_limits<double>::infinity();
  double relaxation = 1e-3;
  bool pass = false;
  // witness of the smallest ratio
  double x = 0.0, y = 0.0, t = 0.0;
  std::uint64_t seed = 0;
};

namespace detail {

// nonnegative piecewise-linear function with seeded knots, zero outside them
inline std::vector<double> random_pl(const Grid1D& g, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nk(3, 10);
  std::uniform_real_distribution<double> pos(g.lower(), g.upper()), val(-0.3, 1.0);
  const int k = nk(rng);
  std::vector<double> xs(static_cast<std::size_t>(k)), vs(xs.size());
  for (auto& x : xs) x = pos(rng);
  std::sort(xs.begin(), xs.end());
  for (auto& v : vs) v = std::max(0.0, val(rng));
  std::vector<double> f(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.center(i);
    if (x < xs.front() || x > xs.back()) continue;
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    std::size_t b = std::min<std::size_t>(static_cast<std::size_t>(it - xs.begin()), xs.size() - 1);
    std::size_t a = b - 1;
    const double u = xs[b] > xs[a] ? (x - xs[a]) / (xs[b] - xs[a]) : 0.0;
    f[i] = vs[a] + u * (vs[b] - vs[a]);
  }
  return f;
}

inline std::size_t steps_per(double h, double dt) {
  const double q = h / dt;
  const auto r = static_cast<std::size_t>(std::llround(q));
  if (r == 0 || std::abs(q - static_cast<double>(r)) > 1e-9 * q)
    throw InputError("family time step must be a multiple of the scheme step dt");
  return r;
}

}  // namespace detail

// M_t f(x) >= c^{t,n}_{x,y} int_0^t M_{t-s} f(y) sigma(ds), for random (x, t, f)
// with y = fam.target(); relaxation 1e-3 plus an optional scheme budget
inline Ineq5Report verify_inequality_5(const SigmaFamily& fam, const PDESemigroup& S,
                                       std::size_t trials, std::uint64_t seed,
                                       double scheme_budget = 0.0) {
  const Grid1D& g = S.grid();
  const std::size_t q = detail::steps_per(fam.step(), S.dt());
  const std::size_t iy = g.nearest(fam.target());
  if (std::abs(g.center(iy) - fam.target()) > 1e-9 * g.dx())
    throw InputError("verify_inequality_5: family target must be a cell center");
  Ineq5Report R;
  R.seed = seed;
  R.relaxation = 1e-3 + scheme_budget;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_j(1, fam.n_time() - 1);
  for (std::size_t tr = 0; tr < trials; ++tr) {
    const std::size_t j = pick_j(rng);
    const double t = fam.time(j);
    // admissible cells for x
    std::vector<std::size_t> xs;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (fam.admissible(g.center(i), j) && fam.domain().holds(g.center(i), g.center(i))) xs.push_back(i);
    if (xs.empty()) throw InputError("verify_inequality_5: no admissible start cell");
    std::uniform_int_distribution<std::size_t> pick_x(0, xs.size() - 1);
    const std::size_t ix = xs[pick_x(rng)];
    auto f = detail::random_pl(g, rng);
    auto E = fam.entry(g.center(ix), j);
    // snapshots M_{r h} f(y), r = 0..j
    std::vector<double> snap_y(j + 1);
    auto v = f;
    snap_y[0] = v[iy];
    for (std::size_t r = 1; r <= j; ++r) {
      S.dual_steps(v, 1, q);
      snap_y[r] = v[iy];
    }
    const double lhs = v[ix];
    double rhs = 0.0;
    for (std::size_t k = 0; k <= j; ++k) rhs += E.sigma.weights[k] * snap_y[j - k];
    rhs *= E.c;
    ++R.trials;
    if (!(rhs > 0.0)) {
      ++R.zero_rhs;
      continue;
    }
    const double ratio = lhs / rhs;
    if (ratio < R.min_ratio) {
      R.min_ratio = ratio;
      R.x = g.center(ix);
      R.y = g.center(iy);
      R.t = t;
    }
  }
  R.pass = R.min_ratio >= 1.0 - R.relaxation;
  return R;
}

// ---------------------------------------------------------------------------
// (H1') and (H2') on the Lyapunov set K

struct H1H2PrimeOptions {
  std::size_t n_time = 11;
  std::size_t max_level = 16;
  std::size_t stride = 4;  // K subsample
};

struct H1H2PrimeReport {
  bool pass = false;
  std::string message;
  std::size_t level = 0;
  double t_fam = 0.0, tau = 0.0;
  bool composed = false;  // t_fam < tau, certificate extended by evolution
  std::size_t n_time = 0;
  double c = 0.0;      // (H1') constant, min c_{x,y} psi(y)/psi(x)
  double c_raw = 0.0;  // min c_{x,y}
  double C = 0.0;      // sup_K M_tau psi / psi
  double eps_overlap = 0.0;
  double continuity_kappa = 0.0;
  std::vector<std::size_t> cells;  // sampled K cells (both x and y)
  // per (a, b) sample indices: sigma_{x_a, y_b} weights on the family grid, and c
  std::vector<double> sigma_w, cxy;
  // per (a, a'): maximising y sample and m value
  std::vector<std::size_t> best_y;
  std::vector<double> best_m;
  std::vector<double> MpsiK;  // M_{tau - s_k}(psi 1_K)(y_b), [b * n_time + k]

  std::size_t samples() const { return cells.size(); }
  const double* sigma(std::size_t a, std::size_t b) const { return &sigma_w[(a * cells.size() + b) * n_time]; }
};

inline H1H2PrimeReport verify_h1prime_h2prime(const PDESemigroup& S, const LyapunovConstruction& L,
                                              const H1H2PrimeOptions& opt = {}) {
  const ModelSpec& m = S.model();
  detail::require_band(m, "verify_h1prime_h2prime");
  require_same_grid(S.grid(), L.grid, "verify_h1prime_h2prime");
  if (L.K.empty()) throw InputError("verify_h1prime_h2prime: K is empty");
  if (opt.n_time < 2 || opt.stride < 1) throw InputError("verify_h1prime_h2prime: bad options");
  const Grid1D& g = S.grid();
  const double dt = S.dt(), eps = m.epsilon();
  H1H2PrimeReport R;
  R.tau = L.tau;

  // horizon of the families: tau itself if below eps/2, else the largest
  // multiple of dt below eps/2, extended to tau by composition with M
  const std::size_t tau_steps = S.steps_for(L.tau);
  std::size_t fam_steps = tau_steps;
  if (!(static_cast<double>(fam_steps) * dt < 0.5 * eps)) {
    fam_steps = static_cast<std::size_t>(std::ceil(0.5 * eps / dt)) - 1;
    R.composed = true;
  }
  if (fam_steps == 0) throw InputError("verify_h1prime_h2prime: dt too coarse for eps/2");
  // largest m - 1 <= n_time - 1 dividing fam_steps
  std::size_t segs = std::min(opt.n_time - 1, fam_steps);
  while (fam_steps % segs != 0) --segs;
  const std::size_t q = fam_steps / segs, M = segs + 1;
  R.n_time = M;
  R.t_fam = static_cast<double>(fam_steps) * dt;
  const double h = R.t_fam / static_cast<double>(segs);
  SigmaOptions so;
  so.n_time = M;

  // minimal level with the whole of K inside every reach band
  const double reach_needed = L.K_upper() - L.K_lower() + R.t_fam;
  const double dw = eps / std::ceil(eps / h - 1e-9);
  std::size_t n = 1;
  while (std::floor(0.5 * static_cast<double>(n) * eps / dw + 1e-9) * dw < reach_needed) ++n;
  R.level = n;
  if (n > opt.max_level) {
    R.message = "K too large for horizon tau: level " + std::to_string(n) + " exceeds cap " +
                std::to_string(opt.max_level);
    throw InputError(R.message);
  }

  for (std::size_t a = 0; a < L.K.size(); a += opt.stride) R.cells.push_back(L.K[a]);
  if (R.cells.back() != L.K.back()) R.cells.push_back(L.K.back());
  const std::size_t ns = R.cells.size();

  // M_s psi quantities: C and the (H2') weights
  {
    auto v = L.psi.values;
    S.dual_steps(v, 1, tau_steps);
    R.C = 0.0;
    for (std::size_t i : L.K) R.C = std::max(R.C, v[i] / L.psi[i]);
  }
  std::vector<double> psiK(g.size(), 0.0);
  for (std::size_t i : L.K) psiK[i] = L.psi[i];
  // snapshots at times tau - s_k, k = M-1 .. 0
  R.MpsiK.assign(ns * M, 0.0);
  {
    auto v = psiK;
    S.dual_steps(v, 1, tau_steps - fam_steps);
    for (std::size_t k = M; k-- > 0;) {
      for (std::size_t b = 0; b < ns; ++b) R.MpsiK[b * M + k] = v[R.cells[b]];
      if (k > 0) S.dual_steps(v, 1, q);
    }
  }

  const auto dom = SigmaDomain::of(g);
  R.sigma_w.assign(ns * ns * M, 0.0);
  R.cxy.assign(ns * ns, 0.0);
  R.c = std::numeric_limits<double>::infinity();
  R.c_raw = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < ns; ++b) {
    const double y = g.center(R.cells[b]);
    auto F = build_family(m, dom, y, R.t_fam, n, so);
    for (std::size_t a = 0; a < ns; ++a) {
      const std::size_t ix = R.cells[a];
      auto E = F.entry(g.center(ix), M - 1);
      std::copy(E.sigma.weights.begin(), E.sigma.weights.end(), R.sigma_w.begin() + static_cast<long>((a * ns + b) * M));
      R.cxy[a * ns + b] = E.c;
      R.c_raw = std::min(R.c_raw, E.c);
      R.c = std::min(R.c, E.c * L.psi[R.cells[b]] / L.psi[ix]);
    }
    // continuity probe in x at the first and last sampled start
    for (std::size_t a : {std::size_t{0}, ns - 1}) {
      const double x = g.center(R.cells[a]);
      const double x2 = a == 0 ? x + g.dx() : x - g.dx();
      if (!F.admissible(x2, M - 1)) continue;
      const double c1 = R.cxy[a * ns + b], c2 = F.entry(x2, M - 1).c;
      R.continuity_kappa = std::max(R.continuity_kappa, std::abs(c2 - c1) / (c1 * g.dx()));
    }
  }

  // (H2'): m_{x,x',y} = sum_k (sigma_{x,y} ^ sigma_{x',y})_k M_{tau-s_k}(psi 1_K)(y) / psi(y)
  R.best_y.assign(ns * ns, 0);
  R.best_m.assign(ns * ns, 0.0);
  R.eps_overlap = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < ns; ++a)
    for (std::size_t a2 = a; a2 < ns; ++a2) {
      double best = -1.0;
      std::size_t by = 0;
      for (std::size_t b = 0; b < ns; ++b) {
        const double* s1 = R.sigma(a, b);
        const double* s2 = R.sigma(a2, b);
        double mm = 0.0;
        for (std::size_t k = 0; k < M; ++k) mm += std::min(s1[k], s2[k]) * R.MpsiK[b * M + k];
        mm /= L.psi[R.cells[b]];
        if (mm > best) {
          best = mm;
          by = b;
        }
      }
      R.best_y[a * ns + a2] = R.best_y[a2 * ns + a] = by;
      R.best_m[a * ns + a2] = R.best_m[a2 * ns + a] = best;
      R.eps_overlap = std::min(R.eps_overlap, best);
    }
  (void)h;
  R.pass = R.c > 0.0 && R.eps_overlap > 0.0;
  R.message = R.pass ? "H1' and H2' certified on the sampled K" : "c or overlap not positive";
  return R;
}

}  // namespace perron
