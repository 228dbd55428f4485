#pragma once
// Splitting scheme for  d_t u + d_x u = int u(t,y) Q(y,dx) dy + a(x) u  on a
// truncated grid with dt = dx: exact one-cell shift, exp of the midpoint
// potential over the traversed cell, explicit kernel gain.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "perron/core_spaces.hpp"
#include "perron/model.hpp"

namespace perron {

// Quadrature of Q(x_i + shift, dy) on the grid cells. Each row is a run of
// cells fully inside a constant-density band (summed with prefix sums) plus
// explicit entries for everything else.
class KernelMatrix {
 public:
  KernelMatrix() = default;
  KernelMatrix(const Kernel& Q, const Grid1D& g, double shift) : n_(g.size()) {
    full_mass_ = Q.total_mass();
    ra_.assign(n_, 0);
    rb_.assign(n_, 0);
    rw_.assign(n_, 0.0);
    row_mass_.assign(n_, 0.0);
    std::vector<std::vector<std::pair<std::size_t, double>>> ex(n_);
    const double dx = g.dx();
    for (std::size_t i = 0; i < n_; ++i) {
      const double xs = g.center(i) + shift;
      auto& row = ex[i];
      if (Q.kind == Kernel::Kind::dirac_pair) {
        for (double s : {-1.0, 1.0}) {
          double t = xs + s;
          if (t >= g.lower() && t < g.upper()) row.emplace_back(g.nearest(t), 1.0);
        }
        std::sort(row.begin(), row.end());
      } else {
        const double r = Q.reach();
        const double lo = xs - r, hi = xs + r;
        if (hi <= g.lower() || lo >= g.upper()) continue;
        auto jlo = static_cast<long>(std::floor((std::max(lo, g.lower()) - g.lower()) / dx));
        auto jhi = static_cast<long>(std::floor((std::min(hi, g.upper()) - g.lower()) / dx));
        jlo = std::clamp<long>(jlo, 0, static_cast<long>(n_) - 1);
        jhi = std::clamp<long>(jhi, 0, static_cast<long>(n_) - 1);
        const bool band = Q.kind == Kernel::Kind::uniform_band;
        if (band && Q.kappa0 == 0.0) continue;
        long run_a = -1, run_b = -1;
        for (long j = jlo; j <= jhi; ++j) {
          const double el = g.edge(static_cast<std::size_t>(j)), er = el + dx;
          const double a = std::max(el, lo), b = std::min(er, hi);
          if (!(b > a)) continue;
          if (band && lo <= el && er <= hi) {
            if (run_a < 0) run_a = j;
            run_b = j + 1;
            continue;
          }
          double w = band ? Q.kappa0 * (b - a) : Q.density_at(0.5 * (a + b) - xs) * (b - a);
          if (w > 0.0) row.emplace_back(static_cast<std::size_t>(j), w);
        }
        if (run_a >= 0) {
          ra_[i] = static_cast<std::size_t>(run_a);
          rb_[i] = static_cast<std::size_t>(run_b);
          rw_[i] = Q.kappa0 * dx;
        }
      }
    }
    finalize_runs(ex);
    build_csr(ex);
    for (std::size_t i = 0; i < n_; ++i) {
      double m = rw_[i] * static_cast<double>(rb_[i] - ra_[i]);
      for (std::size_t p = rp_[i]; p < rp_[i + 1]; ++p) m += v_[p];
      row_mass_[i] = m;
    }
  }

  std::size_t size() const { return n_; }
  double full_mass() const { return full_mass_; }
  double row_mass(std::size_t i) const { return row_mass_[i]; }
  double max_row_mass() const { return *std::max_element(row_mass_.begin(), row_mass_.end()); }
  double min_weight() const {
    double m = 0.0;
    for (double w : v_) m = std::min(m, w);
    for (double w : rw_) m = std::min(m, w);
    return m;
  }
  bool uses_runs() const { return runs_; }

  // y += alpha * W x for k interleaved vectors (x[j*k + r])
  void apply(const double* x, double* y, std::size_t k, double alpha,
             std::vector<double>& scratch) const {
    if (runs_) prefix(x, k, nullptr, scratch);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t r = 0; r < k; ++r) {
        double s = 0.0;
        if (runs_ && rw_[i] != 0.0) s = rw_[i] * range_sum(scratch, ra_[i], rb_[i], k, r);
        for (std::size_t p = rp_[i]; p < rp_[i + 1]; ++p) s += v_[p] * x[ci_[p] * k + r];
        y[i * k + r] += alpha * s;
      }
  }
  // y += alpha * W^T x
  void apply_transpose(const double* x, double* y, std::size_t k, double alpha,
                       std::vector<double>& scratch) const {
    if (runs_) prefix(x, k, rw_.data(), scratch);
    for (std::size_t j = 0; j < n_; ++j)
      for (std::size_t r = 0; r < k; ++r) {
        double s = 0.0;
        if (runs_ && chi_[j] > clo_[j]) s = range_sum(scratch, clo_[j], chi_[j], k, r);
        for (std::size_t p = cp_[j]; p < cp_[j + 1]; ++p) s += cv_[p] * x[ri_[p] * k + r];
        y[j * k + r] += alpha * s;
      }
  }
  // dense entry, for tests
  double entry(std::size_t i, std::size_t j) const {
    double w = (runs_ && ra_[i] <= j && j < rb_[i]) ? rw_[i] : 0.0;
    for (std::size_t p = rp_[i]; p < rp_[i + 1]; ++p)
      if (ci_[p] == j) w += v_[p];
    return w;
  }

 private:
  // prefix sums in P[0 .. (n+1)k), suffix sums after them; a range is
  // summed from whichever side carries less mass, so tails many orders
  // below the bulk keep their relative accuracy
  void prefix(const double* x, std::size_t k, const double* wrow, std::vector<double>& P) const {
    const std::size_t off = (n_ + 1) * k;
    P.assign(2 * off, 0.0);
    for (std::size_t j = 0; j < n_; ++j) {
      const double w = wrow ? wrow[j] : 1.0;
      for (std::size_t r = 0; r < k; ++r) P[(j + 1) * k + r] = P[j * k + r] + w * x[j * k + r];
    }
    for (std::size_t j = n_; j-- > 0;) {
      const double w = wrow ? wrow[j] : 1.0;
      for (std::size_t r = 0; r < k; ++r) P[off + j * k + r] = P[off + (j + 1) * k + r] + w * x[j * k + r];
    }
  }
  double range_sum(const std::vector<double>& P, std::size_t a, std::size_t b, std::size_t k,
                   std::size_t r) const {
    const std::size_t off = (n_ + 1) * k;
    const double lo = P[a * k + r], hi = P[off + b * k + r];
    if (std::abs(lo) <= std::abs(hi)) return P[b * k + r] - lo;
    return P[off + a * k + r] - hi;
  }

  // empty runs copy their neighbour's bounds with zero weight so that the
  // bounds stay monotone; if they still are not, every run becomes explicit
  void finalize_runs(std::vector<std::vector<std::pair<std::size_t, double>>>& ex) {
    long first = -1;
    for (std::size_t i = 0; i < n_; ++i)
      if (rb_[i] > ra_[i]) {
        first = static_cast<long>(i);
        break;
      }
    runs_ = first >= 0;
    if (!runs_) return;
    for (std::size_t i = 0; i < n_; ++i) {
      if (rb_[i] > ra_[i]) continue;
      std::size_t src = i < static_cast<std::size_t>(first) ? static_cast<std::size_t>(first) : i - 1;
      ra_[i] = ra_[src];
      rb_[i] = rb_[src];
      rw_[i] = 0.0;
    }
    for (std::size_t i = 1; i < n_ && runs_; ++i)
      if (ra_[i] < ra_[i - 1] || rb_[i] < rb_[i - 1]) runs_ = false;
    if (!runs_) {
      for (std::size_t i = 0; i < n_; ++i) {
        if (rw_[i] != 0.0)
          for (std::size_t j = ra_[i]; j < rb_[i]; ++j) ex[i].emplace_back(j, rw_[i]);
        std::sort(ex[i].begin(), ex[i].end());
        ra_[i] = rb_[i] = 0;
        rw_[i] = 0.0;
      }
      return;
    }
    clo_.assign(n_, 0);
    chi_.assign(n_, 0);
    std::size_t p = 0, q = 0;
    for (std::size_t j = 0; j < n_; ++j) {
      while (p < n_ && rb_[p] <= j) ++p;
      while (q < n_ && ra_[q] <= j) ++q;
      clo_[j] = p;
      chi_[j] = std::max(p, q);
    }
  }

  void build_csr(const std::vector<std::vector<std::pair<std::size_t, double>>>& ex) {
    rp_.assign(n_ + 1, 0);
    for (std::size_t i = 0; i < n_; ++i) rp_[i + 1] = rp_[i] + ex[i].size();
    ci_.resize(rp_[n_]);
    v_.resize(rp_[n_]);
    cp_.assign(n_ + 1, 0);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t q = 0; q < ex[i].size(); ++q) {
        ci_[rp_[i] + q] = ex[i][q].first;
        v_[rp_[i] + q] = ex[i][q].second;
        ++cp_[ex[i][q].first + 1];
      }
    for (std::size_t j = 0; j < n_; ++j) cp_[j + 1] += cp_[j];
    ri_.resize(rp_[n_]);
    cv_.resize(rp_[n_]);
    std::vector<std::size_t> fill(cp_.begin(), cp_.end() - 1);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t p = rp_[i]; p < rp_[i + 1]; ++p) {
        std::size_t j = ci_[p];
        ri_[fill[j]] = i;
        cv_[fill[j]] = v_[p];
        ++fill[j];
      }
  }

  std::size_t n_ = 0;
  double full_mass_ = 0.0;
  bool runs_ = false;
  std::vector<std::size_t> ra_, rb_, clo_, chi_;
  std::vector<double> rw_, row_mass_;
  std::vector<std::size_t> rp_, ci_, cp_, ri_;
  std::vector<double> v_, cv_;
};

struct EvolveDiagnostics {
  std::size_t steps = 0;
  double realized_time = 0.0;
  bool rounded = false;
  double leakage = 0.0;           // TV mass discarded (direct evolution)
  double leakage_fraction = 0.0;  // relative to the initial TV mass
  std::vector<std::string> warnings;
};

class PDESemigroup {
 public:
  PDESemigroup(ModelSpec m, Grid1D g, double leakage_warn_fraction = 1e-6)
      : model_(std::move(m)), grid_(g), leak_warn_(leakage_warn_fraction) {
    const std::size_t n = grid_.size();
    E_.resize(n);
    for (std::size_t i = 0; i < n; ++i) E_[i] = std::exp(grid_.dx() * model_.a(grid_.edge(i) + grid_.dx()));
    W_ = KernelMatrix(model_.Q, grid_, grid_.dx());
  }

  std::size_t dimension() const { return grid_.size(); }
  const Grid1D& grid() const { return grid_; }
  const ModelSpec& model() const { return model_; }
  double dt() const { return grid_.dx(); }
  const std::vector<double>& transport_factors() const { return E_; }
  const KernelMatrix& kernel() const { return W_; }

  std::size_t steps_for(double t, bool* rounded = nullptr) const {
    if (!(t >= 0.0)) throw InputError("evolve: t must be >= 0");
    const double q = t / dt();
    auto s = static_cast<std::size_t>(std::floor(q + 1e-9));
    if (rounded) *rounded = std::abs(q - static_cast<double>(s)) > 1e-9 * std::max(1.0, q);
    return s;
  }

  // k interleaved functions, `steps` dual steps, each followed by *scale
  void dual_steps(std::vector<double>& v, std::size_t k, std::size_t steps, double scale = 1.0) const {
    const std::size_t n = grid_.size();
    std::vector<double> out(n * k), scratch;
    for (std::size_t s = 0; s < steps; ++s) {
      for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t r = 0; r < k; ++r) out[i * k + r] = E_[i] * v[(i + 1) * k + r];
      for (std::size_t r = 0; r < k; ++r) out[(n - 1) * k + r] = 0.0;
      W_.apply(v.data(), out.data(), k, dt(), scratch);
      if (scale != 1.0)
        for (auto& x : out) x *= scale;
      v.swap(out);
    }
  }
  // transpose of dual_steps; returns the TV mass that left the grid
  double direct_steps(std::vector<double>& v, std::size_t k, std::size_t steps, double scale = 1.0) const {
    const std::size_t n = grid_.size();
    std::vector<double> out(n * k), scratch;
    double leak = 0.0;
    const double full = W_.full_mass();
    for (std::size_t s = 0; s < steps; ++s) {
      double l = 0.0;
      for (std::size_t r = 0; r < k; ++r) {
        out[r] = 0.0;
        l += E_[n - 1] * std::abs(v[(n - 1) * k + r]);
      }
      for (std::size_t j = 1; j < n; ++j)
        for (std::size_t r = 0; r < k; ++r) out[j * k + r] = E_[j - 1] * v[(j - 1) * k + r];
      W_.apply_transpose(v.data(), out.data(), k, dt(), scratch);
      for (std::size_t i = 0; i < n; ++i) {
        double lost = full - W_.row_mass(i);
        if (lost > 0.0)
          for (std::size_t r = 0; r < k; ++r) l += dt() * lost * std::abs(v[i * k + r]);
      }
      if (scale != 1.0)
        for (auto& x : out) x *= scale;
      leak = leak * scale + l * scale;
      v.swap(out);
    }
    return leak;
  }

  GridFunction step_dual(const GridFunction& f) const {
    require_same_grid(f.grid, grid_, "step_dual");
    auto v = f.values;
    dual_steps(v, 1, 1);
    return {grid_, std::move(v)};
  }
  DiscreteMeasure step_direct(const DiscreteMeasure& mu, double* leak = nullptr) const {
    require_same_grid(mu.grid, grid_, "step_direct");
    auto v = mu.masses;
    double l = direct_steps(v, 1, 1);
    if (leak) *leak = l;
    return {grid_, std::move(v)};
  }

  GridFunction evolve(const GridFunction& f, double t, EvolveDiagnostics* d = nullptr) const {
    require_same_grid(f.grid, grid_, "evolve");
    EvolveDiagnostics diag;
    diag.steps = steps_for(t, &diag.rounded);
    diag.realized_time = static_cast<double>(diag.steps) * dt();
    if (diag.rounded) diag.warnings.push_back(rounding_warning(t, diag.realized_time));
    auto v = f.values;
    dual_steps(v, 1, diag.steps);
    if (d) *d = std::move(diag);
    return {grid_, std::move(v)};
  }
  DiscreteMeasure evolve(const DiscreteMeasure& mu, double t, EvolveDiagnostics* d = nullptr) const {
    require_same_grid(mu.grid, grid_, "evolve");
    EvolveDiagnostics diag;
    diag.steps = steps_for(t, &diag.rounded);
    diag.realized_time = static_cast<double>(diag.steps) * dt();
    if (diag.rounded) diag.warnings.push_back(rounding_warning(t, diag.realized_time));
    auto v = mu.masses;
    diag.leakage = direct_steps(v, 1, diag.steps);
    const double m0 = mu.total_variation();
    diag.leakage_fraction = m0 > 0.0 ? diag.leakage / m0 : 0.0;
    if (diag.leakage_fraction > leak_warn_) {
      std::ostringstream os;
      os << "leakage fraction " << diag.leakage_fraction << " exceeds " << leak_warn_
         << " (grid too small?)";
      diag.warnings.push_back(os.str());
    }
    if (d) *d = std::move(diag);
    return {grid_, std::move(v)};
  }

  struct Prop {
    const PDESemigroup* S;
    std::size_t steps;
    double t;
    std::vector<double> right(std::span<const double> f) const {
      std::vector<double> v(f.begin(), f.end());
      S->dual_steps(v, 1, steps);
      return v;
    }
    std::vector<double> left(std::span<const double> mu) const {
      std::vector<double> v(mu.begin(), mu.end());
      S->direct_steps(v, 1, steps);
      return v;
    }
    double time() const { return t; }
  };
  Prop propagator(double t) const {
    auto s = steps_for(t);
    return {this, s, static_cast<double>(s) * dt()};
  }

 private:
  static std::string rounding_warning(double t, double realized) {
    std::ostringstream os;
    os << "t = " << t << " is not a multiple of dt; rounded down to " << realized;
    return os.str();
  }

  ModelSpec model_;
  Grid1D grid_;
  double leak_warn_;
  std::vector<double> E_;
  KernelMatrix W_;
};

struct PositivityResult {
  double eta = 0.0;
  bool pass = false;
  std::size_t cells = 0;
};

// M_tau 1_[x1,x2] >= eta on [y1,y2]
inline PositivityResult check_positivity_lemma(const PDESemigroup& S, double x1, double x2, double y1,
                                               double y2, double tau) {
  if (!(x1 < x2) || !(y1 < y2) || !(tau > 0.0)) throw InputError("positivity lemma: bad windows");
  const auto& g = S.grid();
  if (y1 < g.lower() || y2 > g.upper()) throw InputError("positivity lemma: y-window outside grid");
  auto f = GridFunction::sample(g, [&](double x) { return (x >= x1 && x <= x2) ? 1.0 : 0.0; });
  auto r = S.evolve(f, tau);
  PositivityResult out;
  out.eta = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i) {
    double x = g.center(i);
    if (x >= y1 && x <= y2) {
      out.eta = std::min(out.eta, r.values[i]);
      ++out.cells;
    }
  }
  if (out.cells == 0) throw InputError("positivity lemma: y-window contains no cell center");
  out.pass = out.eta > 0.0;
  return out;
}

}  // namespace perron
