#pragma once
// Estimates of the comparison constant d in
//   M_t psi(x) / psi(x) >= d M_t psi(y) / psi(y),  x, y in K,
// and of the Doeblin pair (c~, nu_{x,x'}) in
//   delta_u M_tau(psi f) / M_tau psi(u) >= c~ nu_{x,x'}(f),  u in {x, x'}.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "perron/lyapunov.hpp"
#include "perron/pde_semigroup.hpp"
#include "perron/sigma.hpp"

namespace perron {

struct DScan {
  double d = 0.0;
  std::vector<double> t_list, d_at;  // d restricted to each t
  std::size_t argmin_x = 0, argmax_y = 0;
};

// min over x, y in cells and t in t_list of (M_t psi / psi)(x) / (M_t psi / psi)(y)
inline DScan scan_d(const PDESemigroup& S, const std::vector<double>& psi,
                    const std::vector<std::size_t>& cells, std::vector<double> t_list) {
  if (cells.empty()) throw InputError("scan_d: no cells");
  if (t_list.empty()) throw InputError("scan_d: empty t_list");
  std::sort(t_list.begin(), t_list.end());
  DScan D;
  D.t_list = t_list;
  D.d = std::numeric_limits<double>::infinity();
  auto v = psi;
  std::size_t done = 0;
  for (double t : t_list) {
    if (!(t > 0.0)) throw InputError("scan_d: times must be > 0");
    const std::size_t target = S.steps_for(t);
    S.dual_steps(v, 1, target - done);
    done = target;
    // log-normalize to stay in range on long lists
    double mx = 0.0;
    for (double x : v) mx = std::max(mx, x);
    if (mx > 0.0)
      for (double& x : v) x /= mx;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    std::size_t ilo = 0, ihi = 0;
    for (std::size_t i : cells) {
      const double r = v[i] / psi[i];
      if (r < lo) lo = r, ilo = i;
      if (r > hi) hi = r, ihi = i;
    }
    const double d = hi > 0.0 ? lo / hi : 0.0;
    D.d_at.push_back(d);
    if (d < D.d) D.d = d, D.argmin_x = ilo, D.argmax_y = ihi;
  }
  return D;
}

struct PairMinorization {
  std::size_t x = 0, xp = 0, y = 0;  // cell indices
  double m = 0.0;
  DiscreteMeasure nu;
  double nu_mass_error = 0.0;
  double worst_margin = 0.0;  // min over u, j of lhs_j - c~ nu_j, relative to c~ nu_j
  bool holds = false;
};

struct MinorizationReport {
  double d = 0.0;
  DScan d_scan;
  double c = 0.0, eps_overlap = 0.0, C = 0.0;
  double c_tilde = 0.0;
  double tolerance = 1e-6;
  std::vector<PairMinorization> pairs;
  bool pass = false;
  std::string message;
};

struct MinorizationOptions {
  std::size_t n_pairs = 10;
  std::uint64_t seed = 1;
  double tolerance = 1e-6;  // relative slack on each cell of (4)
  std::vector<double> t_multiples = {1.0, 2.0, 5.0, 10.0};
};

inline MinorizationReport estimate_d_and_ctilde(const PDESemigroup& S, const LyapunovConstruction& L,
                                                const H1H2PrimeReport& H,
                                                const MinorizationOptions& opt = {}) {
  require_same_grid(S.grid(), L.grid, "estimate_d_and_ctilde");
  if (L.K.empty()) throw InputError("estimate_d_and_ctilde: K is empty");
  if (H.samples() == 0) throw InputError("estimate_d_and_ctilde: no (H1')/(H2') samples");
  const Grid1D& g = S.grid();
  const std::size_t n = g.size(), M = H.n_time, ns = H.samples();
  MinorizationReport R;
  R.tolerance = opt.tolerance;

  std::vector<double> tl;
  for (double k : opt.t_multiples) tl.push_back(k * L.tau);
  R.d_scan = scan_d(S, L.psi.values, L.K, tl);
  R.d = R.d_scan.d;

  R.c = H.c;
  R.eps_overlap = H.eps_overlap;
  R.C = H.C;
  R.c_tilde = R.c * R.eps_overlap / R.C;

  const std::size_t tau_steps = S.steps_for(L.tau), fam_steps = S.steps_for(H.t_fam);
  const std::size_t q = fam_steps / (M - 1);
  std::vector<char> inK(n, 0);
  for (std::size_t i : L.K) inK[i] = 1;

  // M_tau psi for the denominators
  auto Mpsi = L.psi.values;
  S.dual_steps(Mpsi, 1, tau_steps);

  // pairs: both ends of K first, then seeded draws from the samples
  std::vector<std::pair<std::size_t, std::size_t>> idx;
  if (ns > 1) idx.emplace_back(0, ns - 1);
  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<std::size_t> pick(0, ns - 1);
  while (idx.size() < opt.n_pairs) {
    std::size_t a = pick(rng), b = pick(rng);
    if (a == b && ns > 1) continue;
    idx.emplace_back(std::min(a, b), std::max(a, b));
  }

  R.pass = R.d > 0.0 && R.c_tilde > 0.0;
  for (auto [a, b] : idx) {
    PairMinorization P;
    P.x = H.cells[a];
    P.xp = H.cells[b];
    const std::size_t yb = H.best_y[a * ns + b];
    P.y = H.cells[yb];
    P.m = H.best_m[a * ns + b];
    const double* s1 = H.sigma(a, yb);
    const double* s2 = H.sigma(b, yb);

    // nu_j = m^{-1} sum_k (s1 ^ s2)_k (delta_y M_{tau - s_k})_j psi_j 1_K(j) / psi(y)
    std::vector<double> nu(n, 0.0), mu(n, 0.0);
    mu[P.y] = 1.0;
    S.direct_steps(mu, 1, tau_steps - fam_steps);
    for (std::size_t k = M; k-- > 0;) {
      const double w = std::min(s1[k], s2[k]);
      if (w > 0.0)
        for (std::size_t j = 0; j < n; ++j) nu[j] += w * mu[j];
      if (k > 0) S.direct_steps(mu, 1, q);
    }
    const double scale = 1.0 / (L.psi[P.y] * P.m);
    double mass = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      nu[j] = inK[j] ? nu[j] * L.psi[j] * scale : 0.0;
      mass += nu[j];
    }
    P.nu_mass_error = std::abs(mass - 1.0);

    // (4) against the evolved Dirac rows of x and x'
    P.worst_margin = std::numeric_limits<double>::infinity();
    for (std::size_t u : {P.x, P.xp}) {
      std::vector<double> row(n, 0.0);
      row[u] = 1.0;
      S.direct_steps(row, 1, tau_steps);
      for (std::size_t j = 0; j < n; ++j) {
        if (nu[j] <= 0.0) continue;
        const double rhs = R.c_tilde * nu[j];
        const double lhs = row[j] * L.psi[j] / Mpsi[u];
        P.worst_margin = std::min(P.worst_margin, (lhs - rhs) / rhs);
      }
    }
    P.holds = P.worst_margin >= -opt.tolerance && P.nu_mass_error <= 1e-8;
    R.pass = R.pass && P.holds;
    P.nu = DiscreteMeasure(g, std::move(nu));
    R.pairs.push_back(std::move(P));
  }
  if (!(R.d > 0.0))
    R.message = "d <= 0";
  else if (!(R.c_tilde > 0.0))
    R.message = "c~ <= 0";
  else if (!R.pass)
    R.message = "(4) violated on a sampled pair";
  else
    R.message = "d > 0, c~ > 0 and (4) holds on every sampled pair";
  return R;
}

}  // namespace perron
