#pragma once
// Finite-state positive semigroups e^{tG}, phase-type crossing-time laws and
// exact checks of the path-crossing (H1) and overlap (H2) conditions.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "perron/core_spaces.hpp"
#include "perron/eigentriplet.hpp"

namespace perron {

struct FiniteGenerator {
  Eigen::MatrixXd off_diag;  // q(i->j), diagonal ignored
  Eigen::VectorXd diag_extra;

  FiniteGenerator() = default;
  FiniteGenerator(Eigen::MatrixXd rates, Eigen::VectorXd extra)
      : off_diag(std::move(rates)), diag_extra(std::move(extra)) {
    const auto n = off_diag.rows();
    if (n < 1 || off_diag.cols() != n) throw InputError("generator: rate matrix must be square");
    if (diag_extra.size() == 0) diag_extra = Eigen::VectorXd::Zero(n);
    if (diag_extra.size() != n) throw InputError("generator: diag_extra size mismatch");
    for (Eigen::Index i = 0; i < n; ++i) {
      off_diag(i, i) = 0.0;
      for (Eigen::Index j = 0; j < n; ++j)
        if (!(off_diag(i, j) >= 0.0) || !std::isfinite(off_diag(i, j)))
          throw InputError("generator: off-diagonal rates must be finite and >= 0");
      if (!std::isfinite(diag_extra(i))) throw InputError("generator: non-finite diag_extra");
    }
  }
  explicit FiniteGenerator(Eigen::MatrixXd rates)
      : FiniteGenerator(std::move(rates), Eigen::VectorXd()) {}

  std::size_t n_states() const { return static_cast<std::size_t>(off_diag.rows()); }
  bool conservative() const { return diag_extra.cwiseAbs().maxCoeff() == 0.0; }
  Eigen::VectorXd exit_rates() const { return off_diag.rowwise().sum(); }
  Eigen::MatrixXd full() const {
    Eigen::MatrixXd G = off_diag;
    G.diagonal() = diag_extra - exit_rates();
    return G;
  }
};

struct TransitionMatrix {
  Eigen::MatrixXd m;
  double t = 0.0;
};

namespace detail {

// [6/6] Pade of exp(X) for small ‖X‖
inline Eigen::MatrixXd pade6(const Eigen::MatrixXd& X) {
  constexpr int p = 6;
  const auto n = X.rows();
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd N = I, D = I, Xk = I;
  double c = 1.0;
  for (int k = 1; k <= p; ++k) {
    c *= static_cast<double>(p - k + 1) / static_cast<double>(k * (2 * p - k + 1));
    Xk = Xk * X;
    N += c * Xk;
    D += ((k % 2) ? -c : c) * Xk;
  }
  return D.partialPivLu().solve(N);
}

inline void clamp_rounding_negatives(Eigen::MatrixXd& M) {
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    double rmax = M.row(i).cwiseAbs().maxCoeff();
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (M(i, j) < 0.0) {
        if (-M(i, j) <= 1e-13 * rmax + std::numeric_limits<double>::min())
          M(i, j) = 0.0;
        else
          throw std::runtime_error("matrix_exponential: significant negative entry");
      }
    }
  }
}

// exp(tG) for G with nonnegative off-diagonal part
inline Eigen::MatrixXd expm_metzler(const Eigen::MatrixXd& G, double t) {
  const auto n = G.rows();
  if (t == 0.0) return Eigen::MatrixXd::Identity(n, n);
  double c = std::max(0.0, -G.diagonal().minCoeff());
  Eigen::MatrixXd A = t * (G + c * Eigen::MatrixXd::Identity(n, n));
  double nrm = A.cwiseAbs().rowwise().sum().maxCoeff();
  int s = 0;
  if (nrm > 0.5) s = static_cast<int>(std::ceil(std::log2(nrm / 0.5)));
  const double scale = std::ldexp(1.0, -s);
  Eigen::MatrixXd R = pade6(A * scale) * std::exp(-c * t * scale);
  clamp_rounding_negatives(R);
  for (int k = 0; k < s; ++k) R = R * R;
  clamp_rounding_negatives(R);
  return R;
}

}  // namespace detail

inline TransitionMatrix matrix_exponential(const FiniteGenerator& gen, double t) {
  if (!(t >= 0.0)) throw InputError("matrix_exponential: t must be >= 0");
  return {detail::expm_metzler(gen.full(), t), t};
}

// Independent algorithm: Poisson-weighted powers of I + G/c, split in time.
inline TransitionMatrix uniformization(const FiniteGenerator& gen, double t) {
  if (!(t >= 0.0)) throw InputError("uniformization: t must be >= 0");
  Eigen::MatrixXd G = gen.full();
  const auto n = G.rows();
  double c = std::max(1e-300, -G.diagonal().minCoeff());
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(n, n) + G / c;
  int s = 0;
  while (c * std::ldexp(t, -s) > 1.0) ++s;
  const double tp = std::ldexp(t, -s);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n), Pk = Eigen::MatrixXd::Identity(n, n);
  double term = std::exp(-c * tp);
  for (int k = 0; k < 60; ++k) {
    acc += term * Pk;
    Pk = Pk * P;
    term *= c * tp / static_cast<double>(k + 1);
    if (term < 1e-20) break;
  }
  for (int k = 0; k < s; ++k) acc = acc * acc;
  return {acc, t};
}

class FiniteSemigroup {
 public:
  explicit FiniteSemigroup(FiniteGenerator g) : gen_(std::move(g)), G_(gen_.full()) {}
  std::size_t dimension() const { return gen_.n_states(); }
  const FiniteGenerator& generator() const { return gen_; }

  struct Prop {
    Eigen::MatrixXd M;
    double t;
    std::vector<double> right(std::span<const double> f) const {
      Eigen::Map<const Eigen::VectorXd> v(f.data(), static_cast<Eigen::Index>(f.size()));
      Eigen::VectorXd r = M * v;
      return {r.data(), r.data() + r.size()};
    }
    std::vector<double> left(std::span<const double> mu) const {
      Eigen::Map<const Eigen::RowVectorXd> v(mu.data(), static_cast<Eigen::Index>(mu.size()));
      Eigen::RowVectorXd r = v * M;
      return {r.data(), r.data() + r.size()};
    }
    double time() const { return t; }
  };
  Prop propagator(double t) const { return {detail::expm_metzler(G_, t), t}; }

 private:
  FiniteGenerator gen_;
  Eigen::MatrixXd G_;
};

struct NonConvergence : std::runtime_error {
  NonConvergence(const std::string& m, double residual)
      : std::runtime_error(m), last_residual(residual) {}
  double last_residual;
};

inline Eigentriplet perron_triplet_finite(const FiniteGenerator& gen, double tau,
                                          PowerOptions opt = {}) {
  auto E = power_triplet(FiniteSemigroup(gen), tau, opt);
  if (!E.converged) {
    std::ostringstream os;
    os << "perron_triplet_finite: " << E.status << " after " << E.iterations
       << " iterations (res_h=" << E.res_h << ")";
    throw NonConvergence(os.str(), E.res_h);
  }
  return E;
}

struct HittingLaw {
  std::size_t x = 0, y = 0;
  double tau = 0.0;
  double p = 0.0;          // P(0 < T(x,y) <= tau)
  bool reachable = false;  // structural reachability of y from x
  TimeMeasure sigma;       // conditional law on the time grid
  std::vector<double> raw_density;  // unconditional density samples
};

namespace detail {

// Crossing-time laws to target y from every x, via one absorbing chain whose
// phase 0 stands for "started at y, has not jumped yet" (first return).
inline std::vector<HittingLaw> hitting_laws_to(const FiniteGenerator& gen, std::size_t y,
                                               double tau, std::size_t n_time) {
  const std::size_t n = gen.n_states();
  if (!gen.conservative()) throw InputError("hitting_law: generator must be conservative");
  if (n_time < 2) throw InputError("hitting_law: n_time must be >= 2");
  if (!(tau > 0.0)) throw InputError("hitting_law: tau must be > 0");
  if (y >= n) throw InputError("hitting_law: target out of range");

  // augmented index: 0 = phase0, states z != y -> 1.., absorbing -> n
  std::vector<std::size_t> idx(n);
  {
    std::size_t k = 1;
    for (std::size_t z = 0; z < n; ++z) idx[z] = (z == y) ? 0 : k++;
  }
  const std::size_t na = n + 1, abs = n;
  const auto& Q = gen.off_diag;
  Eigen::MatrixXd Ga = Eigen::MatrixXd::Zero(na, na);
  for (std::size_t z = 0; z < n; ++z) {
    const std::size_t r = idx[z];
    double out = 0.0;
    for (std::size_t w = 0; w < n; ++w) {
      if (w == z) continue;
      double q = Q(z, w);
      if (q == 0.0) continue;
      out += q;
      if (w == y) {
        if (z != y) Ga(r, abs) += q;
      } else {
        Ga(r, idx[w]) += q;
      }
    }
    Ga(r, r) = -out;
  }

  // structural reachability of the absorbing state
  std::vector<char> reach(na, 0);
  {
    std::queue<std::size_t> qu;
    reach[abs] = 1;
    qu.push(abs);
    while (!qu.empty()) {
      auto v = qu.front();
      qu.pop();
      for (std::size_t u = 0; u < na; ++u)
        if (!reach[u] && u != v && Ga(u, v) > 0.0) {
          reach[u] = 1;
          qu.push(u);
        }
    }
  }

  const std::size_t m = n_time;
  const double h = tau / static_cast<double>(m - 1);
  Eigen::MatrixXd Ea = expm_metzler(Ga, h);
  Eigen::MatrixXd Eh = Ea.topLeftCorner(n, n);
  Eigen::VectorXd t0 = Ga.col(abs).head(n);

  Eigen::MatrixXd dens(n, m);  // unconditional density per augmented row
  Eigen::VectorXd u = t0;
  for (std::size_t j = 0; j < m; ++j) {
    dens.col(j) = u;
    if (j + 1 < m) u = Eh * u;
  }
  Eigen::VectorXd a = Eigen::VectorXd::Zero(na);
  a(abs) = 1.0;
  for (std::size_t j = 0; j + 1 < m; ++j) a = Ea * a;

  std::vector<HittingLaw> out(n);
  for (std::size_t x = 0; x < n; ++x) {
    HittingLaw& L = out[x];
    const std::size_t r = idx[x];
    L.x = x;
    L.y = y;
    L.tau = tau;
    L.reachable = reach[r] != 0;
    L.raw_density.resize(m);
    for (std::size_t j = 0; j < m; ++j) L.raw_density[j] = std::max(0.0, dens(r, j));
    L.p = L.reachable ? std::clamp(a(r), 0.0, 1.0) : 0.0;
    if (L.reachable && L.p > 0.0) {
      L.sigma = TimeMeasure::from_density(tau, L.raw_density);
    } else {
      L.p = 0.0;
      L.sigma.horizon = tau;
      L.sigma.nodes = TimeMeasure::uniform_nodes(tau, m);
      L.sigma.weights.assign(m, 0.0);
      L.sigma.density.assign(m, 0.0);
    }
  }
  return out;
}

}  // namespace detail

inline HittingLaw hitting_law(const FiniteGenerator& gen, std::size_t x, std::size_t y,
                              double tau, std::size_t n_time = 256) {
  if (x >= gen.n_states()) throw InputError("hitting_law: source out of range");
  return detail::hitting_laws_to(gen, y, tau, n_time)[x];
}

struct HypothesisConstants {
  double tau = 0.0;
  double c = 0.0;
  double C = 1.0;
  double h2_margin = 0.0;
};

struct H1Result {
  HypothesisConstants constants;
  std::vector<std::vector<HittingLaw>> laws;  // laws[x][y]
  bool pass = false;
  std::string verdict;
  long fail_x = -1, fail_y = -1;
  double min_p = 0.0;
  double worst_slack = 0.0;  // min over (x,y,z) of LHS - RHS
  double worst_tol = 0.0;    // tolerance at that entry
  double max_tol = 0.0;
};

inline H1Result verify_h1(const FiniteGenerator& gen, double tau, std::size_t n_time = 256) {
  if (!(tau > 0.0)) throw InputError("verify_h1: tau must be > 0");
  const std::size_t n = gen.n_states();
  H1Result R;
  R.constants.tau = tau;
  const std::size_t m = n_time;

  if (n == 1) {
    HittingLaw L;
    L.tau = tau;
    L.p = 1.0;
    L.reachable = true;
    L.sigma = TimeMeasure::dirac(tau, m, 0);
    L.raw_density.assign(m, 0.0);
    R.laws = {{L}};
    R.constants.c = 1.0;
    double a = gen.diag_extra(0);
    R.constants.C = std::exp(std::abs(a) * tau);
    R.min_p = 1.0;
    R.pass = true;
    R.verdict = "pass (single state)";
    return R;
  }

  R.laws.assign(n, std::vector<HittingLaw>(n));
  for (std::size_t y = 0; y < n; ++y) {
    auto col = detail::hitting_laws_to(gen, y, tau, m);
    for (std::size_t x = 0; x < n; ++x) R.laws[x][y] = std::move(col[x]);
  }
  double pmin = std::numeric_limits<double>::infinity();
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y)
      if (R.laws[x][y].p < pmin) {
        pmin = R.laws[x][y].p;
        if (!(pmin > 0.0)) {
          R.fail_x = static_cast<long>(x);
          R.fail_y = static_cast<long>(y);
        }
      }
  R.min_p = pmin;
  if (!(pmin > 0.0)) {
    R.pass = false;
    std::ostringstream os;
    os << "H1 fails: p = 0 for (x, y) = (" << R.fail_x << ", " << R.fail_y << ")";
    R.verdict = os.str();
    return R;
  }
  const double c = 0.99 * pmin;
  R.constants.c = c;

  const Eigen::MatrixXd G = gen.full();
  const double h = tau / static_cast<double>(m - 1);
  const Eigen::MatrixXd Mt = detail::expm_metzler(G, tau);
  const Eigen::MatrixXd E = detail::expm_metzler(G, h);

  // C from M_s 1 at the grid times
  {
    Eigen::VectorXd u = Eigen::VectorXd::Ones(n);
    double C = 1.0;
    for (std::size_t j = 0; j < m; ++j) {
      C = std::max({C, u.maxCoeff(), 1.0 / u.minCoeff()});
      u = E * u;
    }
    R.constants.C = C;
  }

  // coarse sub-grid for the quadrature error estimate
  std::vector<std::size_t> coarse;
  for (std::size_t j = 0; j < m; j += 2) coarse.push_back(j);
  if (coarse.back() != m - 1) coarse.push_back(m - 1);

  R.worst_slack = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd rows(m, n);  // rows.row(k) = e_y E^k
  for (std::size_t y = 0; y < n; ++y) {
    Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(n);
    r(y) = 1.0;
    for (std::size_t k = 0; k < m; ++k) {
      rows.row(k) = r;
      r = r * E;
    }
    for (std::size_t x = 0; x < n; ++x) {
      const auto& L = R.laws[x][y];
      Eigen::RowVectorXd rhs = Eigen::RowVectorXd::Zero(n);
      for (std::size_t j = 0; j < m; ++j)
        if (L.sigma.weights[j] != 0.0) rhs += L.sigma.weights[j] * rows.row(m - 1 - j);
      rhs *= c;
      Eigen::RowVectorXd rc = Eigen::RowVectorXd::Zero(n);
      double z = 0.0;
      for (std::size_t q = 0; q < coarse.size(); ++q) {
        std::size_t j = coarse[q];
        double left = q > 0 ? h * static_cast<double>(j - coarse[q - 1]) : 0.0;
        double right = q + 1 < coarse.size() ? h * static_cast<double>(coarse[q + 1] - j) : 0.0;
        double w = 0.5 * (left + right) * L.raw_density[j];
        z += w;
        rc += w * rows.row(m - 1 - j);
      }
      if (z > 0.0) rc *= c / z;
      for (std::size_t zc = 0; zc < n; ++zc) {
        double tol = 1e-9 + std::abs(rhs(zc) - rc(zc));
        double slack = Mt(x, zc) - rhs(zc);
        R.max_tol = std::max(R.max_tol, tol);
        if (slack + tol < 0.0 && R.fail_x < 0) {
          R.fail_x = static_cast<long>(x);
          R.fail_y = static_cast<long>(y);
        }
        if (slack < R.worst_slack) {
          R.worst_slack = slack;
          R.worst_tol = tol;
        }
      }
    }
  }
  R.pass = R.fail_x < 0;
  if (R.pass) {
    R.verdict = "pass";
  } else {
    std::ostringstream os;
    os << "H1 inequality violated at (x, y) = (" << R.fail_x << ", " << R.fail_y << ")";
    R.verdict = os.str();
  }
  return R;
}

struct H2Result {
  double margin = 0.0;
  bool pass = false;
  long worst_x = -1, worst_xp = -1;
};

inline H2Result verify_h2(const std::vector<std::vector<HittingLaw>>& laws) {
  const std::size_t n = laws.size();
  H2Result R;
  double sup = 0.0;
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t xp = x + 1; xp < n; ++xp) {
      double inf = 2.0;
      for (std::size_t y = 0; y < n && inf > 0.0; ++y) {
        const auto& a = laws[x][y];
        const auto& b = laws[xp][y];
        double tv = (a.p > 0.0 && b.p > 0.0) ? tv_distance(a.sigma, b.sigma) : 2.0;
        inf = std::min(inf, tv);
      }
      if (inf > sup || R.worst_x < 0) {
        sup = std::max(sup, inf);
        R.worst_x = static_cast<long>(x);
        R.worst_xp = static_cast<long>(xp);
      }
    }
  R.margin = 2.0 - sup;
  R.pass = R.margin > 1e-6;
  return R;
}

// N-cycle with jump rate N to the successor: a discretized unit rotation.
inline FiniteGenerator rotation_chain(std::size_t N) {
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(N, N);
  for (std::size_t i = 0; i < N; ++i) Q(i, (i + 1) % N) = static_cast<double>(N);
  return FiniteGenerator(Q);
}

}  // namespace perron
