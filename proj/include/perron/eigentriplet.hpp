#pragma once
// Power iteration for the Perron triplet (lambda, h, gamma) of any oracle.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "perron/core_spaces.hpp"
#include "perron/oracle.hpp"

namespace perron {

struct Eigentriplet {
  double lambda = 0.0;
  double lambda_left = 0.0;  // same estimate from the left iteration
  double tau = 0.0;          // realized propagator time
  std::vector<double> h, gamma, V;
  double res_h = 0.0, res_gamma = 0.0;
  double normalization_h = 0.0, normalization_gamma = 0.0;  // |‖h‖-1|, |γ(h)-1|
  int iterations = 0;
  bool converged = false;
  std::string status;
  std::vector<double> growth_right, growth_left;
};

struct PowerOptions {
  double tol = 1e-12;
  int max_iter = 5000;
  int lambda_window = 10;
};

namespace detail {
inline double bnorm(std::span<const double> f, std::span<const double> V) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s = std::max(s, std::abs(f[i]) / V[i]);
  return s;
}
inline double mnorm(std::span<const double> m, std::span<const double> V) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) s += std::abs(m[i]) * V[i];
  return s;
}
inline double tail_mean_log(const std::vector<double>& g, int window, double tau) {
  int n = static_cast<int>(g.size());
  int k0 = std::max(0, n - window);
  double s = 0.0;
  for (int k = k0; k < n; ++k) s += std::log(g[k]);
  return s / (static_cast<double>(n - k0) * tau);
}
}  // namespace detail

template <SemigroupOracle S>
Eigentriplet power_triplet(const S& oracle, double tau, PowerOptions opt = {},
                           std::vector<double> V = {}) {
  const std::size_t n = oracle.dimension();
  if (V.empty()) V.assign(n, 1.0);
  if (V.size() != n) throw InputError("power_triplet: weight size mismatch");
  if (!(tau > 0.0)) throw InputError("power_triplet: tau must be > 0");
  auto P = oracle.propagator(tau);
  Eigentriplet E;
  E.tau = P.time();
  E.V = V;
  std::vector<double> h(n, 1.0), g(n, 1.0 / static_cast<double>(n));
  {
    double z = detail::bnorm(h, V);
    for (auto& v : h) v /= z;
    z = detail::mnorm(g, V);
    for (auto& v : g) v /= z;
  }
  int settle = 0;
  for (int it = 0; it < opt.max_iter + opt.lambda_window; ++it) {
    if (!E.converged && it >= opt.max_iter) break;
    auto hn = P.right(h);
    double gr = detail::bnorm(hn, V);
    auto gn = P.left(g);
    double gl = detail::mnorm(gn, V);
    if (!(gr > 0.0) || !(gl > 0.0) || !std::isfinite(gr) || !std::isfinite(gl)) {
      E.status = "degenerate iterate (zero or non-finite growth)";
      E.iterations = it + 1;
      h.swap(hn);
      g.swap(gn);
      break;
    }
    for (auto& v : hn) v /= gr;
    for (auto& v : gn) v /= gl;
    double dh = 0.0, dg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      dh = std::max(dh, std::abs(hn[i] - h[i]) / V[i]);
      dg += std::abs(gn[i] - g[i]) * V[i];
    }
    h.swap(hn);
    g.swap(gn);
    E.growth_right.push_back(gr);
    E.growth_left.push_back(gl);
    E.iterations = it + 1;
    // once converged, run `lambda_window` more iterations so the lambda
    // average only sees converged growth factors
    if (!E.converged && dh < opt.tol && dg < opt.tol) {
      E.converged = true;
      settle = opt.lambda_window;
    }
    if (E.converged && settle-- <= 0) break;
  }
  if (!E.growth_right.empty()) {
    E.lambda = detail::tail_mean_log(E.growth_right, opt.lambda_window, E.tau);
    E.lambda_left = detail::tail_mean_log(E.growth_left, opt.lambda_window, E.tau);
  }
  if (E.status.empty())
    E.status = E.converged ? "converged" : "non-convergent (possible periodicity)";

  double z = detail::bnorm(h, V);
  if (z > 0.0)
    for (auto& v : h) v /= z;
  double gh = dot(g, h);
  if (gh > 0.0)
    for (auto& v : g) v /= gh;
  E.normalization_h = std::abs(detail::bnorm(h, V) - 1.0);
  E.normalization_gamma = std::abs(dot(g, h) - 1.0);

  const double f = std::exp(E.lambda * E.tau);
  auto Mh = P.right(h);
  auto gM = P.left(g);
  for (std::size_t i = 0; i < n; ++i) {
    Mh[i] -= f * h[i];
    gM[i] -= f * g[i];
  }
  E.res_h = detail::bnorm(Mh, V);
  E.res_gamma = detail::mnorm(gM, V);
  E.h = std::move(h);
  E.gamma = std::move(g);
  return E;
}

}  // namespace perron
