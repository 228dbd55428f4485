#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "perron/pde_semigroup.hpp"

using namespace perron;

namespace {

ModelSpec make(Potential a, Kernel Q) {
  ModelSpec m;
  m.a = std::move(a);
  m.Q = std::move(Q);
  return m;
}

ModelSpec compliant() { return make(Potential::quadratic(1.0, 1.0), Kernel::uniform_band(1.0, 1.0)); }

std::vector<double> rand_vec(std::mt19937_64& g, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> U(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = U(g);
  return v;
}

// brute-force kernel entry: midpoint-subdivided integral of the density over
// cell j at source position xs
double brute_entry(const Kernel& Q, const Grid1D& g, double xs, std::size_t j) {
  const int sub = 4000;
  double el = g.edge(j), h = g.dx() / sub, s = 0;
  for (int q = 0; q < sub; ++q) s += Q.density_at(el + (q + 0.5) * h - xs) * h;
  return s;
}

}  // namespace

TEST(Kernel, TotalMass) {
  EXPECT_DOUBLE_EQ(Kernel::uniform_band(0.5, 1.0).total_mass(), 1.0);
  EXPECT_DOUBLE_EQ(Kernel::dirac_pair().total_mass(), 2.0);
  auto G = Kernel::gaussian(2.0, 0.5, 1e6);
  EXPECT_NEAR(G.total_mass(), 2.0 * 0.5 * std::sqrt(2 * M_PI), 1e-12);
  Table J({-1.0, 0.0, 1.0}, {0.0, 1.0, 0.0});
  auto T = Kernel::from_table(J);
  EXPECT_NEAR(T.total_mass(), 1.0, 1e-14);
  EXPECT_GT(T.kappa0, 0.0);
}

TEST(Potential, TablePrimitiveExact) {
  Table t({0.0, 1.0, 3.0}, {2.0, 0.0, 4.0});
  auto a = Potential::from_table(t);
  EXPECT_NEAR(a.integral(0.0, 1.0), 1.0, 1e-15);
  EXPECT_NEAR(a.integral(0.0, 3.0), 5.0, 1e-15);
  EXPECT_NEAR(a.integral(0.5, 2.0), 0.25 + 0.5 * (0 + 2) * 1, 1e-15);
  EXPECT_NEAR(a(2.0), 2.0, 1e-15);
  EXPECT_DOUBLE_EQ(a.sup(), 4.0);
}

TEST(KernelMatrix, BandMatchesBruteForce) {
  Grid1D g(-3, 3, 97);
  auto Q = Kernel::uniform_band(0.7, 0.83);
  KernelMatrix W(Q, g, g.dx());
  EXPECT_TRUE(W.uses_runs());
  for (std::size_t i = 0; i < g.size(); i += 7)
    for (std::size_t j = 0; j < g.size(); ++j)
      EXPECT_NEAR(W.entry(i, j), brute_entry(Q, g, g.center(i) + g.dx(), j), Q.kappa0 * g.dx() / 4000);
}

TEST(KernelMatrix, GaussianMatchesBruteForce) {
  Grid1D g(-3, 3, 120);
  auto Q = Kernel::gaussian(1.3, 0.4, 1.1);
  KernelMatrix W(Q, g, 0.0);
  double worst = 0;
  for (std::size_t i = 0; i < g.size(); i += 5)
    for (std::size_t j = 0; j < g.size(); ++j)
      worst = std::max(worst, std::abs(W.entry(i, j) - brute_entry(Q, g, g.center(i), j)));
  // midpoint error is second order in dx per cell
  EXPECT_LT(worst, 1.3 * g.dx() * g.dx() * g.dx());
}

TEST(KernelMatrix, ApplyMatchesDense) {
  std::mt19937_64 rng(9);
  Grid1D g(-2, 2, 61);
  for (auto Q : {Kernel::uniform_band(1.0, 0.5), Kernel::gaussian(1.0, 0.3, 0.7), Kernel::dirac_pair()}) {
    KernelMatrix W(Q, g, g.dx());
    const std::size_t k = 3, n = g.size();
    auto x = rand_vec(rng, n * k, -1, 1);
    std::vector<double> y(n * k, 0.0), yt(n * k, 0.0), scratch;
    W.apply(x.data(), y.data(), k, 1.0, scratch);
    W.apply_transpose(x.data(), yt.data(), k, 1.0, scratch);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t r = 0; r < k; ++r) {
        double s = 0, st = 0;
        for (std::size_t j = 0; j < n; ++j) {
          s += W.entry(i, j) * x[j * k + r];
          st += W.entry(j, i) * x[j * k + r];
        }
        EXPECT_NEAR(y[i * k + r], s, 1e-13);
        EXPECT_NEAR(yt[i * k + r], st, 1e-13);
      }
  }
}

TEST(KernelMatrix, RowMassBoundedByQbar) {
  Grid1D g(-8, 8, 2000);
  for (auto Q : {Kernel::uniform_band(1.0, 1.0), Kernel::gaussian(1.0, 0.3, 0.9), Kernel::dirac_pair()}) {
    KernelMatrix W(Q, g, g.dx());
    EXPECT_LE(W.max_row_mass(), Q.total_mass() * (1 + 1e-3));
    EXPECT_GE(W.min_weight(), 0.0);
  }
}

TEST(StepDual, PureTransportIsExactShift) {
  Grid1D g(-4, 4, 400);
  PDESemigroup S(make(Potential::constant(0.0), Kernel::none()), g);
  auto f = GridFunction::sample(g, [](double x) { return std::sin(x) + x * x; });
  auto r = S.evolve(f, 50 * g.dx());
  for (std::size_t i = 0; i + 50 < g.size(); ++i) EXPECT_EQ(r.values[i], f.values[i + 50]);
  for (std::size_t i = g.size() - 50; i < g.size(); ++i) EXPECT_EQ(r.values[i], 0.0);
}

TEST(StepDual, ConstantPotentialScalarFactor) {
  Grid1D g(-4, 4, 400);
  PDESemigroup S(make(Potential::constant(-0.6), Kernel::none()), g);
  auto f = GridFunction::sample(g, [](double x) { return std::exp(-x * x); });
  const std::size_t n = 120;
  auto r = S.evolve(f, n * g.dx());
  double fac = std::exp(-0.6 * n * g.dx());
  for (std::size_t i = 0; i + n < g.size(); ++i) EXPECT_NEAR(r.values[i], fac * f.values[i + n], 1e-14);
}

TEST(StepDual, UnitKernelMassGrowsLikeExp) {
  Grid1D g(-30, 30, 3000);
  PDESemigroup S(make(Potential::constant(0.0), Kernel::uniform_band(0.5, 1.0)), g);
  auto one = GridFunction::constant(g, 1.0);
  for (double t : {1.0, 3.0, 5.0}) {
    auto r = S.evolve(one, t);
    double v = r.values[g.nearest(-10.0)];
    EXPECT_NEAR(v / std::exp(t), 1.0, 5 * S.dt() * t) << "t=" << t;
  }
}

TEST(StepDirect, DiracTransport) {
  Grid1D g(-4, 4, 400);
  PDESemigroup S(make(Potential::constant(0.0), Kernel::none()), g);
  auto mu = DiscreteMeasure::dirac(g, -1.0);
  std::size_t i0 = g.nearest(-1.0);
  auto r = S.evolve(mu, 100 * g.dx());
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(r.masses[i], i == i0 + 100 ? 1.0 : 0.0);
}

TEST(StepDirect, MassDecaysExponentially) {
  Grid1D g(-10, 10, 1000);
  PDESemigroup S(make(Potential::constant(-1.0), Kernel::none()), g);
  auto mu = DiscreteMeasure::dirac(g, -9.0);
  for (double t : {0.5, 2.0, 6.0}) {
    EvolveDiagnostics d;
    auto r = S.evolve(mu, t, &d);
    EXPECT_NEAR(r.total_mass(), std::exp(-t), 1e-14);
    EXPECT_EQ(d.leakage, 0.0);
  }
}

TEST(StepDirect, OneStepDualityRandom) {
  std::mt19937_64 rng(21);
  Grid1D g(-8, 8, 2000);
  for (auto m : {compliant(), make(Potential::quadratic(1, 1), Kernel::dirac_pair()),
                 make(Potential::quadratic(0.3, 0.5), Kernel::gaussian(1, 0.5, 1.5))}) {
    PDESemigroup S(m, g);
    for (int trial = 0; trial < 5; ++trial) {
      DiscreteMeasure mu(g, rand_vec(rng, g.size(), -1, 1));
      GridFunction f(g, rand_vec(rng, g.size(), -1, 1));
      double lhs = pair(S.step_direct(mu), f), rhs = pair(mu, S.step_dual(f));
      EXPECT_LT(std::abs(lhs - rhs), 1e-12 * mu.total_variation() * sup_norm(f.values));
    }
  }
}

TEST(StepDirect, LeakageTally) {
  Grid1D g(-2, 2, 200);
  PDESemigroup S(make(Potential::constant(0.0), Kernel::none()), g);
  auto mu = DiscreteMeasure::dirac(g, 1.9);
  EvolveDiagnostics d;
  auto r = S.evolve(mu, 0.5, &d);
  EXPECT_EQ(r.total_mass(), 0.0);
  EXPECT_NEAR(d.leakage, 1.0, 1e-15);
  EXPECT_FALSE(d.warnings.empty());
}

TEST(Evolve, IdentityAtZeroAndRounding) {
  Grid1D g(-8, 8, 2000);
  PDESemigroup S(compliant(), g);
  auto f = GridFunction::sample(g, [](double x) { return std::cos(x); });
  EXPECT_EQ(S.evolve(f, 0.0).values, f.values);
  EvolveDiagnostics d;
  S.evolve(f, 0.0123, &d);
  EXPECT_TRUE(d.rounded);
  EXPECT_EQ(d.steps, 1u);
  EXPECT_FALSE(d.warnings.empty());
  S.evolve(f, 0.4, &d);
  EXPECT_FALSE(d.rounded);
  EXPECT_EQ(d.steps, 50u);
}

TEST(Evolve, PositivityPreserved) {
  std::mt19937_64 rng(33);
  Grid1D g(-8, 8, 800);
  for (auto m : {compliant(), make(Potential::quadratic(1, 1), Kernel::dirac_pair()),
                 make(Potential::quadratic(0.3, 0.5), Kernel::gaussian(1, 0.5, 1.5))}) {
    PDESemigroup S(m, g);
    std::vector<double> f = rand_vec(rng, g.size(), 0, 1), mu = rand_vec(rng, g.size(), 0, 1);
    for (std::size_t i = 0; i < g.size(); i += 3) f[i] = mu[i] = 0.0;
    for (int s = 0; s < 200; ++s) {
      S.dual_steps(f, 1, 1);
      S.direct_steps(mu, 1, 1);
      ASSERT_GE(*std::min_element(f.begin(), f.end()), 0.0);
      ASSERT_GE(*std::min_element(mu.begin(), mu.end()), 0.0);
    }
  }
}

TEST(Evolve, LinearInState) {
  std::mt19937_64 rng(34);
  Grid1D g(-8, 8, 500);
  PDESemigroup S(compliant(), g);
  GridFunction f1(g, rand_vec(rng, g.size(), -1, 1)), f2(g, rand_vec(rng, g.size(), -1, 1));
  std::vector<double> c(g.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = 2 * f1.values[i] - 3 * f2.values[i];
  auto r = S.evolve(GridFunction(g, c), 1.0);
  auto r1 = S.evolve(f1, 1.0), r2 = S.evolve(f2, 1.0);
  for (std::size_t i = 0; i < c.size(); ++i)
    EXPECT_NEAR(r.values[i], 2 * r1.values[i] - 3 * r2.values[i], 1e-12);
}

TEST(Evolve, GronwallMassBound) {
  Grid1D g(-8, 8, 2000);
  PDESemigroup S(compliant(), g);
  const double rate = S.model().abar() + S.model().qbar();
  auto one = GridFunction::constant(g, 1.0);
  for (double t : {0.4, 1.0, 2.0, 4.0}) {
    auto r = S.evolve(one, t);
    EXPECT_LE(sup_norm(r.values), std::exp(rate * t) * (1 + 10 * S.dt()));
  }
}

TEST(Evolve, ConstantRatesMatchExponential) {
  // a = 0.3, Q mass 1.2, on a wide grid; look at the centre, away from the boundary
  Grid1D g(-25, 25, 5000);
  PDESemigroup S(make(Potential::constant(0.3), Kernel::uniform_band(0.6, 1.0)), g);
  auto one = GridFunction::constant(g, 1.0);
  std::vector<double> v = one.values;
  double t = 0;
  for (int k = 1; k <= 1000; ++k) {
    S.dual_steps(v, 1, 1);
    t += S.dt();
    if (k % 100 == 0) {
      double rel = std::abs(v[g.nearest(-12.0)] / std::exp(1.5 * t) - 1.0);
      EXPECT_LE(rel, 5 * S.dt() * t);
    }
  }
}

TEST(Positivity, TransportImage) {
  Grid1D g(-8, 8, 2000);
  PDESemigroup S(make(Potential::quadratic(1, 1), Kernel::none()), g);
  const double tau = 1.0;
  auto r = check_positivity_lemma(S, 0.0, 1.0, -1.0 + 0.01, 0.0 - 0.01, tau);
  EXPECT_TRUE(r.pass);
  EXPECT_GE(r.eta, std::exp(tau * (1 - 1.0 * 1.0)) * 0.99);
}

TEST(Positivity, CompliantWideWindow) {
  Grid1D g(-8, 8, 2000);
  PDESemigroup S(compliant(), g);
  auto r = check_positivity_lemma(S, 0.0, 1.0, -3.0, 3.0, 1.0);
  EXPECT_TRUE(r.pass);
  EXPECT_GT(r.eta, 0.0);
}

TEST(Positivity, DiracPairOffLattice) {
  Grid1D g(-8, 8, 1600);  // dx = 0.01 divides 1
  PDESemigroup S(make(Potential::quadratic(1, 1), Kernel::dirac_pair()), g);
  // reachable from y: y + 1 + Z; window [0.5, 0.6] + 1 + Z misses [0, 0.3]
  auto r = check_positivity_lemma(S, 0.0, 0.3, 0.5, 0.6, 1.0);
  EXPECT_FALSE(r.pass);
  EXPECT_EQ(r.eta, 0.0);
  EXPECT_THROW(check_positivity_lemma(S, 0, 1, -9, 0, 1.0), InputError);
}

TEST(Propagator, OracleInterface) {
  Grid1D g(-8, 8, 400);
  PDESemigroup S(compliant(), g);
  auto P = S.propagator(0.4);
  EXPECT_NEAR(P.time(), 0.4, 1e-12);
  std::vector<double> f(g.size(), 1.0);
  auto r = P.right(f);
  EXPECT_EQ(r, S.evolve(GridFunction(g, f), 0.4).values);
}
