#include <gtest/gtest.h>

#include <cmath>

#include "perron/lyapunov.hpp"

using namespace perron;

namespace {

ModelSpec make(Potential a, Kernel Q) {
  ModelSpec m;
  m.a = std::move(a);
  m.Q = std::move(Q);
  return m;
}
ModelSpec compliant() { return make(Potential::quadratic(1.0, 1.0), Kernel::uniform_band(1.0, 1.0)); }
const Grid1D& desk_grid() {
  static Grid1D g = Grid1D::symmetric(8.0, 2000);
  return g;
}
const LyapunovConstruction& desk() {
  static LyapunovConstruction C = build_construction(compliant(), desk_grid(), 0.4);
  return C;
}
const PDESemigroup& desk_semigroup() {
  static PDESemigroup S(compliant(), desk_grid());
  return S;
}

bool all_pass(const std::vector<CheckReport>& rs) {
  for (const auto& r : rs)
    if (!r.pass) return false;
  return true;
}

}  // namespace

TEST(Psi0, Values) {
  EXPECT_EQ(psi0_at(0.0, 3.0), 1.0);
  EXPECT_EQ(psi0_at(3.0, 3.0), 0.0);
  EXPECT_EQ(psi0_at(-3.0, 3.0), 0.0);
  EXPECT_EQ(psi0_at(5.0, 3.0), 0.0);
  EXPECT_NEAR(psi0_at(3.0 / std::sqrt(2.0), 3.0), 0.25, 1e-15);
  for (double x : {0.1, 0.7, 1.9, 2.99}) EXPECT_EQ(psi0_at(x, 3.0), psi0_at(-x, 3.0));
}

TEST(Psi0, DerivativeAndIntegralMatchFiniteDifferences) {
  const double x0 = 2.5, h = 1e-6;
  for (double x : {-2.0, -0.3, 0.0, 1.1, 2.4}) {
    double fd = (psi0_at(x + h, x0) - psi0_at(x - h, x0)) / (2 * h);
    EXPECT_NEAR(psi0_derivative(x, x0), fd, 1e-7);
  }
  // integral against a fine midpoint sum
  double s = 0.0;
  const int N = 200000;
  for (int k = 0; k < N; ++k) s += psi0_at(-1.0 + (k + 0.5) * 4.0 / N, x0) * 4.0 / N;
  EXPECT_NEAR(psi0_integral(-1.0, 3.0, x0), s, 1e-9);
  EXPECT_NEAR(psi0_integral(-x0, x0, x0), 16.0 * x0 / 15.0, 1e-14);
}

TEST(BandIdentity, ClosedFormAndQuadrature) {
  EXPECT_EQ(band_identity_closed(1.0), 8.0 / 15.0);
  EXPECT_EQ(band_identity_bound(1.0), 8.0 / 15.0);
  EXPECT_NEAR(band_identity_quadrature(1.0), 8.0 / 15.0, 1e-12);
  EXPECT_NEAR(band_identity_closed(0.5), 53.0 / 480.0, 1e-16);
  EXPECT_NEAR(band_identity_quadrature(0.5), 53.0 / 480.0, 1e-12);
  EXPECT_GE(band_identity_closed(0.5), 1.0 / 15.0);
  for (double r = 0.0; r <= 1.0; r += 0.01) EXPECT_GE(band_identity_closed(r), band_identity_bound(r) - 1e-16);
}

TEST(ClosedForm, Beta0Example) {
  // kappa0 = 1, eps = 1, a = -x^2, x0 = 2: -30 - 4, up to the grid-cell infimum
  auto m = make(Potential::quadratic(0.0, 1.0), Kernel::uniform_band(1.0, 1.0));
  Grid1D g = Grid1D::symmetric(8.0, 2000);
  EXPECT_NEAR(detail::closed_beta0(m, g, 2.0), -34.0, 2 * g.dx() * 2.0);
  EXPECT_GT(detail::closed_beta0(m, g, 2.0), -34.0);
}

TEST(ClosedForm, Theta0Example) {
  // abar = 1, Qbar = 2 * 0.5 * 1 = 1; the steeper potential keeps the construction admissible
  auto m = make(Potential::quadratic(1.0, 4.0), Kernel::uniform_band(0.5, 1.0));
  auto C = build_construction(m, desk_grid(), 0.4);
  EXPECT_DOUBLE_EQ(C.theta0_closed, 8.0);
  EXPECT_DOUBLE_EQ(C.zeta, std::exp(0.8));
  EXPECT_DOUBLE_EQ(C.zeta_closed, std::exp(-0.8));
}

TEST(Construction, CompliantInvariants) {
  const auto& C = desk();
  const auto& g = desk_grid();
  EXPECT_GE(C.x0, 1.0);
  EXPECT_LT(C.r0, C.x0);
  EXPECT_DOUBLE_EQ(C.alpha0, C.beta0 - 1.0);
  // grid-certified beta0 is never below the closed-form lower bound
  EXPECT_GE(C.beta0, C.beta0_closed);
  // with the closed-form beta0 the x0/r0 loop runs off the grid
  EXPECT_FALSE(C.closed_fixed_point_converged);
  EXPECT_GT(C.R, C.theta / (std::exp(C.alpha0 * C.tau) * std::expm1(C.tau)));
  EXPECT_LT(C.log_alpha, C.log_beta);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_GT(C.psi[i], 0.0);
    EXPECT_LE(C.psi[i], 1.0);
    EXPECT_EQ(C.psi0[i], psi0_at(g.center(i), C.x0));
  }
  ASSERT_FALSE(C.K.empty());
  EXPECT_TRUE(C.K_contiguous);
  EXPECT_GT(C.K.front(), 0u);
  EXPECT_LT(C.K.back(), g.size() - 1);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(C.in_K(i), C.R * C.psi[i] >= 1.0);
}

TEST(Construction, RejectsKernelWithoutBand) {
  auto m = make(Potential::quadratic(1.0, 1.0), Kernel::dirac_pair());
  EXPECT_THROW(build_construction(m, desk_grid(), 0.4), InputError);
  EXPECT_THROW(build_construction(compliant(), desk_grid(), 0.0), InputError);
}

TEST(Construction, NonConfiningRejected) {
  auto m = make(Potential::constant(1.0), Kernel::uniform_band(1.0, 1.0));
  EXPECT_THROW(build_construction(m, desk_grid(), 0.4), InputError);
}

TEST(GeneratorDrift, CompliantPasses) {
  auto rs = check_generator_drift(compliant(), desk());
  ASSERT_EQ(rs.size(), 3u);
  for (const auto& r : rs) EXPECT_TRUE(r.pass) << r.condition << " margin " << r.margin;
  // the independent quadrature disagrees with the grid one only at rounding/first-order level
  EXPECT_GT(rs[0].margin, -1e-4);
}

TEST(GeneratorDrift, DetectsWrongBeta0) {
  auto C = desk();
  C.beta0 += 5.0;
  auto rs = check_generator_drift(compliant(), C);
  EXPECT_FALSE(rs[0].pass);
  EXPECT_GE(rs[0].worst_cell, 0);
}

TEST(SemigroupDrift, CompliantPasses) {
  auto rs = check_semigroup_drift(desk_semigroup(), desk());
  EXPECT_TRUE(all_pass(rs));
  for (const auto& r : rs) {
    EXPECT_TRUE(r.pass) << r.condition << " margin " << r.margin << " at " << r.worst_x;
    if (r.condition == "A2") {
      EXPECT_EQ(r.constants.at("forms_agree"), 1.0);
    }
    if (r.condition == "A0_upper") {
      EXPECT_LE(r.constants.at("sup_MsV"), std::exp(3.0 * 0.4) * (1 + 1e-3));
    }
  }
}

TEST(SemigroupDrift, LargerRKeepsA1) {
  auto C = desk();
  set_R(C, 4.0 * C.R);
  EXPECT_LT(C.alpha, desk().alpha);
  EXPECT_GT(C.alpha, std::exp(C.alpha0 * C.tau));
  EXPECT_GE(C.K.size(), desk().K.size());
  auto rs = check_semigroup_drift(desk_semigroup(), C);
  EXPECT_TRUE(rs[2].pass);
  EXPECT_EQ(rs[2].condition, "A1");
}

TEST(SemigroupDrift, ShrunkenThetaFailsA1) {
  auto C = desk();
  C.theta *= 1e-6;
  auto rs = check_semigroup_drift(desk_semigroup(), C);
  EXPECT_FALSE(rs[2].pass);
}

TEST(Step3, HoldsToTwenty) {
  const auto& C = desk();
  auto r = check_step3_bound(desk_semigroup(), C, 20);
  EXPECT_TRUE(r.pass) << r.margin;
  // theta / (beta - alpha) equals R for the default choice of R
  EXPECT_NEAR(r.constants.at("theta_over_gap") / C.R, 1.0, 1e-9);
  EXPECT_LE(r.constants.at("tail_ratio_on_K"), 1.01);
}
