#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "perron/finite_semigroup.hpp"

using namespace perron;

namespace {

FiniteGenerator two_state(double q01, double q10, double a0 = 0, double a1 = 0) {
  Eigen::MatrixXd Q(2, 2);
  Q << 0, q01, q10, 0;
  Eigen::VectorXd a(2);
  a << a0, a1;
  return FiniteGenerator(Q, a);
}

FiniteGenerator random_gen(std::mt19937_64& rng, int n, bool potential) {
  std::uniform_real_distribution<double> U(0.0, 2.0), A(-1.0, 0.5);
  Eigen::MatrixXd Q(n, n);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) Q(i, j) = i == j ? 0.0 : U(rng);
    if (potential) a(i) = A(rng);
  }
  return FiniteGenerator(Q, a);
}

FiniteGenerator three_state_distinct() {
  Eigen::MatrixXd Q(3, 3);
  Q << 0, 1.0, 2.0, 0.5, 0, 1.5, 3.0, 0.7, 0;
  return FiniteGenerator(Q);
}

// stationary law from the null space of G^T, normalized
Eigen::VectorXd stationary(const FiniteGenerator& g) {
  Eigen::MatrixXd A = g.full().transpose();
  const auto n = A.rows();
  A.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;
  return A.fullPivLu().solve(b);
}

// CDF of the stored conditional law, piecewise linear between nodes
double law_cdf(const HittingLaw& L, double s) {
  const auto& t = L.sigma;
  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < t.size(); ++j) {
    double a = t.nodes[j], b = t.nodes[j + 1];
    double fa = t.density[j], fb = t.density[j + 1];
    if (s >= b) {
      acc += 0.5 * (fa + fb) * (b - a);
    } else {
      double u = s - a, fs = fa + (fb - fa) * u / (b - a);
      acc += 0.5 * (fa + fs) * u;
      break;
    }
  }
  return acc;
}

}  // namespace

TEST(MatrixExponential, IdentityAtZero) {
  std::mt19937_64 rng(1);
  auto g = random_gen(rng, 4, true);
  auto M = matrix_exponential(g, 0.0);
  EXPECT_TRUE(M.m.isApprox(Eigen::MatrixXd::Identity(4, 4)));
  EXPECT_THROW(matrix_exponential(g, -1.0), InputError);
}

TEST(MatrixExponential, TwoStateClosedForm) {
  auto g = two_state(1, 1);
  for (double t : {0.01, 0.3, 1.0, 4.0, 10.0}) {
    auto M = matrix_exponential(g, t).m;
    double e = std::exp(-2 * t);
    EXPECT_NEAR(M(0, 0), (1 + e) / 2, 1e-14);
    EXPECT_NEAR(M(0, 1), (1 - e) / 2, 1e-14);
    EXPECT_NEAR(M(1, 1), (1 + e) / 2, 1e-14);
    EXPECT_NEAR(M(1, 0), (1 - e) / 2, 1e-14);
  }
}

TEST(MatrixExponential, ScalarPotentialFactorsOut) {
  std::mt19937_64 rng(2);
  auto g = random_gen(rng, 5, false);
  Eigen::VectorXd a = Eigen::VectorXd::Constant(5, -0.7);
  FiniteGenerator ga(g.off_diag, a);
  for (double t : {0.5, 2.0, 7.0}) {
    Eigen::MatrixXd lhs = matrix_exponential(ga, t).m;
    Eigen::MatrixXd rhs = std::exp(-0.7 * t) * matrix_exponential(g, t).m;
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(MatrixExponential, PositivityAndConservation) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    auto g = random_gen(rng, 6, k % 2 == 1);
    for (double t : {0.1, 1.0, 10.0}) {
      auto M = matrix_exponential(g, t).m;
      EXPECT_GE(M.minCoeff(), 0.0);
      if (g.conservative()) {
        EXPECT_LT((M.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
      }
    }
  }
}

TEST(MatrixExponential, SemigroupLaw) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> T(0.0, 10.0);
  auto g = random_gen(rng, 5, true);
  for (int k = 0; k < 50; ++k) {
    if (k % 10 == 0) g = random_gen(rng, 5, true);
    double s = T(rng), t = T(rng);
    Eigen::MatrixXd lhs = matrix_exponential(g, s + t).m;
    Eigen::MatrixXd rhs = matrix_exponential(g, s).m * matrix_exponential(g, t).m;
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-10) << "s=" << s << " t=" << t;
  }
}

TEST(MatrixExponential, AgreesWithUniformization) {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 10; ++k) {
    auto g = random_gen(rng, 7, false);
    for (double t : {0.2, 3.0, 9.0}) {
      Eigen::MatrixXd a = matrix_exponential(g, t).m, b = uniformization(g, t).m;
      EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(MatrixExponential, MassBounds) {
  std::mt19937_64 rng(6);
  for (int k = 0; k < 10; ++k) {
    auto g = random_gen(rng, 5, true);
    double amin = g.diag_extra.minCoeff(), amax = g.diag_extra.maxCoeff();
    double qmax = g.exit_rates().maxCoeff();
    for (double s : {0.3, 1.0, 5.0}) {
      Eigen::VectorXd m1 = matrix_exponential(g, s).m.rowwise().sum();
      EXPECT_GE(m1.minCoeff(), std::exp(s * amin) * (1 - 1e-12));
      EXPECT_LE(m1.maxCoeff(), std::exp(s * (amax + qmax)) * (1 + 1e-12));
    }
  }
}

TEST(HittingLaw, TwoStateExponential) {
  const double q = 1.7, tau = 1.3;
  auto L = hitting_law(two_state(q, 0.4), 0, 1, tau, 257);
  EXPECT_TRUE(L.reachable);
  EXPECT_NEAR(L.p, 1 - std::exp(-q * tau), 1e-13);
  for (std::size_t j = 0; j < L.sigma.size(); ++j)
    EXPECT_NEAR(L.raw_density[j], q * std::exp(-q * L.sigma.nodes[j]), 1e-12);
  EXPECT_NEAR(L.sigma.mass(), 1.0, 1e-12);
}

TEST(HittingLaw, FirstReturnMatchesMonteCarlo) {
  const double q = 2.0, tau = 1.5;
  auto L = hitting_law(two_state(q, q), 0, 0, tau, 513);
  // first return = Exp(q) + Exp(q)
  EXPECT_NEAR(L.p, 1 - std::exp(-q * tau) * (1 + q * tau), 1e-12);
  EXPECT_NEAR(L.raw_density.front(), 0.0, 1e-14);

  std::mt19937_64 rng(20240611);
  std::exponential_distribution<double> E(q);
  std::vector<double> samples;
  samples.reserve(1000000);
  for (int i = 0; i < 1000000; ++i) {
    double T = E(rng) + E(rng);
    if (T <= tau) samples.push_back(T);
  }
  std::sort(samples.begin(), samples.end());
  double ks = 0.0;
  const double n = static_cast<double>(samples.size());
  for (std::size_t i = 0; i < samples.size(); i += 97) {
    double F = law_cdf(L, samples[i]);
    ks = std::max({ks, std::abs(F - i / n), std::abs(F - (i + 1) / n)});
  }
  EXPECT_LT(ks, 0.01);
}

TEST(HittingLaw, CycleSuccessorIsTruncatedExp) {
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(3, 3);
  Q(0, 1) = Q(1, 2) = Q(2, 0) = 1.0;
  const double tau = 2.0;
  auto L = hitting_law(FiniteGenerator(Q), 0, 1, tau, 401);
  EXPECT_NEAR(L.p, 1 - std::exp(-tau), 1e-13);
  for (std::size_t j = 0; j < L.sigma.size(); j += 40)
    EXPECT_NEAR(L.raw_density[j], std::exp(-L.sigma.nodes[j]), 1e-12);
}

TEST(HittingLaw, RejectsNonConservative) {
  EXPECT_THROW(hitting_law(two_state(1, 1, 0, -1), 0, 1, 1.0), InputError);
}

TEST(VerifyH1, TwoStateSymmetricPasses) {
  auto R = verify_h1(two_state(1, 1), 1.0, 256);
  EXPECT_TRUE(R.pass) << R.verdict;
  EXPECT_GT(R.constants.c, 0.0);
  EXPECT_NEAR(R.constants.C, 1.0, 1e-12);
}

TEST(VerifyH1, SingleState) {
  FiniteGenerator g(Eigen::MatrixXd::Zero(1, 1));
  auto R = verify_h1(g, 1.0, 16);
  EXPECT_TRUE(R.pass);
  EXPECT_EQ(R.constants.c, 1.0);
}

TEST(VerifyH1, UnreachableTargetFails) {
  Eigen::MatrixXd Q(3, 3);
  Q << 0, 1, 0, 1, 0, 0, 1, 1, 0;  // nothing enters state 2
  auto R = verify_h1(FiniteGenerator(Q), 1.0, 64);
  EXPECT_FALSE(R.pass);
  EXPECT_EQ(R.fail_y, 2);
  EXPECT_EQ(R.laws[R.fail_x][2].p, 0.0);
  EXPECT_FALSE(R.laws[R.fail_x][2].reachable);
}

// re-assert the certified inequality from stored laws with fresh exponentials
TEST(VerifyH1, InequalityReassertable) {
  auto g = three_state_distinct();
  const double tau = 0.8;
  const std::size_t m = 129;
  auto R = verify_h1(g, tau, m);
  ASSERT_TRUE(R.pass) << R.verdict;
  auto Mt = matrix_exponential(g, tau).m;
  for (std::size_t x = 0; x < 3; ++x)
    for (std::size_t y = 0; y < 3; ++y) {
      const auto& L = R.laws[x][y];
      Eigen::RowVectorXd rhs = Eigen::RowVectorXd::Zero(3);
      for (std::size_t j = 0; j < m; ++j)
        rhs += L.sigma.weights[j] * matrix_exponential(g, tau - L.sigma.nodes[j]).m.row(y);
      rhs *= R.constants.c;
      for (int z = 0; z < 3; ++z) EXPECT_GE(Mt(x, z), rhs(z) - R.max_tol);
    }
}

TEST(VerifyH2, IdenticalLawsMarginTwo) {
  auto R = verify_h1(two_state(1, 1), 1.0, 64);
  auto laws = R.laws;
  for (auto& row : laws)
    for (auto& L : row) L = laws[0][0];
  EXPECT_DOUBLE_EQ(verify_h2(laws).margin, 2.0);
}

TEST(VerifyH2, ThreeStateDistinctRatesPositive) {
  auto R = verify_h1(three_state_distinct(), 1.0, 256);
  ASSERT_TRUE(R.pass);
  auto H = verify_h2(R.laws);
  EXPECT_TRUE(H.pass);
  EXPECT_GT(H.margin, 0.0);
}

// On the N-cycle the crossing time is Erlang(d, N), d = (y - x) mod N (N if x = y),
// conditioned on <= tau. TV computed from the closed form on a fine grid.
TEST(VerifyH2, RotationChainMatchesErlangOracle) {
  const std::size_t N = 12;
  const double tau = 1.5;
  auto R = verify_h1(rotation_chain(N), tau, 513);
  auto H = verify_h2(R.laws);

  auto erlang = [&](int k, double s) {
    return std::exp(k * std::log(double(N)) + (k - 1) * std::log(s) - N * s - std::lgamma(k));
  };
  const int fine = 20000;
  auto law = [&](int k) {
    std::vector<double> w(fine + 1);
    double z = 0;
    for (int j = 0; j <= fine; ++j) {
      double s = tau * j / fine;
      w[j] = (j == 0 ? (k == 1 ? double(N) : 0.0) : erlang(k, s)) * ((j == 0 || j == fine) ? 0.5 : 1);
      z += w[j];
    }
    for (auto& v : w) v /= z;
    return w;
  };
  std::vector<std::vector<double>> L(N + 1);
  for (std::size_t k = 1; k <= N; ++k) L[k] = law(int(k));
  double sup = 0;
  for (std::size_t x = 0; x < N; ++x)
    for (std::size_t xp = x + 1; xp < N; ++xp) {
      double inf = 2;
      for (std::size_t y = 0; y < N; ++y) {
        std::size_t d = (y + N - x) % N, dp = (y + N - xp) % N;
        if (d == 0) d = N;
        if (dp == 0) dp = N;
        double tv = 0;
        for (int j = 0; j <= fine; ++j) tv += std::abs(L[d][j] - L[dp][j]);
        inf = std::min(inf, tv);
      }
      sup = std::max(sup, inf);
    }
  EXPECT_NEAR(H.margin, 2 - sup, 2e-3);
}

TEST(PerronFinite, ConservativeChain) {
  auto g = three_state_distinct();
  auto E = perron_triplet_finite(g, 1.0);
  EXPECT_NEAR(E.lambda, 0.0, 1e-10);
  for (double v : E.h) EXPECT_NEAR(v, 1.0, 1e-10);
  Eigen::VectorXd pi = stationary(g);
  double tv = 0;
  for (int i = 0; i < 3; ++i) tv += std::abs(E.gamma[i] - pi(i));
  EXPECT_LT(tv, 1e-12);
}

TEST(PerronFinite, TwoStateCharacteristicRoot) {
  auto E = perron_triplet_finite(two_state(1, 1, 0, -1), 1.0);
  EXPECT_NEAR(E.lambda, (-3.0 + std::sqrt(5.0)) / 2.0, 1e-10);
  EXPECT_LT(E.res_h, 1e-10);
  EXPECT_LT(E.res_gamma, 1e-10);
  EXPECT_NEAR(E.lambda_left, E.lambda, 1e-10);
  EXPECT_LT(E.normalization_gamma, 1e-10);
  EXPECT_LT(E.normalization_h, 1e-10);
}

TEST(PerronFinite, RandomGeneratorsResiduals) {
  std::mt19937_64 rng(8);
  for (int k = 0; k < 10; ++k) {
    auto g = random_gen(rng, 5, true);
    auto E = perron_triplet_finite(g, 1.0);
    // dominant eigenvalue of G from Eigen's eigen-solver as the oracle
    Eigen::EigenSolver<Eigen::MatrixXd> es(g.full());
    double lmax = es.eigenvalues().real().maxCoeff();
    EXPECT_NEAR(E.lambda, lmax, 1e-10);
    EXPECT_LT(E.res_h, 1e-10);
    EXPECT_LT(E.res_gamma, 1e-10);
    for (double v : E.h) EXPECT_GT(v, 0.0);
  }
}

TEST(PerronFinite, NearDeterministicTwoCycleConverges) {
  auto E = perron_triplet_finite(two_state(40, 40, 0.2, -0.3), 1.0);
  EXPECT_TRUE(E.converged);
}
