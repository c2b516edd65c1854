#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "bosehub/eigensolver.hpp"
#include "bosehub/hamil.hpp"

using namespace bosehub;

namespace {

ModelParams params(int L, int N, double U, double J, std::vector<double> omega, Boundary b = Boundary::open) {
  ModelParams p;
  p.L = L;
  p.N = N;
  p.U = U;
  p.J = J;
  p.boundary = b;
  p.omega = std::move(omega);
  return p;
}

double dot(const std::vector<double>& a, const Eigen::VectorXd& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[Eigen::Index(i)];
  return s;
}

double residual(const SparseOperator& H, const EigenResult& r) {
  auto Hv = H.apply(r.vector);
  double s = 0;
  for (std::size_t i = 0; i < Hv.size(); ++i) s += std::pow(Hv[i] - r.energy * r.vector[i], 2);
  return std::sqrt(s);
}

}  // namespace

TEST(GroundState, TwoByTwo) {
  SectorBasis b(2, 1);
  auto H = build_hamiltonian(params(2, 1, 1.0, 1.0, {0, 0}), b);
  auto r = ground_state(H);
  EXPECT_NEAR(r.energy, -1.0, 1e-12);
  EXPECT_NEAR(std::abs(r.vector[0]), 1 / std::sqrt(2.0), 1e-10);
  EXPECT_NEAR(r.vector[0], -r.vector[1], 1e-10);
  EXPECT_LE(r.residual, 1e-10);
}

TEST(GroundState, SingleSite) {
  SectorBasis b(1, 4);
  auto r = ground_state(build_hamiltonian(params(1, 4, 1.0, 0.0, {0}), b));
  EXPECT_DOUBLE_EQ(r.energy, -6.0);
  ASSERT_EQ(r.vector.size(), 1u);
  EXPECT_DOUBLE_EQ(r.vector[0], 1.0);
}

TEST(GroundState, PhaseConvention) {
  SectorBasis b(5, 3);
  auto H = build_hamiltonian(params(5, 3, 1.0, 0.3, sample_disorder(5, 0.4, 9)), b);
  auto r = ground_state(H);
  double big = 0;
  for (double x : r.vector)
    if (std::abs(x) > std::abs(big)) big = x;
  EXPECT_GT(big, 0);
}

TEST(GroundState, Deterministic) {
  SectorBasis b(6, 3);
  auto H = build_hamiltonian(params(6, 3, 1.0, 0.5, sample_disorder(6, 0.2, 4)), b);
  auto a = ground_state(H), c = ground_state(H);
  EXPECT_EQ(a.energy, c.energy);
  EXPECT_EQ(a.vector, c.vector);
}

TEST(GroundState, OracleAgreement) {
  std::mt19937_64 rng(2718);
  std::uniform_real_distribution<double> uJ(0.0, 2.0), uD(0.0, 1.5);
  const std::pair<int, int> sizes[] = {{3, 2}, {4, 3}, {5, 2}};
  for (int trial = 0; trial < 50; ++trial) {
    auto [L, N] = sizes[trial % 3];
    const auto bc = trial % 2 ? Boundary::periodic : Boundary::open;
    SectorBasis b(L, N);
    auto H = build_hamiltonian(params(L, N, 1.0, uJ(rng), sample_disorder(L, uD(rng), rng()), bc), b);
    auto r = ground_state(H, {.seed = rng()});
    auto d = dense_spectrum(H, true);
    EXPECT_NEAR(r.energy, d.values[0], 1e-8);
    const double ov = dot(r.vector, d.vectors.col(0));
    EXPECT_GT(ov * ov, 1 - 1e-8) << "trial " << trial;
    EXPECT_LE(residual(H, r), 1e-10);
    EXPECT_NEAR(r.residual, residual(H, r), 1e-12);
  }
}

TEST(GroundState, RitzValuesNeverIncrease) {
  SectorBasis b(8, 4);
  auto H = build_hamiltonian(params(8, 4, 1.0, 0.6, sample_disorder(8, 0.03, 77)), b);
  auto r = ground_state(H, {.tol = 1e-11, .krylov_dim = 12, .keep = 4});
  ASSERT_GE(r.history.size(), 2u);
  for (std::size_t i = 1; i < r.history.size(); ++i) EXPECT_LE(r.history[i], r.history[i - 1] + 1e-12);
  EXPECT_NEAR(r.energy, dense_spectrum(H).values[0], 1e-9);
}

TEST(GroundState, NearDegenerateWRegime) {
  // delta = 0, tau = 0.1, L=6, N=3: tiny gap between the lowest two levels.
  const int L = 6, N = 3;
  const double tau = 0.1;
  SectorBasis b(L, N);
  auto H = build_hamiltonian(params(L, N, 1.0, tau * (N - 1), std::vector<double>(L, 0.0)), b);
  auto r = ground_state(H);
  auto d = dense_spectrum(H, true);
  EXPECT_LE(residual(H, r), 1e-10);
  EXPECT_NEAR(r.energy, d.values[0], 1e-9);
  // Weight inside the numerically degenerate ground space.
  double w = 0;
  for (Eigen::Index k = 0; k < d.values.size() && d.values[k] - d.values[0] < 1e2 * 1e-10; ++k)
    w += std::pow(dot(r.vector, d.vectors.col(k)), 2);
  EXPECT_GT(w, 1 - 1e-8);
}

TEST(GroundState, StartVectorBlindToGroundState) {
  // Two decoupled chains; the start vector lives on the high-energy one, so
  // the Krylov space closes on it and a fresh direction has to be injected.
  const std::size_t nA = 10, nB = 30, n = nA + nB;
  std::vector<std::vector<std::pair<std::size_t, double>>> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool inA = i < nA;
    rows[i].emplace_back(i, inA ? 5.0 : 0.0);
    const std::size_t end = inA ? nA : n;
    if (i + 1 < end) {
      rows[i].emplace_back(i + 1, -1.0);
      rows[i + 1].emplace_back(i, -1.0);
    }
  }
  auto H = SparseOperator::from_rows(n, rows);
  std::vector<double> start(n, 0.0);
  for (std::size_t i = 0; i < nA; ++i) start[i] = 1.0 + 0.1 * double(i);
  auto r = ground_state(H, {.start = start});
  EXPECT_NEAR(r.energy, dense_spectrum(H).values[0], 1e-10);
  EXPECT_NEAR(r.energy, -2 * std::cos(std::numbers::pi / (nB + 1)), 1e-10);
}

TEST(GroundState, ConvergenceErrorCarriesResidual) {
  SectorBasis b(8, 4);
  auto H = build_hamiltonian(params(8, 4, 1.0, 0.4, sample_disorder(8, 0.1, 5)), b);
  try {
    ground_state(H, {.tol = 1e-30, .krylov_dim = 4, .keep = 1, .max_restarts = 2});
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_GT(e.best_residual(), 0);
    EXPECT_TRUE(std::isfinite(e.best_residual()));
  }
  EXPECT_THROW(ground_state(H, {.tol = 0}), std::domain_error);
}

TEST(MostExcited, Examples) {
  SectorBasis b2(2, 1);
  EXPECT_NEAR(most_excited_state(build_hamiltonian(params(2, 1, 1, 1, {0, 0}), b2)).energy, 1.0, 1e-12);

  SectorBasis b(3, 2);
  auto H = build_hamiltonian(params(3, 2, 1.0, 0.4, {0.1, -0.3, 0.2}), b);
  EXPECT_NEAR(most_excited_state(H).energy, dense_spectrum(H).values.maxCoeff(), 1e-9);
}

TEST(MostExcited, RepulsiveDuality) {
  SectorBasis b(4, 3);
  std::vector<double> w{0.2, -0.1, 0.4, -0.3}, mw{-0.2, 0.1, -0.4, 0.3};
  auto top = most_excited_state(build_hamiltonian(params(4, 3, 1.0, 0.3, w), b));
  auto bottom = ground_state(build_hamiltonian(params(4, 3, -1.0, 0.3, mw), b));
  EXPECT_NEAR(top.energy, -bottom.energy, 1e-9);
}

TEST(DenseSpectrum, Examples) {
  auto D = SparseOperator::from_rows(3, {{{0, 1.0}}, {{1, 2.0}}, {{2, 3.0}}});
  auto v = dense_spectrum(D).values;
  EXPECT_DOUBLE_EQ(v[0], 1.0);
  EXPECT_DOUBLE_EQ(v[1], 2.0);
  EXPECT_DOUBLE_EQ(v[2], 3.0);
}

TEST(DenseSpectrum, ThreeByThreeCharacteristicPolynomial) {
  // (2,0),(1,1),(0,2) with U=1, J=0.1, omega=0:
  //   antisymmetric combination of (2,0),(0,2): -1
  //   symmetric block [[-1, 2J], [2J, 0]]: (-1 +- sqrt(1 + 16 J^2)) / 2
  const double J = 0.1;
  SectorBasis b(2, 2);
  auto v = dense_spectrum(build_hamiltonian(params(2, 2, 1.0, J, {0, 0}), b)).values;
  const double r = std::sqrt(1 + 16 * J * J);
  EXPECT_NEAR(v[0], (-1 - r) / 2, 1e-14);
  EXPECT_NEAR(v[1], -1.0, 1e-14);
  EXPECT_NEAR(v[2], (-1 + r) / 2, 1e-14);
  EXPECT_LT(v[0], -1.0);
}

TEST(DenseSpectrum, Cap) {
  SectorBasis b(10, 6);  // 5005 states
  auto H = build_hamiltonian(params(10, 6, 1, 0.1, std::vector<double>(10, 0.0)), b);
  EXPECT_THROW(dense_spectrum(H), CapacityError);
}
