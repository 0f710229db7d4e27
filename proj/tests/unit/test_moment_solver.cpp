#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace bilictrl;

namespace {

std::vector<double> schrodinger_family(int K) {
  return frequency_set(FrequencyFamily::SchrodingerDirichlet, make_basis(Geometry::IntervalDirichlet, K + 1), K);
}

std::vector<double> wave_family(int K) {
  return frequency_set(FrequencyFamily::Wave, make_basis(Geometry::IntervalNeumann, K + 1), K);
}

std::vector<cplx> random_targets(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<cplx> t;
  for (std::size_t k = 0; k < n; ++k) {
    const double re = d(rng), im = d(rng);
    t.push_back(k == 0 ? cplx(re, 0.0) : cplx(re, im));
  }
  return t;
}

/// Residuals recomputed by Simpson on a grid four times finer than needed.
double independent_residual(const MomentSolution& s) {
  const auto& p = s.problem;
  const double wmax = p.frequencies.back();
  const int n = std::max(40000, static_cast<int>(4 * 40 * wmax * p.T));
  const auto f = [&](double t) { return p.derivative_form ? s.expansion.derivative(t) : s.expansion.value(t); };
  double worst = 0.0;
  for (std::size_t k = 0; k < p.frequencies.size(); ++k)
    worst = std::max(worst, std::abs(oracle::moment(f, p.frequencies[k], p.T, n) - p.targets[k]));
  if (p.linear_moment) {
    const double tm = oracle::simpson([&](double t) { return t * f(t); }, 0.0, p.T, n);
    worst = std::max(worst, std::abs(tm - *p.linear_moment));
  }
  return worst;
}

}  // namespace

TEST(GramMatrix, DiagonalHermitianAndTwoFrequencyEntry) {
  const double T = 1.3, w = 4.2;
  const Eigen::MatrixXcd G = gram_matrix({0.0, w}, T);
  ASSERT_EQ(G.rows(), 3);  // -ω, 0, ω
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(std::abs(G(i, i) - T), 0.0, 1e-15);
  EXPECT_LT((G - G.adjoint()).norm(), 1e-15);
  const std::vector<double> ext = symmetric_extension({0.0, w});
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      const double d = ext[a] - ext[b];
      const cplx q = oracle::simpson([&](double t) { return std::polar(1.0, d * t); }, 0.0, T, 20000);
      EXPECT_LT(std::abs(G(a, b) - q), 1e-12);
      if (d != 0.0) EXPECT_LT(std::abs(G(a, b) - (std::polar(1.0, d * T) - 1.0) / cplx(0.0, d)), 1e-14);
    }
}

TEST(GramMatrix, PositiveDefiniteAndRejectsDuplicates) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram_matrix(schrodinger_family(10), 1.0));
  EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
  try {
    gram_matrix({0.0, 1.0, 1.0}, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
  }
}

TEST(InghamBounds, Examples) {
  const InghamBounds one = ingham_bounds_empirical({0.0}, 1.7);
  EXPECT_NEAR(one.c1, 1.7, 1e-14);
  EXPECT_NEAR(one.c2, 1.7, 1e-14);
  EXPECT_GT(ingham_bounds_empirical(schrodinger_family(10), 1.0).c1, 0.0);
  EXPECT_LT(ingham_bounds_empirical(wave_family(20), 1.5).c1, 1e-6);
  EXPECT_GT(ingham_bounds_empirical(wave_family(20), 2.5).c1, 1e-2);
  // collapse deepens with K below the gap time
  EXPECT_LT(ingham_bounds_empirical(wave_family(20), 1.5).c1, ingham_bounds_empirical(wave_family(5), 1.5).c1);
}

TEST(InghamBounds, LowerBoundNondecreasingInT) {
  const std::vector<double> w = wave_family(12);
  double prev = 0.0;
  for (double T = 0.5; T <= 4.0; T += 0.25) {
    const double c1 = ingham_bounds_empirical(w, T).c1;
    EXPECT_GE(c1, prev - 1e-12) << T;
    prev = c1;
  }
}

TEST(SolveMoments, ZeroTargetsGiveZeroControl) {
  MomentProblem p;
  p.frequencies = schrodinger_family(5);
  p.targets.assign(6, 0.0);
  const MomentSolution s = solve_moments(p);
  for (double v : s.control.samples) EXPECT_EQ(v, 0.0);
  for (const cplx& c : s.coefficients) EXPECT_EQ(c, cplx(0.0));
}

TEST(SolveMoments, SingleFrequencyMatchesExplicitGramInverse) {
  MomentProblem p;
  p.T = 1.0;
  const double w = 3.0 * pi * pi;
  p.frequencies = {0.0, w};
  p.targets = {0.0, 1.0};
  const MomentSolution s = solve_moments(p);
  EXPECT_LT(independent_residual(s), 1e-10);
  // Oracle: v = Σ_b c_b e^{-iΩ_b t} over {-w, 0, w}; constraint rows are
  // ∫ v e^{iΩ_a t} = Σ_b c_b G̃_ab with G̃_ab = ∫ e^{i(Ω_a - Ω_b)t}.
  const double om[3] = {-w, 0.0, w};
  Eigen::Matrix3cd G;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      G(a, b) = oracle::simpson([&](double t) { return std::polar(1.0, (om[a] - om[b]) * t); }, 0.0, 1.0, 200000);
  const Eigen::Vector3cd d(1.0, 0.0, 1.0);  // (conj d_1, d_0, d_1)
  const Eigen::Vector3cd c = G.fullPivLu().solve(d);
  const double norm2 = (c.adjoint() * G * c)(0, 0).real();
  const double vnorm = std::sqrt(oracle::simpson([&](double t) { return std::pow(s.expansion.value(t), 2); }, 0.0,
                                                 1.0, 200000));
  EXPECT_NEAR(vnorm, std::sqrt(norm2), 1e-10);
}

TEST(SolveMoments, RealControlAndExactnessOnRandomProblems) {
  for (unsigned seed : {1u, 2u, 3u}) {
    MomentProblem p;
    p.frequencies = schrodinger_family(10);
    p.targets = random_targets(11, seed);
    const MomentSolution s = solve_moments(p);
    EXPECT_LT(s.imag_leak, 1e-12);
    EXPECT_LT(s.max_residual(), 1e-8);
    EXPECT_LT(independent_residual(s), 1e-8);
    EXPECT_GE(s.gram_condition, 1.0);
    EXPECT_NEAR(s.evaluation_bound, std::sqrt(s.ingham_c2), 1e-14);
  }
}

TEST(SolveMoments, LinearMomentConstraint) {
  MomentProblem p;
  p.T = 2.5;
  p.frequencies = wave_family(8);
  p.targets = random_targets(9, 11);
  p.linear_moment = 0.37;
  const MomentSolution s = solve_moments(p);
  EXPECT_LT(independent_residual(s), 1e-8);
  EXPECT_NEAR(s.control.poly_moment(1), 0.37, 1e-10);
}

TEST(SolveMoments, MinimalNormAgainstOrthogonalPerturbation) {
  MomentProblem p;
  p.frequencies = schrodinger_family(6);
  p.targets = random_targets(7, 5);
  const MomentSolution s = solve_moments(p);
  // Random trigonometric perturbation, projected off the constraint family.
  const double T = p.T;
  const int n = 40000;
  const auto base = [&](double t) { return std::sin(13.0 * t) + t * t; };
  const std::vector<double> ext = symmetric_extension(p.frequencies);
  const int m = static_cast<int>(ext.size());
  Eigen::MatrixXcd G(m, m);
  Eigen::VectorXcd r(m);
  for (int a = 0; a < m; ++a) {
    r[a] = oracle::moment(base, ext[a], T, n);
    for (int b = 0; b < m; ++b)
      G(a, b) = oracle::simpson([&](double t) { return std::polar(1.0, (ext[a] - ext[b]) * t); }, 0.0, T, n);
  }
  const Eigen::VectorXcd c = G.fullPivLu().solve(r);
  const auto perturb = [&](double t) {
    cplx v = base(t);
    for (std::size_t b = 0; b < ext.size(); ++b) v -= c[b] * std::polar(1.0, -ext[b] * t);
    return v.real();
  };
  for (std::size_t a = 0; a < ext.size(); ++a) ASSERT_LT(std::abs(oracle::moment(perturb, ext[a], T, n)), 1e-8);
  const auto sq = [&](double eps) {
    return oracle::simpson([&](double t) { return std::pow(s.expansion.value(t) + eps * perturb(t), 2); }, 0.0, T,
                           n);
  };
  EXPECT_GT(sq(0.1), sq(0.0));
  EXPECT_GT(sq(-0.1), sq(0.0));
}

TEST(SolveMoments, DerivativeFormVanishesAtEndpoints) {
  MomentProblem p;
  p.frequencies = schrodinger_family(8);
  p.targets = random_targets(9, 21);
  p.targets[0] = 0.0;  // ∫ v̇ = 0
  p.derivative_form = true;
  p.linear_moment = -0.2;
  const MomentSolution s = solve_moments(p);
  EXPECT_LT(std::abs(s.expansion.value(0.0)), 1e-12);
  EXPECT_LT(std::abs(s.expansion.value(p.T)), 1e-12);
  EXPECT_LT(independent_residual(s), 1e-8);
}

TEST(SolveMoments, IllConditionedFamilyRejected) {
  MomentProblem p;
  p.T = 1.0;
  p.frequencies = wave_family(20);
  p.targets = random_targets(21, 4);
  try {
    solve_moments(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IllPosed);
  }
}

TEST(MomentProblem, Validation) {
  MomentProblem p;
  p.frequencies = {0.0, 2.0, 1.0};
  p.targets = {0.0, 0.0, 0.0};
  EXPECT_THROW(p.validate(), Error);
  p.frequencies = {0.0, 1.0, 2.0};
  p.targets = {cplx(0.0, 1.0), 0.0, 0.0};
  EXPECT_THROW(p.validate(), Error);
  p.targets = {0.0, 0.0};
  EXPECT_THROW(p.validate(), Error);
  p.frequencies = {0.5};
  p.targets = {0.0};
  EXPECT_THROW(p.validate(), Error);
}
