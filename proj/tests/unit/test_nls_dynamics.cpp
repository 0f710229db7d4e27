#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace bilictrl;

namespace {

const BasisSpec kBasis = make_basis(Geometry::IntervalNeumann, 32);

const CouplingMatrix& x2() {
  static const CouplingMatrix B = coupling_matrix(potentials::x_squared(), kBasis);
  return B;
}

NLSState random_tangent(unsigned seed, double scale, const BasisSpec& b = kBasis) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  NLSState s(b);
  for (int k = 0; k < b.N; ++k) s.at(k) = cplx(d(rng), d(rng)) / std::pow(k + 1.0, 4);
  s = nls_tangent_project(s);
  return (scale / s.l2_norm()) * s;
}

SpectralState nls_perturbed_target(const BasisSpec& b, double T, int k, double eps) {
  SpectralState psi = SpectralState::unit(b, 0);
  psi.at(k) += eps;
  psi *= std::polar(1.0 / psi.l2_norm(), -T);
  return psi;
}

}  // namespace

TEST(NLSGroup, ModeZeroDriftsLinearly) {
  const NLSState z = nls_group_apply(NLSState::unit(kBasis, 0), 0.75);
  EXPECT_NEAR(std::abs(z.at(0) - cplx(1.0, -1.5)), 0.0, 1e-15);
  const NLSState y = nls_group_apply(NLSState::unit(kBasis, 0, cplx(0.0, 1.0)), 3.0);
  EXPECT_EQ(y.at(0), cplx(0.0, 1.0));
}

TEST(NLSGroup, ConservedQuadraticFormAndGroupLaw) {
  const NLSState z0 = random_tangent(5, 1.0);
  for (double t : {0.0, 0.3, 1.7, 5.0, 10.0}) {
    const NLSState z = nls_group_apply(z0, t);
    for (int k = 1; k < kBasis.N; ++k) {
      const double l = kBasis.eigenvalue(k);
      const auto q = [&](cplx c) { return (l + 2.0) * std::norm(c.real()) + l * std::norm(c.imag()); };
      EXPECT_NEAR(q(z.at(k)), q(z0.at(k)), 1e-12 * std::max(1.0, q(z0.at(k)))) << t << " " << k;
    }
    const NLSState split = nls_group_apply(nls_group_apply(z0, 0.4 * t), 0.6 * t);
    EXPECT_LT((split - z).l2_norm(), 1e-12);
  }
}

TEST(NLSGroup, SolvesModeEquationAgainstRK4) {
  for (int k : {1, 4}) {
    const double l = kBasis.eigenvalue(k);
    Eigen::VectorXd y0(2);
    y0 << 0.3, -0.2;
    const Eigen::VectorXd y = oracle::rk4(
        [&](double, const Eigen::VectorXd& v) {
          Eigen::VectorXd r(2);
          r << l * v[1], -(l + 2.0) * v[0];
          return r;
        },
        y0, 0.9, 200000);
    const cplx z = NLSModeRotation::make(l, 0.9).apply(cplx(0.3, -0.2));
    EXPECT_NEAR(z.real(), y[0], 1e-10);
    EXPECT_NEAR(z.imag(), y[1], 1e-10);
  }
}

TEST(PropagateNLS, ZeroControlStaysOnStationaryState) {
  const NLSTrajectory tr = propagate_nls(ControlSignal::zero(1.0, 512), x2());
  for (const NLSState& z : tr.states) EXPECT_LT(z.l2_norm(), 1e-12);
  EXPECT_LT(tr.max_norm_drift, 1e-12);
}

TEST(PropagateNLS, PhysicalNormConserved) {
  const ControlSignal u =
      ControlSignal::from_function(1.0, 1024, [](double t) { return 0.1 * std::sin(7.0 * t) + 0.05; });
  const NLSTrajectory tr = propagate_nls(u, x2());
  EXPECT_LT(tr.max_norm_drift, 1e-8);
  for (double n : tr.physical_norm) EXPECT_NEAR(n, 1.0, 1e-8);
  for (std::size_t i = 1; i < tr.times.size(); ++i) EXPECT_GT(tr.times[i], tr.times[i - 1]);
}

TEST(PropagateNLS, DeviationFromLinearizationIsQuadratic) {
  const auto shape = [](double t) { return std::cos(9.0 * t) + 0.3; };
  double prev = 0.0, ratio = 0.0;
  for (double a : {4e-2, 2e-2, 1e-2}) {
    const ControlSignal u = ControlSignal::from_function(1.0, 2048, [&](double t) { return a * shape(t); });
    const NLSState z = propagate_nls(u, x2()).final_state();
    const double dev = (z - propagate_nls_linearized(u, x2())).l2_norm();
    if (prev > 0.0) ratio = prev / dev;
    prev = dev;
  }
  EXPECT_NEAR(ratio, 4.0, 0.4);
}

TEST(PropagateNLS, BudgetExceededIsConfigError) {
  try {
    propagate_nls(ControlSignal::from_function(1.0, 64, [](double) { return 2.0; }), x2());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
  }
  EXPECT_THROW(propagate_nls(ControlSignal::zero(1.0, 8), coupling_matrix(potentials::x_squared(),
                                                                          make_basis(Geometry::IntervalDirichlet, 8))),
               Error);
}

TEST(PropagateNLSLinearized, MatchesRK4Oracle) {
  const BasisSpec b = make_basis(Geometry::IntervalNeumann, 8);
  const CouplingMatrix B = coupling_matrix(potentials::x_squared(), b);
  const double T = 1.2;
  const ControlSignal v = ControlSignal::from_function(T, 4096, [](double t) { return std::sin(5.0 * t) - t; });
  const NLSState xi = propagate_nls_linearized(v, B);
  for (int k = 0; k < 8; ++k) {
    const double l = b.eigenvalue(k), mk = B(0, k);
    const Eigen::VectorXd y = oracle::rk4(
        [&](double t, const Eigen::VectorXd& s) {
          Eigen::VectorXd r(2);
          r << l * s[1], -(l + 2.0) * s[0] + v.value(t) * mk;
          return r;
        },
        Eigen::VectorXd::Zero(2), T, 4096 * 8);
    EXPECT_NEAR(xi.at(k).real(), y[0], 1e-9) << k;
    EXPECT_NEAR(xi.at(k).imag(), y[1], 1e-9) << k;
  }
}

TEST(NLSTargets, ImaginaryGroundTargetExample) {
  const double T = 1.0;
  const NLSState xi = NLSState::unit(kBasis, 0, cplx(0.0, 1.0));
  const MomentProblem p = nls_linearized_targets(xi, x2(), T);
  const double mu0 = 1.0 / 3.0;
  EXPECT_NEAR(p.targets[0].real(), 1.0 / mu0, 1e-13);
  ASSERT_TRUE(p.linear_moment.has_value());
  EXPECT_NEAR(*p.linear_moment, T / mu0, 1e-13);
  for (std::size_t k = 1; k < p.targets.size(); ++k) EXPECT_EQ(p.targets[k], cplx(0.0));
  try {
    nls_linearized_targets(NLSState::unit(kBasis, 0), x2(), T);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Domain);
  }
}

TEST(NLSTargets, RoundTripThroughLinearizedFlow) {
  const BasisSpec b = make_basis(Geometry::IntervalNeumann, 16);
  const CouplingMatrix B = coupling_matrix(potentials::x_squared(), b);
  for (unsigned seed = 1; seed <= 5; ++seed) {
    const NLSState xi = random_tangent(seed, 1e-2, b);
    const MomentSolution s = solve_moments(nls_linearized_targets(xi, B, 1.0));
    const NLSState back = propagate_nls_linearized(s.control, B);
    EXPECT_LT(sobolev_norm(back - xi, SobolevIndex(2)), 1e-7) << seed;
  }
}

TEST(NLSSphere, LiftAndConversions) {
  const NLSState tau = random_tangent(2, 0.3);
  const NLSState z = nls_sphere_lift(tau);
  NLSState one = z;
  one.coeffs[0] += 1.0;
  EXPECT_NEAR(one.l2_norm(), 1.0, 1e-14);
  EXPECT_LT((nls_tangent_project(z) - tau).l2_norm(), 1e-15);
  const SpectralState psi = psi_from_zeta(z, 0.8);
  EXPECT_LT((zeta_from_psi(psi, 0.8) - z).l2_norm(), 1e-15);
  EXPECT_THROW(nls_sphere_lift(random_tangent(2, 1.01)), Error);
}

TEST(SynthesizeNLS, ReferenceTargetNeedsNoIteration) {
  const SpectralState target = psi_from_zeta(NLSState(kBasis), 1.0);
  const SynthesisReport r = synthesize_nls(target, potentials::x_squared(), 1.0);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 0);
  EXPECT_LT(r.terminal_h2, 1e-10);
}

TEST(SynthesizeNLS, SmallPerturbationConverges) {
  const SpectralState target = nls_perturbed_target(kBasis, 1.0, 1, 1e-2);
  NLSSynthesisConfig cfg;
  cfg.newton.tol = 1e-7;
  const SynthesisReport r = synthesize_nls(target, potentials::x_squared(), 1.0, cfg);
  ASSERT_TRUE(r.converged) << r.message;
  EXPECT_LE(r.iterations, 6);
  EXPECT_LT(r.terminal_h2, 1e-5);
  EXPECT_LT(r.terminal_norm_drift, 1e-8);
  EXPECT_EQ(r.residual_norm, "h2");
}
