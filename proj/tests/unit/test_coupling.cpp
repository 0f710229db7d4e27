#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace bilictrl;

TEST(CouplingMatrix, ConstantMomentGivesIdentity) {
  for (Geometry g : {Geometry::IntervalDirichlet, Geometry::IntervalNeumann, Geometry::Ball3dRadial}) {
    const CouplingMatrix B = coupling_matrix(potentials::constant_one(), make_basis(g, 8));
    EXPECT_LT((B.entries - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-12) << to_string(g);
  }
}

TEST(CouplingMatrix, XSquaredFirstRowMatchesClosedForm) {
  const CouplingMatrix B = coupling_matrix(potentials::x_squared(), make_basis(Geometry::IntervalDirichlet, 40));
  for (int k = 1; k <= 40; ++k) EXPECT_NEAR(B.first_row(k), x_squared_coupling_closed_form(k), 1e-10) << k;
  EXPECT_NEAR(B(1, 1), (2.0 * pi * pi - 3.0) / (6.0 * pi * pi), 1e-14);
}

TEST(CouplingMatrix, EntryStableUnderPanelRefinementAndSimpson) {
  const BasisSpec b = make_basis(Geometry::IntervalDirichlet, 6);
  const CouplingMatrix B = coupling_matrix(potentials::x_squared(), b);
  const auto entry = [&](int panels) {
    const CompositeRule r = composite_gauss(0.0, 1.0, panels);
    double s = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
      const double x = r.nodes[i];
      s += r.weights[i] * x * x * eval_eigenfunction(b, 2, x) * eval_eigenfunction(b, 3, x);
    }
    return s;
  };
  EXPECT_NEAR(entry(10), entry(20), 1e-12);
  const double simpson = oracle::simpson(
      [](double x) { return 2.0 * x * x * std::sin(2.0 * pi * x) * std::sin(3.0 * pi * x); }, 0.0, 1.0, 40000);
  EXPECT_NEAR(B(2, 3), simpson, 1e-12);
}

TEST(CouplingMatrix, ExactlySymmetric) {
  for (Geometry g : {Geometry::IntervalDirichlet, Geometry::IntervalNeumann, Geometry::Ball3dRadial}) {
    const CouplingMatrix B = coupling_matrix(potentials::x_squared(), make_basis(g, 16));
    for (int i = 0; i < 16; ++i)
      for (int j = 0; j < 16; ++j) EXPECT_EQ(B.entries(i, j), B.entries(j, i));
  }
}

TEST(CheckHypothesis, XSquaredDirichletK200) {
  const HypothesisReport r = check_hypothesis(potentials::x_squared(), make_basis(Geometry::IntervalDirichlet, 8), 200);
  ASSERT_EQ(r.modes.size(), 200u);
  EXPECT_GE(r.c_min, 0.28);
  EXPECT_LE(r.c_min, 0.29);
  EXPECT_NEAR(r.c_min, 0.2827, 1e-4);
  EXPECT_EQ(r.argmin, 1);
  EXPECT_TRUE(r.pass);
  const double limit = 8.0 / (pi * pi);
  for (std::size_t i = 0; i < r.modes.size(); ++i) {
    const int k = r.modes[i];
    EXPECT_GE(r.weighted[i], 0.28) << k;
    EXPECT_LE(r.weighted[i], 1.45) << k;
    EXPECT_GE(r.weighted[i], r.c_min);
    if (k >= 15) EXPECT_LT(std::abs(r.weighted[i] / limit - 1.0), 0.01) << k;
    // closed form k³|B_1k|
    EXPECT_NEAR(r.weighted[i], std::pow(k, 3) * std::abs(x_squared_coupling_closed_form(k)), 1e-9 * std::pow(k, 3));
  }
  ASSERT_TRUE(r.asymptote_estimate.has_value());
  EXPECT_NEAR(*r.asymptote_estimate, limit, 1e-14);
}

TEST(CheckHypothesis, SymmetricMomentFails) {
  const HypothesisReport r = check_hypothesis(potentials::sin_pi_x(), make_basis(Geometry::IntervalDirichlet, 8), 200);
  EXPECT_FALSE(r.pass);
  EXPECT_LT(r.weighted[1], 1e-10);  // k = 2
  EXPECT_LT(r.c_min, 1e-10);
}

TEST(CheckHypothesis, XSquaredNeumannWeightsAreExactlyTwoOverPiSquared) {
  const HypothesisReport r = check_hypothesis(potentials::x_squared(), make_basis(Geometry::IntervalNeumann, 8), 100);
  // ∫x² cos(kπx) dx = 2(-1)^k/(kπ)², so k²|∫| = 2/π² for every k ≥ 1.
  for (std::size_t i = 0; i < r.modes.size(); ++i) {
    const int k = r.modes[i];
    const double integral = oracle::simpson([&](double x) { return x * x * std::cos(k * pi * x); }, 0.0, 1.0, 20000);
    if (k >= 1) {
      EXPECT_NEAR(integral, 2.0 * (k % 2 ? -1.0 : 1.0) / std::pow(k * pi, 2), 1e-11);
      EXPECT_NEAR(r.weighted[i], 2.0 / (pi * pi), 1e-10) << k;
    } else {
      EXPECT_NEAR(r.weighted[i], 1.0 / 3.0, 1e-12);
    }
  }
  EXPECT_FALSE(r.asymptote_estimate.has_value());
  EXPECT_TRUE(check_hypothesis(potentials::x_squared(), make_basis(Geometry::IntervalNeumann, 8), 100, 0.1).pass);
}

TEST(CheckHypothesis, MonotoneInThreshold) {
  const BasisSpec b = make_basis(Geometry::IntervalDirichlet, 8);
  bool seen_fail = false;
  for (double t : {0.0, 0.1, 0.2, 0.28, 0.283, 0.3, 1.0}) {
    const bool pass = check_hypothesis(potentials::x_squared(), b, 50, t).pass;
    if (seen_fail) EXPECT_FALSE(pass) << t;
    if (!pass) seen_fail = true;
  }
  EXPECT_TRUE(seen_fail);
}

TEST(CheckHypothesis, EndpointDerivativesEstimatedWhenAbsent) {
  PotentialSpec mu;
  mu.name = "x_squared_plain";
  mu.evaluator = [](double x) { return x * x; };
  const HypothesisReport r = check_hypothesis(mu, make_basis(Geometry::IntervalDirichlet, 8), 40);
  ASSERT_TRUE(r.asymptote_estimate.has_value());
  EXPECT_NEAR(*r.asymptote_estimate, 8.0 / (pi * pi), 1e-8);
}

TEST(CheckHypothesis, RadialGeometryUsesCubicWeight) {
  const HypothesisReport r = check_hypothesis(potentials::x_squared(), make_basis(Geometry::Ball3dRadial, 8), 30);
  const BasisSpec wide = make_basis(Geometry::Ball3dRadial, 30);
  for (std::size_t i = 0; i < r.modes.size(); ++i) {
    const int k = r.modes[i];
    const double b = oracle::simpson(
        [&](double x) {
          return 4.0 * pi * x * x * x * x * eval_eigenfunction(wide, 1, x) * eval_eigenfunction(wide, k, x);
        },
        0.0, 1.0, 40000);
    EXPECT_NEAR(r.weighted[i], std::pow(k, 3) * std::abs(b), 1e-8 * std::pow(k, 3)) << k;
  }
  EXPECT_TRUE(r.pass);
}
