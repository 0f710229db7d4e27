#ifndef BILICTRL_TESTS_ORACLES_HPP
#define BILICTRL_TESTS_ORACLES_HPP

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "bilictrl.hpp"

// Independent reference computations for the unit and acceptance tests.
// None of these reuse the library's quadrature or time stepping.
namespace oracle {

using bilictrl::cplx;
using bilictrl::pi;

/// Composite Simpson rule with n (even) intervals.
template <class F>
auto simpson(F f, double a, double b, int n) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  auto acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return acc * (h / 3.0);
}

inline Eigen::VectorXd dirichlet_eigenvalues(int N) {
  Eigen::VectorXd lam(N);
  for (int k = 1; k <= N; ++k) lam[k - 1] = (k * pi) * (k * pi);
  return lam;
}

/// exp(-i H t) c for Hermitian H, by eigendecomposition.
inline Eigen::VectorXcd expm_apply(const Eigen::MatrixXd& H, double t, const Eigen::VectorXcd& c) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  const Eigen::MatrixXcd V = es.eigenvectors().cast<cplx>();
  Eigen::VectorXcd y = V.adjoint() * c;
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] *= std::polar(1.0, -es.eigenvalues()[i] * t);
  return V * y;
}

/// Galerkin solution of i c' = (Λ - u B) c with u frozen at the midpoint of
/// each of `pieces` intervals; every piece is propagated exactly.
inline Eigen::VectorXcd piecewise_expm(const Eigen::VectorXcd& c0, const Eigen::MatrixXd& B,
                                       const Eigen::VectorXd& lam, const std::function<double(double)>& u,
                                       double T, int pieces) {
  Eigen::VectorXcd c = c0;
  const double h = T / pieces;
  for (int p = 0; p < pieces; ++p) {
    Eigen::MatrixXd H = -u((p + 0.5) * h) * B;
    H.diagonal() += lam;
    c = expm_apply(H, h, c);
  }
  return c;
}

/// Classical RK4 for y' = f(t, y) with real state.
inline Eigen::VectorXd rk4(const std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>& f,
                           Eigen::VectorXd y, double T, int steps) {
  const double h = T / steps;
  for (int n = 0; n < steps; ++n) {
    const double t = n * h;
    const Eigen::VectorXd k1 = f(t, y);
    const Eigen::VectorXd k2 = f(t + 0.5 * h, y + 0.5 * h * k1);
    const Eigen::VectorXd k3 = f(t + 0.5 * h, y + 0.5 * h * k2);
    const Eigen::VectorXd k4 = f(t + h, y + h * k3);
    y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return y;
}

/// ∫_0^T v(t) e^{iθt} dt by Simpson with the given resolution.
inline cplx moment(const std::function<double(double)>& v, double theta, double T, int n) {
  return simpson([&](double t) { return v(t) * std::polar(1.0, theta * t); }, 0.0, T, n);
}

}  // namespace oracle

#endif  // BILICTRL_TESTS_ORACLES_HPP
