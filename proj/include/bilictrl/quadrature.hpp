#ifndef BILICTRL_QUADRATURE_HPP
#define BILICTRL_QUADRATURE_HPP

#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "bilictrl/errors.hpp"

namespace bilictrl {

/// Gauss–Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline GaussRule gauss_legendre(int n) {
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    // Chebyshev initial guess, then Newton on P_n.
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) { p1 = x; p0 = 1.0; }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.nodes[n - 1 - i] = x;
    rule.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

inline const GaussRule& gauss_legendre_10() {
  static const GaussRule rule = gauss_legendre(10);
  return rule;
}

/// Composite Gauss–Legendre nodes and weights on [a, b] with equal panels.
struct CompositeRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline CompositeRule composite_gauss(double a, double b, int panels,
                                     const GaussRule& base = gauss_legendre_10()) {
  CompositeRule out;
  const std::size_t q = base.nodes.size();
  out.nodes.reserve(panels * q);
  out.weights.reserve(panels * q);
  const double width = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double left = a + p * width;
    for (std::size_t i = 0; i < q; ++i) {
      out.nodes.push_back(left + 0.5 * width * (base.nodes[i] + 1.0));
      out.weights.push_back(0.5 * width * base.weights[i]);
    }
  }
  return out;
}

/// Settings for the refinement loop used when projecting functions.
struct QuadratureSettings {
  int initial_panels = 10;
  int max_panels = 10 * 1024;
  double tol = 1e-12;
};

namespace detail {

// J_q(x) = ∫_{-1}^{1} y^q e^{ixy} dy for q = 0, 1, 2.
inline cplx unit_moment(int q, double x) {
  const double ax = std::abs(x);
  if (ax < 1.0) {
    // Power series; only terms with q + n even survive.
    cplx sum = 0.0;
    cplx term = 1.0;  // (ix)^n / n!
    for (int n = 0; n < 30; ++n) {
      if (n > 0) term *= cplx(0.0, x) / static_cast<double>(n);
      if ((q + n) % 2 == 0) sum += term * (2.0 / (q + n + 1));
    }
    return sum;
  }
  const double s = std::sin(x), c = std::cos(x);
  switch (q) {
    case 0: return 2.0 * s / x;
    case 1: return cplx(0.0, 2.0 * (s - x * c) / (x * x));
    default: return 2.0 * ((x * x - 2.0) * s + 2.0 * x * c) / (x * x * x);
  }
}

}  // namespace detail

/// ∫_a^b t^p e^{iθt} dt for p ∈ {0,1,2}, stable for small θ(b-a).
inline cplx exp_poly_integral(int p, double theta, double a, double b) {
  const double m = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double x = theta * h;
  std::array<cplx, 3> j{};
  for (int q = 0; q <= p; ++q) j[q] = detail::unit_moment(q, x);
  // t = m + h y
  cplx acc = 0.0;
  if (p == 0) acc = h * j[0];
  else if (p == 1) acc = h * (m * j[0] + h * j[1]);
  else acc = h * (m * m * j[0] + 2.0 * m * h * j[1] + h * h * j[2]);
  return acc * std::polar(1.0, theta * m);
}

/// ∫_0^h s^q e^{iθs} ds, the per-step kernel for uniform grids.
inline cplx step_kernel(int q, double theta, double h) {
  return exp_poly_integral(q, theta, 0.0, h);
}

}  // namespace bilictrl

#endif  // BILICTRL_QUADRATURE_HPP
