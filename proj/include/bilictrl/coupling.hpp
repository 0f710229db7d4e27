#ifndef BILICTRL_COUPLING_HPP
#define BILICTRL_COUPLING_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bilictrl/errors.hpp"
#include "bilictrl/quadrature.hpp"
#include "bilictrl/spectral_basis.hpp"

namespace bilictrl {

enum class ClosedForm { None, XSquared };

/// Dipolar moment μ: a real profile on [0,1] (radius on the ball).
struct PotentialSpec {
  std::string name = "custom";
  std::function<double(double)> evaluator;
  std::optional<std::pair<double, double>> endpoint_derivatives;  // (μ'(0), μ'(1))
  ClosedForm closed_form = ClosedForm::None;
  std::vector<double> breakpoints;  // kinks of a piecewise-smooth μ

  double operator()(double x) const { return evaluator(x); }
};

namespace potentials {

inline PotentialSpec x_squared() {
  return {"x_squared", [](double x) { return x * x; }, std::pair{0.0, 2.0}, ClosedForm::XSquared};
}

inline PotentialSpec sin_pi_x() {
  return {"sin_pi_x", [](double x) { return std::sin(pi * x); }, std::pair{pi, -pi}, ClosedForm::None};
}

inline PotentialSpec constant_one() {
  return {"one", [](double) { return 1.0; }, std::pair{0.0, 0.0}, ClosedForm::None};
}

}  // namespace potentials

/// ⟨x² φ_1, φ_k⟩ on the Dirichlet basis.
inline double x_squared_coupling_closed_form(int k) {
  const double p2 = pi * pi;
  if (k == 1) return (2.0 * p2 - 3.0) / (6.0 * p2);
  const double kk = static_cast<double>(k);
  const double sign = (k % 2 == 0) ? -1.0 : 1.0;  // (-1)^{k+1}
  return sign * 8.0 * kk / (p2 * (kk * kk - 1.0) * (kk * kk - 1.0));
}

/// Galerkin matrix of multiplication by μ: B[j][k] = ⟨μ φ_j, φ_k⟩.
/// Stored by slot; the potential is kept for pseudospectral kicks.
struct CouplingMatrix {
  BasisSpec basis;
  Eigen::MatrixXd entries;
  PotentialSpec potential;

  double operator()(int j, int k) const { return entries(basis.slot(j), basis.slot(k)); }
  /// Row of the first mode: ⟨μ φ_first, φ_k⟩.
  double first_row(int k) const { return (*this)(basis.first_mode(), k); }
};

namespace detail {

/// Composite Gauss on [0,1]; with breakpoints, each smooth piece is refined separately.
inline CompositeRule potential_rule(const PotentialSpec& mu, int panels, int initial_panels) {
  if (mu.breakpoints.empty()) return composite_gauss(0.0, 1.0, panels);
  std::vector<double> cuts{0.0};
  for (double x : mu.breakpoints)
    if (x > cuts.back() && x < 1.0) cuts.push_back(x);
  cuts.push_back(1.0);
  const int per = std::max(1, panels / std::max(1, initial_panels));
  CompositeRule out;
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    const CompositeRule piece = composite_gauss(cuts[i - 1], cuts[i], per);
    out.nodes.insert(out.nodes.end(), piece.nodes.begin(), piece.nodes.end());
    out.weights.insert(out.weights.end(), piece.weights.begin(), piece.weights.end());
  }
  return out;
}

}  // namespace detail

inline CouplingMatrix coupling_matrix(const PotentialSpec& mu, const BasisSpec& basis,
                                      const QuadratureSettings& q = {}) {
  if (!mu.evaluator) fail(ErrorKind::Config, "potential has no evaluator");
  const int n = basis.N;
  Eigen::MatrixXd prev;
  for (int panels = q.initial_panels; panels <= q.max_panels; panels *= 2) {
    const CompositeRule rule = detail::potential_rule(mu, panels, q.initial_panels);
    const std::size_t m = rule.nodes.size();
    Eigen::MatrixXd phi(m, n);
    Eigen::VectorXd w(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double x = rule.nodes[i];
      w[i] = rule.weights[i] * measure_weight(basis, x) * mu(x);
      for (int s = 0; s < n; ++s) phi(i, s) = eval_eigenfunction(basis, basis.mode(s), x);
    }
    Eigen::MatrixXd b = phi.transpose() * w.asDiagonal() * phi;
    if (!b.allFinite()) fail(ErrorKind::Numeric, "non-finite coupling entry");
    if (prev.size() == b.size() && (b - prev).cwiseAbs().maxCoeff() < q.tol) {
      Eigen::MatrixXd sym = 0.5 * (b + b.transpose());
      return {basis, sym, mu};
    }
    prev = std::move(b);
  }
  fail(ErrorKind::Accuracy, "coupling quadrature did not converge at the maximum panel count");
}

/// Finite check of the coupling lower bound c/k³ (c/k_*² on Neumann).
struct HypothesisReport {
  BasisSpec basis;
  std::vector<int> modes;
  std::vector<double> coupling;  // ⟨μ φ_first, φ_k⟩
  std::vector<double> weighted;  // w_k
  double c_min = 0.0;
  int argmin = 0;
  std::optional<double> asymptote_estimate;
  double threshold = 0.0;
  double min_abs_coupling = 0.0;
  bool pass = false;
};

inline constexpr double kCouplingGuard = 1e-13;

namespace detail {

// One-sided fourth-order differences at the interval ends.
inline std::pair<double, double> endpoint_derivatives_fd(const PotentialSpec& mu, double h = 1e-4) {
  const auto fwd = [&](double x0, double s) {
    return s * (-25.0 * mu(x0) + 48.0 * mu(x0 + s * h) - 36.0 * mu(x0 + 2 * s * h) +
                16.0 * mu(x0 + 3 * s * h) - 3.0 * mu(x0 + 4 * s * h)) /
           (12.0 * h);
  };
  return {fwd(0.0, 1.0), fwd(1.0, -1.0)};
}

}  // namespace detail

inline HypothesisReport check_hypothesis(const PotentialSpec& mu, const BasisSpec& basis, int K,
                                         double threshold = 0.0, const QuadratureSettings& q = {}) {
  const bool neumann = basis.geometry == Geometry::IntervalNeumann;
  const int first = basis.first_mode();
  if (K < first) fail(ErrorKind::Config, "hypothesis check needs K at or above the first mode");
  // Enlarged basis covering modes first..K.
  const BasisSpec wide{basis.geometry, K - first + 1};
  const SpectralState row = project_function(
      [&](double x) { return mu(x) * eval_eigenfunction(wide, first, x); }, wide, q);

  HypothesisReport rep;
  rep.basis = wide;
  rep.threshold = threshold;
  rep.c_min = std::numeric_limits<double>::infinity();
  rep.min_abs_coupling = std::numeric_limits<double>::infinity();
  for (int k = first; k <= K; ++k) {
    const double b = row.at(k).real();
    double w;
    if (neumann) {
      // |∫ μ cos(kπx)| weighted by k_*²; φ_k carries √2 for k ≥ 1.
      const double integral = k == 0 ? std::abs(b) : std::abs(b) / std::sqrt(2.0);
      w = std::pow(std::max(k, 1), 2) * integral;
    } else {
      w = std::pow(static_cast<double>(k), 3) * std::abs(b);
    }
    rep.modes.push_back(k);
    rep.coupling.push_back(b);
    rep.weighted.push_back(w);
    if (w < rep.c_min) { rep.c_min = w; rep.argmin = k; }
    rep.min_abs_coupling = std::min(rep.min_abs_coupling, std::abs(b));
  }
  if (basis.geometry == Geometry::IntervalDirichlet) {
    const auto d = mu.endpoint_derivatives ? *mu.endpoint_derivatives : detail::endpoint_derivatives_fd(mu);
    const double sign = (K % 2 == 0) ? -1.0 : 1.0;  // (-1)^{K+1}
    rep.asymptote_estimate = 4.0 * std::abs(sign * d.second - d.first) / (pi * pi);
  }
  rep.pass = rep.c_min >= threshold && rep.min_abs_coupling >= kCouplingGuard;
  return rep;
}

}  // namespace bilictrl

#endif  // BILICTRL_COUPLING_HPP
