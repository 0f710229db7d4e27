#ifndef BILICTRL_SPECTRAL_BASIS_HPP
#define BILICTRL_SPECTRAL_BASIS_HPP

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <sstream>
#include <string>

#include "bilictrl/errors.hpp"
#include "bilictrl/quadrature.hpp"

namespace bilictrl {

enum class Geometry { IntervalDirichlet, IntervalNeumann, Ball3dRadial };

inline const char* to_string(Geometry g) {
  switch (g) {
    case Geometry::IntervalDirichlet: return "interval_dirichlet";
    case Geometry::IntervalNeumann: return "interval_neumann";
    case Geometry::Ball3dRadial: return "ball3d_radial";
  }
  return "unknown";
}

/// Closed-form eigenbasis of -d²/dx² on (0,1) (or the radial Laplacian on
/// the unit ball), truncated to N modes.  Mode indices are physical: they
/// start at index_origin() and run over N consecutive integers.
struct BasisSpec {
  Geometry geometry = Geometry::IntervalDirichlet;
  int N = 64;

  int index_origin() const { return geometry == Geometry::IntervalNeumann ? 0 : 1; }
  int first_mode() const { return index_origin(); }
  int last_mode() const { return index_origin() + N - 1; }
  bool contains(int k) const { return k >= first_mode() && k <= last_mode(); }
  /// Position of physical mode k in a coefficient vector.
  int slot(int k) const { return k - index_origin(); }
  int mode(int slot) const { return slot + index_origin(); }

  double eigenvalue(int k) const {
    check_mode(k);
    const double kp = k * pi;
    return kp * kp;
  }

  /// k_* weight for Sobolev norms: k, or max{k,1} on the Neumann basis.
  double sobolev_weight_base(int k) const {
    return geometry == Geometry::IntervalNeumann ? std::max(k, 1) : k;
  }

  void check_mode(int k) const {
    if (!contains(k)) {
      std::ostringstream os;
      os << "mode " << k << " outside [" << first_mode() << ", " << last_mode()
         << "] for " << to_string(geometry) << " basis";
      fail(ErrorKind::Index, os.str());
    }
  }

  friend bool operator==(const BasisSpec& a, const BasisSpec& b) {
    return a.geometry == b.geometry && a.N == b.N;
  }
};

inline BasisSpec make_basis(Geometry g, int N) {
  if (N < 1) fail(ErrorKind::Config, "basis truncation N must be positive");
  return BasisSpec{g, N};
}

/// Pointwise value of φ_k at x ∈ [0,1] (r for the radial ball basis).
inline double eval_eigenfunction(const BasisSpec& basis, int k, double x) {
  basis.check_mode(k);
  if (!(x >= 0.0 && x <= 1.0)) fail(ErrorKind::Domain, "evaluation point outside [0,1]");
  const double kp = k * pi;
  switch (basis.geometry) {
    case Geometry::IntervalDirichlet:
      return std::sqrt(2.0) * std::sin(kp * x);
    case Geometry::IntervalNeumann:
      return k == 0 ? 1.0 : std::sqrt(2.0) * std::cos(kp * x);
    case Geometry::Ball3dRadial: {
      const double norm = 1.0 / std::sqrt(2.0 * pi);
      if (x < 1e-8) {
        // sin(kπr)/r → kπ(1 - (kπr)²/6)
        return norm * kp * (1.0 - kp * kp * x * x / 6.0);
      }
      return norm * std::sin(kp * x) / x;
    }
  }
  return 0.0;
}

/// Integration weight making the basis orthonormal: 1 on the interval,
/// 4πr² on the ball.
inline double measure_weight(const BasisSpec& basis, double x) {
  return basis.geometry == Geometry::Ball3dRadial ? 4.0 * pi * x * x : 1.0;
}

struct Eigenpair {
  double eigenvalue;
  std::function<double(double)> eigenfunction;
};

inline Eigenpair eigenpair(const BasisSpec& basis, int k) {
  const double lambda = basis.eigenvalue(k);
  return {lambda, [basis, k](double x) { return eval_eigenfunction(basis, k, x); }};
}

/// Truncated coefficient vector against a BasisSpec.
struct SpectralState {
  BasisSpec basis;
  Eigen::VectorXcd coeffs;

  SpectralState() = default;
  explicit SpectralState(const BasisSpec& b) : basis(b), coeffs(Eigen::VectorXcd::Zero(b.N)) {}
  SpectralState(const BasisSpec& b, Eigen::VectorXcd c) : basis(b), coeffs(std::move(c)) {
    if (coeffs.size() != b.N) fail(ErrorKind::BasisMismatch, "coefficient length differs from N");
  }

  static SpectralState unit(const BasisSpec& b, int k, cplx value = 1.0) {
    SpectralState s(b);
    b.check_mode(k);
    s.coeffs[b.slot(k)] = value;
    return s;
  }

  cplx& at(int k) { basis.check_mode(k); return coeffs[basis.slot(k)]; }
  cplx at(int k) const { basis.check_mode(k); return coeffs[basis.slot(k)]; }

  double l2_norm() const { return coeffs.norm(); }
  bool finite() const { return coeffs.allFinite(); }

  /// Pointwise synthesis Σ c_k φ_k(x).
  cplx evaluate(double x) const {
    cplx acc = 0.0;
    for (int i = 0; i < basis.N; ++i) acc += coeffs[i] * eval_eigenfunction(basis, basis.mode(i), x);
    return acc;
  }

  SpectralState& operator+=(const SpectralState& o) { require_same(o); coeffs += o.coeffs; return *this; }
  SpectralState& operator-=(const SpectralState& o) { require_same(o); coeffs -= o.coeffs; return *this; }
  SpectralState& operator*=(cplx a) { coeffs *= a; return *this; }
  friend SpectralState operator+(SpectralState a, const SpectralState& b) { return a += b; }
  friend SpectralState operator-(SpectralState a, const SpectralState& b) { return a -= b; }
  friend SpectralState operator*(cplx a, SpectralState s) { return s *= a; }

  void require_same(const SpectralState& o) const {
    if (!(basis == o.basis)) fail(ErrorKind::BasisMismatch, "spectral states live on different bases");
  }
};

struct SobolevIndex {
  double s = 0.0;
  explicit SobolevIndex(double order) : s(order) {
    if (!(order >= 0.0)) fail(ErrorKind::Config, "Sobolev index must be nonnegative");
  }
};

/// (Σ_k |k_*^s c_k|²)^{1/2}
inline double sobolev_norm(const SpectralState& state, SobolevIndex s) {
  double acc = 0.0;
  for (int i = 0; i < state.basis.N; ++i) {
    const double w = std::pow(state.basis.sobolev_weight_base(state.basis.mode(i)), s.s);
    acc += std::norm(w * state.coeffs[i]);
  }
  return std::sqrt(acc);
}

/// ⟨f, g⟩ = Σ c_k(f) conj(c_k(g)); conjugate-linear in the second slot.
inline cplx inner_product(const SpectralState& f, const SpectralState& g) {
  f.require_same(g);
  return g.coeffs.dot(f.coeffs);  // Eigen's dot conjugates the left operand
}

/// Relative magnitude of the highest retained mode; a large value means
/// the truncation is leaking.
inline double tail_leak(const SpectralState& state) {
  const double n = state.l2_norm();
  if (n == 0.0) return 0.0;
  return std::abs(state.coeffs[state.basis.N - 1]) / n;
}

inline void monitor_tail(const SpectralState& state, double threshold = 1e-8) {
  const double leak = tail_leak(state);
  if (leak > threshold) {
    std::ostringstream os;
    os << "spectral tail leak " << leak << " exceeds " << threshold
       << " (highest mode " << state.basis.last_mode() << ")";
    warn(os.str());
  }
}

/// Coefficients ⟨f, φ_k⟩ by composite Gauss–Legendre quadrature, panels
/// doubled until successive coefficient vectors agree to settings.tol.
template <class F>
SpectralState project_function(F&& f, const BasisSpec& basis, const QuadratureSettings& q = {}) {
  Eigen::VectorXcd prev;
  for (int panels = q.initial_panels; panels <= q.max_panels; panels *= 2) {
    const CompositeRule rule = composite_gauss(0.0, 1.0, panels);
    Eigen::VectorXcd c = Eigen::VectorXcd::Zero(basis.N);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double x = rule.nodes[i];
      const cplx fx = cplx(f(x)) * (rule.weights[i] * measure_weight(basis, x));
      for (int s = 0; s < basis.N; ++s) c[s] += fx * eval_eigenfunction(basis, basis.mode(s), x);
    }
    if (!c.allFinite()) fail(ErrorKind::Numeric, "non-finite projection coefficient");
    if (prev.size() == c.size() && (c - prev).cwiseAbs().maxCoeff() < q.tol) {
      return SpectralState(basis, c);
    }
    prev = std::move(c);
  }
  fail(ErrorKind::Accuracy, "projection quadrature did not converge at the maximum panel count");
}

}  // namespace bilictrl

#endif  // BILICTRL_SPECTRAL_BASIS_HPP
