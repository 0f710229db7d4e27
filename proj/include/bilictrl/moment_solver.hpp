#ifndef BILICTRL_MOMENT_SOLVER_HPP
#define BILICTRL_MOMENT_SOLVER_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

#include "bilictrl/control.hpp"
#include "bilictrl/errors.hpp"
#include "bilictrl/quadrature.hpp"

namespace bilictrl {

/// Find real v on [0,T] with ∫ v e^{iω_k t} dt = d_k (k = 0..K) and,
/// optionally, ∫ t v dt = d̃.  In derivative form the constraints act on
/// w = v̇ and v is recovered as ∫_0^t w.
struct MomentProblem {
  double T = 1.0;
  std::vector<double> frequencies;  // ω_0 = 0 < ω_1 < ...
  std::vector<cplx> targets;
  std::optional<double> linear_moment;
  bool derivative_form = false;

  void validate() const {
    if (!(T > 0.0)) fail(ErrorKind::Config, "moment horizon must be positive");
    if (frequencies.empty() || frequencies.size() != targets.size())
      fail(ErrorKind::Config, "frequencies and targets must be non-empty and of equal length");
    if (frequencies[0] != 0.0) fail(ErrorKind::Config, "first frequency must be 0");
    for (std::size_t k = 1; k < frequencies.size(); ++k)
      if (!(frequencies[k] > frequencies[k - 1]))
        fail(ErrorKind::Config, "frequencies must be strictly increasing (duplicate or unsorted entry)");
    if (std::abs(targets[0].imag()) > 1e-12) fail(ErrorKind::Config, "target d_0 must be real");
    for (const cplx& d : targets)
      if (!std::isfinite(d.real()) || !std::isfinite(d.imag())) fail(ErrorKind::Config, "non-finite target");
  }
};

struct SolverSettings {
  int output_samples = 4096;      // M
  double truncation = 1e-12;      // relative eigenvalue cut
  double condition_cap = 1e12;
  double residual_tol = 1e-8;     // scaled by max(1, ‖d‖∞)
};

struct MomentSolution {
  MomentProblem problem;
  ControlExpansion expansion;             // v
  ControlExpansion constraint_function;   // v, or w = v̇ in derivative form
  ControlSignal control;
  std::vector<double> extended_frequencies;  // -ω_K..ω_K
  std::vector<cplx> coefficients;            // of e^{-iΩ_b t}, then the t coefficient if present
  std::vector<cplx> residuals;               // per constraint, linear moment last
  double gram_condition = 1.0;
  double ingham_c1 = 0.0;
  double ingham_c2 = 0.0;
  double evaluation_bound = 0.0;             // √C2
  double imag_leak = 0.0;
  int truncated_modes = 0;

  double max_residual() const {
    double r = 0.0;
    for (const cplx& z : residuals) r = std::max(r, std::abs(z));
    return r;
  }
};

inline std::vector<double> symmetric_extension(const std::vector<double>& freqs) {
  std::vector<double> ext;
  ext.reserve(2 * freqs.size() - 1);
  for (std::size_t k = freqs.size() - 1; k >= 1; --k) ext.push_back(-freqs[k]);
  for (double w : freqs) ext.push_back(w);
  return ext;
}

namespace detail {

inline void check_frequencies(const std::vector<double>& freqs) {
  if (freqs.empty() || freqs[0] != 0.0) fail(ErrorKind::Config, "frequency list must start at 0");
  for (std::size_t k = 1; k < freqs.size(); ++k)
    if (!(freqs[k] > freqs[k - 1])) fail(ErrorKind::Config, "duplicate or unsorted frequencies");
}

inline Eigen::MatrixXcd gram_from_extended(const std::vector<double>& ext, double T) {
  const auto n = static_cast<Eigen::Index>(ext.size());
  Eigen::MatrixXcd G(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    G(a, a) = T;
    for (Eigen::Index b = a + 1; b < n; ++b) {
      const cplx g = exp_poly_integral(0, ext[a] - ext[b], 0.0, T);
      G(a, b) = g;
      G(b, a) = std::conj(g);
    }
  }
  return G;
}

}  // namespace detail

/// G[a][b] = ∫_0^T e^{i(Ω_a - Ω_b)t} dt over the symmetric extension of freqs.
inline Eigen::MatrixXcd gram_matrix(const std::vector<double>& freqs, double T) {
  detail::check_frequencies(freqs);
  return detail::gram_from_extended(symmetric_extension(freqs), T);
}

struct InghamBounds {
  double c1 = 0.0;
  double c2 = 0.0;
};

inline InghamBounds ingham_bounds_empirical(const std::vector<double>& freqs, double T) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gram_matrix(freqs, T), Eigen::EigenvaluesOnly);
  return {eig.eigenvalues().minCoeff(), eig.eigenvalues().maxCoeff()};
}

inline MomentSolution solve_moments(const MomentProblem& problem, const SolverSettings& settings = {}) {
  problem.validate();
  if (settings.output_samples < 1) fail(ErrorKind::Config, "output grid needs M >= 1");
  const double T = problem.T;
  const std::vector<double> ext = symmetric_extension(problem.frequencies);
  const int K = static_cast<int>(problem.frequencies.size()) - 1;
  const int ne = 2 * K + 1;
  const bool lin = problem.linear_moment.has_value();
  const int n = ne + (lin ? 1 : 0);

  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(n, n);
  A.topLeftCorner(ne, ne) = detail::gram_from_extended(ext, T);
  Eigen::VectorXcd rhs(n);
  for (int a = 0; a < ne; ++a) {
    const int k = a - K;
    rhs[a] = k >= 0 ? problem.targets[k] : std::conj(problem.targets[-k]);
  }
  rhs[K] = problem.targets[0].real();
  if (lin) {
    for (int a = 0; a < ne; ++a) {
      const cplx m = exp_poly_integral(1, ext[a], 0.0, T);
      A(a, ne) = m;
      A(ne, a) = std::conj(m);
    }
    A(ne, ne) = T * T * T / 3.0;
    rhs[ne] = *problem.linear_moment;
  }

  MomentSolution sol;
  sol.problem = problem;
  sol.extended_frequencies = ext;
  {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> g(A.topLeftCorner(ne, ne), Eigen::EigenvaluesOnly);
    sol.ingham_c1 = g.eigenvalues().minCoeff();
    sol.ingham_c2 = g.eigenvalues().maxCoeff();
    sol.evaluation_bound = std::sqrt(std::max(sol.ingham_c2, 0.0));
  }

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(A);
  const Eigen::VectorXd& ev = eig.eigenvalues();
  const double emax = ev.maxCoeff();
  const double emin = ev.minCoeff();
  sol.gram_condition = emin > 0.0 ? emax / emin : std::numeric_limits<double>::infinity();
  if (sol.gram_condition > settings.condition_cap) {
    std::ostringstream os;
    os << "Gram condition " << sol.gram_condition << " exceeds cap " << settings.condition_cap
       << "; increase T or retain fewer frequencies";
    fail(ErrorKind::IllPosed, os.str());
  }
  const Eigen::VectorXcd proj = eig.eigenvectors().adjoint() * rhs;
  Eigen::VectorXcd scaled = Eigen::VectorXcd::Zero(n);
  for (int i = 0; i < n; ++i) {
    if (ev[i] > settings.truncation * emax) scaled[i] = proj[i] / ev[i];
    else ++sol.truncated_modes;
  }
  Eigen::VectorXcd c = eig.eigenvectors() * scaled;

  // Imaginary part of the raw reconstruction on the output grid.
  const int M = settings.output_samples;
  for (int m = 0; m <= M; ++m) {
    const double t = T * m / M;
    cplx acc = 0.0;
    for (int b = 0; b < ne; ++b) acc += c[b] * std::polar(1.0, -ext[b] * t);
    if (lin) acc += c[ne] * t;
    sol.imag_leak = std::max(sol.imag_leak, std::abs(acc.imag()));
  }

  // Enforce exact conjugate symmetry c_{-b} = conj(c_b).
  for (int k = 1; k <= K; ++k) {
    const cplx avg = 0.5 * (c[K + k] + std::conj(c[K - k]));
    c[K + k] = avg;
    c[K - k] = std::conj(avg);
  }
  c[K] = c[K].real();
  if (lin) c[ne] = c[ne].real();
  sol.coefficients.assign(c.data(), c.data() + n);

  // Constraint function f(t) = c_0 + Σ_k 2Re(c_{-k} e^{iω_k t}) + β t.
  ControlExpansion f;
  f.poly = {c[K].real(), lin ? c[ne].real() : 0.0, 0.0};
  for (int k = 1; k <= K; ++k) {
    f.omega.push_back(problem.frequencies[k]);
    f.amp.push_back(c[K - k]);
  }
  sol.constraint_function = f;
  if (problem.derivative_form) {
    ControlExpansion v;
    v.poly = {0.0, f.poly[0], 0.5 * f.poly[1]};
    for (int k = 1; k <= K; ++k) {
      const cplx a = f.amp[k - 1] / cplx(0.0, problem.frequencies[k]);
      v.omega.push_back(problem.frequencies[k]);
      v.amp.push_back(a);
      v.poly[0] -= 2.0 * a.real();
    }
    sol.expansion = v;
  } else {
    sol.expansion = f;
  }
  sol.control = ControlSignal::from_expansion(T, M, sol.expansion);

  // Residuals by composite Gauss–Legendre, independent of the closed form integrals.
  const double wmax = problem.frequencies.back();
  const int panels = std::max((4 * M + 9) / 10, static_cast<int>(std::ceil(2.0 * wmax * T / 6.0)) + 1);
  const CompositeRule rule = composite_gauss(0.0, T, panels);
  std::vector<double> fv(rule.nodes.size());
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) fv[i] = f.value(rule.nodes[i]);
  double dmax = 0.0;
  for (int k = 0; k <= K; ++k) {
    cplx acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
      acc += rule.weights[i] * fv[i] * std::polar(1.0, problem.frequencies[k] * rule.nodes[i]);
    sol.residuals.push_back(acc - problem.targets[k]);
    dmax = std::max(dmax, std::abs(problem.targets[k]));
  }
  if (lin) {
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) acc += rule.weights[i] * rule.nodes[i] * fv[i];
    sol.residuals.push_back(acc - *problem.linear_moment);
    dmax = std::max(dmax, std::abs(*problem.linear_moment));
  }
  const double tol = settings.residual_tol * std::max(1.0, dmax);
  if (sol.max_residual() > tol) {
    std::ostringstream os;
    os << "moment residual " << sol.max_residual() << " above tolerance " << tol
       << " after truncated solve (" << sol.truncated_modes << " directions dropped)";
    fail(ErrorKind::Accuracy, os.str());
  }
  return sol;
}

}  // namespace bilictrl

#endif  // BILICTRL_MOMENT_SOLVER_HPP
