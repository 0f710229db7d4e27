#ifndef BILICTRL_SYNTHESIS_HPP
#define BILICTRL_SYNTHESIS_HPP

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bilictrl/control.hpp"
#include "bilictrl/coupling.hpp"
#include "bilictrl/errors.hpp"
#include "bilictrl/moment_solver.hpp"
#include "bilictrl/propagator.hpp"
#include "bilictrl/spectral_basis.hpp"

namespace bilictrl {

/// Orthogonal projection onto {ξ : Re⟨ξ, ref⟩ = 0}, ref = e^{-iλ_1 T} φ_first.
struct TangentProjector {
  double T = 1.0;
  SpectralState reference;
};

inline TangentProjector make_projector(const BasisSpec& basis, double T) {
  const int k = basis.first_mode();
  return {T, SpectralState::unit(basis, k, std::polar(1.0, -basis.eigenvalue(k) * T))};
}

inline SpectralState tangent_project(const SpectralState& s, const TangentProjector& p) {
  const double re = inner_product(s, p.reference).real();
  SpectralState out = s;
  out.coeffs -= re * p.reference.coeffs;
  return out;
}

/// τ + √(1 - ‖τ‖²) ref on the positive branch.
inline SpectralState sphere_lift(const SpectralState& tangent_part, const TangentProjector& p) {
  const double n = tangent_part.l2_norm();
  if (!(n < 1.0)) {
    std::ostringstream os;
    os << "tangent part has norm " << n << " >= 1; outside the liftable neighborhood";
    fail(ErrorKind::Domain, os.str());
  }
  SpectralState out = tangent_part;
  out.coeffs += std::sqrt(1.0 - n * n) * p.reference.coeffs;
  return out;
}

enum class FrequencyFamily { SchrodingerDirichlet, SchrodingerRadial, NLSDefocusing, NLSFocusing, Wave };

/// Entries ω_0..ω_K of the family, ω_0 = 0.
inline std::vector<double> frequency_set(FrequencyFamily family, const BasisSpec& basis, int K) {
  if (K < 0 || K >= basis.N) fail(ErrorKind::Config, "frequency count K must satisfy 0 <= K < N");
  std::vector<double> w(K + 1, 0.0);
  switch (family) {
    case FrequencyFamily::SchrodingerDirichlet:
    case FrequencyFamily::SchrodingerRadial: {
      const double l1 = (pi * pi);
      for (int k = 1; k <= K; ++k) w[k] = (k + 1) * (k + 1) * pi * pi - l1;
      break;
    }
    case FrequencyFamily::NLSDefocusing:
    case FrequencyFamily::NLSFocusing: {
      const double s = family == FrequencyFamily::NLSDefocusing ? 2.0 : -2.0;
      for (int k = 1; k <= K; ++k) {
        const double l = (k * pi) * (k * pi);
        const double arg = l * (l + s);
        if (!(arg > 0.0)) fail(ErrorKind::Domain, "focusing frequency is not real on this domain");
        w[k] = std::sqrt(arg);
      }
      break;
    }
    case FrequencyFamily::Wave:
      for (int k = 1; k <= K; ++k) w[k] = k * pi;
      break;
  }
  return w;
}

namespace detail {

inline double guarded_coupling(const CouplingMatrix& B, int k) {
  const double b = B.first_row(k);
  if (std::abs(b) < kCouplingGuard) {
    std::ostringstream os;
    os << "coupling <mu phi_" << B.basis.first_mode() << ", phi_" << k << "> = " << b
       << " vanishes; the moment target for mode " << k << " is undefined";
    fail(ErrorKind::Hypothesis, os.str());
  }
  return b;
}

inline void require_schrodinger_basis(const BasisSpec& b) {
  if (b.geometry == Geometry::IntervalNeumann)
    fail(ErrorKind::Config, "linear Schrödinger synthesis uses the Dirichlet or radial basis");
}

}  // namespace detail

/// Moment data whose solution v yields Ψ(T) = Ψ_f for the linearization at u = 0.
inline MomentProblem linearized_targets(const SpectralState& psi_f_tangent, const CouplingMatrix& B, double T) {
  detail::require_schrodinger_basis(B.basis);
  psi_f_tangent.require_same(SpectralState(B.basis));
  const BasisSpec& basis = B.basis;
  const double l1 = basis.eigenvalue(1);
  MomentProblem p;
  p.T = T;
  for (int k = 1; k <= basis.last_mode(); ++k) {
    const double lk = basis.eigenvalue(k);
    const double b = detail::guarded_coupling(B, k);
    p.frequencies.push_back(lk - l1);
    p.targets.push_back(psi_f_tangent.at(k) * std::polar(1.0, lk * T) / cplx(0.0, b));
  }
  return p;
}

/// Same, with the constraints written on v̇ so that v(0) = v(T) = 0.
inline MomentProblem linearized_targets_h10(const SpectralState& psi_f_tangent, const CouplingMatrix& B, double T) {
  detail::require_schrodinger_basis(B.basis);
  psi_f_tangent.require_same(SpectralState(B.basis));
  const BasisSpec& basis = B.basis;
  const double l1 = basis.eigenvalue(1);
  MomentProblem p;
  p.T = T;
  p.derivative_form = true;
  for (int k = 1; k <= basis.last_mode(); ++k) {
    const double lk = basis.eigenvalue(k);
    const double b = detail::guarded_coupling(B, k);
    p.frequencies.push_back(lk - l1);
    const cplx dk = psi_f_tangent.at(k) * std::polar(1.0, lk * T);
    if (k == 1) {
      p.targets.push_back(0.0);
      p.linear_moment = -(dk / cplx(0.0, b)).real();
    } else {
      p.targets.push_back((l1 - lk) * dk / b);
    }
  }
  return p;
}

enum class SynthesisVariant { L2Control_H3Target, H10Control_H5Target };

struct NewtonSettings {
  double tol = 1e-7;
  int max_iters = 10;
  double damping = 1.0;
  int max_halvings = 5;

  void validate() const {
    if (!(tol > 0.0)) fail(ErrorKind::Config, "synthesis tolerance must be positive");
    if (max_iters < 0) fail(ErrorKind::Config, "max_iters must be nonnegative");
    if (!(damping > 0.0 && damping <= 1.0)) fail(ErrorKind::Config, "damping must lie in (0, 1]");
    if (max_halvings < 0) fail(ErrorKind::Config, "max_halvings must be nonnegative");
  }
};

struct SynthesisConfig {
  double tol_h3 = 1e-7;  // residual tolerance in the variant's norm (H³, or H⁵)
  int max_iters = 10;
  double damping = 1.0;
  int max_halvings = 5;
  SynthesisVariant variant = SynthesisVariant::L2Control_H3Target;
  PropagatorConfig propagator{};
  SolverSettings solver{};

  NewtonSettings newton() const { return {tol_h3, max_iters, damping, max_halvings}; }

  void validate() const {
    newton().validate();
    propagator.validate();
  }
};

struct SynthesisReport {
  bool converged = false;
  int iterations = 0;
  std::string residual_norm = "h3";
  std::vector<double> residual_history;
  std::vector<double> step_factors;
  ControlSignal control;
  double control_norm = 0.0;
  std::string control_norm_kind = "l2";
  SpectralState terminal_state;
  SpectralState target;
  // ψ(T) - ψ_f from an independent re-propagation of the returned control
  double terminal_l2 = 0.0;
  double terminal_h2 = 0.0;
  double terminal_h3 = 0.0;
  double terminal_h5 = 0.0;
  double terminal_product = 0.0;  // wave: ‖W‖_{H³} + ‖Ẇ‖_{H²}
  double terminal_norm_drift = 0.0;
  std::optional<SpectralState> terminal_velocity;
  std::string message;
};

namespace detail {

struct NewtonOutcome {
  ControlExpansion control;
  bool converged = false;
  int iterations = 0;
  std::vector<double> history;
  std::vector<double> factors;
  std::string message;
};

// Chord-Newton on u: residual(u) returns (norm, data), correction(data)
// returns the frozen right inverse applied to data.
template <class Data>
NewtonOutcome chord_newton(double T, int M, const NewtonSettings& cfg,
                           const std::function<std::pair<double, Data>(const ControlSignal&)>& residual,
                           const std::function<ControlExpansion(const Data&)>& correction) {
  NewtonOutcome out;
  ControlExpansion u;
  auto [res, data] = residual(ControlSignal::from_expansion(T, M, u));
  out.history.push_back(res);
  while (true) {
    if (res < cfg.tol) { out.converged = true; break; }
    if (out.iterations >= cfg.max_iters) { out.message = "iteration cap reached"; break; }
    const ControlExpansion delta = correction(data);
    double alpha = cfg.damping;
    bool accepted = false;
    for (int h = 0; h <= cfg.max_halvings; ++h, alpha *= 0.5) {
      ControlExpansion trial = u;
      trial.add_scaled(delta, alpha);
      auto [r2, d2] = residual(ControlSignal::from_expansion(T, M, trial));
      if (r2 < res) {
        u = std::move(trial);
        res = r2;
        data = std::move(d2);
        accepted = true;
        out.factors.push_back(alpha);
        break;
      }
    }
    if (!accepted) { out.message = "damping backtrack exhausted without decrease"; break; }
    ++out.iterations;
    out.history.push_back(res);
  }
  out.control = std::move(u);
  return out;
}

}  // namespace detail

/// Chord-Newton steering of the ground state to ψ_f at time T.
inline SynthesisReport synthesize(const SpectralState& psi_f, const PotentialSpec& mu, double T,
                                  const SynthesisConfig& cfg = {}) {
  cfg.validate();
  if (!(T > 0.0)) fail(ErrorKind::Config, "horizon T must be positive");
  const BasisSpec basis = psi_f.basis;
  detail::require_schrodinger_basis(basis);
  if (std::abs(psi_f.l2_norm() - 1.0) > 1e-10) fail(ErrorKind::Config, "target must have unit l2 norm");
  const TangentProjector P = make_projector(basis, T);
  if (!(inner_product(psi_f, P.reference).real() > 0.0))
    fail(ErrorKind::Domain, "target is on the wrong branch: Re<psi_f, psi_1(T)> <= 0");
  const CouplingMatrix B = coupling_matrix(mu, basis);
  for (int k = basis.first_mode(); k <= basis.last_mode(); ++k) detail::guarded_coupling(B, k);

  const bool h5 = cfg.variant == SynthesisVariant::H10Control_H5Target;
  const SobolevIndex s(h5 ? 5.0 : 3.0);
  const SpectralState target_t = tangent_project(psi_f, P);
  const SpectralState start = SpectralState::unit(basis, basis.first_mode());
  const int M = cfg.solver.output_samples;

  const std::function<std::pair<double, SpectralState>(const ControlSignal&)> residual =
      [&](const ControlSignal& u) {
        const SpectralState psi = propagate_final(start, u, B, cfg.propagator);
        SpectralState r = target_t - tangent_project(psi, P);
        return std::pair{sobolev_norm(r, s), std::move(r)};
      };
  const std::function<ControlExpansion(const SpectralState&)> correction = [&](const SpectralState& r) {
    const MomentProblem mp = h5 ? linearized_targets_h10(r, B, T) : linearized_targets(r, B, T);
    return solve_moments(mp, cfg.solver).expansion;
  };
  detail::NewtonOutcome nw = detail::chord_newton<SpectralState>(T, M, cfg.newton(), residual, correction);

  SynthesisReport rep;
  rep.converged = nw.converged;
  rep.iterations = nw.iterations;
  rep.residual_norm = h5 ? "h5" : "h3";
  rep.residual_history = nw.history;
  rep.step_factors = nw.factors;
  rep.message = nw.message;
  rep.control = ControlSignal::from_expansion(T, M, nw.control);
  rep.control_norm_kind = h5 ? "h10" : "l2";
  rep.control_norm = h5 ? rep.control.h10_norm() : rep.control.l2_norm();
  rep.target = psi_f;
  const Trajectory check = propagate(start, rep.control, B, cfg.propagator);
  rep.terminal_state = check.final_state();
  rep.terminal_norm_drift = check.max_norm_drift;
  const SpectralState diff = rep.terminal_state - psi_f;
  rep.terminal_l2 = diff.l2_norm();
  rep.terminal_h2 = sobolev_norm(diff, SobolevIndex(2));
  rep.terminal_h3 = sobolev_norm(diff, SobolevIndex(3));
  rep.terminal_h5 = sobolev_norm(diff, SobolevIndex(5));
  return rep;
}

/// Reject targets whose content beyond the first N modes carries a relative
/// H³ share of tail_tol or more; otherwise return the truncation.
inline SpectralState truncate_target(const SpectralState& full, int N, double tail_tol = 1e-10) {
  if (N >= full.basis.N) return full;
  const BasisSpec small{full.basis.geometry, N};
  const double total = sobolev_norm(full, SobolevIndex(3));
  SpectralState head(small, full.coeffs.head(N));
  SpectralState tail = full;
  tail.coeffs.head(N).setZero();
  const double share = total > 0.0 ? sobolev_norm(tail, SobolevIndex(3)) / total : 0.0;
  if (share >= tail_tol) {
    std::ostringstream os;
    os << "target tail beyond mode " << small.last_mode() << " carries " << share
       << " of its H3 norm; increase N";
    fail(ErrorKind::Config, os.str());
  }
  return head;
}

}  // namespace bilictrl

#endif  // BILICTRL_SYNTHESIS_HPP
