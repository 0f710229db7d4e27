#ifndef BILICTRL_NLS_DYNAMICS_HPP
#define BILICTRL_NLS_DYNAMICS_HPP

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

#include "bilictrl/collocation.hpp"
#include "bilictrl/control.hpp"
#include "bilictrl/coupling.hpp"
#include "bilictrl/errors.hpp"
#include "bilictrl/moment_solver.hpp"
#include "bilictrl/propagator.hpp"
#include "bilictrl/spectral_basis.hpp"
#include "bilictrl/synthesis.hpp"

namespace bilictrl {

/// ζ on the Neumann basis, with ψ = e^{-it}(1 + ζ).
using NLSState = SpectralState;

namespace detail {

inline void require_neumann(const BasisSpec& b, const char* what) {
  if (b.geometry != Geometry::IntervalNeumann) {
    std::ostringstream os;
    os << what << " requires the Neumann basis";
    fail(ErrorKind::BasisMismatch, os.str());
  }
}

}  // namespace detail

/// Real 2×2 action of e^{-i𝒜t} on (Re, Im) of one mode, 𝒜ζ = -ζ'' + 2Re ζ.
struct NLSModeRotation {
  double a_re = 1.0, a_im = 0.0;  // a(t) = a_re Re + a_im Im
  double b_re = 0.0, b_im = 1.0;  // b(t) = b_re Re + b_im Im

  static NLSModeRotation make(double lambda, double t) {
    NLSModeRotation r;
    if (lambda == 0.0) {
      r.b_re = -2.0 * t;
      return r;
    }
    const double w = std::sqrt(lambda * (lambda + 2.0));
    const double c = std::cos(w * t), s = std::sin(w * t);
    r.a_re = c;
    r.a_im = std::sqrt(lambda / (lambda + 2.0)) * s;
    r.b_re = -std::sqrt((lambda + 2.0) / lambda) * s;
    r.b_im = c;
    return r;
  }

  cplx apply(cplx z) const {
    return {a_re * z.real() + a_im * z.imag(), b_re * z.real() + b_im * z.imag()};
  }
};

inline NLSState nls_group_apply(const NLSState& zeta, double t) {
  detail::require_neumann(zeta.basis, "NLS group");
  NLSState out = zeta;
  for (int i = 0; i < zeta.basis.N; ++i)
    out.coeffs[i] = NLSModeRotation::make(zeta.basis.eigenvalue(zeta.basis.mode(i)), t).apply(zeta.coeffs[i]);
  return out;
}

struct NLSConfig {
  double dt = 0.0;  // 0 selects T/4096
  double budget_l2 = 0.5;
  double max_norm_drift = 1e-6;
  int snapshot_stride = 32;

  void validate() const {
    if (dt < 0.0) fail(ErrorKind::Config, "dt must be positive (0 selects the default)");
    if (!(budget_l2 > 0.0)) fail(ErrorKind::Config, "control budget must be positive");
    if (!(max_norm_drift > 0.0)) fail(ErrorKind::Config, "max_norm_drift must be positive");
    if (snapshot_stride < 1) fail(ErrorKind::Config, "snapshot_stride must be positive");
  }
};

struct NLSTrajectory {
  std::vector<double> times;
  std::vector<NLSState> states;      // ζ(t)
  std::vector<double> physical_norm;  // ‖1 + ζ(t)‖
  std::vector<double> norm_h2;        // ‖ζ(t)‖_{H²}
  double max_norm_drift = 0.0;
  int steps = 0;

  const NLSState& final_state() const { return states.back(); }
};

/// ζ(T) from ζ(0) = 0 for i ψ_t = -ψ'' + |ψ|²ψ - u μ ψ.  Strang splitting
/// in ψ: half-step pointwise phase rotation by |ψ|² on the collocation grid,
/// a full linear step of i ψ_t = -ψ'' - u μ ψ (interaction-picture Cayley
/// with exactly integrated control phases), half-step rotation.
inline NLSTrajectory propagate_nls(const ControlSignal& u, const CouplingMatrix& B, const NLSConfig& cfg = {}) {
  cfg.validate();
  u.validate();
  const BasisSpec& basis = B.basis;
  detail::require_neumann(basis, "NLS propagation");
  const double unorm = u.l2_norm();
  if (unorm > cfg.budget_l2) {
    std::ostringstream os;
    os << "control L2 norm " << unorm << " exceeds the smallness budget " << cfg.budget_l2;
    fail(ErrorKind::Config, os.str());
  }
  const double T = u.T;
  const int steps = compatible_steps(cfg.dt == 0.0 ? 4096 : std::max(1, static_cast<int>(std::llround(T / cfg.dt))), u);
  const double h = T / steps;
  const CosineGrid grid(basis);
  const detail::CayleyStepper linear(B, detail::eigenvalues_of(basis), u, steps);
  const auto rotate = [&](Eigen::VectorXcd& c, double tau) {
    Eigen::VectorXcd f = grid.synthesize(c);
    for (int j = 0; j < grid.size(); ++j) f[j] *= std::polar(1.0, -std::norm(f[j]) * tau);
    c = grid.analyze(f);
  };

  NLSTrajectory tr;
  tr.steps = steps;
  const auto snapshot = [&](double t, const Eigen::VectorXcd& c) {
    NLSState z(basis, std::polar(1.0, t) * c);
    z.coeffs[0] -= 1.0;
    tr.times.push_back(t);
    tr.physical_norm.push_back(c.norm());
    tr.norm_h2.push_back(sobolev_norm(z, SobolevIndex(2)));
    tr.states.push_back(std::move(z));
  };

  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(basis.N);
  c[0] = 1.0;
  snapshot(0.0, c);
  for (int s = 0; s < steps; ++s) {
    rotate(c, 0.5 * h);
    linear.step(s, c);
    rotate(c, 0.5 * h);
    const double t = (s + 1) * h;
    const double drift = std::abs(c.norm() - 1.0);
    if (!std::isfinite(drift)) fail(ErrorKind::Numeric, "non-finite NLS state");
    tr.max_norm_drift = std::max(tr.max_norm_drift, drift);
    if (drift > cfg.max_norm_drift) {
      std::ostringstream os;
      os << "physical norm drift " << drift << " at t=" << t << "; reduce dt";
      fail(ErrorKind::Accuracy, os.str());
    }
    if ((s + 1) % cfg.snapshot_stride == 0 || s + 1 == steps) snapshot(t, c);
  }
  return tr;
}

/// ξ(T) for i ξ_t = -ξ'' + 2Re ξ - v μ, ξ(0) = 0, from the exact moments of v.
/// Mode k ≥ 1: Re ξ_k = √(λ/(λ+2)) μ_k ∫ v sin(ω(T-s)) ds,
///             Im ξ_k = μ_k ∫ v cos(ω(T-s)) ds,  ω = √(λ(λ+2));
/// mode 0:     ξ_0 = i μ_0 ∫ v.
inline NLSState propagate_nls_linearized(const ControlSignal& v, const CouplingMatrix& B) {
  const BasisSpec& basis = B.basis;
  detail::require_neumann(basis, "NLS linearization");
  const double T = v.T;
  NLSState xi(basis);
  xi.coeffs[0] = cplx(0.0, B(0, 0) * v.moment(0.0).real());
  for (int k = 1; k <= basis.last_mode(); ++k) {
    const double lam = basis.eigenvalue(k);
    const double w = std::sqrt(lam * (lam + 2.0));
    const cplx J = std::polar(1.0, w * T) * std::conj(v.moment(w));  // ∫ v e^{iω(T-s)}
    const double mk = B(0, k);
    xi.at(k) = cplx(std::sqrt(lam / (lam + 2.0)) * mk * J.imag(), mk * J.real());
  }
  return xi;
}

/// Moment data for ξ(T) = ξ_f, Re ξ_f,0 = 0:
///   ∫ v = Im ξ_0/μ_0,  ∫ v e^{iωt} = e^{iωT}(Im ξ_k - i√((λ+2)/λ) Re ξ_k)/μ_k,
///   ∫ t v = T ∫ v.
inline MomentProblem nls_linearized_targets(const NLSState& xi_f, const CouplingMatrix& B, double T) {
  const BasisSpec& basis = B.basis;
  detail::require_neumann(basis, "NLS targets");
  xi_f.require_same(NLSState(basis));
  if (std::abs(xi_f.coeffs[0].real()) > 1e-12)
    fail(ErrorKind::Domain, "NLS target is not tangent: Re<xi_f, phi_0> != 0");
  MomentProblem p;
  p.T = T;
  for (int k = 0; k <= basis.last_mode(); ++k) {
    const double mk = B(0, k);
    if (std::abs(mk) < kCouplingGuard) {
      std::ostringstream os;
      os << "coupling <mu, phi_" << k << "> = " << mk << " vanishes; NLS moment target undefined";
      fail(ErrorKind::Hypothesis, os.str());
    }
    if (k == 0) {
      p.frequencies.push_back(0.0);
      p.targets.push_back(xi_f.coeffs[0].imag() / mk);
      continue;
    }
    const double lam = basis.eigenvalue(k);
    const double w = std::sqrt(lam * (lam + 2.0));
    const cplx z = xi_f.at(k);
    p.frequencies.push_back(w);
    p.targets.push_back(std::polar(1.0, w * T) * cplx(z.imag(), -std::sqrt((lam + 2.0) / lam) * z.real()) / mk);
  }
  p.linear_moment = T * p.targets[0].real();
  return p;
}

/// Tangent part of ζ: Re ζ_0 removed.
inline NLSState nls_tangent_project(const NLSState& zeta) {
  NLSState out = zeta;
  out.coeffs[0] = cplx(0.0, zeta.coeffs[0].imag());
  return out;
}

/// ζ with tangent part τ and ‖1 + ζ‖ = 1 on the positive branch.
inline NLSState nls_sphere_lift(const NLSState& tau) {
  const double n = tau.l2_norm();
  if (!(n < 1.0)) fail(ErrorKind::Domain, "NLS tangent part has norm >= 1");
  NLSState out = nls_tangent_project(tau);
  out.coeffs[0] += std::sqrt(1.0 - n * n) - 1.0;
  return out;
}

/// ζ ↔ ψ(T) conversions at time t.
inline NLSState zeta_from_psi(const SpectralState& psi, double t) {
  NLSState z = std::polar(1.0, t) * psi;
  z.coeffs[0] -= 1.0;
  return z;
}

inline SpectralState psi_from_zeta(const NLSState& zeta, double t) {
  SpectralState psi = zeta;
  psi.coeffs[0] += 1.0;
  return std::polar(1.0, -t) * psi;
}

struct NLSSynthesisConfig {
  NewtonSettings newton{};
  NLSConfig nls{};
  SolverSettings solver{};
};

/// Chord-Newton steering of ψ(0) = 1 to ψ_f at time T (H² residual).
inline SynthesisReport synthesize_nls(const SpectralState& psi_f, const PotentialSpec& mu, double T,
                                      const NLSSynthesisConfig& cfg = {}) {
  cfg.newton.validate();
  cfg.nls.validate();
  if (!(T > 0.0)) fail(ErrorKind::Config, "horizon T must be positive");
  const BasisSpec basis = psi_f.basis;
  detail::require_neumann(basis, "NLS synthesis");
  if (std::abs(psi_f.l2_norm() - 1.0) > 1e-10) fail(ErrorKind::Config, "target must have unit l2 norm");
  const NLSState zeta_f = zeta_from_psi(psi_f, T);
  if (!(1.0 + zeta_f.coeffs[0].real() > 0.0))
    fail(ErrorKind::Domain, "target is on the wrong branch: Re<psi_f, e^{-iT}> <= 0");
  const CouplingMatrix B = coupling_matrix(mu, basis);
  const NLSState target_t = nls_tangent_project(zeta_f);
  const int M = cfg.solver.output_samples;
  const SobolevIndex s(2);

  const std::function<std::pair<double, NLSState>(const ControlSignal&)> residual = [&](const ControlSignal& u) {
    NLSConfig quiet = cfg.nls;
    quiet.snapshot_stride = 1 << 30;
    const NLSState z = propagate_nls(u, B, quiet).final_state();
    NLSState r = target_t - nls_tangent_project(z);
    return std::pair{sobolev_norm(r, s), std::move(r)};
  };
  const std::function<ControlExpansion(const NLSState&)> correction = [&](const NLSState& r) {
    return solve_moments(nls_linearized_targets(r, B, T), cfg.solver).expansion;
  };
  detail::NewtonOutcome nw = detail::chord_newton<NLSState>(T, M, cfg.newton, residual, correction);

  SynthesisReport rep;
  rep.converged = nw.converged;
  rep.iterations = nw.iterations;
  rep.residual_norm = "h2";
  rep.residual_history = nw.history;
  rep.step_factors = nw.factors;
  rep.message = nw.message;
  rep.control = ControlSignal::from_expansion(T, M, nw.control);
  rep.control_norm = rep.control.l2_norm();
  rep.target = psi_f;
  const NLSTrajectory check = propagate_nls(rep.control, B, cfg.nls);
  rep.terminal_state = psi_from_zeta(check.final_state(), T);
  rep.terminal_norm_drift = check.max_norm_drift;
  const SpectralState diff = rep.terminal_state - psi_f;
  rep.terminal_l2 = diff.l2_norm();
  rep.terminal_h2 = sobolev_norm(diff, SobolevIndex(2));
  rep.terminal_h3 = sobolev_norm(diff, SobolevIndex(3));
  rep.terminal_h5 = sobolev_norm(diff, SobolevIndex(5));
  return rep;
}

}  // namespace bilictrl

#endif  // BILICTRL_NLS_DYNAMICS_HPP
