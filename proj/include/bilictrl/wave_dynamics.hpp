#ifndef BILICTRL_WAVE_DYNAMICS_HPP
#define BILICTRL_WAVE_DYNAMICS_HPP

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "bilictrl/collocation.hpp"
#include "bilictrl/control.hpp"
#include "bilictrl/coupling.hpp"
#include "bilictrl/errors.hpp"
#include "bilictrl/moment_solver.hpp"
#include "bilictrl/nls_dynamics.hpp"
#include "bilictrl/spectral_basis.hpp"
#include "bilictrl/synthesis.hpp"

namespace bilictrl {

/// (w, w_t) on the Neumann basis.
struct WaveState {
  BasisSpec basis{Geometry::IntervalNeumann, 64};
  Eigen::VectorXd w;
  Eigen::VectorXd wt;

  WaveState() = default;
  explicit WaveState(const BasisSpec& b)
      : basis(b), w(Eigen::VectorXd::Zero(b.N)), wt(Eigen::VectorXd::Zero(b.N)) {
    detail::require_neumann(b, "wave state");
  }

  /// The reference (w, w_t) = (1, 0).
  static WaveState reference(const BasisSpec& b) {
    WaveState s(b);
    s.w[0] = 1.0;
    return s;
  }

  bool finite() const { return w.allFinite() && wt.allFinite(); }

  /// Σ_k λ_k w_k² + ẇ_k²
  double energy() const {
    double e = 0.0;
    for (int i = 0; i < basis.N; ++i) e += basis.eigenvalue(basis.mode(i)) * w[i] * w[i] + wt[i] * wt[i];
    return e;
  }
};

/// ‖w‖_{H³} + ‖w_t‖_{H²} with k_* weights.
inline double wave_product_norm(const WaveState& s) {
  return sobolev_norm(SpectralState(s.basis, s.w.cast<cplx>()), SobolevIndex(3)) +
         sobolev_norm(SpectralState(s.basis, s.wt.cast<cplx>()), SobolevIndex(2));
}

inline WaveState wave_difference(const WaveState& a, const WaveState& b) {
  if (!(a.basis == b.basis)) fail(ErrorKind::BasisMismatch, "wave states live on different bases");
  WaveState d(a.basis);
  d.w = a.w - b.w;
  d.wt = a.wt - b.wt;
  return d;
}

/// f(w, w_t) with f(1,0) = 0 and ∇f(1,0) = 0, checked on construction.
struct NonlinearitySpec {
  std::string name = "zero";
  std::function<double(double, double)> f = [](double, double) { return 0.0; };

  NonlinearitySpec() = default;
  NonlinearitySpec(std::string n, std::function<double(double, double)> fn) : name(std::move(n)), f(std::move(fn)) {
    validate();
  }

  void validate() const {
    if (!f) fail(ErrorKind::Config, "nonlinearity has no evaluator");
    const double h = 1e-5;
    const double f0 = f(1.0, 0.0);
    const double g1 = (f(1.0 + h, 0.0) - f(1.0 - h, 0.0)) / (2.0 * h);
    const double g2 = (f(1.0, h) - f(1.0, -h)) / (2.0 * h);
    if (std::abs(f0) > 1e-8 || std::hypot(g1, g2) > 1e-8) {
      std::ostringstream os;
      os << "nonlinearity '" << name << "' violates f(1,0)=0, grad f(1,0)=0 (|f|=" << std::abs(f0)
         << ", |grad f|=" << std::hypot(g1, g2) << ")";
      fail(ErrorKind::Hypothesis, os.str());
    }
  }
};

namespace nonlinearities {

inline NonlinearitySpec zero() { return {"zero", [](double, double) { return 0.0; }}; }
inline NonlinearitySpec quadratic() {
  return {"quadratic", [](double w, double) { return (w - 1.0) * (w - 1.0); }};
}
inline NonlinearitySpec cubic() {
  return {"cubic", [](double w, double) { return (w - 1.0) * (w - 1.0) * (w - 1.0); }};
}

}  // namespace nonlinearities

/// Free evolution: mode 0 drifts, w_0 += ẇ_0 t; mode k rotates at kπ.
inline WaveState wave_group_apply(const WaveState& s, double t) {
  WaveState out = s;
  out.w[0] = s.w[0] + s.wt[0] * t;
  for (int k = 1; k < s.basis.N; ++k) {
    const double w = k * pi;
    const double c = std::cos(w * t), sn = std::sin(w * t);
    out.w[k] = c * s.w[k] + sn / w * s.wt[k];
    out.wt[k] = -w * sn * s.w[k] + c * s.wt[k];
  }
  return out;
}

struct WaveConfig {
  double dt = 0.0;  // 0 selects T/4096
  double budget_l2 = 0.5;
  int snapshot_stride = 16;

  void validate() const {
    if (dt < 0.0) fail(ErrorKind::Config, "dt must be positive (0 selects the default)");
    if (!(budget_l2 > 0.0)) fail(ErrorKind::Config, "control budget must be positive");
    if (snapshot_stride < 1) fail(ErrorKind::Config, "snapshot_stride must be positive");
  }
};

struct WaveTrajectory {
  std::vector<double> times;
  std::vector<WaveState> states;
  std::vector<double> energy;
  int steps = 0;

  const WaveState& final_state() const { return states.back(); }
};

/// Strang splitting: half free step, kick ẇ_t = P f(w, w_t) + ū B (w + w_t)
/// with w frozen and ū the step average of u (explicit midpoint; f is
/// evaluated on the collocation grid and projected, the control acts
/// through the Galerkin matrix), half free step.
inline WaveTrajectory propagate_wave(const WaveState& initial, const ControlSignal& u, const CouplingMatrix& B,
                                     const NonlinearitySpec& f, const WaveConfig& cfg = {}) {
  cfg.validate();
  u.validate();
  detail::require_neumann(B.basis, "wave propagation");
  if (!(initial.basis == B.basis)) fail(ErrorKind::BasisMismatch, "initial wave state and coupling differ in basis");
  const double unorm = u.l2_norm();
  if (unorm > cfg.budget_l2) {
    std::ostringstream os;
    os << "control L2 norm " << unorm << " exceeds the smallness budget " << cfg.budget_l2;
    fail(ErrorKind::Config, os.str());
  }
  const double T = u.T;
  const int steps = compatible_steps(cfg.dt == 0.0 ? 4096 : std::max(1, static_cast<int>(std::llround(T / cfg.dt))), u);
  const double h = T / steps;
  const CosineGrid grid(B.basis);
  const StepMomentTable avg(u, {0.0}, steps);
  const bool has_f = f.name != "zero";

  WaveTrajectory tr;
  tr.steps = steps;
  const auto snapshot = [&](double t, const WaveState& s) {
    tr.times.push_back(t);
    tr.energy.push_back(s.energy());
    tr.states.push_back(s);
  };

  WaveState s = initial;
  snapshot(0.0, s);
  Eigen::VectorXcd buf;
  Eigen::VectorXd k1, k2, wg;
  const auto rhs = [&](const Eigen::VectorXd& y, double ubar) {
    Eigen::VectorXd r = ubar * (B.entries * (s.w + y));
    if (has_f) {
      Eigen::VectorXd yg = grid.synthesize(y);
      for (int j = 0; j < grid.size(); ++j) yg[j] = f.f(wg[j], yg[j]);
      r += grid.analyze(yg);
    }
    return r;
  };
  for (int n = 0; n < steps; ++n) {
    avg.evaluate(n, buf);
    const double ubar = buf[0].real() / h;
    s = wave_group_apply(s, 0.5 * h);
    if (ubar != 0.0 || has_f) {
      if (has_f) wg = grid.synthesize(s.w);
      k1 = rhs(s.wt, ubar);
      k2 = rhs(s.wt + 0.5 * h * k1, ubar);
      s.wt += h * k2;
    }
    s = wave_group_apply(s, 0.5 * h);
    if (!s.finite()) fail(ErrorKind::Numeric, "non-finite wave state");
    if ((n + 1) % cfg.snapshot_stride == 0 || n + 1 == steps) snapshot((n + 1) * h, s);
  }
  return tr;
}

/// (W, Ẇ)(T) for W_tt = W_xx + v μ from rest, via exact moments of v.
inline WaveState propagate_wave_linearized(const ControlSignal& v, const CouplingMatrix& B) {
  detail::require_neumann(B.basis, "wave linearization");
  const double T = v.T;
  WaveState out(B.basis);
  const double m0 = B(0, 0);
  const double iv = v.moment(0.0).real();
  out.wt[0] = m0 * iv;
  out.w[0] = m0 * (T * iv - v.poly_moment(1));
  for (int k = 1; k < B.basis.N; ++k) {
    const double w = k * pi;
    const cplx J = std::polar(1.0, w * T) * std::conj(v.moment(w));
    out.wt[k] = B(0, k) * J.real();
    out.w[k] = B(0, k) * J.imag() / w;
  }
  return out;
}

namespace detail {

inline void require_wave_gap(double T) {
  if (!(T > 2.0)) {
    std::ostringstream os;
    os << "wave synthesis needs T > 2 for the frequency gap pi (got T=" << T << ")";
    fail(ErrorKind::GapCondition, os.str());
  }
}

// Targets for a deviation (W, Ẇ) from the reference.
inline MomentProblem wave_targets_from_deviation(const WaveState& dev, const CouplingMatrix& B, double T) {
  require_wave_gap(T);
  MomentProblem p;
  p.T = T;
  for (int k = 0; k < B.basis.N; ++k) {
    const double mk = B(0, k);
    if (std::abs(mk) < kCouplingGuard) {
      std::ostringstream os;
      os << "coupling <mu, phi_" << k << "> = " << mk << " vanishes; wave moment target undefined";
      fail(ErrorKind::Hypothesis, os.str());
    }
    const double w = k * pi;
    p.frequencies.push_back(w);
    if (k == 0) p.targets.push_back(dev.wt[0] / mk);
    else p.targets.push_back(std::polar(1.0, w * T) * cplx(dev.wt[k], -w * dev.w[k]) / mk);
  }
  const double d0 = p.targets[0].real();
  p.linear_moment = T * d0 - dev.w[0] / B(0, 0);
  return p;
}

}  // namespace detail

/// Moment data for reaching `target` at the linear level:
///   ∫ v e^{ikπt} = e^{ikπT}(Ẇ_k - ikπ W_k)/μ_k,  ∫ v = Ẇ_0/μ_0,
///   ∫ t v = T ∫ v - W_0/μ_0,  with (W, Ẇ) = target - (1, 0).
inline MomentProblem wave_linearized_targets(const WaveState& target, const CouplingMatrix& B, double T) {
  return detail::wave_targets_from_deviation(wave_difference(target, WaveState::reference(target.basis)), B, T);
}

struct WaveSynthesisConfig {
  NewtonSettings newton{};
  WaveConfig wave{};
  SolverSettings solver{};
};

/// Chord-Newton steering of (1, 0) to `target` at time T (H³×H² residual).
inline SynthesisReport synthesize_wave(const WaveState& target, const PotentialSpec& mu, const NonlinearitySpec& f,
                                       double T, const WaveSynthesisConfig& cfg = {}) {
  cfg.newton.validate();
  cfg.wave.validate();
  f.validate();
  detail::require_wave_gap(T);
  const BasisSpec basis = target.basis;
  detail::require_neumann(basis, "wave synthesis");
  const CouplingMatrix B = coupling_matrix(mu, basis);
  const WaveState start = WaveState::reference(basis);
  const int M = cfg.solver.output_samples;

  const std::function<std::pair<double, WaveState>(const ControlSignal&)> residual = [&](const ControlSignal& u) {
    WaveConfig quiet = cfg.wave;
    quiet.snapshot_stride = 1 << 30;
    WaveState r = wave_difference(target, propagate_wave(start, u, B, f, quiet).final_state());
    return std::pair{wave_product_norm(r), std::move(r)};
  };
  const std::function<ControlExpansion(const WaveState&)> correction = [&](const WaveState& r) {
    return solve_moments(detail::wave_targets_from_deviation(r, B, T), cfg.solver).expansion;
  };
  detail::NewtonOutcome nw = detail::chord_newton<WaveState>(T, M, cfg.newton, residual, correction);

  SynthesisReport rep;
  rep.converged = nw.converged;
  rep.iterations = nw.iterations;
  rep.residual_norm = "h3xh2";
  rep.residual_history = nw.history;
  rep.step_factors = nw.factors;
  rep.message = nw.message;
  rep.control = ControlSignal::from_expansion(T, M, nw.control);
  rep.control_norm = rep.control.l2_norm();
  const WaveState fin = propagate_wave(start, rep.control, B, f, cfg.wave).final_state();
  rep.terminal_state = SpectralState(basis, fin.w.cast<cplx>());
  rep.terminal_velocity = SpectralState(basis, fin.wt.cast<cplx>());
  rep.target = SpectralState(basis, target.w.cast<cplx>());
  const WaveState diff = wave_difference(fin, target);
  rep.terminal_product = wave_product_norm(diff);
  const SpectralState dw(basis, diff.w.cast<cplx>());
  rep.terminal_l2 = dw.l2_norm();
  rep.terminal_h2 = sobolev_norm(dw, SobolevIndex(2));
  rep.terminal_h3 = sobolev_norm(dw, SobolevIndex(3));
  rep.terminal_h5 = sobolev_norm(dw, SobolevIndex(5));
  return rep;
}

}  // namespace bilictrl

#endif  // BILICTRL_WAVE_DYNAMICS_HPP
