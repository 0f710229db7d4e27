#ifndef BILICTRL_PROPAGATOR_HPP
#define BILICTRL_PROPAGATOR_HPP

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <vector>

#include "bilictrl/control.hpp"
#include "bilictrl/coupling.hpp"
#include "bilictrl/errors.hpp"
#include "bilictrl/spectral_basis.hpp"

namespace bilictrl {

enum class Scheme { InteractionMagnus, StrangSplit, DuhamelFixedPoint };

inline const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::InteractionMagnus: return "interaction_magnus";
    case Scheme::StrangSplit: return "strang_split";
    case Scheme::DuhamelFixedPoint: return "duhamel_fixed_point";
  }
  return "unknown";
}

struct PropagatorConfig {
  double dt = 0.0;  // 0 selects T/4096
  Scheme scheme = Scheme::InteractionMagnus;
  double fixed_point_tol = 1e-14;
  int max_fixed_point_iters = 60;
  double max_norm_drift = 1e-6;
  int snapshot_stride = 16;

  void validate() const {
    if (dt < 0.0) fail(ErrorKind::Config, "dt must be positive (0 selects the default)");
    if (!(fixed_point_tol > 0.0)) fail(ErrorKind::Config, "fixed_point_tol must be positive");
    if (max_fixed_point_iters < 1) fail(ErrorKind::Config, "max_fixed_point_iters must be positive");
    if (!(max_norm_drift > 0.0)) fail(ErrorKind::Config, "max_norm_drift must be positive");
    if (snapshot_stride < 1) fail(ErrorKind::Config, "snapshot_stride must be positive");
  }

  int requested_steps(double T) const {
    if (dt == 0.0) return 4096;
    return std::max(1, static_cast<int>(std::llround(T / dt)));
  }
};

struct Trajectory {
  std::vector<double> times;
  std::vector<SpectralState> states;
  std::vector<double> norm_l2;
  std::vector<double> norm_h3;
  double max_norm_drift = 0.0;  // over every step, not only snapshots
  int steps = 0;

  const SpectralState& final_state() const { return states.back(); }
};

/// Coefficient k multiplied by e^{-iλ_k t}.
inline SpectralState free_evolution(const SpectralState& s, double t) {
  SpectralState out = s;
  for (int i = 0; i < s.basis.N; ++i)
    out.coeffs[i] *= std::polar(1.0, -s.basis.eigenvalue(s.basis.mode(i)) * t);
  return out;
}

namespace detail {

inline Eigen::VectorXd eigenvalues_of(const BasisSpec& b) {
  Eigen::VectorXd lam(b.N);
  for (int i = 0; i < b.N; ++i) lam[i] = b.eigenvalue(b.mode(i));
  return lam;
}

inline Eigen::VectorXcd phases(const Eigen::VectorXd& lam, double t, double sign) {
  Eigen::VectorXcd p(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i) p[i] = std::polar(1.0, sign * lam[i] * t);
  return p;
}

// Interaction-picture step matrices Ω_n[j][k] = B_jk ∫_step u e^{i(λ_j-λ_k)t} dt.
class OmegaBuilder {
 public:
  OmegaBuilder(const CouplingMatrix& B, const Eigen::VectorXd& lam, const ControlSignal& u, int steps)
      : B_(&B.entries), n_(static_cast<int>(lam.size())), table_(u, thetas(lam), steps) {}

  void build(int step, Eigen::MatrixXcd& omega) const {
    table_.evaluate(step, buf_);
    omega.resize(n_, n_);
    const cplx diag = buf_[0];
    int p = 1;
    for (int j = 0; j < n_; ++j) {
      omega(j, j) = (*B_)(j, j) * diag;
      for (int k = j + 1; k < n_; ++k, ++p) {
        const cplx w = (*B_)(j, k) * buf_[p];
        omega(j, k) = w;
        omega(k, j) = std::conj(w);
      }
    }
  }

 private:
  static std::vector<double> thetas(const Eigen::VectorXd& lam) {
    std::vector<double> th{0.0};
    for (Eigen::Index j = 0; j < lam.size(); ++j)
      for (Eigen::Index k = j + 1; k < lam.size(); ++k) th.push_back(lam[j] - lam[k]);
    return th;
  }

  const Eigen::MatrixXd* B_;
  int n_;
  StepMomentTable table_;
  mutable Eigen::VectorXcd buf_;
};

// Unitary step of i ċ = Λc - u B c from t_n to t_{n+1} in the lab frame.
class CayleyStepper {
 public:
  CayleyStepper(const CouplingMatrix& B, const Eigen::VectorXd& lam, const ControlSignal& u, int steps)
      : lam_(lam), h_(u.T / steps), omega_(B, lam, u, steps) {}

  void step(int n, Eigen::VectorXcd& c) const {
    const double t0 = n * h_, t1 = (n + 1) * h_;
    omega_.build(n, om_);
    a_ = cplx(0.0, -0.5) * om_;
    a_.diagonal().array() += 1.0;
    ct_ = phases(lam_, t0, 1.0).cwiseProduct(c);
    x_ = a_.partialPivLu().solve(ct_);
    c = phases(lam_, t1, -1.0).cwiseProduct(2.0 * x_ - ct_);
  }

 private:
  Eigen::VectorXd lam_;
  double h_;
  OmegaBuilder omega_;
  mutable Eigen::MatrixXcd om_, a_;
  mutable Eigen::VectorXcd ct_, x_;
};

inline int shared_steps(int requested, const ControlSignal& u, const ControlSignal* v) {
  int s = compatible_steps(requested, u);
  if (v) {
    s = compatible_steps(s, *v);
    if (!u.expansion && s % u.intervals() != 0)
      fail(ErrorKind::Config, "control grids of u and v are not commensurate");
  }
  return s;
}

struct CoreResult {
  Trajectory trajectory;
  std::optional<SpectralState> tangent;
};

inline void check_drift(double drift, const PropagatorConfig& cfg, double t) {
  if (!std::isfinite(drift)) fail(ErrorKind::Numeric, "non-finite state during propagation");
  if (drift > cfg.max_norm_drift) {
    std::ostringstream os;
    os << "l2 norm drift " << drift << " exceeds " << cfg.max_norm_drift << " at t=" << t
       << "; reduce dt";
    fail(ErrorKind::Accuracy, os.str());
  }
}

// Shared driver: advances ψ and, when v is given, the tangent Ψ.
inline CoreResult propagate_core(const SpectralState& psi0, const ControlSignal& u,
                                 const ControlSignal* v, const CouplingMatrix& B,
                                 const PropagatorConfig& cfg, bool record) {
  cfg.validate();
  u.validate();
  if (!(psi0.basis == B.basis)) fail(ErrorKind::BasisMismatch, "initial state and coupling differ in basis");
  if (v && (v->T != u.T)) fail(ErrorKind::Config, "u and v have different horizons");
  const double T = u.T;
  const int steps = shared_steps(cfg.requested_steps(T), u, v);
  const double h = T / steps;
  const int n = psi0.basis.N;
  const Eigen::VectorXd lam = eigenvalues_of(psi0.basis);
  const double norm0 = psi0.l2_norm();

  CoreResult res;
  Trajectory& tr = res.trajectory;
  tr.steps = steps;
  const auto snapshot = [&](double t, const Eigen::VectorXcd& c) {
    SpectralState s(psi0.basis, c);
    tr.times.push_back(t);
    tr.norm_l2.push_back(s.l2_norm());
    tr.norm_h3.push_back(sobolev_norm(s, SobolevIndex(3)));
    tr.states.push_back(std::move(s));
  };

  Eigen::VectorXcd c = psi0.coeffs;
  Eigen::VectorXcd dc = Eigen::VectorXcd::Zero(n);
  const bool tangent = v != nullptr;

  if (cfg.scheme == Scheme::StrangSplit) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(B.entries);
    const Eigen::MatrixXd& V = eig.eigenvectors();
    const Eigen::VectorXd& D = eig.eigenvalues();
    const Eigen::VectorXcd half = phases(lam, 0.5 * h, -1.0);
    if (record) snapshot(0.0, c);
    Eigen::VectorXcd y(n), dy(n);
    for (int s = 0; s < steps; ++s) {
      const double tm = (s + 0.5) * h;
      const double ub = u.value(tm);
      c = half.cwiseProduct(c);
      y.noalias() = V.transpose() * c;
      if (tangent) {
        dc = half.cwiseProduct(dc);
        dy.noalias() = V.transpose() * dc;
        const double vb = v->value(tm);
        for (int i = 0; i < n; ++i) {
          const cplx e = std::polar(1.0, ub * D[i] * h);
          dy[i] = e * dy[i] + cplx(0.0, vb * D[i] * h) * e * y[i];
        }
        dc.noalias() = V * dy;
        dc = half.cwiseProduct(dc);
      }
      for (int i = 0; i < n; ++i) y[i] *= std::polar(1.0, ub * D[i] * h);
      c.noalias() = V * y;
      c = half.cwiseProduct(c);
      const double t = (s + 1) * h;
      tr.max_norm_drift = std::max(tr.max_norm_drift, std::abs(c.norm() - norm0));
      check_drift(tr.max_norm_drift, cfg, t);
      if (record && ((s + 1) % cfg.snapshot_stride == 0 || s + 1 == steps)) snapshot(t, c);
    }
    if (!record) snapshot(T, c);
    if (tangent) res.tangent = SpectralState(psi0.basis, dc);
    return res;
  }

  // Interaction picture c̃ = e^{iΛt} c, integrated by the trapezoid relation
  // c̃_{n+1} - c̃_n = (i/2) Ω_n (c̃_n + c̃_{n+1}) with Ω_n built exactly.
  const OmegaBuilder ob(B, lam, u, steps);
  std::optional<OmegaBuilder> obv;
  if (tangent) obv.emplace(B, lam, *v, steps);
  Eigen::MatrixXcd om(n, n), dom(n, n), A(n, n);
  Eigen::VectorXcd x(n), next(n), dnext(n), rhs(n);
  const cplx ihalf(0.0, 0.5);
  if (record) snapshot(0.0, c);
  for (int s = 0; s < steps; ++s) {
    ob.build(s, om);
    if (tangent) obv->build(s, dom);
    if (cfg.scheme == Scheme::InteractionMagnus) {
      A = -ihalf * om;
      A.diagonal().array() += 1.0;
      const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
      x = lu.solve(c);
      next = 2.0 * x - c;
      if (tangent) {
        rhs = 2.0 * dc + cplx(0.0, 1.0) * (dom * x);
        dnext = lu.solve(rhs) - dc;
        dc = dnext;
      }
    } else {
      // Picard iteration y ← c̃_n + (i/2) Ω (c̃_n + y)
      const Eigen::VectorXcd base = c + ihalf * (om * c);
      next = c;
      bool ok = false;
      double inc = 0.0;
      for (int it = 0; it < cfg.max_fixed_point_iters; ++it) {
        x = base + ihalf * (om * next);
        inc = (x - next).norm();
        next = x;
        if (!std::isfinite(inc)) break;
        if (inc <= cfg.fixed_point_tol * std::max(1.0, next.norm())) { ok = true; break; }
      }
      if (!ok) {
        std::ostringstream os;
        os << "Duhamel fixed point did not contract at step " << s << " (last increment " << inc
           << "); use a smaller dt";
        fail(ErrorKind::Convergence, os.str());
      }
      if (tangent) {
        const Eigen::VectorXcd dbase = dc + ihalf * (om * dc) + ihalf * (dom * (c + next));
        dnext = dc;
        bool dok = false;
        for (int it = 0; it < cfg.max_fixed_point_iters; ++it) {
          x = dbase + ihalf * (om * dnext);
          inc = (x - dnext).norm();
          dnext = x;
          if (inc <= cfg.fixed_point_tol * std::max(1.0, dnext.norm())) { dok = true; break; }
        }
        if (!dok) fail(ErrorKind::Convergence, "tangent fixed point did not contract; use a smaller dt");
        dc = dnext;
      }
    }
    c = next;
    const double t = (s + 1) * h;
    tr.max_norm_drift = std::max(tr.max_norm_drift, std::abs(c.norm() - norm0));
    check_drift(tr.max_norm_drift, cfg, t);
    if (record && ((s + 1) % cfg.snapshot_stride == 0 || s + 1 == steps))
      snapshot(t, phases(lam, t, -1.0).cwiseProduct(c));
  }
  if (!record) snapshot(T, phases(lam, T, -1.0).cwiseProduct(c));
  if (tangent) res.tangent = SpectralState(psi0.basis, phases(lam, T, -1.0).cwiseProduct(dc));
  return res;
}

}  // namespace detail

/// Galerkin solution of i ċ = Λc - u(t) B c from state0 over [0, u.T].
inline Trajectory propagate(const SpectralState& state0, const ControlSignal& u, const CouplingMatrix& B,
                            const PropagatorConfig& cfg = {}) {
  Trajectory tr = detail::propagate_core(state0, u, nullptr, B, cfg, true).trajectory;
  monitor_tail(tr.final_state());
  return tr;
}

inline SpectralState propagate_final(const SpectralState& state0, const ControlSignal& u,
                                     const CouplingMatrix& B, const PropagatorConfig& cfg = {}) {
  return detail::propagate_core(state0, u, nullptr, B, cfg, false).trajectory.final_state();
}

struct LinearizedResult {
  SpectralState psi;      // ψ(T; u)
  SpectralState tangent;  // Ψ(T)
};

/// Ψ(T) for the linearization around u in direction v, Ψ(0) = 0, started
/// from the first mode unless psi0 is supplied.  The tangent is the exact
/// derivative of the discrete step map.
inline LinearizedResult propagate_linearized_full(const ControlSignal& u, const ControlSignal& v,
                                                  const CouplingMatrix& B, const PropagatorConfig& cfg = {},
                                                  std::optional<SpectralState> psi0 = std::nullopt) {
  const SpectralState start = psi0 ? *psi0 : SpectralState::unit(B.basis, B.basis.first_mode());
  auto res = detail::propagate_core(start, u, &v, B, cfg, false);
  return {res.trajectory.final_state(), *res.tangent};
}

inline SpectralState propagate_linearized(const ControlSignal& u, const ControlSignal& v, const CouplingMatrix& B,
                                          const PropagatorConfig& cfg = {}) {
  return propagate_linearized_full(u, v, B, cfg).tangent;
}

/// Crank–Nicolson finite differences on the interior nodes x_j = j/(G+1),
/// j = 1..G, for the Dirichlet interval.  The potential enters through u(t_mid).
inline std::vector<cplx> fd_oracle_propagate(const std::vector<cplx>& psi0_grid, const ControlSignal& u,
                                             const std::function<double(double)>& mu, int G, double dt) {
  if (static_cast<int>(psi0_grid.size()) != G) fail(ErrorKind::Config, "grid function length differs from G");
  if (G < 3 || !(dt > 0.0)) fail(ErrorKind::Config, "oracle needs G >= 3 and dt > 0");
  const double dx = 1.0 / (G + 1);
  const int steps = std::max(1, static_cast<int>(std::llround(u.T / dt)));
  const double h = u.T / steps;
  std::vector<double> m(G);
  for (int j = 0; j < G; ++j) m[j] = mu((j + 1) * dx);
  const double off = -1.0 / (dx * dx);
  std::vector<cplx> psi = psi0_grid, rhs(G), cp(G), dp(G);
  const cplx a(0.0, 0.5 * h);  // i dt / 2
  for (int s = 0; s < steps; ++s) {
    const double ub = u.value((s + 0.5) * h);
    // H = tridiag(off, 2/dx² - u μ_j, off); rhs = (I - a H) ψ
    for (int j = 0; j < G; ++j) {
      const double diag = 2.0 / (dx * dx) - ub * m[j];
      cplx hpsi = diag * psi[j];
      if (j > 0) hpsi += off * psi[j - 1];
      if (j + 1 < G) hpsi += off * psi[j + 1];
      rhs[j] = psi[j] - a * hpsi;
    }
    // Thomas on (I + a H) ψ' = rhs
    const cplx sub = a * off;
    for (int j = 0; j < G; ++j) {
      const cplx diag = 1.0 + a * (2.0 / (dx * dx) - ub * m[j]);
      const cplx denom = j == 0 ? diag : diag - sub * cp[j - 1];
      if (std::abs(denom) < 1e-300) fail(ErrorKind::Numeric, "singular tridiagonal system in oracle");
      cp[j] = sub / denom;
      dp[j] = j == 0 ? rhs[j] / denom : (rhs[j] - sub * dp[j - 1]) / denom;
    }
    psi[G - 1] = dp[G - 1];
    for (int j = G - 2; j >= 0; --j) psi[j] = dp[j] - cp[j] * psi[j + 1];
  }
  for (const cplx& z : psi)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) fail(ErrorKind::Numeric, "oracle produced non-finite values");
  return psi;
}

}  // namespace bilictrl

#endif  // BILICTRL_PROPAGATOR_HPP
