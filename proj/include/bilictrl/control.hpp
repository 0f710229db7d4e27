#ifndef BILICTRL_CONTROL_HPP
#define BILICTRL_CONTROL_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "bilictrl/errors.hpp"
#include "bilictrl/quadrature.hpp"

namespace bilictrl {

/// Closed-form real control
///   v(t) = p0 + p1 t + p2 t² + Σ_a 2 Re(amp_a e^{i ω_a t}),  ω_a > 0.
/// Moment-problem solutions are exactly of this form, so carrying it lets
/// propagators integrate the control against oscillatory phases exactly.
struct ControlExpansion {
  std::array<double, 3> poly{};
  std::vector<double> omega;
  std::vector<cplx> amp;

  double value(double t) const {
    double v = poly[0] + t * (poly[1] + t * poly[2]);
    for (std::size_t a = 0; a < omega.size(); ++a) v += 2.0 * (amp[a] * std::polar(1.0, omega[a] * t)).real();
    return v;
  }

  double derivative(double t) const {
    double v = poly[1] + 2.0 * t * poly[2];
    for (std::size_t a = 0; a < omega.size(); ++a)
      v += 2.0 * (cplx(0.0, omega[a]) * amp[a] * std::polar(1.0, omega[a] * t)).real();
    return v;
  }

  /// ∫_a^b v(t) e^{iθt} dt
  cplx moment(double theta, double a, double b) const {
    cplx acc = poly[0] * exp_poly_integral(0, theta, a, b);
    if (poly[1] != 0.0) acc += poly[1] * exp_poly_integral(1, theta, a, b);
    if (poly[2] != 0.0) acc += poly[2] * exp_poly_integral(2, theta, a, b);
    for (std::size_t k = 0; k < omega.size(); ++k) {
      acc += amp[k] * exp_poly_integral(0, theta + omega[k], a, b);
      acc += std::conj(amp[k]) * exp_poly_integral(0, theta - omega[k], a, b);
    }
    return acc;
  }

  /// this += alpha * other; terms over an identical frequency set merge.
  void add_scaled(const ControlExpansion& other, double alpha) {
    for (int i = 0; i < 3; ++i) poly[i] += alpha * other.poly[i];
    if (omega == other.omega) {
      for (std::size_t a = 0; a < amp.size(); ++a) amp[a] += alpha * other.amp[a];
      return;
    }
    if (omega.empty()) {
      omega = other.omega;
      amp.resize(other.amp.size());
      for (std::size_t a = 0; a < amp.size(); ++a) amp[a] = alpha * other.amp[a];
      return;
    }
    for (std::size_t a = 0; a < other.omega.size(); ++a) {
      omega.push_back(other.omega[a]);
      amp.push_back(alpha * other.amp[a]);
    }
  }
};

enum class Interpolation { PiecewiseLinear, PiecewiseConstantMidpoint };

/// Real control on [0,T], sampled on the uniform grid t_m = mT/M.  When an
/// expansion is attached it is authoritative and the samples are its grid
/// values.
struct ControlSignal {
  double T = 1.0;
  std::vector<double> samples;
  Interpolation interpolation = Interpolation::PiecewiseLinear;
  std::optional<ControlExpansion> expansion;

  int intervals() const { return static_cast<int>(samples.size()) - 1; }
  double grid_step() const { return T / intervals(); }
  double time(int m) const { return T * m / intervals(); }

  void validate() const {
    if (!(T > 0.0)) fail(ErrorKind::Config, "control horizon must be positive");
    if (samples.size() < 2) fail(ErrorKind::Config, "control needs at least two samples (M >= 1)");
    for (double s : samples)
      if (!std::isfinite(s)) fail(ErrorKind::Config, "control sample is not finite");
  }

  static ControlSignal zero(double T, int M) {
    ControlSignal u;
    u.T = T;
    u.samples.assign(M + 1, 0.0);
    u.validate();
    return u;
  }

  static ControlSignal from_function(double T, int M, const std::function<double(double)>& f,
                                     Interpolation interp = Interpolation::PiecewiseLinear) {
    ControlSignal u;
    u.T = T;
    u.interpolation = interp;
    u.samples.resize(M + 1);
    for (int m = 0; m <= M; ++m) u.samples[m] = f(T * m / M);
    u.validate();
    return u;
  }

  static ControlSignal from_expansion(double T, int M, ControlExpansion e) {
    ControlSignal u;
    u.T = T;
    u.samples.resize(M + 1);
    for (int m = 0; m <= M; ++m) u.samples[m] = e.value(T * m / M);
    u.expansion = std::move(e);
    u.validate();
    return u;
  }

  bool is_zero() const {
    if (expansion) {
      const auto& e = *expansion;
      if (e.poly[0] != 0.0 || e.poly[1] != 0.0 || e.poly[2] != 0.0) return false;
      return std::all_of(e.amp.begin(), e.amp.end(), [](cplx a) { return a == cplx(0.0); });
    }
    return std::all_of(samples.begin(), samples.end(), [](double s) { return s == 0.0; });
  }

  /// Value of the continuous interpretation at t.
  double value(double t) const {
    if (expansion) return expansion->value(t);
    const int M = intervals();
    const double h = grid_step();
    int m = static_cast<int>(std::floor(t / h));
    m = std::clamp(m, 0, M - 1);
    if (interpolation == Interpolation::PiecewiseConstantMidpoint)
      return 0.5 * (samples[m] + samples[m + 1]);
    const double tau = (t - m * h) / h;
    return (1.0 - tau) * samples[m] + tau * samples[m + 1];
  }

  /// ‖u‖_{L²} by the trapezoid rule on the sample grid.
  double l2_norm() const {
    const double h = grid_step();
    double acc = 0.0;
    for (int m = 0; m < intervals(); ++m)
      acc += 0.5 * h * (samples[m] * samples[m] + samples[m + 1] * samples[m + 1]);
    return std::sqrt(acc);
  }

  /// ‖u̇‖_{L²}; trapezoid on the expansion derivative when available,
  /// exact for the piecewise-linear interpolant otherwise.
  double h10_norm() const {
    const double h = grid_step();
    double acc = 0.0;
    if (expansion) {
      for (int m = 0; m < intervals(); ++m) {
        const double a = expansion->derivative(time(m)), b = expansion->derivative(time(m + 1));
        acc += 0.5 * h * (a * a + b * b);
      }
    } else {
      for (int m = 0; m < intervals(); ++m) {
        const double s = (samples[m + 1] - samples[m]) / h;
        acc += h * s * s;
      }
    }
    return std::sqrt(acc);
  }

  /// ∫_a^b u(t) e^{iθt} dt for the continuous interpretation, exactly.
  cplx moment(double theta, double a = 0.0, double b = -1.0) const {
    if (b < 0.0) b = T;
    if (expansion) return expansion->moment(theta, a, b);
    const int M = intervals();
    const double h = grid_step();
    const int m0 = std::clamp(static_cast<int>(std::floor(a / h)), 0, M - 1);
    const int m1 = std::clamp(static_cast<int>(std::ceil(b / h)), 1, M);
    cplx acc = 0.0;
    for (int m = m0; m < m1; ++m) {
      const double tm = m * h;
      const double lo = std::max(a, tm) - tm, hi = std::min(b, tm + h) - tm;
      if (hi <= lo) continue;
      double c0, c1;
      if (interpolation == Interpolation::PiecewiseConstantMidpoint) {
        c0 = 0.5 * (samples[m] + samples[m + 1]);
        c1 = 0.0;
      } else {
        c0 = samples[m];
        c1 = (samples[m + 1] - samples[m]) / h;
      }
      cplx seg = c0 * exp_poly_integral(0, theta, lo, hi);
      if (c1 != 0.0) seg += c1 * exp_poly_integral(1, theta, lo, hi);
      acc += seg * std::polar(1.0, theta * tm);
    }
    return acc;
  }

  /// ∫_0^T t^p u(t) dt for p ∈ {0, 1}.
  double poly_moment(int p) const {
    if (p == 0) return moment(0.0).real();
    // ∫ t u = -i d/dθ ∫ u e^{iθt} at θ=0; evaluate segment-wise instead.
    if (expansion) {
      const auto& e = *expansion;
      double acc = e.poly[0] * T * T / 2.0 + e.poly[1] * T * T * T / 3.0 + e.poly[2] * std::pow(T, 4) / 4.0;
      for (std::size_t a = 0; a < e.omega.size(); ++a)
        acc += 2.0 * (e.amp[a] * exp_poly_integral(1, e.omega[a], 0.0, T)).real();
      return acc;
    }
    const double h = grid_step();
    double acc = 0.0;
    for (int m = 0; m < intervals(); ++m) {
      const double tm = m * h;
      if (interpolation == Interpolation::PiecewiseConstantMidpoint) {
        acc += 0.5 * (samples[m] + samples[m + 1]) * h * (tm + 0.5 * h);
      } else {
        // ∫_0^h (tm + s)(u0 + (u1-u0) s/h) ds
        const double u0 = samples[m], u1 = samples[m + 1];
        acc += tm * h * 0.5 * (u0 + u1) + h * h * (u0 / 6.0 + u1 / 3.0);
      }
    }
    return acc;
  }

  /// Time-reversed control t ↦ u(T - t).
  ControlSignal reversed() const {
    ControlSignal r = *this;
    std::reverse(r.samples.begin(), r.samples.end());
    if (expansion) {
      // Re-express v(T - t) in the same closed form.
      ControlExpansion e;
      const auto& s = *expansion;
      e.poly = {s.poly[0] + s.poly[1] * T + s.poly[2] * T * T, -s.poly[1] - 2.0 * s.poly[2] * T, s.poly[2]};
      e.omega = s.omega;
      e.amp.resize(s.amp.size());
      // amp e^{iω(T-t)} = amp e^{iωT} e^{-iωt} = conj(conj(amp) e^{-iωT}) e^{-iωt}
      for (std::size_t a = 0; a < s.amp.size(); ++a) e.amp[a] = std::conj(s.amp[a] * std::polar(1.0, s.omega[a] * T));
      r.expansion = std::move(e);
    }
    return r;
  }
};

/// Sum of two controls on the same grid.
inline ControlSignal add_controls(const ControlSignal& a, const ControlSignal& b, double beta = 1.0) {
  if (a.intervals() != b.intervals() || a.T != b.T)
    fail(ErrorKind::Config, "controls live on different grids");
  ControlSignal out = a;
  for (std::size_t m = 0; m < out.samples.size(); ++m) out.samples[m] += beta * b.samples[m];
  if (a.expansion && b.expansion) {
    out.expansion->add_scaled(*b.expansion, beta);
  } else if (a.expansion || b.expansion) {
    out.expansion.reset();
    out.interpolation = Interpolation::PiecewiseLinear;
  }
  return out;
}

/// Number of uniform propagation steps: the requested count rounded up to
/// a multiple of the control grid so each step sees one interpolation piece.
inline int compatible_steps(int requested, const ControlSignal& u) {
  if (requested < 1) requested = 1;
  if (u.expansion) return requested;
  const int mc = u.intervals();
  return ((requested + mc - 1) / mc) * mc;
}

/// Per-step integrals ∫_{t_n}^{t_{n+1}} u(t) e^{iθ_p t} dt for a fixed list
/// of phases θ_p on a uniform grid of `steps` intervals.
class StepMomentTable {
 public:
  StepMomentTable(const ControlSignal& u, std::vector<double> thetas, int steps)
      : u_(&u), thetas_(std::move(thetas)), steps_(steps), h_(u.T / steps) {
    const std::size_t P = thetas_.size();
    k0_.resize(P);
    k1_.resize(P);
    k2_.resize(P);
    for (std::size_t p = 0; p < P; ++p) {
      k0_[p] = step_kernel(0, thetas_[p], h_);
      k1_[p] = step_kernel(1, thetas_[p], h_);
      k2_[p] = step_kernel(2, thetas_[p], h_);
    }
    if (u.expansion) {
      const auto& e = *u.expansion;
      const std::size_t K = e.omega.size();
      w_.resize(static_cast<Eigen::Index>(P), static_cast<Eigen::Index>(2 * K));
      for (std::size_t p = 0; p < P; ++p)
        for (std::size_t a = 0; a < K; ++a) {
          w_(p, a) = step_kernel(0, thetas_[p] + e.omega[a], h_);
          w_(p, K + a) = step_kernel(0, thetas_[p] - e.omega[a], h_);
        }
      z_.resize(static_cast<Eigen::Index>(2 * K));
    } else if (steps % u.intervals() != 0) {
      fail(ErrorKind::Config, "propagation steps must refine the control grid");
    }
  }

  int steps() const { return steps_; }
  double step_size() const { return h_; }
  const std::vector<double>& thetas() const { return thetas_; }

  /// Fills out[p] with the integral over step n.
  void evaluate(int n, Eigen::VectorXcd& out) const {
    const std::size_t P = thetas_.size();
    out.resize(static_cast<Eigen::Index>(P));
    const double tn = n * h_;
    double c0, c1, c2 = 0.0;
    if (u_->expansion) {
      const auto& e = *u_->expansion;
      const std::size_t K = e.omega.size();
      for (std::size_t a = 0; a < K; ++a) {
        const cplx z = e.amp[a] * std::polar(1.0, e.omega[a] * tn);
        z_[a] = z;
        z_[K + a] = std::conj(z);
      }
      // p(tn + s) = c0 + c1 s + c2 s²
      c0 = e.poly[0] + tn * (e.poly[1] + tn * e.poly[2]);
      c1 = e.poly[1] + 2.0 * e.poly[2] * tn;
      c2 = e.poly[2];
      if (K > 0) {
        out.noalias() = w_ * z_;
      } else {
        out.setZero();
      }
    } else {
      const int ratio = steps_ / u_->intervals();
      const int m = n / ratio;
      const double hc = u_->grid_step();
      const double s0 = u_->samples[m], s1 = u_->samples[m + 1];
      if (u_->interpolation == Interpolation::PiecewiseConstantMidpoint) {
        c0 = 0.5 * (s0 + s1);
        c1 = 0.0;
      } else {
        const double slope = (s1 - s0) / hc;
        c0 = s0 + slope * (tn - m * hc);
        c1 = slope;
      }
      out.setZero();
    }
    for (std::size_t p = 0; p < P; ++p) {
      cplx local = out[p] + c0 * k0_[p] + c1 * k1_[p];
      if (c2 != 0.0) local += c2 * k2_[p];
      out[p] = local * std::polar(1.0, thetas_[p] * tn);
    }
  }

 private:
  const ControlSignal* u_;
  std::vector<double> thetas_;
  int steps_;
  double h_;
  std::vector<cplx> k0_, k1_, k2_;
  Eigen::MatrixXcd w_;
  mutable Eigen::VectorXcd z_;
};

}  // namespace bilictrl

#endif  // BILICTRL_CONTROL_HPP
