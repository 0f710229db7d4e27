#ifndef BILICTRL_CLI_HPP
#define BILICTRL_CLI_HPP

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "bilictrl/coupling.hpp"
#include "bilictrl/errors.hpp"
#include "bilictrl/io.hpp"
#include "bilictrl/moment_solver.hpp"
#include "bilictrl/nls_dynamics.hpp"
#include "bilictrl/propagator.hpp"
#include "bilictrl/synthesis.hpp"
#include "bilictrl/wave_dynamics.hpp"

namespace bilictrl::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

enum ExitCode : int { kOk = 0, kNotConverged = 2, kConfigError = 3, kHypothesisError = 4 };

inline int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config:
    case ErrorKind::Index:
    case ErrorKind::Domain:
    case ErrorKind::BasisMismatch: return kConfigError;
    case ErrorKind::Hypothesis:
    case ErrorKind::GapCondition:
    case ErrorKind::IllPosed: return kHypothesisError;
    case ErrorKind::Accuracy:
    case ErrorKind::Convergence:
    case ErrorKind::Numeric: return kNotConverged;
  }
  return kNotConverged;
}

enum class Problem { Schrodinger, SchrodingerH5, SchrodingerRadial, NLS, Wave };

inline const char* to_string(Problem p) {
  switch (p) {
    case Problem::Schrodinger: return "schrodinger";
    case Problem::SchrodingerH5: return "schrodinger_h5";
    case Problem::SchrodingerRadial: return "schrodinger_radial";
    case Problem::NLS: return "nls";
    case Problem::Wave: return "wave";
  }
  return "unknown";
}

inline Geometry geometry_of(Problem p) {
  switch (p) {
    case Problem::SchrodingerRadial: return Geometry::Ball3dRadial;
    case Problem::NLS:
    case Problem::Wave: return Geometry::IntervalNeumann;
    default: return Geometry::IntervalDirichlet;
  }
}

struct MuSpec {
  std::string builtin = "x_squared";
  std::vector<double> x, values;  // sample table when non-empty

  PotentialSpec make() const {
    if (!x.empty()) return io::table_potential(x, values);
    if (builtin == "x_squared") return potentials::x_squared();
    if (builtin == "sin_pi_x") return potentials::sin_pi_x();
    if (builtin == "one") return potentials::constant_one();
    fail(ErrorKind::Config, "unknown builtin mu '" + builtin + "'");
  }
};

struct TargetSpec {
  std::string kind = "perturbation";  // perturbation | reference | file
  std::optional<int> mode;
  double epsilon = 1e-2;
  fs::path path;
};

struct ControlSpec {
  std::string kind = "zero";  // zero | constant | sine | file
  double value = 0.0;
  double amplitude = 0.0;
  double frequency = 1.0;
  double phase = 0.0;
  int samples = 4096;
  fs::path path;
};

struct CheckMuSpec {
  int K = 200;
  double threshold = 0.0;
};

struct MomentSpec {
  std::string family;  // empty: explicit frequencies or file
  int K = 10;
  std::vector<double> frequencies;
  std::vector<cplx> targets;
  std::string target_kind = "explicit";  // explicit | zero | ones | random
  std::uint64_t seed = 1;
  fs::path file;
  std::optional<double> linear_moment;
  bool derivative_form = false;
  std::vector<double> T_sweep;
};

struct RunConfig {
  std::string name = "run";
  Problem problem = Problem::Schrodinger;
  int N = 32;
  double T = 1.0;
  MuSpec mu;
  TargetSpec target;
  ControlSpec control;
  PropagatorConfig propagator;
  NLSConfig nls;
  WaveConfig wave;
  std::string nonlinearity = "zero";
  NewtonSettings newton;
  SolverSettings solver;
  CheckMuSpec check_mu;
  MomentSpec moment;
  fs::path output_dir = "out";
  fs::path base_dir = ".";  // inputs resolve against the config file's directory

  BasisSpec basis() const { return make_basis(geometry_of(problem), N); }
  fs::path resolve(const fs::path& p) const { return p.is_absolute() ? p : base_dir / p; }
};

namespace detail {

inline void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) fail(ErrorKind::Config, where + " must be a JSON object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return it.key() == a; }))
      fail(ErrorKind::Config, "unknown key '" + it.key() + "' in " + where);
  }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw std::invalid_argument("number expected");
    } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      if (!v.is_number_integer()) throw std::invalid_argument("integer expected");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw std::invalid_argument("boolean expected");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw std::invalid_argument("string expected");
    }
    out = v.get<T>();
  } catch (const std::exception& e) {
    fail(ErrorKind::Config, where + "." + key + ": " + e.what());
  }
}

inline void read_path(const json& obj, const char* key, fs::path& out, const std::string& where) {
  std::string s;
  read(obj, key, s, where);
  if (obj.contains(key)) out = s;
}

inline Problem parse_problem(const std::string& s) {
  if (s == "schrodinger") return Problem::Schrodinger;
  if (s == "schrodinger_h5") return Problem::SchrodingerH5;
  if (s == "schrodinger_radial") return Problem::SchrodingerRadial;
  if (s == "nls") return Problem::NLS;
  if (s == "wave") return Problem::Wave;
  fail(ErrorKind::Config, "unknown problem '" + s + "'");
}

inline Scheme parse_scheme(const std::string& s) {
  if (s == "interaction_magnus") return Scheme::InteractionMagnus;
  if (s == "strang_split") return Scheme::StrangSplit;
  if (s == "duhamel_fixed_point") return Scheme::DuhamelFixedPoint;
  fail(ErrorKind::Config, "unknown scheme '" + s + "'");
}

inline std::vector<double> read_doubles(const json& v, const std::string& where) {
  if (!v.is_array()) fail(ErrorKind::Config, where + " must be an array of numbers");
  std::vector<double> out;
  for (const json& e : v) {
    if (!e.is_number()) fail(ErrorKind::Config, where + " must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

inline cplx read_complex(const json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  fail(ErrorKind::Config, where + " entries must be numbers or [re, im] pairs");
}

}  // namespace detail

/// Parses one run (no "runs" key); unknown keys are rejected at every level.
inline RunConfig parse_run_config(const json& j, const fs::path& base_dir = ".") {
  using detail::check_keys;
  using detail::read;
  check_keys(j, {"name", "problem", "basis", "mu", "T", "target", "control", "propagator", "nls", "wave",
                 "synthesis", "solver", "check_mu", "moment", "output_dir"},
             "config");
  RunConfig c;
  c.base_dir = base_dir;
  read(j, "name", c.name, "config");
  if (!j.contains("problem")) fail(ErrorKind::Config, "config.problem is required");
  std::string problem;
  read(j, "problem", problem, "config");
  c.problem = detail::parse_problem(problem);
  read(j, "T", c.T, "config");
  if (!(c.T > 0.0)) fail(ErrorKind::Config, "config.T must be positive");
  detail::read_path(j, "output_dir", c.output_dir, "config");

  if (j.contains("basis")) {
    const json& b = j["basis"];
    check_keys(b, {"N"}, "basis");
    read(b, "N", c.N, "basis");
    if (c.N < 2) fail(ErrorKind::Config, "basis.N must be at least 2");
  }
  if (j.contains("mu")) {
    const json& m = j["mu"];
    if (m.is_string()) {
      c.mu.builtin = m.get<std::string>();
    } else {
      check_keys(m, {"builtin", "table"}, "mu");
      read(m, "builtin", c.mu.builtin, "mu");
      if (m.contains("table")) {
        check_keys(m["table"], {"x", "mu"}, "mu.table");
        if (!m["table"].contains("x") || !m["table"].contains("mu"))
          fail(ErrorKind::Config, "mu.table needs both x and mu");
        c.mu.x = detail::read_doubles(m["table"]["x"], "mu.table.x");
        c.mu.values = detail::read_doubles(m["table"]["mu"], "mu.table.mu");
      }
    }
    c.mu.make();  // validates the name or the table
  }
  if (j.contains("target")) {
    const json& t = j["target"];
    check_keys(t, {"kind", "mode", "epsilon", "path"}, "target");
    read(t, "kind", c.target.kind, "target");
    if (t.contains("mode")) {
      int k = 0;
      read(t, "mode", k, "target");
      c.target.mode = k;
    }
    read(t, "epsilon", c.target.epsilon, "target");
    detail::read_path(t, "path", c.target.path, "target");
    if (c.target.kind != "perturbation" && c.target.kind != "reference" && c.target.kind != "file")
      fail(ErrorKind::Config, "target.kind must be perturbation, reference or file");
    if (c.target.kind == "file" && c.target.path.empty()) fail(ErrorKind::Config, "target.path is required");
  }
  if (j.contains("control")) {
    const json& u = j["control"];
    check_keys(u, {"kind", "value", "amplitude", "frequency", "phase", "samples", "path"}, "control");
    read(u, "kind", c.control.kind, "control");
    read(u, "value", c.control.value, "control");
    read(u, "amplitude", c.control.amplitude, "control");
    read(u, "frequency", c.control.frequency, "control");
    read(u, "phase", c.control.phase, "control");
    read(u, "samples", c.control.samples, "control");
    detail::read_path(u, "path", c.control.path, "control");
    const std::string& k = c.control.kind;
    if (k != "zero" && k != "constant" && k != "sine" && k != "file")
      fail(ErrorKind::Config, "control.kind must be zero, constant, sine or file");
    if (k == "file" && c.control.path.empty()) fail(ErrorKind::Config, "control.path is required");
    if (c.control.samples < 1) fail(ErrorKind::Config, "control.samples must be positive");
  }
  if (j.contains("propagator")) {
    const json& p = j["propagator"];
    check_keys(p, {"dt", "scheme", "fixed_point_tol", "max_fixed_point_iters", "max_norm_drift", "snapshot_stride"},
               "propagator");
    read(p, "dt", c.propagator.dt, "propagator");
    if (p.contains("scheme")) {
      std::string s;
      read(p, "scheme", s, "propagator");
      c.propagator.scheme = detail::parse_scheme(s);
    }
    read(p, "fixed_point_tol", c.propagator.fixed_point_tol, "propagator");
    read(p, "max_fixed_point_iters", c.propagator.max_fixed_point_iters, "propagator");
    read(p, "max_norm_drift", c.propagator.max_norm_drift, "propagator");
    read(p, "snapshot_stride", c.propagator.snapshot_stride, "propagator");
    c.propagator.validate();
  }
  if (j.contains("nls")) {
    const json& p = j["nls"];
    check_keys(p, {"dt", "budget_l2", "max_norm_drift", "snapshot_stride"}, "nls");
    read(p, "dt", c.nls.dt, "nls");
    read(p, "budget_l2", c.nls.budget_l2, "nls");
    read(p, "max_norm_drift", c.nls.max_norm_drift, "nls");
    read(p, "snapshot_stride", c.nls.snapshot_stride, "nls");
    c.nls.validate();
  }
  if (j.contains("wave")) {
    const json& p = j["wave"];
    check_keys(p, {"dt", "budget_l2", "snapshot_stride", "nonlinearity"}, "wave");
    read(p, "dt", c.wave.dt, "wave");
    read(p, "budget_l2", c.wave.budget_l2, "wave");
    read(p, "snapshot_stride", c.wave.snapshot_stride, "wave");
    read(p, "nonlinearity", c.nonlinearity, "wave");
    c.wave.validate();
    if (c.nonlinearity != "zero" && c.nonlinearity != "quadratic" && c.nonlinearity != "cubic")
      fail(ErrorKind::Config, "wave.nonlinearity must be zero, quadratic or cubic");
  }
  if (j.contains("synthesis")) {
    const json& s = j["synthesis"];
    check_keys(s, {"tol", "max_iters", "damping", "max_halvings"}, "synthesis");
    read(s, "tol", c.newton.tol, "synthesis");
    read(s, "max_iters", c.newton.max_iters, "synthesis");
    read(s, "damping", c.newton.damping, "synthesis");
    read(s, "max_halvings", c.newton.max_halvings, "synthesis");
    c.newton.validate();
  }
  if (j.contains("solver")) {
    const json& s = j["solver"];
    check_keys(s, {"output_samples", "truncation", "condition_cap", "residual_tol"}, "solver");
    read(s, "output_samples", c.solver.output_samples, "solver");
    read(s, "truncation", c.solver.truncation, "solver");
    read(s, "condition_cap", c.solver.condition_cap, "solver");
    read(s, "residual_tol", c.solver.residual_tol, "solver");
    if (c.solver.output_samples < 1) fail(ErrorKind::Config, "solver.output_samples must be positive");
  }
  if (j.contains("check_mu")) {
    const json& s = j["check_mu"];
    check_keys(s, {"K", "threshold"}, "check_mu");
    read(s, "K", c.check_mu.K, "check_mu");
    read(s, "threshold", c.check_mu.threshold, "check_mu");
  }
  if (j.contains("moment")) {
    const json& s = j["moment"];
    check_keys(s, {"family", "K", "frequencies", "targets", "target_kind", "seed", "file", "linear_moment",
                   "derivative_form", "T_sweep"},
               "moment");
    MomentSpec& m = c.moment;
    read(s, "family", m.family, "moment");
    read(s, "K", m.K, "moment");
    if (s.contains("frequencies")) m.frequencies = detail::read_doubles(s["frequencies"], "moment.frequencies");
    if (s.contains("targets")) {
      if (!s["targets"].is_array()) fail(ErrorKind::Config, "moment.targets must be an array");
      for (const json& e : s["targets"]) m.targets.push_back(detail::read_complex(e, "moment.targets"));
    }
    read(s, "target_kind", m.target_kind, "moment");
    read(s, "seed", m.seed, "moment");
    detail::read_path(s, "file", m.file, "moment");
    if (s.contains("linear_moment")) {
      double lm = 0.0;
      read(s, "linear_moment", lm, "moment");
      m.linear_moment = lm;
    }
    read(s, "derivative_form", m.derivative_form, "moment");
    if (s.contains("T_sweep")) m.T_sweep = detail::read_doubles(s["T_sweep"], "moment.T_sweep");
    const std::string& k = m.target_kind;
    if (k != "explicit" && k != "zero" && k != "ones" && k != "random")
      fail(ErrorKind::Config, "moment.target_kind must be explicit, zero, ones or random");
  }
  return c;
}

struct SweepEntry {
  RunConfig config;
  fs::path out_dir;
};

/// Expands "runs" (each entry merge-patched over the base document) into
/// independent entries with their own output directories.
inline std::vector<SweepEntry> expand_config(const json& doc, const fs::path& base_dir,
                                             const std::optional<fs::path>& out_override) {
  if (!doc.is_object()) fail(ErrorKind::Config, "config must be a JSON object");
  json base = doc;
  base.erase("runs");
  std::vector<SweepEntry> entries;
  if (!doc.contains("runs")) {
    RunConfig c = parse_run_config(base, base_dir);
    if (out_override) c.output_dir = *out_override;
    entries.push_back({c, c.output_dir});
    return entries;
  }
  const json& runs = doc["runs"];
  if (!runs.is_array() || runs.empty()) fail(ErrorKind::Config, "runs must be a non-empty array");
  std::set<std::string> names;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (!runs[i].is_object()) fail(ErrorKind::Config, "runs entries must be objects");
    if (runs[i].contains("runs") || runs[i].contains("output_dir"))
      fail(ErrorKind::Config, "runs entries may not set runs or output_dir");
    json merged = base;
    merged.merge_patch(runs[i]);
    if (!runs[i].contains("name")) merged["name"] = "run_" + std::to_string(i);
    RunConfig c = parse_run_config(merged, base_dir);
    if (out_override) c.output_dir = *out_override;
    if (!names.insert(c.name).second) fail(ErrorKind::Config, "duplicate run name '" + c.name + "'");
    entries.push_back({c, c.output_dir / c.name});
  }
  return entries;
}

// ---------------------------------------------------------------- inputs

inline ControlSignal make_control(const RunConfig& c) {
  const ControlSpec& s = c.control;
  const int M = s.samples;
  if (s.kind == "zero") return ControlSignal::zero(c.T, M);
  if (s.kind == "constant") {
    ControlExpansion e;
    e.poly = {s.value, 0.0, 0.0};
    return ControlSignal::from_expansion(c.T, M, e);
  }
  if (s.kind == "sine") {
    const double a = s.amplitude, w = s.frequency, ph = s.phase;
    return ControlSignal::from_function(c.T, M, [=](double t) { return a * std::sin(w * t + ph); });
  }
  ControlSignal u = io::read_control_csv(c.resolve(s.path));
  if (std::abs(u.T - c.T) > 1e-12 * c.T) fail(ErrorKind::Config, "control file horizon does not match config.T");
  return u;
}

inline int target_mode(const RunConfig& c, const BasisSpec& b) {
  const int k = c.target.mode.value_or(b.first_mode() + 1);
  b.check_mode(k);
  return k;
}

/// Unit-norm Schrödinger target.  The perturbation adds ε·i·B_1k·e^{-iλ_k T}
/// along mode k in the tangent space and lifts back to the sphere.
inline SpectralState schrodinger_target(const RunConfig& c, const CouplingMatrix& B) {
  const BasisSpec b = B.basis;
  const TangentProjector P = make_projector(b, c.T);
  if (c.target.kind == "file") {
    SpectralState full = io::read_state_csv(c.resolve(c.target.path), b);
    SpectralState t = truncate_target(full, b.N);
    if (std::abs(t.l2_norm() - 1.0) > 1e-10) fail(ErrorKind::Config, "target file state must have unit l2 norm");
    return t;
  }
  if (c.target.kind == "reference") return P.reference;
  const int k = target_mode(c, b);
  SpectralState tau(b);
  tau.at(k) = c.target.epsilon * cplx(0.0, 1.0) * B(b.first_mode(), k) * std::polar(1.0, -b.eigenvalue(k) * c.T);
  return sphere_lift(tangent_project(tau, P), P);
}

/// Physical NLS target ψ_f = e^{-iT}(1 + ε φ_k)/‖1 + ε φ_k‖.
inline SpectralState nls_target(const RunConfig& c, const BasisSpec& b) {
  if (c.target.kind == "file") {
    SpectralState s = truncate_target(io::read_state_csv(c.resolve(c.target.path), b), b.N);
    if (std::abs(s.l2_norm() - 1.0) > 1e-10) fail(ErrorKind::Config, "target file state must have unit l2 norm");
    return s;
  }
  SpectralState z(b);
  z.coeffs[0] = 1.0;
  if (c.target.kind == "perturbation") z.at(target_mode(c, b)) += c.target.epsilon;
  z.coeffs /= z.coeffs.norm();
  return std::polar(1.0, -c.T) * z;
}

/// Wave target (1 + ε φ_k, 0).
inline WaveState wave_target(const RunConfig& c, const BasisSpec& b) {
  if (c.target.kind == "file") return io::read_wave_csv(c.resolve(c.target.path), b);
  WaveState s = WaveState::reference(b);
  if (c.target.kind == "perturbation") s.w[b.slot(target_mode(c, b))] += c.target.epsilon;
  return s;
}

inline NonlinearitySpec make_nonlinearity(const std::string& name) {
  if (name == "quadratic") return nonlinearities::quadratic();
  if (name == "cubic") return nonlinearities::cubic();
  return nonlinearities::zero();
}

// ---------------------------------------------------------------- runs

struct RunResult {
  int exit_code = kOk;
  json summary;  // small per-entry record for the sweep summary
};

inline json base_summary(const RunConfig& c) {
  return json{{"name", c.name}, {"problem", to_string(c.problem)}, {"T", c.T}};
}

inline RunResult run_check_mu(const RunConfig& c, const fs::path& out) {
  const HypothesisReport r = check_hypothesis(c.mu.make(), c.basis(), c.check_mu.K, c.check_mu.threshold);
  io::json j = io::hypothesis_json(r);
  j["mu"] = c.mu.make().name;
  io::write_text(out / "hypothesis.json", io::dump_json(j));
  io::write_text(out / "weights.csv", io::hypothesis_csv(r));
  RunResult res;
  res.exit_code = r.pass ? kOk : kHypothesisError;
  res.summary = base_summary(c);
  res.summary["pass"] = r.pass;
  res.summary["c_min"] = r.c_min;
  return res;
}

inline RunResult run_simulate(const RunConfig& c, const fs::path& out) {
  const BasisSpec b = c.basis();
  const CouplingMatrix B = coupling_matrix(c.mu.make(), b);
  const ControlSignal u = make_control(c);
  RunResult res;
  res.summary = base_summary(c);
  io::json fin{{"problem", to_string(c.problem)}, {"T", c.T}};
  switch (c.problem) {
    case Problem::NLS: {
      const NLSTrajectory tr = propagate_nls(u, B, c.nls);
      io::write_text(out / "trajectory.csv", io::nls_trajectory_csv(tr));
      fin["steps"] = tr.steps;
      fin["max_norm_drift"] = tr.max_norm_drift;
      fin["zeta"] = io::state_json(tr.final_state());
      fin["psi"] = io::state_json(psi_from_zeta(tr.final_state(), c.T));
      res.summary["max_norm_drift"] = tr.max_norm_drift;
      break;
    }
    case Problem::Wave: {
      const WaveTrajectory tr =
          propagate_wave(WaveState::reference(b), u, B, make_nonlinearity(c.nonlinearity), c.wave);
      io::write_text(out / "trajectory.csv", io::wave_trajectory_csv(tr));
      fin["steps"] = tr.steps;
      fin["nonlinearity"] = c.nonlinearity;
      fin["state"] = io::wave_state_json(tr.states.back());
      break;
    }
    default: {
      const Trajectory tr = propagate(SpectralState::unit(b, b.first_mode()), u, B, c.propagator);
      io::write_text(out / "trajectory.csv", io::trajectory_csv(tr));
      fin["steps"] = tr.steps;
      fin["scheme"] = to_string(c.propagator.scheme);
      fin["max_norm_drift"] = tr.max_norm_drift;
      fin["state"] = io::state_json(tr.final_state());
      res.summary["max_norm_drift"] = tr.max_norm_drift;
      break;
    }
  }
  io::write_text(out / "final_state.json", io::dump_json(fin));
  return res;
}

inline RunResult run_synthesize(const RunConfig& c, const fs::path& out) {
  const BasisSpec b = c.basis();
  const PotentialSpec mu = c.mu.make();
  SynthesisReport rep;
  switch (c.problem) {
    case Problem::NLS: {
      NLSSynthesisConfig cfg{c.newton, c.nls, c.solver};
      rep = synthesize_nls(nls_target(c, b), mu, c.T, cfg);
      break;
    }
    case Problem::Wave: {
      WaveSynthesisConfig cfg{c.newton, c.wave, c.solver};
      rep = synthesize_wave(wave_target(c, b), mu, make_nonlinearity(c.nonlinearity), c.T, cfg);
      break;
    }
    default: {
      SynthesisConfig cfg;
      cfg.tol_h3 = c.newton.tol;
      cfg.max_iters = c.newton.max_iters;
      cfg.damping = c.newton.damping;
      cfg.max_halvings = c.newton.max_halvings;
      cfg.variant = c.problem == Problem::SchrodingerH5 ? SynthesisVariant::H10Control_H5Target
                                                         : SynthesisVariant::L2Control_H3Target;
      cfg.propagator = c.propagator;
      cfg.solver = c.solver;
      const CouplingMatrix B = coupling_matrix(mu, b);
      rep = synthesize(schrodinger_target(c, B), mu, c.T, cfg);
      break;
    }
  }
  io::json head{{"problem", to_string(c.problem)}, {"T", c.T}, {"N", c.N}, {"mu", mu.name},
                {"target", c.target.kind}};
  if (c.target.kind == "perturbation") head["epsilon"] = c.target.epsilon;
  io::json j = io::synthesis_json(rep);
  head.update(j);
  io::write_text(out / "report.json", io::dump_json(head));
  io::write_text(out / "control.csv", io::control_csv(rep.control));
  RunResult res;
  res.exit_code = rep.converged ? kOk : kNotConverged;
  res.summary = base_summary(c);
  res.summary["converged"] = rep.converged;
  res.summary["iterations"] = rep.iterations;
  if (c.target.kind == "perturbation") res.summary["epsilon"] = c.target.epsilon;
  res.summary["residual"] = rep.residual_history.empty() ? 0.0 : rep.residual_history.back();
  return res;
}

inline FrequencyFamily parse_family(const std::string& s) {
  if (s == "schrodinger") return FrequencyFamily::SchrodingerDirichlet;
  if (s == "schrodinger_radial") return FrequencyFamily::SchrodingerRadial;
  if (s == "nls_defocusing") return FrequencyFamily::NLSDefocusing;
  if (s == "nls_focusing") return FrequencyFamily::NLSFocusing;
  if (s == "wave") return FrequencyFamily::Wave;
  fail(ErrorKind::Config, "unknown frequency family '" + s + "'");
}

inline MomentProblem make_moment_problem(const RunConfig& c) {
  const MomentSpec& m = c.moment;
  MomentProblem p;
  p.T = c.T;
  p.linear_moment = m.linear_moment;
  p.derivative_form = m.derivative_form;
  std::vector<cplx> targets = m.targets;
  if (!m.family.empty()) {
    const FrequencyFamily fam = parse_family(m.family);
    const Geometry g = fam == FrequencyFamily::NLSDefocusing || fam == FrequencyFamily::NLSFocusing ||
                               fam == FrequencyFamily::Wave
                           ? Geometry::IntervalNeumann
                           : Geometry::IntervalDirichlet;
    p.frequencies = frequency_set(fam, make_basis(g, m.K + 1), m.K);
  } else if (!m.file.empty()) {
    const auto rows = io::detail::read_numeric_csv(c.resolve(m.file), 3);
    for (const auto& r : rows) {
      p.frequencies.push_back(r[0]);
      if (m.target_kind == "explicit") targets.push_back({r[1], r[2]});
    }
  } else {
    p.frequencies = m.frequencies;
  }
  const std::size_t n = p.frequencies.size();
  if (m.target_kind == "zero") {
    targets.assign(n, 0.0);
  } else if (m.target_kind == "ones") {
    targets.assign(n, 1.0);
  } else if (m.target_kind == "random") {
    std::mt19937_64 rng(m.seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    targets.clear();
    for (std::size_t k = 0; k < n; ++k) {
      const double re = dist(rng), im = dist(rng);
      targets.push_back(k == 0 ? cplx(re, 0.0) : cplx(re, im));
    }
  }
  p.targets = std::move(targets);
  p.validate();
  return p;
}

inline RunResult run_moment(const RunConfig& c, const fs::path& out) {
  const MomentProblem p = make_moment_problem(c);
  RunResult res;
  res.summary = base_summary(c);
  if (!c.moment.T_sweep.empty()) {
    std::ostringstream os;
    os << "T,c1,c2\n";
    for (double T : c.moment.T_sweep) {
      if (!(T > 0.0)) fail(ErrorKind::Config, "moment.T_sweep entries must be positive");
      const InghamBounds ib = ingham_bounds_empirical(p.frequencies, T);
      os << io::fmt(T) << ',' << io::fmt(ib.c1) << ',' << io::fmt(ib.c2) << '\n';
    }
    io::write_text(out / "ingham_sweep.csv", os.str());
  }
  const MomentSolution sol = solve_moments(p, c.solver);
  io::write_text(out / "moment.json", io::dump_json(io::moment_json(sol, false)));
  io::write_text(out / "control.csv", io::control_csv(sol.control));
  res.summary["max_residual"] = sol.max_residual();
  res.summary["gram_condition"] = sol.gram_condition;
  return res;
}

// ---------------------------------------------------------------- driver

enum class Command { CheckMu, Simulate, Synthesize, Moment };

inline RunResult run_entry(Command cmd, const SweepEntry& e) {
  RunResult res;
  try {
    switch (cmd) {
      case Command::CheckMu: res = run_check_mu(e.config, e.out_dir); break;
      case Command::Simulate: res = run_simulate(e.config, e.out_dir); break;
      case Command::Synthesize: res = run_synthesize(e.config, e.out_dir); break;
      case Command::Moment: res = run_moment(e.config, e.out_dir); break;
    }
  } catch (const Error& err) {
    res.exit_code = exit_code_for(err.kind());
    res.summary = base_summary(e.config);
    res.summary["error"] = to_string(err.kind());
    res.summary["message"] = err.what();
    io::json ej{{"error", to_string(err.kind())}, {"message", err.what()}, {"exit_code", res.exit_code}};
    try {
      io::write_text(e.out_dir / "error.json", io::dump_json(ej));
    } catch (const Error&) {
    }
  }
  res.summary["exit_code"] = res.exit_code;
  return res;
}

/// Worst outcome across entries: 3 > 4 > 2 > 0.
inline int combine_exit(const std::vector<RunResult>& rs) {
  auto rank = [](int code) { return code == kConfigError ? 3 : code == kHypothesisError ? 2 : code ? 1 : 0; };
  int best = kOk;
  for (const RunResult& r : rs)
    if (rank(r.exit_code) > rank(best)) best = r.exit_code;
  return best;
}

struct Options {
  Command command = Command::Simulate;
  fs::path config;
  int jobs = 1;
  std::optional<fs::path> out;
};

/// Runs a command end to end; returns the process exit code.
inline int run(const Options& opt, std::ostream& err = std::cerr) {
  std::vector<SweepEntry> entries;
  json doc;
  try {
    if (opt.jobs < 1) fail(ErrorKind::Config, "--jobs must be positive");
    const std::string text = io::read_text(opt.config);
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      fail(ErrorKind::Config, std::string("malformed JSON: ") + e.what());
    }
    entries = expand_config(doc, opt.config.has_parent_path() ? opt.config.parent_path() : fs::path("."), opt.out);
  } catch (const Error& e) {
    err << "bilictrl: " << to_string(e.kind()) << " error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  }

  std::vector<RunResult> results(entries.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < entries.size(); i = next++) {
      results[i] = run_entry(opt.command, entries[i]);
      if (results[i].summary.contains("message")) {
        std::lock_guard lock(err_mutex);
        err << "bilictrl: [" << entries[i].config.name << "] "
            << results[i].summary["error"].get<std::string>() << " error: "
            << results[i].summary["message"].get<std::string>() << '\n';
      }
    }
  };
  const int threads = std::min<int>(opt.jobs, static_cast<int>(entries.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  if (doc.contains("runs")) {
    io::json summary{{"entries", io::json::array()}};
    std::optional<double> largest;
    for (const RunResult& r : results) {
      summary["entries"].push_back(io::json::parse(r.summary.dump()));
      if (r.summary.value("converged", false) && r.summary.contains("epsilon")) {
        const double e = r.summary["epsilon"].get<double>();
        if (!largest || e > *largest) largest = e;
      }
    }
    if (opt.command == Command::Synthesize)
      summary["largest_converged_epsilon"] = largest ? io::json(*largest) : io::json(nullptr);
    summary["exit_code"] = combine_exit(results);
    try {
      io::write_text(entries.front().config.output_dir / "summary.json", io::dump_json(summary));
    } catch (const Error& e) {
      err << "bilictrl: " << e.what() << '\n';
      return kConfigError;
    }
  }
  return combine_exit(results);
}

}  // namespace bilictrl::cli

#endif  // BILICTRL_CLI_HPP
