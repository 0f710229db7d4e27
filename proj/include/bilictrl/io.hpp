#ifndef BILICTRL_IO_HPP
#define BILICTRL_IO_HPP

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bilictrl/coupling.hpp"
#include "bilictrl/errors.hpp"
#include "bilictrl/moment_solver.hpp"
#include "bilictrl/nls_dynamics.hpp"
#include "bilictrl/propagator.hpp"
#include "bilictrl/synthesis.hpp"
#include "bilictrl/wave_dynamics.hpp"

namespace bilictrl::io {

using json = nlohmann::ordered_json;

/// %.17g, so every double round-trips.
inline std::string fmt(double x) {
  if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline void escape(std::ostream& os, const std::string& s) {
  os << '"';
  for (unsigned char ch : s) {
    switch (ch) {
      case '"': os << "\\\""; break;
      case '\\': os << "\\\\"; break;
      case '\n': os << "\\n"; break;
      case '\t': os << "\\t"; break;
      case '\r': os << "\\r"; break;
      default:
        if (ch < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", ch);
          os << buf;
        } else {
          os << ch;
        }
    }
  }
  os << '"';
}

inline void dump(std::ostream& os, const json& j, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close(static_cast<std::size_t>(indent * depth), ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) { os << "{}"; return; }
      os << "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ",\n";
        first = false;
        os << pad;
        escape(os, it.key());
        os << ": ";
        dump(os, it.value(), indent, depth + 1);
      }
      os << '\n' << close << '}';
      return;
    }
    case json::value_t::array: {
      if (j.empty()) { os << "[]"; return; }
      // Arrays of scalars stay on one line.
      const bool flat = std::all_of(j.begin(), j.end(), [](const json& e) { return e.is_primitive(); });
      if (flat) {
        os << '[';
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) os << ", ";
          dump(os, j[i], indent, depth + 1);
        }
        os << ']';
        return;
      }
      os << "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) os << ",\n";
        os << pad;
        dump(os, j[i], indent, depth + 1);
      }
      os << '\n' << close << ']';
      return;
    }
    case json::value_t::number_float: {
      const double x = j.get<double>();
      if (std::isfinite(x)) os << fmt(x);
      else os << "null";
      return;
    }
    case json::value_t::string: escape(os, j.get<std::string>()); return;
    default: os << j.dump(); return;
  }
}

}  // namespace detail

/// JSON text with every float printed to 17 significant digits.
inline std::string dump_json(const json& j, int indent = 2) {
  std::ostringstream os;
  detail::dump(os, j, indent, 0);
  os << '\n';
  return os.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Config, "cannot write " + path.string());
  out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Config, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline json state_json(const SpectralState& s) {
  json modes = json::array(), re = json::array(), im = json::array();
  for (int i = 0; i < s.basis.N; ++i) {
    modes.push_back(s.basis.mode(i));
    re.push_back(s.coeffs[i].real());
    im.push_back(s.coeffs[i].imag());
  }
  return json{{"geometry", to_string(s.basis.geometry)}, {"N", s.basis.N}, {"modes", modes}, {"re", re}, {"im", im}};
}

inline json wave_state_json(const WaveState& s) {
  json w = json::array(), wt = json::array();
  for (int i = 0; i < s.basis.N; ++i) {
    w.push_back(s.w[i]);
    wt.push_back(s.wt[i]);
  }
  return json{{"geometry", to_string(s.basis.geometry)}, {"N", s.basis.N}, {"w", w}, {"wt", wt}, {"energy", s.energy()}};
}

inline json hypothesis_json(const HypothesisReport& r) {
  json j{{"geometry", to_string(r.basis.geometry)},
         {"K", r.modes.empty() ? 0 : r.modes.back()},
         {"threshold", r.threshold},
         {"c_min", r.c_min},
         {"argmin", r.argmin},
         {"min_abs_coupling", r.min_abs_coupling},
         {"pass", r.pass}};
  j["asymptote_estimate"] = r.asymptote_estimate ? json(*r.asymptote_estimate) : json(nullptr);
  return j;
}

inline std::string hypothesis_csv(const HypothesisReport& r) {
  std::ostringstream os;
  os << "k,coupling,w_k\n";
  for (std::size_t i = 0; i < r.modes.size(); ++i)
    os << r.modes[i] << ',' << fmt(r.coupling[i]) << ',' << fmt(r.weighted[i]) << '\n';
  return os.str();
}

inline json expansion_json(const ControlExpansion& e) {
  json amp = json::array();
  for (const cplx& a : e.amp) amp.push_back(complex_json(a));
  return json{{"poly", json::array({e.poly[0], e.poly[1], e.poly[2]})}, {"omega", e.omega}, {"amp", amp}};
}

inline json moment_json(const MomentSolution& s, bool include_samples = true) {
  json targets = json::array(), residuals = json::array(), coeffs = json::array();
  for (const cplx& d : s.problem.targets) targets.push_back(complex_json(d));
  for (const cplx& r : s.residuals) residuals.push_back(complex_json(r));
  for (const cplx& c : s.coefficients) coeffs.push_back(complex_json(c));
  json j{{"T", s.problem.T},
         {"frequencies", s.problem.frequencies},
         {"targets", targets},
         {"linear_moment", s.problem.linear_moment ? json(*s.problem.linear_moment) : json(nullptr)},
         {"derivative_form", s.problem.derivative_form},
         {"coefficients", coeffs},
         {"residuals", residuals},
         {"max_residual", s.max_residual()},
         {"gram_condition", s.gram_condition},
         {"ingham_bounds", json::array({s.ingham_c1, s.ingham_c2})},
         {"evaluation_bound", s.evaluation_bound},
         {"imag_leak", s.imag_leak},
         {"truncated_directions", s.truncated_modes},
         {"control_l2", s.control.l2_norm()},
         {"expansion", expansion_json(s.expansion)}};
  if (include_samples) j["control_samples"] = s.control.samples;
  return j;
}

inline json synthesis_json(const SynthesisReport& r) {
  json j{{"converged", r.converged},
         {"iterations", r.iterations},
         {"residual_norm", r.residual_norm},
         {"residual_history", r.residual_history},
         {"step_factors", r.step_factors},
         {"control_norm", r.control_norm},
         {"control_norm_kind", r.control_norm_kind},
         {"control_endpoints", json::array({r.control.value(0.0), r.control.value(r.control.T)})},
         {"terminal_residual",
          json{{"l2", r.terminal_l2}, {"h2", r.terminal_h2}, {"h3", r.terminal_h3}, {"h5", r.terminal_h5}}},
         {"terminal_norm_drift", r.terminal_norm_drift}};
  if (r.residual_norm == "h3xh2") j["terminal_residual"]["h3xh2"] = r.terminal_product;
  if (!r.message.empty()) j["message"] = r.message;
  j["terminal_state"] = state_json(r.terminal_state);
  if (r.terminal_velocity) j["terminal_velocity"] = state_json(*r.terminal_velocity);
  if (r.control.expansion) j["control_expansion"] = expansion_json(*r.control.expansion);
  return j;
}

inline std::string control_csv(const ControlSignal& u) {
  std::ostringstream os;
  os << "t,u\n";
  for (int m = 0; m <= u.intervals(); ++m) os << fmt(u.time(m)) << ',' << fmt(u.samples[m]) << '\n';
  return os.str();
}

/// `t,norm_l2,norm_h3,re_c<k>,im_c<k>,...` with physical mode indices.
inline std::string trajectory_csv(const Trajectory& tr) {
  std::ostringstream os;
  const BasisSpec& b = tr.states.front().basis;
  os << "t,norm_l2,norm_h3";
  for (int i = 0; i < b.N; ++i) os << ",re_c" << b.mode(i) << ",im_c" << b.mode(i);
  os << '\n';
  for (std::size_t r = 0; r < tr.times.size(); ++r) {
    os << fmt(tr.times[r]) << ',' << fmt(tr.norm_l2[r]) << ',' << fmt(tr.norm_h3[r]);
    for (int i = 0; i < b.N; ++i) os << ',' << fmt(tr.states[r].coeffs[i].real()) << ',' << fmt(tr.states[r].coeffs[i].imag());
    os << '\n';
  }
  return os.str();
}

/// NLS: norm_l2 is the physical norm ‖1+ζ‖, coefficients are those of ζ.
inline std::string nls_trajectory_csv(const NLSTrajectory& tr) {
  std::ostringstream os;
  const BasisSpec& b = tr.states.front().basis;
  os << "t,norm_l2,norm_h2";
  for (int i = 0; i < b.N; ++i) os << ",re_c" << b.mode(i) << ",im_c" << b.mode(i);
  os << '\n';
  for (std::size_t r = 0; r < tr.times.size(); ++r) {
    os << fmt(tr.times[r]) << ',' << fmt(tr.physical_norm[r]) << ',' << fmt(tr.norm_h2[r]);
    for (int i = 0; i < b.N; ++i) os << ',' << fmt(tr.states[r].coeffs[i].real()) << ',' << fmt(tr.states[r].coeffs[i].imag());
    os << '\n';
  }
  return os.str();
}

/// `t,energy,w_c0,wt_c0,...`
inline std::string wave_trajectory_csv(const WaveTrajectory& tr) {
  std::ostringstream os;
  const BasisSpec& b = tr.states.front().basis;
  os << "t,energy";
  for (int i = 0; i < b.N; ++i) os << ",w_c" << b.mode(i) << ",wt_c" << b.mode(i);
  os << '\n';
  for (std::size_t r = 0; r < tr.times.size(); ++r) {
    os << fmt(tr.times[r]) << ',' << fmt(tr.energy[r]);
    for (int i = 0; i < b.N; ++i) os << ',' << fmt(tr.states[r].w[i]) << ',' << fmt(tr.states[r].wt[i]);
    os << '\n';
  }
  return os.str();
}

namespace detail {

inline std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path, std::size_t columns) {
  std::istringstream in(read_text(path));
  std::string line;
  std::vector<std::vector<double>> rows;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {  // first line is a header if it does not parse
      header = false;
      char* end = nullptr;
      std::strtod(line.c_str(), &end);
      if (end == line.c_str()) continue;
    }
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      char* end = nullptr;
      const double x = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) fail(ErrorKind::Config, "non-numeric cell '" + cell + "' in " + path.string());
      row.push_back(x);
    }
    if (row.size() != columns)
      fail(ErrorKind::Config, "expected " + std::to_string(columns) + " columns in " + path.string());
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(ErrorKind::Config, "no data rows in " + path.string());
  return rows;
}

}  // namespace detail

/// `t,u` samples on a uniform grid starting at 0.
inline ControlSignal read_control_csv(const std::filesystem::path& path, Interpolation interp = Interpolation::PiecewiseLinear) {
  const auto rows = detail::read_numeric_csv(path, 2);
  if (rows.size() < 2) fail(ErrorKind::Config, "control file needs at least two samples");
  ControlSignal u;
  u.interpolation = interp;
  u.T = rows.back()[0];
  const int M = static_cast<int>(rows.size()) - 1;
  for (int m = 0; m <= M; ++m) {
    const double expect = u.T * m / M;
    if (std::abs(rows[m][0] - expect) > 1e-9 * std::max(1.0, u.T))
      fail(ErrorKind::Config, "control samples must lie on a uniform grid starting at t=0");
    u.samples.push_back(rows[m][1]);
  }
  u.validate();
  return u;
}

/// `k,re,im` rows for a spectral state; modes not listed are zero.
inline SpectralState read_state_csv(const std::filesystem::path& path, const BasisSpec& basis) {
  const auto rows = detail::read_numeric_csv(path, 3);
  int kmax = basis.last_mode();
  for (const auto& r : rows) kmax = std::max(kmax, static_cast<int>(r[0]));
  const BasisSpec wide{basis.geometry, kmax - basis.first_mode() + 1};
  SpectralState s(wide);
  for (const auto& r : rows) s.at(static_cast<int>(r[0])) = cplx(r[1], r[2]);
  return s;
}

/// `k,w,wt` rows for a wave state.
inline WaveState read_wave_csv(const std::filesystem::path& path, const BasisSpec& basis) {
  const auto rows = detail::read_numeric_csv(path, 3);
  WaveState s(basis);
  for (const auto& r : rows) {
    const int k = static_cast<int>(r[0]);
    basis.check_mode(k);
    s.w[basis.slot(k)] = r[1];
    s.wt[basis.slot(k)] = r[2];
  }
  return s;
}

/// Table-driven μ: piecewise-linear interpolation of (x, μ) samples.
inline PotentialSpec table_potential(std::vector<double> x, std::vector<double> mu) {
  if (x.size() < 2 || x.size() != mu.size()) fail(ErrorKind::Config, "mu table needs matching x and mu arrays (>= 2)");
  for (std::size_t i = 1; i < x.size(); ++i)
    if (!(x[i] > x[i - 1])) fail(ErrorKind::Config, "mu table x must be strictly increasing");
  if (x.front() > 0.0 || x.back() < 1.0) fail(ErrorKind::Config, "mu table must cover [0,1]");
  PotentialSpec p;
  p.name = "table";
  p.breakpoints = x;
  p.evaluator = [x = std::move(x), mu = std::move(mu)](double t) {
    const auto it = std::upper_bound(x.begin(), x.end(), t);
    std::size_t i = std::clamp<std::size_t>(static_cast<std::size_t>(it - x.begin()), 1, x.size() - 1);
    const double a = (t - x[i - 1]) / (x[i] - x[i - 1]);
    return (1.0 - a) * mu[i - 1] + a * mu[i];
  };
  return p;
}

}  // namespace bilictrl::io

#endif  // BILICTRL_IO_HPP
