#ifndef BILICTRL_ERRORS_HPP
#define BILICTRL_ERRORS_HPP

#include <complex>
#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>

namespace bilictrl {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;

enum class ErrorKind {
  Index,          // mode index outside the basis range
  Domain,         // point outside the spatial domain
  BasisMismatch,  // operands live on different bases
  Accuracy,       // quadrature or residual tolerance not met
  Convergence,    // fixed-point / Newton did not converge
  IllPosed,       // Gram system too ill-conditioned
  Hypothesis,     // coupling coefficient vanishes
  GapCondition,   // horizon too short for the frequency gap
  Config,         // invalid configuration or budget
  Numeric         // linear solve failure, non-finite values
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Index: return "index";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::BasisMismatch: return "basis-mismatch";
    case ErrorKind::Accuracy: return "accuracy";
    case ErrorKind::Convergence: return "convergence";
    case ErrorKind::IllPosed: return "ill-posed";
    case ErrorKind::Hypothesis: return "hypothesis";
    case ErrorKind::GapCondition: return "gap-condition";
    case ErrorKind::Config: return "config";
    case ErrorKind::Numeric: return "numeric";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

/// Sink for non-fatal diagnostics (spectral tail leak, Ingham estimates, ...).
/// Replace to silence or capture warnings; the default writes to stderr.
inline std::function<void(const std::string&)>& warning_sink() {
  static std::function<void(const std::string&)> sink =
      [](const std::string& msg) { std::cerr << "bilictrl: warning: " << msg << '\n'; };
  return sink;
}

inline void warn(const std::string& msg) {
  if (warning_sink()) warning_sink()(msg);
}

}  // namespace bilictrl

#endif  // BILICTRL_ERRORS_HPP
