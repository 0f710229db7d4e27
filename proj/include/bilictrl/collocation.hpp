#ifndef BILICTRL_COLLOCATION_HPP
#define BILICTRL_COLLOCATION_HPP

#include <Eigen/Dense>

#include <functional>

#include "bilictrl/errors.hpp"
#include "bilictrl/spectral_basis.hpp"

namespace bilictrl {

/// Midpoint grid x_j = (j + 1/2)/G with G = 2N for the Neumann basis.
/// On this grid the retained cosines are discretely orthonormal, so
/// c_k = (1/G) Σ_j f(x_j) φ_k(x_j) is exact for band-limited f.
class CosineGrid {
 public:
  explicit CosineGrid(const BasisSpec& basis) : basis_(basis), G_(2 * basis.N) {
    if (basis.geometry != Geometry::IntervalNeumann)
      fail(ErrorKind::BasisMismatch, "collocation grid expects the Neumann basis");
    phi_.resize(G_, basis.N);
    nodes_.resize(G_);
    for (int j = 0; j < G_; ++j) {
      nodes_[j] = (j + 0.5) / G_;
      for (int s = 0; s < basis.N; ++s) phi_(j, s) = eval_eigenfunction(basis, basis.mode(s), nodes_[j]);
    }
  }

  int size() const { return G_; }
  const Eigen::VectorXd& nodes() const { return nodes_; }

  Eigen::VectorXd sample(const std::function<double(double)>& f) const {
    Eigen::VectorXd v(G_);
    for (int j = 0; j < G_; ++j) v[j] = f(nodes_[j]);
    return v;
  }

  template <class Vec>
  auto synthesize(const Vec& coeffs) const { return (phi_ * coeffs).eval(); }

  template <class Vec>
  auto analyze(const Vec& values) const { return (phi_.transpose() * values / static_cast<double>(G_)).eval(); }

 private:
  BasisSpec basis_;
  int G_;
  Eigen::MatrixXd phi_;
  Eigen::VectorXd nodes_;
};

}  // namespace bilictrl

#endif  // BILICTRL_COLLOCATION_HPP
