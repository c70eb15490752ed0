#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "qsteer/errors.hpp"
#include "qsteer/linalg.hpp"

namespace qsteer {

namespace units {
inline constexpr double kHbar = 1.0545718e-34;         // J s
inline constexpr double kSpeedOfLight = 2.99792458e8;  // m / s
inline constexpr double kPi = 3.14159265358979323846;

/// Dipole moment (C m) times field (V/m) as an angular frequency (rad/s).
inline constexpr double dipole_field_to_rad_per_s(double dipole_c_m, double field_v_per_m) {
  return dipole_c_m * field_v_per_m / kHbar;
}
}  // namespace units

/// n-level system with hbar = 1: energies and couplings in rad/s.
///
/// `coupling` is V in H = H0 + u(t) V, expressed per unit of the control
/// field (for a dipole, V = -mu / hbar in rad/s per V/m). `einstein_a(i, j)`
/// for i < j is the spontaneous j -> i rate in 1/s; the rest of the matrix is
/// ignored.
class QSystem {
 public:
  QSystem(std::vector<double> energies, ComplexMatrix coupling, RealMatrix einstein_a,
          bool generic = true, std::optional<std::vector<double>> h_eff = std::nullopt)
      : energies_(std::move(energies)),
        coupling_(std::move(coupling)),
        einstein_a_(std::move(einstein_a)),
        generic_(generic),
        h_eff_(std::move(h_eff)) {
    const auto n = static_cast<Eigen::Index>(energies_.size());
    if (n < 1) throw Error(ErrorCode::InvalidInput, "system needs at least one level");
    for (std::size_t i = 1; i < energies_.size(); ++i) {
      if (!(energies_[i] > energies_[i - 1])) {
        throw Error(ErrorCode::InvalidInput, "energies must be strictly increasing");
      }
    }
    if (coupling_.rows() != n || coupling_.cols() != n) {
      throw Error(ErrorCode::DimensionMismatch, "coupling must be n x n");
    }
    if (!is_hermitian(coupling_, 1e-12 * std::max(1.0, coupling_.cwiseAbs().maxCoeff()))) {
      throw Error(ErrorCode::InvalidInput, "coupling must be Hermitian");
    }
    if (einstein_a_.rows() != n || einstein_a_.cols() != n) {
      throw Error(ErrorCode::DimensionMismatch, "Einstein coefficient matrix must be n x n");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        if (!(einstein_a_(i, j) >= 0.0)) {
          throw Error(ErrorCode::InvalidInput, "Einstein coefficients must be nonnegative");
        }
      }
    }
    if (h_eff_ && static_cast<Eigen::Index>(h_eff_->size()) != n) {
      throw Error(ErrorCode::DimensionMismatch, "H_eff diagonal must have n entries");
    }
    if (generic_ && !transition_frequencies_distinct()) {
      throw Error(ErrorCode::InvalidInput, "system flagged generic but transition frequencies coincide");
    }
  }

  /// Two-level atom driven through its dipole: energies (0, omega),
  /// V = -(mu / hbar) sigma_x per V/m.
  static QSystem two_level_dipole(double omega, double einstein_a, double dipole_c_m) {
    ComplexMatrix v = ComplexMatrix::Zero(2, 2);
    v(0, 1) = v(1, 0) = -dipole_c_m / units::kHbar;
    RealMatrix a = RealMatrix::Zero(2, 2);
    a(0, 1) = einstein_a;
    return QSystem({0.0, omega}, v, a);
  }

  Eigen::Index dim() const noexcept { return static_cast<Eigen::Index>(energies_.size()); }
  const std::vector<double>& energies() const noexcept { return energies_; }
  const ComplexMatrix& coupling() const noexcept { return coupling_; }
  const RealMatrix& einstein_a() const noexcept { return einstein_a_; }
  double einstein_a(Eigen::Index i, Eigen::Index j) const { return einstein_a_(i, j); }
  bool generic() const noexcept { return generic_; }
  const std::optional<std::vector<double>>& h_eff() const noexcept { return h_eff_; }

  /// omega_ij = e_j - e_i for i < j.
  double transition_frequency(Eigen::Index i, Eigen::Index j) const {
    return energies_[static_cast<std::size_t>(j)] - energies_[static_cast<std::size_t>(i)];
  }

  ComplexMatrix h0() const {
    const Eigen::Index n = dim();
    ComplexMatrix h = ComplexMatrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) h(i, i) = energies_[static_cast<std::size_t>(i)];
    return h;
  }

  /// H0 + H_eff (H_eff diagonal, zero unless supplied).
  ComplexMatrix static_hamiltonian() const {
    ComplexMatrix h = h0();
    if (h_eff_) {
      for (Eigen::Index i = 0; i < dim(); ++i) h(i, i) += (*h_eff_)[static_cast<std::size_t>(i)];
    }
    return h;
  }

  bool transition_frequencies_distinct(double rel_tol = 1e-12) const {
    std::vector<double> omegas;
    for (Eigen::Index i = 0; i < dim(); ++i)
      for (Eigen::Index j = i + 1; j < dim(); ++j) omegas.push_back(transition_frequency(i, j));
    std::sort(omegas.begin(), omegas.end());
    for (std::size_t k = 1; k < omegas.size(); ++k) {
      if (omegas[k] - omegas[k - 1] <= rel_tol * std::abs(omegas[k])) return false;
    }
    return true;
  }

 private:
  std::vector<double> energies_;
  ComplexMatrix coupling_;
  RealMatrix einstein_a_;
  bool generic_;
  std::optional<std::vector<double>> h_eff_;
};

}  // namespace qsteer
