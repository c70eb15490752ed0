#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "qsteer/density.hpp"
#include "qsteer/errors.hpp"
#include "qsteer/linalg.hpp"
#include "qsteer/state_engineering.hpp"

namespace qsteer {

inline constexpr double kTracePreservationTol = 1e-10;

/// || sum_i K_i^dagger K_i - I ||_F
inline double trace_preservation_residual(const std::vector<ComplexMatrix>& ops) {
  if (ops.empty()) return std::numeric_limits<double>::infinity();
  const Eigen::Index n = ops.front().rows();
  ComplexMatrix sum = ComplexMatrix::Zero(n, n);
  for (const auto& k : ops) sum += k.adjoint() * k;
  return (sum - ComplexMatrix::Identity(n, n)).norm();
}

/// Completely positive trace-preserving map in operator-sum form,
/// Phi(rho) = sum_i K_i rho K_i^dagger.
class KrausMap {
 public:
  explicit KrausMap(std::vector<ComplexMatrix> operators, double tol = kTracePreservationTol)
      : operators_(std::move(operators)) {
    if (operators_.empty()) throw Error(ErrorCode::InvalidInput, "Kraus map needs at least one operator");
    const Eigen::Index n = operators_.front().rows();
    for (const auto& k : operators_) {
      if (k.rows() != n || k.cols() != n) throw Error(ErrorCode::DimensionMismatch, "Kraus operators must be n x n");
    }
    const double residual = trace_preservation_residual(operators_);
    if (residual > tol) {
      throw Error(ErrorCode::InvalidInput, "operators are not trace preserving (residual " +
                                               std::to_string(residual) + ")");
    }
  }

  const std::vector<ComplexMatrix>& operators() const noexcept { return operators_; }
  Eigen::Index dim() const noexcept { return operators_.front().rows(); }
  std::size_t size() const noexcept { return operators_.size(); }

  ComplexMatrix apply(const ComplexMatrix& x) const {
    if (x.rows() != dim() || x.cols() != dim()) throw Error(ErrorCode::DimensionMismatch, "map and operand differ");
    ComplexMatrix out = ComplexMatrix::Zero(dim(), dim());
    for (const auto& k : operators_) out += k * x * k.adjoint();
    return out;
  }

  /// Drops operators with Frobenius norm <= tol.
  KrausMap pruned(double tol = 0.0) const {
    std::vector<ComplexMatrix> kept;
    for (const auto& k : operators_)
      if (k.norm() > tol) kept.push_back(k);
    if (kept.empty()) kept.push_back(operators_.front());
    return KrausMap(std::move(kept));
  }

 private:
  std::vector<ComplexMatrix> operators_;
};

inline DensityMatrix apply_map(const KrausMap& phi, const DensityMatrix& rho) {
  if (phi.dim() != rho.dim()) throw Error(ErrorCode::DimensionMismatch, "map and state differ in dimension");
  return DensityMatrix(phi.apply(rho.matrix()));
}

/// K_ij = sqrt(p_i) |phi_i><phi_j| for rho_f = sum_i p_i |phi_i><phi_i|; the
/// n^2 operators are ordered i-major and zero rows (p_i = 0) are kept.
inline KrausMap all_to_one_map(const DensityMatrix& rho_f) {
  const SpectralDecomposition sd = spectral_decomposition(rho_f);
  std::vector<ComplexMatrix> ops;
  ops.reserve(sd.p.size() * sd.p.size());
  for (std::size_t i = 0; i < sd.p.size(); ++i) {
    const double weight = std::sqrt(std::max(sd.p[i], 0.0));
    for (std::size_t j = 0; j < sd.p.size(); ++j) ops.push_back(weight * sd.phi[i] * sd.phi[j].adjoint());
  }
  return KrausMap(std::move(ops));
}

using LinearMap = std::function<ComplexMatrix(const ComplexMatrix&)>;

/// C = sum_ij |i><j| (x) Phi(|i><j|), an n^2 x n^2 matrix.
inline ComplexMatrix choi_matrix(const LinearMap& map, Eigen::Index n) {
  ComplexMatrix choi = ComplexMatrix::Zero(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      ComplexMatrix unit = ComplexMatrix::Zero(n, n);
      unit(i, j) = 1.0;
      choi.block(i * n, j * n, n, n) = map(unit);
    }
  }
  return choi;
}

inline ComplexMatrix choi_matrix(const KrausMap& phi) {
  return choi_matrix([&](const ComplexMatrix& x) { return phi.apply(x); }, phi.dim());
}

struct PositivityReport {
  bool completely_positive = false;
  double min_eigenvalue = 0.0;
  RealVector eigenvalues;  // ascending
};

/// Choi-positivity test. Any operator-sum map passes by construction; the
/// LinearMap overload audits arbitrary linear actions.
inline PositivityReport is_completely_positive(const LinearMap& map, Eigen::Index n, double tol = 1e-10) {
  const ComplexMatrix choi = choi_matrix(map, n);
  PositivityReport out;
  if (!is_hermitian(choi, 1e-10)) {
    out.min_eigenvalue = -std::numeric_limits<double>::infinity();
    return out;
  }
  out.eigenvalues = hermitian_eigen(choi).values;
  out.min_eigenvalue = out.eigenvalues.minCoeff();
  out.completely_positive = out.min_eigenvalue >= -tol;
  return out;
}

inline PositivityReport is_completely_positive(const KrausMap& phi, double tol = 1e-10) {
  return is_completely_positive([&](const ComplexMatrix& x) { return phi.apply(x); }, phi.dim(), tol);
}

/// Largest distance between the scheme's output and Phi(rho) over seeded
/// random inputs: how closely the physical two-stage run realizes the map.
inline double compare_map_to_scheme(const QSystem& sys, const EngineeringPlan& pl, const KrausMap& phi,
                                    Stage2Mode mode, const std::vector<DensityMatrix>& inputs) {
  if (phi.dim() != sys.dim()) throw Error(ErrorCode::DimensionMismatch, "map and system differ in dimension");
  const CompiledPlan compiled = compile(sys, pl, mode);
  double worst = 0.0;
  for (const auto& rho : inputs) {
    const DensityMatrix physical = run_compiled(compiled, rho).final_state;
    worst = std::max(worst, hs_distance(physical, apply_map(phi, rho)));
  }
  return worst;
}

inline double compare_map_to_scheme(const QSystem& sys, const EngineeringPlan& pl, const KrausMap& phi,
                                    std::size_t trials, std::uint64_t seed, Stage2Mode mode) {
  return compare_map_to_scheme(sys, pl, phi, mode, random_initial_states(sys.dim(), trials, seed));
}

}  // namespace qsteer
