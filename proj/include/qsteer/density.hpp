#pragma once

#include <array>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "qsteer/errors.hpp"
#include "qsteer/linalg.hpp"

namespace qsteer {

/// Tolerances applied when a matrix is accepted as a density matrix.
struct DensityTolerance {
  double hermiticity = 1e-10;
  double trace = 1e-9;
  double min_eigenvalue = -1e-9;
};

/// Hermitian, unit-trace, positive semidefinite state. Construction checks
/// the invariants and stores the exactly Hermitian part of the input.
class DensityMatrix {
 public:
  explicit DensityMatrix(const ComplexMatrix& m, DensityTolerance tol = {}) {
    require_square(m, "density matrix");
    if (m.rows() == 0) throw Error(ErrorCode::InvalidInput, "density matrix must be non-empty");
    const double herm = hermiticity_defect(m);
    if (herm > tol.hermiticity) {
      throw Error(ErrorCode::InvalidInput, "density matrix not Hermitian (defect " + std::to_string(herm) + ")");
    }
    matrix_ = hermitian_part(m);
    const double tr = matrix_.trace().real();
    if (std::abs(tr - 1.0) > tol.trace) {
      throw Error(ErrorCode::InvalidInput, "density matrix trace " + std::to_string(tr) + " != 1");
    }
    const double lo = min_eigenvalue(matrix_);
    if (lo < tol.min_eigenvalue) {
      throw Error(ErrorCode::InvalidInput, "density matrix has negative eigenvalue " + std::to_string(lo));
    }
  }

  static DensityMatrix diagonal(const std::vector<double>& populations) {
    const auto n = static_cast<Eigen::Index>(populations.size());
    ComplexMatrix m = ComplexMatrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) m(i, i) = populations[static_cast<std::size_t>(i)];
    return DensityMatrix(m);
  }

  static DensityMatrix maximally_mixed(Eigen::Index n) {
    return DensityMatrix(ComplexMatrix::Identity(n, n) / static_cast<double>(n));
  }

  const ComplexMatrix& matrix() const noexcept { return matrix_; }
  Eigen::Index dim() const noexcept { return matrix_.rows(); }
  Complex operator()(Eigen::Index i, Eigen::Index j) const { return matrix_(i, j); }

  RealVector populations() const { return matrix_.diagonal().real(); }
  double purity() const { return (matrix_ * matrix_).trace().real(); }

 private:
  ComplexMatrix matrix_;
};

/// |psi><psi| for the normalized psi.
inline DensityMatrix density_from_pure(const ComplexVector& psi) {
  const double norm = psi.norm();
  if (psi.size() == 0 || !(norm > 0.0)) {
    throw Error(ErrorCode::InvalidInput, "state vector has zero norm");
  }
  const ComplexVector unit = psi / norm;
  return DensityMatrix(unit * unit.adjoint());
}

struct SpectralDecomposition {
  std::vector<double> p;            // descending
  std::vector<ComplexVector> phi;   // phi[k] belongs to p[k]
};

/// rho = sum_k p_k phi_k phi_k^dagger with p descending.
///
/// Eigenvectors inside a degenerate block (|p_k - p_l| <= 1e-10) are replaced
/// by Gram-Schmidt over the block projector applied to |0>, |1>, ... in index
/// order, so the basis does not depend on solver internals. Each vector is
/// phased so that its largest-magnitude component is real positive.
inline SpectralDecomposition spectral_decomposition(const DensityMatrix& rho) {
  constexpr double kDegenerate = 1e-10;
  const HermitianEigen eig = hermitian_eigen(rho.matrix());
  const Eigen::Index n = rho.dim();

  SpectralDecomposition out;
  out.p.reserve(static_cast<std::size_t>(n));
  out.phi.reserve(static_cast<std::size_t>(n));

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return eig.values(a) > eig.values(b); });

  std::size_t start = 0;
  while (start < order.size()) {
    std::size_t stop = start + 1;
    while (stop < order.size() &&
           std::abs(eig.values(order[start]) - eig.values(order[stop])) <= kDegenerate) {
      ++stop;
    }
    const std::size_t block = stop - start;
    std::vector<ComplexVector> basis;
    if (block == 1) {
      basis.push_back(eig.vectors.col(order[start]));
    } else {
      ComplexMatrix projector = ComplexMatrix::Zero(n, n);
      for (std::size_t k = start; k < stop; ++k) {
        const ComplexVector v = eig.vectors.col(order[k]);
        projector += v * v.adjoint();
      }
      for (Eigen::Index e = 0; e < n && basis.size() < block; ++e) {
        ComplexVector candidate = projector.col(e);
        for (const auto& b : basis) candidate -= b * b.dot(candidate);
        for (const auto& b : basis) candidate -= b * b.dot(candidate);
        const double norm = candidate.norm();
        if (norm > 1e-6) basis.push_back(candidate / norm);
      }
      if (basis.size() != block) {
        throw Error(ErrorCode::Internal, "degenerate eigenspace basis construction failed");
      }
    }
    for (std::size_t k = 0; k < block; ++k) {
      ComplexVector v = basis[k];
      Eigen::Index big = 0;
      v.cwiseAbs().maxCoeff(&big);
      v *= std::abs(v(big)) / v(big);
      out.p.push_back(eig.values(order[start + k]));
      out.phi.push_back(v);
    }
    start = stop;
  }
  return out;
}

/// Frobenius (Hilbert-Schmidt) distance.
inline double hs_distance(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim()) throw Error(ErrorCode::DimensionMismatch, "hs_distance operands differ in size");
  return (a.matrix() - b.matrix()).norm();
}

/// (x, y, z) with |0> at z = +1: x = 2 Re rho_01, y = 2 Im rho_10, z = rho_00 - rho_11.
inline std::array<double, 3> bloch_vector(const DensityMatrix& rho) {
  if (rho.dim() != 2) throw Error(ErrorCode::DimensionMismatch, "Bloch vector needs a 2x2 density matrix");
  return {2.0 * rho(0, 1).real(), 2.0 * rho(1, 0).imag(), (rho(0, 0) - rho(1, 1)).real()};
}

// Seeded random states.

template <class Rng>
ComplexVector random_state_vector(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  ComplexVector psi(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    psi(i) = Complex(re, im);
  }
  return psi / psi.norm();
}

template <class Rng>
DensityMatrix random_pure_state(Eigen::Index n, Rng& rng) {
  return density_from_pure(random_state_vector(n, rng));
}

/// Hilbert-Schmidt measure: G G^dagger / Tr(G G^dagger), G complex Ginibre.
template <class Rng>
DensityMatrix random_mixed_state(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  ComplexMatrix g(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      g(i, j) = Complex(re, im);
    }
  }
  const ComplexMatrix w = g * g.adjoint();
  return DensityMatrix(w / w.trace().real());
}

template <class Rng>
ComplexMatrix random_unitary(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  ComplexMatrix g(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      g(i, j) = Complex(re, im);
    }
  }
  Eigen::HouseholderQR<ComplexMatrix> qr(g);
  ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(n, n);
  const ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index k = 0; k < n; ++k) {
    const double mag = std::abs(r(k, k));
    if (mag > 0) q.col(k) *= r(k, k) / mag;
  }
  return q;
}

template <class Rng>
ComplexMatrix random_hermitian(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  ComplexMatrix g(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      g(i, j) = Complex(re, im);
    }
  }
  return hermitian_part(g);
}

}  // namespace qsteer
