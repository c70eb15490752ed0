#pragma once

// Dense complex linear algebra for small systems (n <= 16, superoperators up
// to 256 x 256): Hermitian Jacobi eigensolver, matrix exponential and
// column-stacking vectorization helpers.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "qsteer/errors.hpp"

namespace qsteer {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};

inline void require_square(const ComplexMatrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + " must be square");
  }
}

inline void require_same_shape(const ComplexMatrix& a, const ComplexMatrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::DimensionMismatch, what);
  }
}

/// Largest entrywise |m - m^dagger|.
inline double hermiticity_defect(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = i; j < m.cols(); ++j) {
      worst = std::max(worst, std::abs(m(i, j) - std::conj(m(j, i))));
    }
  }
  return worst;
}

inline bool is_hermitian(const ComplexMatrix& m, double tol = 1e-12) {
  return hermiticity_defect(m) <= tol;
}

inline ComplexMatrix hermitian_part(const ComplexMatrix& m) {
  return 0.5 * (m + m.adjoint());
}

inline ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) {
  return a * b - b * a;
}

/// Kronecker product a (x) b.
inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

/// Column-stacking vectorization: vec(m)[i + n*j] = m(i, j).
inline ComplexVector vectorize(const ComplexMatrix& m) {
  return Eigen::Map<const ComplexVector>(m.data(), m.size());
}

inline ComplexMatrix unvectorize(const ComplexVector& v, Eigen::Index n) {
  if (v.size() != n * n) {
    throw Error(ErrorCode::DimensionMismatch, "vector length is not n^2");
  }
  return Eigen::Map<const ComplexMatrix>(v.data(), n, n);
}

/// vec(A X B) = (B^T (x) A) vec(X) under column stacking.
inline ComplexMatrix left_right_superop(const ComplexMatrix& left, const ComplexMatrix& right) {
  return kron(right.transpose(), left);
}

struct HermitianEigen {
  RealVector values;       // ascending
  ComplexMatrix vectors;   // columns, orthonormal
};

/// Cyclic Jacobi diagonalization of a Hermitian matrix. Only the Hermitian
/// part of the input is used. Eigenvalues are returned ascending; ties keep
/// the order in which Jacobi leaves them on the diagonal.
inline HermitianEigen hermitian_eigen(const ComplexMatrix& input) {
  require_square(input, "hermitian_eigen input");
  const Eigen::Index n = input.rows();
  ComplexMatrix a = hermitian_part(input);
  ComplexMatrix v = ComplexMatrix::Identity(n, n);

  const double scale = std::max(a.norm(), std::numeric_limits<double>::min());
  const double eps = std::numeric_limits<double>::epsilon();
  constexpr int kMaxSweeps = 100;

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += std::norm(a(p, q));
    if (std::sqrt(off) <= eps * scale * 1e-2) break;

    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Complex apq = a(p, q);
        const double mag = std::abs(apq);
        if (mag <= eps * 1e-3 * scale) continue;
        const Complex phase = apq / mag;
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double theta = (aqq - app) / (2.0 * mag);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        // J = D * R with D = diag(1, conj(phase)) on (p, q) and R the real rotation.
        const Complex jpp = c;
        const Complex jpq = s;
        const Complex jqp = -s * std::conj(phase);
        const Complex jqq = c * std::conj(phase);

        // a <- a * J
        for (Eigen::Index k = 0; k < n; ++k) {
          const Complex akp = a(k, p);
          const Complex akq = a(k, q);
          a(k, p) = akp * jpp + akq * jqp;
          a(k, q) = akp * jpq + akq * jqq;
        }
        // a <- J^dagger * a
        for (Eigen::Index k = 0; k < n; ++k) {
          const Complex apk = a(p, k);
          const Complex aqk = a(q, k);
          a(p, k) = std::conj(jpp) * apk + std::conj(jqp) * aqk;
          a(q, k) = std::conj(jpq) * apk + std::conj(jqq) * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
        for (Eigen::Index k = 0; k < n; ++k) {
          const Complex vkp = v(k, p);
          const Complex vkq = v(k, q);
          v(k, p) = vkp * jpp + vkq * jqp;
          v(k, q) = vkp * jpq + vkq * jqq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return a(x, x).real() < a(y, y).real(); });

  HermitianEigen out{RealVector(n), ComplexMatrix(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = a(order[k], order[k]).real();
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

inline double min_eigenvalue(const ComplexMatrix& hermitian) {
  return hermitian_eigen(hermitian).values.minCoeff();
}

namespace detail {

inline double one_norm(const ComplexMatrix& m) {
  return m.cwiseAbs().colwise().sum().maxCoeff();
}

// Pade(13,13) with scaling and squaring.
inline ComplexMatrix expm_pade13(const ComplexMatrix& input) {
  static constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                 1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                 670442572800.0,      33522128640.0,       1323241920.0,
                                 40840800.0,          960960.0,            16380.0,
                                 182.0,               1.0};
  constexpr double kTheta13 = 5.371920351148152;
  const Eigen::Index n = input.rows();
  if (n == 0) return input;

  const double norm = one_norm(input);
  int squarings = 0;
  if (norm > kTheta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / kTheta13)));
  }
  const ComplexMatrix a = input / std::ldexp(1.0, squarings);
  const ComplexMatrix id = ComplexMatrix::Identity(n, n);
  const ComplexMatrix a2 = a * a;
  const ComplexMatrix a4 = a2 * a2;
  const ComplexMatrix a6 = a4 * a2;
  const ComplexMatrix u =
      a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
  const ComplexMatrix v =
      a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
  ComplexMatrix result = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < squarings; ++k) result = result * result;
  return result;
}

// exp(scale * h) for 2x2 Hermitian h = a0 I + a.sigma in closed form.
inline ComplexMatrix expm_hermitian_2x2(const ComplexMatrix& h, Complex scale) {
  const double a0 = 0.5 * (h(0, 0).real() + h(1, 1).real());
  const double az = 0.5 * (h(0, 0).real() - h(1, 1).real());
  const Complex off = h(0, 1);  // ax - i ay
  const double r = std::sqrt(az * az + std::norm(off));
  const Complex sr = scale * r;
  const Complex ch = std::cosh(sr);
  const Complex sh_over_r = (r > 0.0) ? std::sinh(sr) / r : scale;
  const Complex global = std::exp(scale * a0);
  ComplexMatrix out(2, 2);
  out(0, 0) = global * (ch + sh_over_r * az);
  out(1, 1) = global * (ch - sh_over_r * az);
  out(0, 1) = global * sh_over_r * off;
  out(1, 0) = global * sh_over_r * std::conj(off);
  return out;
}

inline ComplexMatrix expm_hermitian(const ComplexMatrix& h, Complex scale) {
  if (h.rows() == 2) return expm_hermitian_2x2(h, scale);
  const HermitianEigen eig = hermitian_eigen(h);
  ComplexVector d(eig.values.size());
  for (Eigen::Index k = 0; k < d.size(); ++k) d(k) = std::exp(scale * eig.values(k));
  return eig.vectors * d.asDiagonal() * eig.vectors.adjoint();
}

}  // namespace detail

/// exp(scale * m). Hermitian and anti-Hermitian inputs go through the
/// Jacobi spectral decomposition, everything else through Pade-13 scaling
/// and squaring.
inline ComplexMatrix matrix_exp(const ComplexMatrix& m, Complex scale = 1.0) {
  require_square(m, "matrix_exp input");
  const Eigen::Index n = m.rows();
  if (n == 0) return m;
  if (m.isZero(0.0) || scale == Complex(0.0)) return ComplexMatrix::Identity(n, n);

  const double tol = 1e-14 * std::max(1.0, m.cwiseAbs().maxCoeff());
  if (hermiticity_defect(m) <= tol) {
    return detail::expm_hermitian(hermitian_part(m), scale);
  }
  const ComplexMatrix h = kI * m;  // anti-Hermitian m = -i h with h Hermitian
  if (hermiticity_defect(h) <= tol) {
    return detail::expm_hermitian(hermitian_part(h), -kI * scale);
  }
  return detail::expm_pade13(scale * m);
}

/// Frobenius distance of u^dagger u from the identity.
inline double unitarity_defect(const ComplexMatrix& u) {
  return (u.adjoint() * u - ComplexMatrix::Identity(u.cols(), u.cols())).norm();
}

}  // namespace qsteer
