#pragma once

// Incoherent-radiation master equation:
//
//   d rho/dt = -i [H0 + H_eff, rho]
//              + sum_{i<j} A_ij [ (n_ij + 1) L_{Q_ij}(rho) + n_ij L_{Q_ji}(rho) ]
//
// with Q_ij = |i><j| and L_Q(rho) = 2 Q rho Q^dagger - Q^dagger Q rho - rho Q^dagger Q.
// Expanding the dissipator gives population rates 2 A_ij (n_ij + 1) for j -> i
// and 2 A_ij n_ij for i -> j; coherence rho_ln decays at half the sum of the
// total outflow rates of levels l and n.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "qsteer/density.hpp"
#include "qsteer/errors.hpp"
#include "qsteer/linalg.hpp"
#include "qsteer/system.hpp"

namespace qsteer {

inline constexpr double kDefaultNMax = 1e6;

/// Photon occupation n_ij at each transition frequency omega_ij, i < j.
class SpectralDensity {
 public:
  explicit SpectralDensity(Eigen::Index n, double n_max = kDefaultNMax)
      : occupations_(RealMatrix::Zero(n, n)), n_max_(n_max) {
    if (n < 1) throw Error(ErrorCode::InvalidInput, "spectral density needs n >= 1");
    if (!(n_max > 0.0)) throw Error(ErrorCode::InvalidInput, "n_max must be positive");
  }

  /// Uniform occupation on every transition.
  static SpectralDensity uniform(Eigen::Index n, double value, double n_max = kDefaultNMax) {
    SpectralDensity sd(n, n_max);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) sd.set(i, j, value);
    return sd;
  }

  Eigen::Index dim() const noexcept { return occupations_.rows(); }
  double n_max() const noexcept { return n_max_; }

  double operator()(Eigen::Index i, Eigen::Index j) const {
    check_pair(i, j);
    return occupations_(i, j);
  }

  void set(Eigen::Index i, Eigen::Index j, double value) {
    check_pair(i, j);
    if (!(value >= 0.0) || value > n_max_) {
      throw Error(ErrorCode::InvalidInput, "occupation must lie in [0, n_max]");
    }
    occupations_(i, j) = value;
  }

 private:
  void check_pair(Eigen::Index i, Eigen::Index j) const {
    if (!(0 <= i && i < j && j < dim())) {
      throw Error(ErrorCode::InvalidInput, "occupation index must satisfy 0 <= i < j < n");
    }
  }

  RealMatrix occupations_;
  double n_max_;
};

/// Generator acting on column-stacked density matrices. `dissipative` holds
/// the radiation part alone; `generator` adds -i[H0 + H_eff, .].
struct Liouvillian {
  Eigen::Index n = 0;
  ComplexMatrix generator;
  ComplexMatrix dissipative;
};

/// rates(i, j) is the population transfer rate j -> i (i != j); each column
/// sums to zero.
struct RateMatrix {
  RealMatrix rates;
};

struct TrajectoryPoint {
  double t;
  DensityMatrix rho;
};
using Trajectory = std::vector<TrajectoryPoint>;

namespace detail {

inline void check_dims(const QSystem& sys, const SpectralDensity& occ) {
  if (sys.dim() != occ.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "spectral density and system differ in dimension");
  }
}

// Superoperator of L_Q for the column-stacked convention.
inline ComplexMatrix lindblad_term(const ComplexMatrix& q) {
  const Eigen::Index n = q.rows();
  const ComplexMatrix id = ComplexMatrix::Identity(n, n);
  const ComplexMatrix qdq = q.adjoint() * q;
  return 2.0 * kron(q.conjugate(), q) - kron(id, qdq) - kron(qdq.transpose(), id);
}

inline ComplexMatrix transition_operator(Eigen::Index n, Eigen::Index i, Eigen::Index j) {
  ComplexMatrix q = ComplexMatrix::Zero(n, n);
  q(i, j) = 1.0;
  return q;
}

}  // namespace detail

inline Liouvillian build_dissipator(const QSystem& sys, const SpectralDensity& occ) {
  detail::check_dims(sys, occ);
  const Eigen::Index n = sys.dim();
  const Eigen::Index n2 = n * n;

  Liouvillian out;
  out.n = n;
  out.dissipative = ComplexMatrix::Zero(n2, n2);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double a = sys.einstein_a(i, j);
      if (a == 0.0) continue;
      const double nij = occ(i, j);
      out.dissipative += a * (nij + 1.0) * detail::lindblad_term(detail::transition_operator(n, i, j));
      if (nij != 0.0) {
        out.dissipative += a * nij * detail::lindblad_term(detail::transition_operator(n, j, i));
      }
    }
  }
  const ComplexMatrix h = sys.static_hamiltonian();
  const ComplexMatrix id = ComplexMatrix::Identity(n, n);
  out.generator = -kI * (kron(id, h) - kron(h.transpose(), id)) + out.dissipative;
  return out;
}

inline RateMatrix pauli_generator(const QSystem& sys, const SpectralDensity& occ) {
  detail::check_dims(sys, occ);
  const Eigen::Index n = sys.dim();
  RealMatrix w = RealMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double a = sys.einstein_a(i, j);
      const double nij = occ(i, j);
      w(i, j) = 2.0 * a * (nij + 1.0);  // j -> i, emission
      w(j, i) = 2.0 * a * nij;          // i -> j, absorption
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    double out_rate = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (i != j) out_rate += w(i, j);
    w(j, j) = -out_rate;
  }
  return RateMatrix{w};
}

/// Gamma(l, n) = decay rate of rho_ln: half the summed outflow of levels l and n.
inline RealMatrix coherence_decay_rates(const QSystem& sys, const SpectralDensity& occ) {
  const RealMatrix w = pauli_generator(sys, occ).rates;
  const Eigen::Index n = w.rows();
  RealMatrix gamma = RealMatrix::Zero(n, n);
  for (Eigen::Index l = 0; l < n; ++l) {
    for (Eigen::Index m = 0; m < n; ++m) {
      if (l != m) gamma(l, m) = -0.5 * (w(l, l) + w(m, m));
    }
  }
  return gamma;
}

/// exp(dt L). When the coherent part is diagonal and commutes with the
/// dissipator it is exponentiated exactly as phases, so large h0 dt does not
/// pass through scaling and squaring.
inline ComplexMatrix step_propagator(const Liouvillian& gen, double dt) {
  const ComplexMatrix coherent = gen.generator - gen.dissipative;
  const ComplexVector diag = coherent.diagonal();
  const double off = (coherent - ComplexMatrix(diag.asDiagonal())).cwiseAbs().maxCoeff();
  if (off == 0.0) {
    const ComplexMatrix comm = diag.asDiagonal() * gen.dissipative - gen.dissipative * diag.asDiagonal();
    const double scale = diag.cwiseAbs().maxCoeff() * gen.dissipative.cwiseAbs().maxCoeff();
    if (comm.cwiseAbs().maxCoeff() <= 1e-14 * scale) {
      ComplexVector phases(diag.size());
      for (Eigen::Index k = 0; k < diag.size(); ++k) phases(k) = std::exp(diag(k) * dt);
      return phases.asDiagonal() * matrix_exp(gen.dissipative, dt);
    }
  }
  return matrix_exp(gen.generator, dt);
}

/// rho(t_k) = exp(t_k L) rho0 at `samples` uniform times from 0 to t inclusive.
/// The same step propagator exp(dt L) is reused between samples.
inline Trajectory propagate(const Liouvillian& gen, const DensityMatrix& rho0, double t, std::size_t samples) {
  if (!(t >= 0.0)) throw Error(ErrorCode::InvalidInput, "propagation time must be nonnegative");
  if (rho0.dim() != gen.n) throw Error(ErrorCode::DimensionMismatch, "state and generator differ in dimension");
  Trajectory out;
  if (t == 0.0) {
    out.push_back({0.0, rho0});
    return out;
  }
  if (samples < 2) throw Error(ErrorCode::InvalidInput, "need at least two samples for t > 0");
  const double dt = t / static_cast<double>(samples - 1);
  const ComplexMatrix step = step_propagator(gen, dt);
  out.reserve(samples);
  out.push_back({0.0, rho0});
  ComplexVector v = vectorize(rho0.matrix());
  for (std::size_t k = 1; k < samples; ++k) {
    v = step * v;
    const double tk = (k + 1 == samples) ? t : dt * static_cast<double>(k);
    out.push_back({tk, DensityMatrix(unvectorize(v, gen.n))});
  }
  return out;
}

/// Unique null vector of the generator as a density matrix.
inline DensityMatrix stationary_state(const Liouvillian& gen) {
  const Eigen::Index n2 = gen.generator.rows();
  // Row equilibration leaves the kernel unchanged and keeps fast commutator
  // rows from swamping the dissipative ones.
  ComplexMatrix scaled = gen.generator;
  for (Eigen::Index r = 0; r < n2; ++r) {
    const double norm = scaled.row(r).norm();
    if (norm > 0.0) scaled.row(r) /= norm;
  }
  Eigen::JacobiSVD<ComplexMatrix> svd(scaled, Eigen::ComputeFullV);
  const RealVector& sv = svd.singularValues();
  const double tol = 1e-10 * std::max(sv(0), 1.0);
  Eigen::Index kernel = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv(k) <= tol) ++kernel;
  if (kernel != 1) {
    throw Error(ErrorCode::NonUniqueSteadyState,
                "generator kernel has dimension " + std::to_string(kernel));
  }
  const ComplexVector null = svd.matrixV().col(n2 - 1);
  ComplexMatrix rho = unvectorize(null, gen.n);
  rho /= rho.trace();
  return DensityMatrix(hermitian_part(rho));
}

/// Radiative energy density per unit angular frequency, hbar w n w^2 / (pi^2 c^3).
inline double energy_density(double omega, double n_omega) {
  const double c = units::kSpeedOfLight;
  return units::kHbar * omega * n_omega * omega * omega / (units::kPi * units::kPi * c * c * c);
}

/// Slowest nonzero relaxation rate of build_dissipator(sys, occ): the
/// smaller of the smallest coherence decay rate and the smallest nonzero
/// population-relaxation rate. Throws ZeroGap when the dynamics does not mix.
inline double spectral_gap(const QSystem& sys, const SpectralDensity& occ) {
  const RealMatrix w = pauli_generator(sys, occ).rates;
  const Eigen::Index n = w.rows();
  if (n == 1) throw Error(ErrorCode::ZeroGap, "a single level has no relaxation");
  const double scale = std::max(w.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  const double zero = 1e-12 * scale;

  Eigen::EigenSolver<RealMatrix> es(w, false);
  double gap = std::numeric_limits<double>::infinity();
  int zeros = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double rate = -es.eigenvalues()(k).real();
    if (std::abs(rate) <= zero) {
      ++zeros;
    } else {
      gap = std::min(gap, rate);
    }
  }
  if (zeros != 1 || !(w.cwiseAbs().maxCoeff() > 0.0)) {
    throw Error(ErrorCode::ZeroGap, "population dynamics is not mixing");
  }
  const RealMatrix gamma = coherence_decay_rates(sys, occ);
  for (Eigen::Index l = 0; l < n; ++l) {
    for (Eigen::Index m = l + 1; m < n; ++m) {
      if (gamma(l, m) <= zero) throw Error(ErrorCode::ZeroGap, "a coherence does not decay");
      gap = std::min(gap, gamma(l, m));
    }
  }
  return gap;
}

}  // namespace qsteer
