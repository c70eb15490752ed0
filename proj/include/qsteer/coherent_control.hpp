#pragma once

// Coherent control: d rho/dt = -i [H0 + u(t) V, rho], unitary controllability
// via the Lie-algebra rank condition, and stage-2 unitaries/pulses.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "qsteer/density.hpp"
#include "qsteer/errors.hpp"
#include "qsteer/linalg.hpp"
#include "qsteer/open_dynamics.hpp"
#include "qsteer/system.hpp"

namespace qsteer {

enum class Envelope { Constant };

/// u(t) = amplitude * cos(carrier * t + phase) for 0 <= t <= duration, with t
/// measured from the start of the pulse. The amplitude is in the field units
/// that QSystem::coupling() is expressed per (V/m for dipole couplings).
struct Pulse {
  double amplitude = 0.0;
  double carrier = 0.0;
  double duration = 0.0;
  double phase = 0.0;
  Envelope envelope = Envelope::Constant;

  double field(double t) const { return amplitude * std::cos(carrier * t + phase); }

  void validate() const {
    if (!(duration >= 0.0)) throw Error(ErrorCode::InvalidInput, "pulse duration must be nonnegative");
    if (!(amplitude >= 0.0)) throw Error(ErrorCode::InvalidInput, "pulse amplitude must be nonnegative");
  }
};

class UnitaryOperator {
 public:
  explicit UnitaryOperator(ComplexMatrix u, double tol = 1e-10) : matrix_(std::move(u)) {
    require_square(matrix_, "unitary");
    const double defect = unitarity_defect(matrix_);
    if (defect > tol) {
      throw Error(ErrorCode::InvalidInput, "matrix is not unitary (defect " + std::to_string(defect) + ")");
    }
  }

  static UnitaryOperator identity(Eigen::Index n) { return UnitaryOperator(ComplexMatrix::Identity(n, n)); }

  const ComplexMatrix& matrix() const noexcept { return matrix_; }
  Eigen::Index dim() const noexcept { return matrix_.rows(); }

 private:
  ComplexMatrix matrix_;
};

inline DensityMatrix apply_unitary(const UnitaryOperator& u, const DensityMatrix& rho) {
  if (u.dim() != rho.dim()) throw Error(ErrorCode::DimensionMismatch, "unitary and state differ in dimension");
  return DensityMatrix(u.matrix() * rho.matrix() * u.matrix().adjoint());
}

/// U = sum_i |phi_i><i|, i.e. the phi are the columns of U.
inline UnitaryOperator basis_rotation_unitary(const std::vector<ComplexVector>& phi) {
  const auto n = static_cast<Eigen::Index>(phi.size());
  if (n == 0) throw Error(ErrorCode::InvalidInput, "empty basis");
  ComplexMatrix u(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (phi[static_cast<std::size_t>(k)].size() != n) {
      throw Error(ErrorCode::DimensionMismatch, "basis vectors must have length n");
    }
    u.col(k) = phi[static_cast<std::size_t>(k)];
  }
  const double defect = (u.adjoint() * u - ComplexMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
  if (defect > 1e-10) throw Error(ErrorCode::InvalidInput, "basis vectors are not orthonormal");
  return UnitaryOperator(u, 1e-9);
}

/// Largest integration step that still resolves the carrier and the free
/// evolution with 40 samples per period.
inline double max_coherent_step(const QSystem& sys, const Pulse& pulse) {
  double fastest = std::abs(pulse.carrier);
  for (double e : sys.energies()) fastest = std::max(fastest, std::abs(e));
  if (fastest == 0.0) return std::numeric_limits<double>::infinity();
  return 2.0 * units::kPi / (40.0 * fastest);
}

/// Accumulated propagators of a pulse, snapshotted at sample times.
struct CoherentPropagation {
  std::vector<double> times;               // from 0 to duration, strictly increasing
  std::vector<ComplexMatrix> propagators;  // U(times[k])
  std::size_t steps = 0;
  double step = 0.0;
};

namespace detail {

inline std::size_t step_count(double duration, double dt) {
  const double ratio = duration / dt;
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, ratio)) return static_cast<std::size_t>(nearest);
  return static_cast<std::size_t>(std::ceil(ratio));
}

inline ComplexMatrix midpoint_step(const ComplexMatrix& h0, const ComplexMatrix& v, const Pulse& pulse,
                                   double t, double h) {
  const ComplexMatrix hamiltonian = h0 + pulse.field(t + 0.5 * h) * v;
  return matrix_exp(hamiltonian, Complex(0.0, -h));
}

inline void check_step(const QSystem& sys, const Pulse& pulse, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::StepSize, "integration step must be positive");
  const double bound = max_coherent_step(sys, pulse);
  if (dt > bound * (1.0 + 1e-12)) {
    throw Error(ErrorCode::StepSize, "dt " + std::to_string(dt) + " exceeds carrier-resolving bound " +
                                         std::to_string(bound));
  }
}

}  // namespace detail

/// Time-ordered product U_{k+1} = exp(-i (H0 + u(t_k + h/2) V) h) U_k with the
/// full cosine drive. `samples` snapshots are spread uniformly over the steps.
inline CoherentPropagation coherent_propagators(const QSystem& sys, const Pulse& pulse, std::optional<double> dt,
                                                std::size_t samples) {
  pulse.validate();
  const double requested = dt.value_or(max_coherent_step(sys, pulse));
  detail::check_step(sys, pulse, requested);
  const Eigen::Index n = sys.dim();

  CoherentPropagation out;
  out.times.push_back(0.0);
  out.propagators.push_back(ComplexMatrix::Identity(n, n));
  if (pulse.duration == 0.0) return out;
  if (samples < 2) throw Error(ErrorCode::InvalidInput, "need at least two samples");

  const std::size_t steps = std::max<std::size_t>(1, detail::step_count(pulse.duration, requested));
  const double h = pulse.duration / static_cast<double>(steps);
  out.steps = steps;
  out.step = h;

  const std::size_t snaps = std::min(samples - 1, steps);
  std::vector<std::size_t> marks;
  for (std::size_t k = 1; k <= snaps; ++k) marks.push_back((k * steps + snaps / 2) / snaps);
  marks.back() = steps;

  const ComplexMatrix h0 = sys.static_hamiltonian();
  const ComplexMatrix& v = sys.coupling();
  ComplexMatrix u = ComplexMatrix::Identity(n, n);
  std::size_t next = 0;
  for (std::size_t k = 0; k < steps; ++k) {
    u = detail::midpoint_step(h0, v, pulse, h * static_cast<double>(k), h) * u;
    if (next < marks.size() && k + 1 == marks[next]) {
      out.times.push_back(k + 1 == steps ? pulse.duration : h * static_cast<double>(k + 1));
      out.propagators.push_back(u);
      ++next;
    }
  }
  return out;
}

/// rho(t) = U(t) rho0 U(t)^dagger under the pulse. `dt` defaults to the
/// carrier-resolving bound and is rejected when coarser than it.
inline Trajectory propagate_coherent(const QSystem& sys, const Pulse& pulse, const DensityMatrix& rho0,
                                     std::optional<double> dt = std::nullopt, std::size_t samples = 200) {
  if (rho0.dim() != sys.dim()) throw Error(ErrorCode::DimensionMismatch, "state and system differ in dimension");
  const CoherentPropagation prop = coherent_propagators(sys, pulse, dt, samples);
  Trajectory out;
  out.reserve(prop.times.size());
  for (std::size_t k = 0; k < prop.times.size(); ++k) {
    const ComplexMatrix& u = prop.propagators[k];
    out.push_back({prop.times[k], DensityMatrix(u * rho0.matrix() * u.adjoint())});
  }
  return out;
}

struct LieAlgebraDimension {
  int raw = 0;        // dim of the real Lie algebra generated by {iH0, iV}
  int effective = 0;  // raw, or n^2 once the algebra contains su(n)
  int full = 0;       // n^2
  bool controllable() const { return effective == full; }
};

/// Dimension of the real Lie algebra generated by {iH0, iV}, via iterated
/// commutators and Gram-Schmidt in the Hilbert-Schmidt real inner product.
///
/// `effective` adds the global-phase direction i*Identity when the algebra
/// already contains su(n): phases are unobservable on density matrices, so
/// such a system reaches every rho -> U rho U^dagger.
inline LieAlgebraDimension lie_algebra_dimension(const ComplexMatrix& h0, const ComplexMatrix& v) {
  require_square(h0, "H0");
  require_square(v, "V");
  if (h0.rows() != v.rows()) throw Error(ErrorCode::DimensionMismatch, "H0 and V differ in dimension");
  const double scale = std::max({1.0, h0.cwiseAbs().maxCoeff(), v.cwiseAbs().maxCoeff()});
  if (!is_hermitian(h0, 1e-12 * scale) || !is_hermitian(v, 1e-12 * scale)) {
    throw Error(ErrorCode::InvalidInput, "H0 and V must be Hermitian");
  }
  const Eigen::Index n = h0.rows();
  const int full = static_cast<int>(n * n);
  constexpr double kRankTol = 1e-9;

  std::vector<ComplexMatrix> basis;
  auto real_inner = [](const ComplexMatrix& a, const ComplexMatrix& b) {
    return (a.adjoint() * b).trace().real();
  };
  auto try_add = [&](ComplexMatrix x, std::vector<ComplexMatrix>& into) {
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : into) x -= real_inner(b, x) * b;
    const double norm = x.norm();
    if (norm <= kRankTol) return false;
    into.push_back(x / norm);
    return true;
  };

  for (const ComplexMatrix* g : {&h0, &v}) {
    const double norm = g->norm();
    if (norm > 0.0) try_add(kI * hermitian_part(*g) / norm, basis);
  }

  const std::size_t cap = static_cast<std::size_t>(full) * static_cast<std::size_t>(full);
  std::size_t iterations = 0;
  std::size_t frontier = 0;
  while (frontier < basis.size()) {
    const std::size_t current = frontier++;
    for (std::size_t k = 0; k < current && basis.size() < static_cast<std::size_t>(full); ++k) {
      if (++iterations > cap) throw Error(ErrorCode::Internal, "commutator closure did not terminate");
      try_add(commutator(basis[k], basis[current]), basis);
    }
  }

  LieAlgebraDimension out;
  out.raw = static_cast<int>(basis.size());
  out.full = full;
  out.effective = out.raw;
  if (out.raw < full) {
    std::vector<ComplexMatrix> with_phase = basis;
    const ComplexMatrix phase = kI * ComplexMatrix::Identity(n, n) / std::sqrt(static_cast<double>(n));
    if (try_add(phase, with_phase) && static_cast<int>(with_phase.size()) == full) out.effective = full;
  }
  return out;
}

inline int lie_algebra_rank(const ComplexMatrix& h0, const ComplexMatrix& v) {
  return lie_algebra_dimension(h0, v).effective;
}

/// Rotating-wave pi-pulse duration pi hbar / (mu E). An initial guess for
/// the full-drive sweep in synthesize_two_level_pulse.
inline double pi_pulse_duration(const QSystem& sys, double field_v_per_m, double dipole_c_m) {
  if (sys.dim() != 2) throw Error(ErrorCode::DimensionMismatch, "pi pulse needs a two-level system");
  if (!(field_v_per_m > 0.0) || !(dipole_c_m > 0.0)) {
    throw Error(ErrorCode::InvalidInput, "field and dipole must be positive");
  }
  return units::kPi * units::kHbar / (dipole_c_m * field_v_per_m);
}

/// Rabi frequency |V_01| E of a resonantly driven two-level system (rad/s).
inline double rabi_frequency(const QSystem& sys, double amplitude) {
  if (sys.dim() != 2) throw Error(ErrorCode::DimensionMismatch, "Rabi frequency needs a two-level system");
  return std::abs(sys.coupling()(0, 1)) * amplitude;
}

namespace detail {

inline std::array<double, 3> bloch_of(const ComplexMatrix& rho) {
  return {2.0 * rho(0, 1).real(), 2.0 * rho(1, 0).imag(), (rho(0, 0) - rho(1, 1)).real()};
}

inline double bloch_gap(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

inline ComplexMatrix pulse_unitary(const QSystem& sys, const Pulse& pulse, double dt) {
  return coherent_propagators(sys, pulse, dt, 2).propagators.back();
}

// Nelder-Mead over (duration, carrier, phase) scaled by the Rabi frequency.
template <class F>
Pulse refine_pulse(const Pulse& start, double rabi, F&& residual, double tol, int max_evals = 400) {
  using Point = std::array<double, 3>;
  auto make = [&](const Point& x) {
    Pulse p = start;
    p.duration = std::max(0.0, start.duration * (1.0 + x[0]));
    p.carrier = start.carrier + rabi * x[1];
    p.phase = start.phase + x[2];
    return p;
  };
  std::array<Point, 4> simplex{Point{0, 0, 0}, Point{0.02, 0, 0}, Point{0, 0.02, 0}, Point{0, 0, 0.2}};
  std::array<double, 4> f{};
  int evals = 0;
  auto eval = [&](const Point& x) {
    ++evals;
    return residual(make(x));
  };
  for (std::size_t k = 0; k < 4; ++k) f[k] = eval(simplex[k]);

  auto lerp = [](const Point& a, const Point& b, double t) {
    return Point{a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])};
  };
  while (evals < max_evals) {
    std::array<std::size_t, 4> idx{0, 1, 2, 3};
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
    const std::size_t best = idx[0];
    const std::size_t worst = idx[3];
    if (f[best] <= tol) break;
    Point centroid{0, 0, 0};
    for (std::size_t k = 0; k < 3; ++k)
      for (std::size_t d = 0; d < 3; ++d) centroid[d] += simplex[idx[k]][d] / 3.0;

    const Point reflected = lerp(centroid, simplex[worst], -1.0);
    const double fr = eval(reflected);
    if (fr < f[best]) {
      const Point expanded = lerp(centroid, simplex[worst], -2.0);
      const double fe = eval(expanded);
      simplex[worst] = fe < fr ? expanded : reflected;
      f[worst] = std::min(fe, fr);
    } else if (fr < f[idx[2]]) {
      simplex[worst] = reflected;
      f[worst] = fr;
    } else {
      const Point contracted = lerp(centroid, simplex[worst], 0.5);
      const double fc = eval(contracted);
      if (fc < f[worst]) {
        simplex[worst] = contracted;
        f[worst] = fc;
      } else {
        for (std::size_t k = 1; k < 4; ++k) {
          simplex[idx[k]] = lerp(simplex[best], simplex[idx[k]], 0.5);
          f[idx[k]] = eval(simplex[idx[k]]);
        }
      }
    }
  }
  const std::size_t best = static_cast<std::size_t>(std::min_element(f.begin(), f.end()) - f.begin());
  return f[best] < residual(start) ? make(simplex[best]) : start;
}

}  // namespace detail

/// Resonant constant-envelope pulse taking `from` to `to` for a two-level
/// system under the full cosine drive. Both states must share a spectrum and
/// `from` must be diagonal (the stage-1 output).
///
/// The rotation angle comes from the target Bloch polar angle; the duration
/// is then chosen by sweeping the full-drive evolution over +-25% of the RWA
/// estimate and the carrier phase is corrected from one measured azimuth.
inline Pulse synthesize_two_level_pulse(const QSystem& sys, double amplitude, const DensityMatrix& from,
                                        const DensityMatrix& to, std::optional<double> dt = std::nullopt) {
  if (sys.dim() != 2 || from.dim() != 2 || to.dim() != 2) {
    throw Error(ErrorCode::DimensionMismatch, "pulse synthesis is two-level only");
  }
  if (!(amplitude > 0.0)) throw Error(ErrorCode::InvalidInput, "field amplitude must be positive");
  const double omega = rabi_frequency(sys, amplitude);
  if (!(omega > 0.0)) throw Error(ErrorCode::Uncontrollable, "coupling has no transition element");

  Pulse pulse;
  pulse.amplitude = amplitude;
  pulse.carrier = sys.transition_frequency(0, 1);
  const double step = dt.value_or(max_coherent_step(sys, pulse));
  detail::check_step(sys, pulse, step);

  const auto start = bloch_vector(from);
  const auto goal = bloch_vector(to);
  const double radius = std::abs(start[2]);
  if (radius < 1e-12) return pulse;  // maximally mixed: nothing to rotate
  const double cos_theta = std::clamp(goal[2] / start[2], -1.0, 1.0);
  const double theta = std::acos(cos_theta);
  if (theta < 1e-9) return pulse;

  // Duration sweep on the polar angle.
  const double guess = theta / omega;
  Pulse trial = pulse;
  trial.duration = 1.25 * guess;
  const std::size_t steps = std::max<std::size_t>(1, detail::step_count(trial.duration, step));
  const double h = trial.duration / static_cast<double>(steps);
  const ComplexMatrix h0 = sys.static_hamiltonian();
  ComplexMatrix u = ComplexMatrix::Identity(2, 2);
  double best_gap = std::numeric_limits<double>::infinity();
  std::size_t best = steps;
  for (std::size_t k = 0; k < steps; ++k) {
    u = detail::midpoint_step(h0, sys.coupling(), trial, h * static_cast<double>(k), h) * u;
    const double t = h * static_cast<double>(k + 1);
    if (t < 0.75 * guess) continue;
    const ComplexMatrix rho = u * from.matrix() * u.adjoint();
    const double gap = std::abs((rho(0, 0) - rho(1, 1)).real() - goal[2]);
    if (gap < best_gap) {
      best_gap = gap;
      best = k + 1;
    }
  }
  pulse.duration = h * static_cast<double>(best);

  // Azimuth correction. Near the poles the azimuth is irrelevant.
  const double sin_theta = std::sin(theta);
  if (sin_theta > 1e-6) {
    auto reached = [&](const Pulse& p) {
      const ComplexMatrix w = detail::pulse_unitary(sys, p, h);
      return detail::bloch_of(w * from.matrix() * w.adjoint());
    };
    const auto base = reached(pulse);
    const double delta = std::atan2(goal[1], goal[0]) - std::atan2(base[1], base[0]);
    Pulse plus = pulse;
    plus.phase = delta;
    Pulse minus = pulse;
    minus.phase = -delta;
    const double err_plus = detail::bloch_gap(reached(plus), goal);
    const double err_minus = detail::bloch_gap(reached(minus), goal);
    pulse.phase = err_plus <= err_minus ? plus.phase : minus.phase;
  }

  // Strong drives tilt the effective axis; refine duration, carrier and
  // phase jointly on the full Bloch residual.
  auto residual = [&](const Pulse& p) {
    const double h_p = std::min(h, max_coherent_step(sys, p));
    const ComplexMatrix w = detail::pulse_unitary(sys, p, h_p);
    return detail::bloch_gap(detail::bloch_of(w * from.matrix() * w.adjoint()), goal);
  };
  if (residual(pulse) > 1e-4 * radius) pulse = detail::refine_pulse(pulse, omega, residual, 1e-7 * radius);
  return pulse;
}

}  // namespace qsteer
