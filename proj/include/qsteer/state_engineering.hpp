#pragma once

// Two-stage steering of any initial density matrix into a target rho_f:
//
//   stage 1: incoherent radiation with n*_ij = p_j / (p_i - p_j) relaxes every
//            state to rho~_f = sum_i p_i |i><i| (p descending onto ascending
//            energies);
//   stage 2: a coherent unitary U = sum_i |phi_i><i| rotates rho~_f into rho_f.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "qsteer/coherent_control.hpp"
#include "qsteer/density.hpp"
#include "qsteer/errors.hpp"
#include "qsteer/linalg.hpp"
#include "qsteer/open_dynamics.hpp"
#include "qsteer/system.hpp"

namespace qsteer {

enum class Stage2Mode { IdealUnitary, Pulse };

inline const char* to_string(Stage2Mode mode) {
  return mode == Stage2Mode::Pulse ? "pulse" : "ideal";
}

/// n_ij = p_j / (p_i - p_j); ties give n_max (or 0 when both vanish) and
/// any value above n_max is capped.
inline SpectralDensity synthesize_spectral_density(const std::vector<double>& p, double n_max = kDefaultNMax) {
  constexpr double kOrderTol = 1e-12;
  const auto n = static_cast<Eigen::Index>(p.size());
  if (n == 0) throw Error(ErrorCode::InvalidSpectrum, "empty spectrum");
  double total = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] < -kOrderTol) throw Error(ErrorCode::InvalidSpectrum, "negative population");
    if (k > 0 && p[k] > p[k - 1] + kOrderTol) throw Error(ErrorCode::InvalidSpectrum, "spectrum not descending");
    total += p[k];
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorCode::InvalidSpectrum, "spectrum does not sum to 1");

  SpectralDensity occ(n, n_max);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double pi = std::max(p[static_cast<std::size_t>(i)], 0.0);
      const double pj = std::max(p[static_cast<std::size_t>(j)], 0.0);
      double value = 0.0;
      if (pi > pj) {
        value = std::min(pj / (pi - pj), n_max);
      } else if (pj > 0.0) {
        value = n_max;
      }
      occ.set(i, j, value);
    }
  }
  return occ;
}

/// a / lambda_gap: the slowest mode is suppressed by e^{-a}.
inline double stage1_duration(const QSystem& sys, const SpectralDensity& occ, double a) {
  if (!(a >= 1.0)) throw Error(ErrorCode::InvalidInput, "stage-1 parameter a must be >= 1");
  return a / spectral_gap(sys, occ);
}

struct EngineeringConfig {
  double a = 6.0;
  std::optional<double> stage1_duration;  // seconds; overrides a
  std::optional<Stage2Mode> mode;         // default: pulse for n = 2 with a field, else ideal
  double n_max = kDefaultNMax;
  std::size_t samples = 200;
  double field_amplitude = 0.0;           // pulse amplitude in coupling field units (V/m)
  std::optional<double> coherent_dt;
  bool split_stage1 = false;              // decohere with uniform occupation first
  double decohere_occupation = 1.0;
  double ideal_stage2_duration = 1e-12;   // nominal span of the ideal-unitary path
};

/// Optional first part of stage 1 that only kills coherences.
struct DecoherencePhase {
  SpectralDensity occupations;
  double duration;
};

struct EngineeringPlan {
  SpectralDensity n_star;
  double stage1_duration = 0.0;
  UnitaryOperator stage2_unitary;
  std::optional<Pulse> stage2_pulse;
  std::vector<double> p;
  std::vector<ComplexVector> phi;
  Stage2Mode mode = Stage2Mode::IdealUnitary;
  LieAlgebraDimension lie;
  bool controllable = true;
  std::vector<std::string> warnings;
  std::optional<DecoherencePhase> decoherence;
  std::size_t samples = 200;
  std::optional<double> coherent_dt;
  double ideal_stage2_duration = 1e-12;

  /// sum_i p_i |i><i|.
  DensityMatrix intermediate() const { return DensityMatrix::diagonal(p); }

  /// sum_i p_i |phi_i><phi_i|.
  DensityMatrix target() const {
    const auto n = static_cast<Eigen::Index>(p.size());
    ComplexMatrix m = ComplexMatrix::Zero(n, n);
    for (std::size_t k = 0; k < p.size(); ++k) m += p[k] * phi[k] * phi[k].adjoint();
    return DensityMatrix(m);
  }

  double total_stage1_duration() const {
    return stage1_duration + (decoherence ? decoherence->duration : 0.0);
  }
};

inline EngineeringPlan plan(const QSystem& sys, const DensityMatrix& rho_f, const EngineeringConfig& config = {}) {
  const Eigen::Index n = sys.dim();
  if (rho_f.dim() != n) throw Error(ErrorCode::DimensionMismatch, "target and system differ in dimension");
  if (config.samples < 2) throw Error(ErrorCode::InvalidInput, "need at least two samples per stage");

  SpectralDecomposition sd = spectral_decomposition(rho_f);
  double total = 0.0;
  for (double& pk : sd.p) {
    pk = std::max(pk, 0.0);
    total += pk;
  }
  for (double& pk : sd.p) pk /= total;

  const Stage2Mode mode = config.mode.value_or(
      n == 2 && config.field_amplitude > 0.0 ? Stage2Mode::Pulse : Stage2Mode::IdealUnitary);
  if (mode == Stage2Mode::Pulse && n != 2) {
    throw Error(ErrorCode::DimensionMismatch, "pulse-level stage 2 is only available for two-level systems");
  }

  SpectralDensity n_star = synthesize_spectral_density(sd.p, config.n_max);
  const double duration =
      config.stage1_duration ? *config.stage1_duration : stage1_duration(sys, n_star, config.a);
  if (!(duration >= 0.0)) throw Error(ErrorCode::InvalidInput, "stage-1 duration must be nonnegative");

  EngineeringPlan out{n_star, duration, basis_rotation_unitary(sd.phi)};
  out.p = sd.p;
  out.phi = sd.phi;
  out.mode = mode;
  out.samples = config.samples;
  out.coherent_dt = config.coherent_dt;
  out.ideal_stage2_duration = config.ideal_stage2_duration;
  out.lie = lie_algebra_dimension(sys.h0(), sys.coupling());
  out.controllable = out.lie.controllable();

  if (config.split_stage1) {
    SpectralDensity decohere = SpectralDensity::uniform(n, config.decohere_occupation, config.n_max);
    const RealMatrix gamma = coherence_decay_rates(sys, decohere);
    double slowest = std::numeric_limits<double>::infinity();
    for (Eigen::Index l = 0; l < n; ++l)
      for (Eigen::Index m = l + 1; m < n; ++m) slowest = std::min(slowest, gamma(l, m));
    if (!(slowest > 0.0)) throw Error(ErrorCode::ZeroGap, "decoherence phase leaves a coherence undamped");
    out.decoherence = DecoherencePhase{decohere, config.a / slowest};
  }

  if (mode == Stage2Mode::Pulse) {
    if (!out.controllable) {
      out.warnings.push_back("Lie algebra dimension " + std::to_string(out.lie.effective) + "/" +
                             std::to_string(out.lie.full) + ": no pulse-level stage 2, ideal unitary only");
      out.mode = Stage2Mode::IdealUnitary;
    } else {
      if (!(config.field_amplitude > 0.0)) {
        throw Error(ErrorCode::InvalidInput, "pulse mode needs a positive field amplitude");
      }
      out.stage2_pulse = synthesize_two_level_pulse(sys, config.field_amplitude, out.intermediate(),
                                                    out.target(), config.coherent_dt);
    }
  }
  return out;
}

/// One trajectory sample tagged with its stage (1 incoherent, 2 coherent).
struct StagedPoint {
  double t;
  int stage;
  DensityMatrix rho;
};

struct ObjectivePoint {
  double t;
  double to_target;        // ||rho_t - rho_f||_F
  double to_intermediate;  // ||rho_t - rho~_f||_F
};

struct EngineeringReport {
  std::vector<StagedPoint> trajectory;
  std::vector<ObjectivePoint> objective_series;
  DensityMatrix final_state;
  double final_error = 0.0;
};

/// Segment of stage 1 propagated with one step propagator.
struct Stage1Segment {
  ComplexMatrix step;
  double start = 0.0;
  double end = 0.0;
};

/// Precomputed propagators of a plan, shared by every initial state.
struct CompiledPlan {
  CompiledPlan(Eigen::Index dim, DensityMatrix target_state, DensityMatrix intermediate_state)
      : n(dim), target(std::move(target_state)), intermediate(std::move(intermediate_state)) {}

  Eigen::Index n;
  DensityMatrix target;
  DensityMatrix intermediate;
  std::size_t samples = 2;
  std::vector<Stage1Segment> stage1;
  double stage1_end = 0.0;
  std::vector<double> stage2_times;  // offsets after stage 1, strictly positive
  std::vector<ComplexMatrix> stage2_unitaries;
};

namespace detail {

// U(s) = Q diag(e^{i s theta}) Q^dagger from the Schur form of a unitary.
inline std::vector<ComplexMatrix> unitary_geodesic(const ComplexMatrix& u, const std::vector<double>& fractions) {
  Eigen::ComplexSchur<ComplexMatrix> schur(u);
  const ComplexMatrix& q = schur.matrixU();
  const ComplexMatrix& t = schur.matrixT();
  std::vector<ComplexMatrix> out;
  for (double s : fractions) {
    if (s >= 1.0) {
      out.push_back(u);
      continue;
    }
    ComplexVector d(t.rows());
    for (Eigen::Index k = 0; k < t.rows(); ++k) d(k) = std::exp(kI * (s * std::arg(t(k, k))));
    out.push_back(q * d.asDiagonal() * q.adjoint());
  }
  return out;
}

}  // namespace detail

inline CompiledPlan compile(const QSystem& sys, const EngineeringPlan& pl, Stage2Mode mode) {
  const Eigen::Index n = sys.dim();
  if (pl.n_star.dim() != n || pl.stage2_unitary.dim() != n) {
    throw Error(ErrorCode::DimensionMismatch, "plan does not match the system");
  }
  if (mode == Stage2Mode::Pulse) {
    if (n != 2) throw Error(ErrorCode::DimensionMismatch, "pulse mode needs a two-level system");
    if (!pl.stage2_pulse) {
      if (!pl.controllable) throw Error(ErrorCode::Uncontrollable, "system fails the Lie-algebra rank test");
      throw Error(ErrorCode::InvalidInput, "plan carries no stage-2 pulse");
    }
  }

  CompiledPlan c(n, pl.target(), pl.intermediate());
  c.samples = pl.samples;
  const double chunk = 1.0 / static_cast<double>(pl.samples - 1);

  double t = 0.0;
  auto add_segment = [&](const SpectralDensity& occ, double duration) {
    if (duration <= 0.0) return;
    c.stage1.push_back({step_propagator(build_dissipator(sys, occ), duration * chunk), t, t + duration});
    t += duration;
  };
  if (pl.decoherence) add_segment(pl.decoherence->occupations, pl.decoherence->duration);
  add_segment(pl.n_star, pl.stage1_duration);
  c.stage1_end = t;

  if (mode == Stage2Mode::Pulse) {
    const CoherentPropagation prop = coherent_propagators(sys, *pl.stage2_pulse, pl.coherent_dt, pl.samples);
    for (std::size_t k = 1; k < prop.times.size(); ++k) {
      c.stage2_times.push_back(prop.times[k]);
      c.stage2_unitaries.push_back(prop.propagators[k]);
    }
    if (c.stage2_times.empty()) {  // zero-length pulse
      c.stage2_times.push_back(pl.ideal_stage2_duration);
      c.stage2_unitaries.push_back(ComplexMatrix::Identity(n, n));
    }
  } else {
    std::vector<double> fractions;
    for (std::size_t k = 1; k < pl.samples; ++k) {
      fractions.push_back(k + 1 == pl.samples ? 1.0 : static_cast<double>(k) * chunk);
      c.stage2_times.push_back(pl.ideal_stage2_duration * fractions.back());
    }
    c.stage2_unitaries = detail::unitary_geodesic(pl.stage2_unitary.matrix(), fractions);
  }
  return c;
}

inline EngineeringReport run_compiled(const CompiledPlan& c, const DensityMatrix& rho_i) {
  if (rho_i.dim() != c.n) throw Error(ErrorCode::DimensionMismatch, "initial state does not match the system");
  EngineeringReport report{{}, {}, rho_i, 0.0};
  auto record = [&](double t, int stage, const DensityMatrix& rho) {
    report.trajectory.push_back({t, stage, rho});
    report.objective_series.push_back({t, hs_distance(rho, c.target), hs_distance(rho, c.intermediate)});
  };

  record(0.0, 1, rho_i);
  ComplexVector v = vectorize(rho_i.matrix());
  for (const Stage1Segment& seg : c.stage1) {
    const double dt = (seg.end - seg.start) / static_cast<double>(c.samples - 1);
    for (std::size_t k = 1; k < c.samples; ++k) {
      v = seg.step * v;
      const double tk = (k + 1 == c.samples) ? seg.end : seg.start + dt * static_cast<double>(k);
      record(tk, 1, DensityMatrix(unvectorize(v, c.n)));
    }
  }

  const DensityMatrix after_stage1 = report.trajectory.back().rho;
  for (std::size_t k = 0; k < c.stage2_times.size(); ++k) {
    const ComplexMatrix& u = c.stage2_unitaries[k];
    record(c.stage1_end + c.stage2_times[k], 2, DensityMatrix(u * after_stage1.matrix() * u.adjoint()));
  }
  report.final_state = report.trajectory.back().rho;
  report.final_error = hs_distance(report.final_state, c.target);
  return report;
}

/// Runs both stages from rho_i. Stage 1 propagates under the n* dissipator
/// with the coherent field off; stage 2 applies the plan's unitary (ideal) or
/// the synthesized pulse with the dissipator off.
inline EngineeringReport execute(const QSystem& sys, const DensityMatrix& rho_i, const EngineeringPlan& pl,
                                 Stage2Mode mode) {
  return run_compiled(compile(sys, pl, mode), rho_i);
}

inline EngineeringReport execute(const QSystem& sys, const DensityMatrix& rho_i, const EngineeringPlan& pl) {
  return execute(sys, rho_i, pl, pl.mode);
}

struct AllToOneReport {
  double max_pairwise_distance = 0.0;
  std::vector<DensityMatrix> final_states;
};

inline double max_pairwise_distance(const std::vector<DensityMatrix>& states) {
  double worst = 0.0;
  for (std::size_t a = 0; a < states.size(); ++a)
    for (std::size_t b = a + 1; b < states.size(); ++b) worst = std::max(worst, hs_distance(states[a], states[b]));
  return worst;
}

/// Runs the plan from the given initial states and reports the spread of the
/// final states.
inline AllToOneReport verify_all_to_one(const QSystem& sys, const EngineeringPlan& pl, Stage2Mode mode,
                                        const std::vector<DensityMatrix>& initial_states) {
  const CompiledPlan c = compile(sys, pl, mode);
  AllToOneReport out;
  for (const auto& rho : initial_states) out.final_states.push_back(run_compiled(c, rho).final_state);
  out.max_pairwise_distance = max_pairwise_distance(out.final_states);
  return out;
}

/// Seeded initial states: even trials random pure, odd trials Hilbert-Schmidt mixed.
inline std::vector<DensityMatrix> random_initial_states(Eigen::Index n, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<DensityMatrix> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    out.push_back(k % 2 == 0 ? random_pure_state(n, rng) : random_mixed_state(n, rng));
  }
  return out;
}

inline AllToOneReport verify_all_to_one(const QSystem& sys, const EngineeringPlan& pl, std::size_t trials,
                                        std::uint64_t seed, Stage2Mode mode) {
  if (trials < 2) throw Error(ErrorCode::InvalidInput, "all-to-one check needs at least two trials");
  return verify_all_to_one(sys, pl, mode, random_initial_states(sys.dim(), trials, seed));
}

inline AllToOneReport verify_all_to_one(const QSystem& sys, const EngineeringPlan& pl, std::size_t trials,
                                        std::uint64_t seed) {
  return verify_all_to_one(sys, pl, trials, seed, pl.mode);
}

/// Random generic system in natural units: unit-scale level spacings with
/// distinct transition frequencies, A_ij in [0.5, 1.5], random Hermitian V.
template <class Rng>
QSystem random_generic_system(Eigen::Index n, Rng& rng) {
  std::uniform_real_distribution<double> spacing(0.5, 1.5);
  std::uniform_real_distribution<double> rate(0.5, 1.5);
  for (;;) {
    std::vector<double> energies{0.0};
    for (Eigen::Index k = 1; k < n; ++k) energies.push_back(energies.back() + spacing(rng));
    RealMatrix a = RealMatrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) a(i, j) = rate(rng);
    ComplexMatrix v = random_hermitian(n, rng);
    QSystem candidate(energies, v, a, false);
    if (candidate.transition_frequencies_distinct(1e-6)) return QSystem(energies, v, a, true);
  }
}

struct ControllabilitySweep {
  double max_final_error = 0.0;
  std::vector<double> final_errors;
  std::vector<Eigen::Index> dims;
};

namespace detail {

template <class Rng>
double sweep_case(const QSystem& sys, std::size_t k, Rng& rng, double a, std::size_t samples) {
  const Eigen::Index n = sys.dim();
  const DensityMatrix rho_i = (k % 2 == 0) ? random_mixed_state(n, rng) : random_pure_state(n, rng);
  const DensityMatrix rho_f = (k % 3 == 1) ? random_pure_state(n, rng) : random_mixed_state(n, rng);
  EngineeringConfig cfg;
  cfg.a = a;
  cfg.mode = Stage2Mode::IdealUnitary;
  cfg.samples = samples;
  const EngineeringPlan pl = plan(sys, rho_f, cfg);
  return hs_distance(execute(sys, rho_i, pl).final_state, rho_f);
}

}  // namespace detail

/// Random (rho_i, rho_f) pairs on random generic systems, cycling n over
/// `dims`, executed in ideal-unitary mode with stage-1 parameter `a`.
inline ControllabilitySweep controllability_sweep(std::size_t cases, std::uint64_t seed,
                                                  const std::vector<Eigen::Index>& dims = {2, 3, 4},
                                                  double a = 20.0, std::size_t samples = 20) {
  std::mt19937_64 rng(seed);
  ControllabilitySweep out;
  for (std::size_t k = 0; k < cases; ++k) {
    const Eigen::Index n = dims[k % dims.size()];
    const QSystem sys = random_generic_system(n, rng);
    const double err = detail::sweep_case(sys, k, rng, a, samples);
    out.final_errors.push_back(err);
    out.dims.push_back(n);
    out.max_final_error = std::max(out.max_final_error, err);
  }
  return out;
}

/// Same sweep on one fixed system.
inline ControllabilitySweep controllability_sweep(const QSystem& sys, std::size_t cases, std::uint64_t seed,
                                                  double a = 20.0, std::size_t samples = 20) {
  std::mt19937_64 rng(seed);
  ControllabilitySweep out;
  for (std::size_t k = 0; k < cases; ++k) {
    const double err = detail::sweep_case(sys, k, rng, a, samples);
    out.final_errors.push_back(err);
    out.dims.push_back(sys.dim());
    out.max_final_error = std::max(out.max_final_error, err);
  }
  return out;
}

}  // namespace qsteer
