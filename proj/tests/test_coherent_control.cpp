#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>

#include "test_support.hpp"

using namespace qsteer;
using namespace qtest;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("free evolution without a field") {
  const QSystem sys = two_level(10.0, 0.0);
  Pulse off;
  off.carrier = 10.0;
  off.duration = 3.0;
  ComplexVector psi(2);
  psi << Complex(0.6, 0.0), Complex(0.0, 0.8);
  const DensityMatrix rho0 = density_from_pure(psi);
  const Trajectory tr = propagate_coherent(sys, off, rho0, std::nullopt, 50);
  for (const auto& pt : tr) {
    CHECK(std::abs(pt.rho(0, 0) - rho0(0, 0)) <= 1e-10);
    CHECK(std::abs(pt.rho(1, 1) - rho0(1, 1)) <= 1e-10);
    const Complex expected = rho0(0, 1) * std::exp(Complex(0.0, 10.0 * pt.t));
    CHECK(std::abs(pt.rho(0, 1) - expected) <= 1e-10);
  }
}

TEST_CASE("resonant pi pulse inverts a weakly driven two-level system") {
  const QSystem sys = two_level(100.0, 0.0);
  Pulse pulse;
  pulse.amplitude = 1.0;
  pulse.carrier = 100.0;
  pulse.duration = units::kPi / rabi_frequency(sys, 1.0);
  const Trajectory tr = propagate_coherent(sys, pulse, DensityMatrix::diagonal({1, 0}));
  CHECK(tr.back().rho(1, 1).real() > 0.98);
}

TEST_CASE("calcium pulse maps the intermediate state onto the target") {
  const QSystem sys = calcium();
  const DensityMatrix from = DensityMatrix::diagonal({0.75, 0.25});
  const Pulse pulse = synthesize_two_level_pulse(sys, kCaField, from, calcium_target());
  const double t_pi = pi_pulse_duration(sys, kCaField, kCaMu);
  CHECK_THAT(pulse.duration, WithinRel(t_pi, 0.02));
  const Trajectory tr = propagate_coherent(sys, pulse, from);
  CHECK(hs_distance(tr.back().rho, calcium_target()) < 1e-3);
}

TEST_CASE("accumulated propagator stays unitary over many steps") {
  const QSystem sys = calcium();
  Pulse pulse;
  pulse.amplitude = kCaField;
  pulse.carrier = kCaOmega;
  pulse.duration = 3.0 * pi_pulse_duration(sys, kCaField, kCaMu);
  const CoherentPropagation prop = coherent_propagators(sys, pulse, std::nullopt, 10);
  CHECK(prop.steps >= 100000);
  for (const auto& u : prop.propagators) CHECK(unitarity_defect(u) <= 1e-8);
}

TEST_CASE("coarse steps are rejected") {
  const QSystem sys = two_level(100.0, 0.0);
  Pulse pulse;
  pulse.amplitude = 1.0;
  pulse.carrier = 100.0;
  pulse.duration = 1.0;
  const double bound = max_coherent_step(sys, pulse);
  CHECK_THAT(bound, WithinRel(2.0 * units::kPi / 4000.0, 1e-15));
  try {
    propagate_coherent(sys, pulse, DensityMatrix::diagonal({1, 0}), 2.0 * bound);
    FAIL("expected a step-size error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::StepSize);
  }
  CHECK_NOTHROW(propagate_coherent(sys, pulse, DensityMatrix::diagonal({1, 0}), bound));
}

TEST_CASE("pulse validation") {
  Pulse p;
  p.duration = -1.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p.duration = 1.0;
  p.amplitude = -1.0;
  CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("Lie algebra dimension examples") {
  CHECK(lie_algebra_rank(pauli_z(), pauli_x()) == 4);
  CHECK(lie_algebra_rank(pauli_z(), pauli_z()) == 1);

  const LieAlgebraDimension zx = lie_algebra_dimension(pauli_z(), pauli_x());
  CHECK(zx.raw == 3);
  CHECK(zx.full == 4);
  CHECK(zx.controllable());
  CHECK_FALSE(lie_algebra_dimension(pauli_z(), pauli_z()).controllable());

  ComplexMatrix h0 = ComplexMatrix::Zero(3, 3);
  h0.diagonal() << 0.0, 1.0, 2.5;
  ComplexMatrix v = ComplexMatrix::Zero(3, 3);
  v(0, 1) = v(1, 0) = 1.0;
  v(1, 2) = v(2, 1) = 1.0;
  CHECK(lie_algebra_rank(h0, v) == 9);

  // Equally spaced ladder with a diagonal drive commutes.
  CHECK(lie_algebra_rank(h0, h0 * 2.0) == 1);

  ComplexMatrix not_hermitian = pauli_x();
  not_hermitian(0, 1) = 2.0;
  CHECK_THROWS_AS(lie_algebra_rank(pauli_z(), not_hermitian), Error);
}

TEST_CASE("Lie algebra dimension is invariant under unitary conjugation") {
  std::mt19937_64 rng(9);
  ComplexMatrix h3 = ComplexMatrix::Zero(3, 3);
  h3.diagonal() << 0.0, 1.0, 2.5;
  ComplexMatrix v3 = ComplexMatrix::Zero(3, 3);
  v3(0, 1) = v3(1, 0) = 1.0;
  v3(1, 2) = v3(2, 1) = 1.0;
  const std::vector<std::pair<ComplexMatrix, ComplexMatrix>> cases{
      {pauli_z(), pauli_x()}, {pauli_z(), pauli_z()}, {h3, v3}, {h3, h3 * h3}};
  for (const auto& [h, v] : cases) {
    const int base = lie_algebra_rank(h, v);
    for (int trial = 0; trial < 10; ++trial) {
      const ComplexMatrix u = random_unitary(h.rows(), rng);
      CHECK(lie_algebra_rank(u * h * u.adjoint(), u * v * u.adjoint()) == base);
    }
  }
}

TEST_CASE("basis rotation unitary") {
  std::vector<ComplexVector> basis{ComplexVector::Unit(2, 0), ComplexVector::Unit(2, 1)};
  CHECK(max_abs(basis_rotation_unitary(basis).matrix() - ComplexMatrix::Identity(2, 2)) == 0.0);

  const double r = 1.0 / std::sqrt(2.0);
  std::vector<ComplexVector> hadamard{(ComplexVector(2) << r, r).finished(), (ComplexVector(2) << r, -r).finished()};
  ComplexMatrix h(2, 2);
  h << r, r, r, -r;
  CHECK(max_abs(basis_rotation_unitary(hadamard).matrix() - h) < 1e-15);

  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 2 + trial % 4;
    const ComplexMatrix u = random_unitary(n, rng);
    std::vector<ComplexVector> cols;
    for (Eigen::Index k = 0; k < n; ++k) cols.push_back(u.col(k));
    CHECK(max_abs(basis_rotation_unitary(cols).matrix() - u) <= 1e-12);
  }

  std::vector<ComplexVector> skew{ComplexVector::Unit(2, 0), (ComplexVector(2) << r, r).finished()};
  CHECK_THROWS_AS(basis_rotation_unitary(skew), Error);
}

TEST_CASE("apply_unitary") {
  const DensityMatrix rho = DensityMatrix::diagonal({0.75, 0.25});
  CHECK(hs_distance(apply_unitary(UnitaryOperator::identity(2), rho), rho) == 0.0);
  CHECK(hs_distance(apply_unitary(UnitaryOperator(pauli_x()), rho), DensityMatrix::diagonal({0.25, 0.75})) == 0.0);
  CHECK_THROWS_AS(apply_unitary(UnitaryOperator::identity(3), rho), Error);
  CHECK_THROWS_AS(UnitaryOperator(2.0 * pauli_x()), Error);

  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 2 + trial % 3;
    const DensityMatrix in = random_mixed_state(n, rng);
    const DensityMatrix out = apply_unitary(UnitaryOperator(random_unitary(n, rng)), in);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> a(in.matrix());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> b(out.matrix());
    CHECK((a.eigenvalues() - b.eigenvalues()).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("pi pulse duration") {
  const QSystem sys = calcium();
  const double t7 = pi_pulse_duration(sys, 1e7, kCaMu);
  CHECK_THAT(t7, WithinRel(1.3804312581512352e-12, 1e-12));
  CHECK_THAT(pi_pulse_duration(sys, 2e7, kCaMu), WithinRel(t7 / 2.0, 1e-15));
  const double t9 = pi_pulse_duration(sys, 1e9, kCaMu);
  CHECK_THAT(t9, WithinRel(13.8e-15, 0.01));
  CHECK_THROWS_AS(pi_pulse_duration(QSystem({0.0, 1.0, 2.5}, ComplexMatrix::Zero(3, 3), RealMatrix::Zero(3, 3)),
                                    1e7, kCaMu),
                  Error);
}

TEST_CASE("strong-field pulse synthesis still reaches the target") {
  const QSystem sys = calcium();
  const DensityMatrix from = DensityMatrix::diagonal({0.75, 0.25});
  const Pulse pulse = synthesize_two_level_pulse(sys, 1e9, from, calcium_target());
  CHECK_THAT(pulse.duration, WithinRel(pi_pulse_duration(sys, 1e9, kCaMu), 0.05));
  CHECK(hs_distance(propagate_coherent(sys, pulse, from).back().rho, calcium_target()) < 1e-3);
}

TEST_CASE("pulse synthesis for an off-pole target") {
  const QSystem sys = two_level(50.0, 0.0);
  const DensityMatrix from = DensityMatrix::diagonal({0.9, 0.1});
  ComplexVector phi(2);
  phi << Complex(std::cos(0.6), 0.0), Complex(std::sin(0.6) * std::cos(1.1), std::sin(0.6) * std::sin(1.1));
  const ComplexVector perp = (ComplexVector(2) << -std::conj(phi(1)), std::conj(phi(0))).finished();
  const DensityMatrix target(0.9 * phi * phi.adjoint() + 0.1 * perp * perp.adjoint());
  const Pulse pulse = synthesize_two_level_pulse(sys, 0.5, from, target);
  CHECK(hs_distance(propagate_coherent(sys, pulse, from).back().rho, target) < 1e-3);
}
