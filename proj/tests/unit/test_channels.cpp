#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "qgsim/channels.hpp"
#include "qgsim/distributions.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace qgsim;
using qgsim::test::max_abs;

using qgsim::test::dense_u0;

TEST_CASE("OAT preparation") {
  // chi_tau = 0 is exp(i pi J_x), which flips |1>_z to |-1>_z.
  const DickeKet flipped = oat_prepare(polarized_state(2), TwistingSpec{0.0});
  CHECK(std::norm(flipped.amplitudes()(0)) == doctest::Approx(1.0).epsilon(1e-12));

  const DickeKet cat = oat_prepare(polarized_state(100), TwistingSpec{});
  CHECK(fidelity(cat, cat_state_analytic(100)) == doctest::Approx(1.0).epsilon(1e-10));

  std::mt19937_64 rng(5);
  for (int n : {3, 12, 40}) {
    const DickeKet k = qgsim::test::random_ket(n, rng);
    const DickeKet back = oat_unprepare(oat_prepare(k, TwistingSpec{0.37}), TwistingSpec{0.37});
    CHECK((back.amplitudes() - k.amplitudes()).norm() < 1e-10);

    const ComplexMatrix u = dense_u0(n, 0.37);
    CHECK(max_abs(ComplexMatrix(oat_unitary(n, TwistingSpec{0.37}) - u)) < 1e-12);
    CHECK((oat_prepare(k, TwistingSpec{0.37}).amplitudes() - u * k.amplitudes()).norm() < 1e-12);
    CHECK(unitarity_error(oat_unitary(n, TwistingSpec{0.37})) < 1e-10);

    const DickeDensity rho = qgsim::test::random_density(n, rng);
    CHECK(max_abs(ComplexMatrix(oat_prepare(rho, TwistingSpec{0.37}).matrix() - u * rho.matrix() * u.adjoint())) <
          1e-12);
    CHECK(max_abs(ComplexMatrix(oat_unprepare(rho, TwistingSpec{0.37}).matrix() -
                                u.adjoint() * rho.matrix() * u)) < 1e-12);
  }
}

TEST_CASE("quantum gravity unitary") {
  std::mt19937_64 rng(6);
  const DickeKet k = qgsim::test::random_ket(10, rng);
  CHECK((apply_quantum_gravity(k, 0.0).amplitudes() - k.amplitudes()).norm() == 0.0);
  CHECK(fidelity(apply_quantum_gravity(k, kPi), k) == doctest::Approx(1.0).epsilon(1e-12));
  const DickeKet moved = apply_quantum_gravity(k, 0.123);
  CHECK((moved.amplitudes().cwiseAbs2() - k.amplitudes().cwiseAbs2()).cwiseAbs().maxCoeff() < 1e-15);
  const RealVector a = make_operator(OperatorKind::kA, 10).diagonal_values();
  for (Eigen::Index i = 0; i <= 10; ++i) {
    CHECK(std::abs(moved.amplitudes()(i) - std::exp(Complex(0, 0.123 * a(i))) * k.amplitudes()(i)) < 1e-14);
  }
  const DickeDensity rho = qgsim::test::random_density(10, rng);
  const ComplexMatrix d = (Complex(0, 0.123) * a.cast<Complex>()).array().exp().matrix().asDiagonal();
  CHECK(max_abs(ComplexMatrix(apply_quantum_gravity(rho, 0.123).matrix() - d * rho.matrix() * d.adjoint())) < 1e-14);
}

TEST_CASE("classical gravity unitary") {
  std::mt19937_64 rng(7);
  const DickeKet k = qgsim::test::random_ket(9, rng);
  CHECK(fidelity(apply_classical_gravity(k, 0.0, 1.7), k) == doctest::Approx(1.0).epsilon(1e-14));

  const DickeKet eq(2, ComplexVector::Constant(3, 1 / std::sqrt(3.0)));
  const ComplexVector out = apply_classical_gravity(eq, kPi / 2, 0.4, JzConvention::kHalf).amplitudes();
  const Complex g = out(1) / std::abs(out(1));
  CHECK(std::abs(out(0) / g * std::sqrt(3.0) - Complex(0, -1)) < 1e-14);
  CHECK(std::abs(out(2) / g * std::sqrt(3.0) - Complex(0, 1)) < 1e-14);

  // Default convention couples beta to 2 J_z.
  const ComplexVector unit = apply_classical_gravity(eq, kPi / 4, 0.0).amplitudes();
  CHECK(std::abs(unit(2) / unit(1) - Complex(0, 1)) < 1e-14);

  for (double beta : {0.3, -2.0}) {
    const DickeKet s = apply_classical_gravity(k, beta, 0.9);
    CHECK((s.amplitudes().cwiseAbs2() - k.amplitudes().cwiseAbs2()).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("dephasing map") {
  std::mt19937_64 rng(8);
  const DickeDensity rho = qgsim::test::random_density(10, rng);
  CHECK(max_abs(ComplexMatrix(dephase(rho, {DephasingGenerator::kA, 0.0}).matrix() - rho.matrix())) == 0.0);

  const DickeDensity hard = dephase(rho, {DephasingGenerator::kJz, 1e6});
  for (Eigen::Index i = 0; i <= 10; ++i) {
    CHECK(hard.matrix()(i, i) == rho.matrix()(i, i));
    for (Eigen::Index j = 0; j <= 10; ++j)
      if (i != j) CHECK(std::abs(hard.matrix()(i, j)) < 1e-300);
  }
  // A has degenerate +/-m pairs, which keep their coherence.
  const DickeDensity hard_a = dephase(rho, {DephasingGenerator::kA, 1e6});
  CHECK(hard_a.matrix()(0, 10) == rho.matrix()(0, 10));
  CHECK(std::abs(hard_a.matrix()(0, 9)) == 0.0);

  const DickeDensity eq = DickeDensity::pure(DickeKet(2, ComplexVector::Constant(3, 1 / std::sqrt(3.0))));
  const DickeDensity d = dephase(eq, {DephasingGenerator::kJz, 0.5});
  CHECK(d.matrix()(2, 0).real() == doctest::Approx(std::exp(-2.0) / 3).epsilon(1e-14));
  CHECK(d.matrix()(1, 0).real() == doctest::Approx(std::exp(-0.5) / 3).epsilon(1e-14));

  CHECK_THROWS_AS(dephase(rho, {DephasingGenerator::kA, -0.1}), ConfigError);
  CHECK(parse_dephasing_generator("Jz") == DephasingGenerator::kJz);
  CHECK(to_string(DephasingGenerator::kA) == "A");
}

TEST_CASE("dephasing keeps the state physical") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int n : {2, 10, 50}) {
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const DickeDensity rho = qgsim::test::random_density(n, rng, 1 + trial % 4);
      const auto g = trial % 2 ? DephasingGenerator::kA : DephasingGenerator::kJz;
      const DickeDensity out = dephase(rho, {g, u(rng) * (g == DephasingGenerator::kA ? 1e-4 : 1.0)});
      worst = std::min(worst, out.min_eigenvalue());
      CHECK(out.trace() == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(worst >= -1e-10);
  }
}

TEST_CASE("Lindblad derivative") {
  std::mt19937_64 rng(10);
  ComplexMatrix diag = ComplexMatrix::Zero(5, 5);
  diag.diagonal() = ComplexVector::Constant(5, 0.2);
  CHECK(max_abs(lindblad_derivative(DickeDensity(4, diag), DephasingGenerator::kA)) == 0.0);

  const DickeDensity rho = DickeDensity::pure(qgsim::test::random_ket(10, rng));
  for (auto g : {DephasingGenerator::kA, DephasingGenerator::kJz}) {
    const ComplexMatrix l = lindblad_derivative(rho, g);
    CHECK(std::abs(l.trace()) < 1e-12);
    CHECK(max_abs(ComplexMatrix(l - 2.0 * lindblad_action(rho, g))) < 1e-12 * std::max(1.0, max_abs(l)));

    // Step 1e-6 for J_z; A's eigenvalue gaps are 5x wider at n = 10, so its step shrinks by 25.
    const double h = g == DephasingGenerator::kA ? 1e-6 / 25 : 1e-6;
    const double delta = g == DephasingGenerator::kA ? 1e-5 : 0.1;
    const ComplexMatrix fd =
        (dephase(rho, {g, delta + h}).matrix() - dephase(rho, {g, delta - h}).matrix()) / (2 * h);
    const ComplexMatrix at = lindblad_derivative(dephase(rho, {g, delta}), g);
    CHECK(max_abs(ComplexMatrix(fd - at)) < 1e-8 * std::max(1.0, max_abs(at)));
  }
}

TEST_CASE("pipeline") {
  ExperimentConfig c;
  c.n = 100;
  CHECK(jz_distribution(run_experiment(c)).probabilities(100) == doctest::Approx(1.0).epsilon(1e-12));

  c.recombiner = Recombiner::kU0;
  const auto golden = qgsim::test::read_csv(qgsim::test::golden_path("fig4a_n100.csv"));
  const RealVector p = jz_distribution(run_experiment_pure(c)).probabilities;
  CHECK((p - golden.column("P")).cwiseAbs().maxCoeff() < 1e-12);

  c.gravity = {0.01, 0.02, 0.3};
  c.dephasing = {{DephasingGenerator::kA, 1e-5}, {DephasingGenerator::kJz, 0.01}};
  const DickeDensity base = run_experiment(c);
  CHECK(base.trace() == doctest::Approx(1.0).epsilon(1e-10));

  std::array<ChannelStep, 4> order = {ChannelStep::kClassical, ChannelStep::kQuantum, ChannelStep::kDephaseA,
                                      ChannelStep::kDephaseJz};
  std::sort(order.begin(), order.end());
  do {
    const DickeDensity other = run_experiment(c, order);
    CHECK(max_abs(ComplexMatrix(other.matrix() - base.matrix())) < 1e-12);
  } while (std::next_permutation(order.begin(), order.end()));

  CHECK_THROWS_AS(run_experiment_pure(c), ConfigError);

  // Pure and density paths agree without dephasing.
  c.dephasing.clear();
  const ComplexVector psi = run_experiment_pure(c).amplitudes();
  ExperimentConfig zero = c;
  zero.dephasing = {{DephasingGenerator::kA, 0.0}};
  CHECK(!zero.has_active_dephasing());
  const DickeDensity via_density = evolve_before_recombiner(zero);
  const DickeDensity recombined = apply_recombiner(via_density, c.recombiner, c.twisting);
  CHECK(max_abs(ComplexMatrix(recombined.matrix() - psi * psi.adjoint())) < 1e-12);
}

TEST_CASE("measurement statistics before the recombiner do not see alpha") {
  ExperimentConfig c;
  c.n = 40;
  const RealVector p0 = evolve_pure_before_recombiner(c).amplitudes().cwiseAbs2();
  c.gravity.alpha = 0.7;
  const RealVector p1 = evolve_pure_before_recombiner(c).amplitudes().cwiseAbs2();
  CHECK((p1 - p0).cwiseAbs().maxCoeff() < 1e-14);
  const RealVector after = jz_distribution(run_experiment_pure(c)).probabilities;
  c.gravity.alpha = 0.0;
  CHECK((after - jz_distribution(run_experiment_pure(c)).probabilities).cwiseAbs().maxCoeff() > 1e-3);
}

TEST_CASE("config validation") {
  ExperimentConfig c;
  c.n = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.n = 4;
  c.gravity.alpha = std::nan("");
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.gravity.alpha = 0;
  c.dephasing = {{DephasingGenerator::kA, 1e-3}, {DephasingGenerator::kA, 2e-3}};
  CHECK(c.total_delta(DephasingGenerator::kA) == doctest::Approx(3e-3));
  CHECK(parse_recombiner("U0") == Recombiner::kU0);
  CHECK(parse_recombiner("U0_DAGGER") == Recombiner::kU0Dagger);
  CHECK_THROWS_AS(parse_recombiner("U1"), ConfigError);
}
