#include "qgsim/channels.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace qgsim {

namespace {

void require_finite(double v, std::string_view name) {
  if (!std::isfinite(v)) throw ConfigError(fmt::format("{} must be finite", name));
}

ComplexVector diagonal_phases(const RealVector& generator, double angle) {
  ComplexVector p(generator.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = std::polar(1.0, angle * generator(i));
  return p;
}

DickeKet apply_diagonal(const DickeKet& state, const ComplexVector& phases) {
  return DickeKet(state.n(), state.amplitudes().cwiseProduct(phases));
}

DickeDensity apply_diagonal(const DickeDensity& rho, const ComplexVector& phases) {
  return DickeDensity(rho.n(), phases.asDiagonal() * rho.matrix() * phases.conjugate().asDiagonal());
}

RealVector twist_generator(int n) { return make_operator(OperatorKind::kJz2, n).diagonal_values(); }

RealVector classical_generator(int n, JzConvention convention) {
  return beta_generator(n, convention).diagonal_values();
}

ComplexVector classical_phases(int n, double beta, double gamma, JzConvention convention) {
  RealVector g = classical_generator(n, convention);
  ComplexVector p(g.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = std::polar(1.0, beta * g(i) + gamma * n);
  return p;
}

}  // namespace

std::string_view to_string(DephasingGenerator g) { return g == DephasingGenerator::kA ? "A" : "Jz"; }

DephasingGenerator parse_dephasing_generator(std::string_view name) {
  if (name == "A") return DephasingGenerator::kA;
  if (name == "Jz") return DephasingGenerator::kJz;
  throw ConfigError(fmt::format("dephasing generator must be 'A' or 'Jz', got '{}'", name));
}

std::string_view to_string(Recombiner r) { return r == Recombiner::kU0 ? "U0" : "U0_DAGGER"; }

Recombiner parse_recombiner(std::string_view name) {
  if (name == "U0") return Recombiner::kU0;
  if (name == "U0_DAGGER") return Recombiner::kU0Dagger;
  throw ConfigError(fmt::format("recombiner must be 'U0' or 'U0_DAGGER', got '{}'", name));
}

void ExperimentConfig::validate() const {
  if (n < 1) throw ConfigError(fmt::format("n must be >= 1, got {}", n));
  require_finite(twisting.chi_tau, "chi_tau");
  require_finite(gravity.alpha, "alpha");
  require_finite(gravity.beta, "beta");
  require_finite(gravity.gamma, "gamma");
  for (const auto& d : dephasing) {
    require_finite(d.delta, "dephasing delta");
    if (d.delta < 0) throw ConfigError(fmt::format("dephasing delta must be >= 0, got {}", d.delta));
  }
}

bool ExperimentConfig::has_active_dephasing() const {
  return std::any_of(dephasing.begin(), dephasing.end(), [](const DephasingSpec& d) { return d.delta != 0.0; });
}

double ExperimentConfig::total_delta(DephasingGenerator g) const {
  double total = 0.0;
  for (const auto& d : dephasing) {
    if (d.generator == g) total += d.delta;
  }
  return total;
}

// --------------------------------------------------------------------- U_0

DickeKet oat_prepare(const DickeKet& state, const TwistingSpec& spec) {
  require_finite(spec.chi_tau, "chi_tau");
  const auto& eig = *JxEigensystem::get(state.n());
  ComplexVector v = eig.rotate(state.amplitudes(), kPi / 2);
  v = v.cwiseProduct(diagonal_phases(twist_generator(state.n()), spec.chi_tau));
  return DickeKet(state.n(), eig.rotate(v, kPi / 2));
}

DickeKet oat_unprepare(const DickeKet& state, const TwistingSpec& spec) {
  require_finite(spec.chi_tau, "chi_tau");
  const auto& eig = *JxEigensystem::get(state.n());
  ComplexVector v = eig.rotate(state.amplitudes(), -kPi / 2);
  v = v.cwiseProduct(diagonal_phases(twist_generator(state.n()), -spec.chi_tau));
  return DickeKet(state.n(), eig.rotate(v, -kPi / 2));
}

DickeDensity oat_prepare(const DickeDensity& rho, const TwistingSpec& spec) {
  require_finite(spec.chi_tau, "chi_tau");
  const auto& eig = *JxEigensystem::get(rho.n());
  const ComplexVector twist = diagonal_phases(twist_generator(rho.n()), spec.chi_tau);
  ComplexMatrix m = eig.rotate(rho.matrix(), kPi / 2);
  m = twist.asDiagonal() * m * twist.conjugate().asDiagonal();
  return DickeDensity(rho.n(), eig.rotate(m, kPi / 2));
}

DickeDensity oat_unprepare(const DickeDensity& rho, const TwistingSpec& spec) {
  require_finite(spec.chi_tau, "chi_tau");
  const auto& eig = *JxEigensystem::get(rho.n());
  const ComplexVector twist = diagonal_phases(twist_generator(rho.n()), -spec.chi_tau);
  ComplexMatrix m = eig.rotate(rho.matrix(), -kPi / 2);
  m = twist.asDiagonal() * m * twist.conjugate().asDiagonal();
  return DickeDensity(rho.n(), eig.rotate(m, -kPi / 2));
}

// ------------------------------------------------------------ U_Q and U_C

DickeKet apply_quantum_gravity(const DickeKet& state, double alpha) {
  require_finite(alpha, "alpha");
  return apply_diagonal(state, diagonal_phases(make_operator(OperatorKind::kA, state.n()).diagonal_values(), alpha));
}

DickeDensity apply_quantum_gravity(const DickeDensity& rho, double alpha) {
  require_finite(alpha, "alpha");
  return apply_diagonal(rho, diagonal_phases(make_operator(OperatorKind::kA, rho.n()).diagonal_values(), alpha));
}

DickeKet apply_classical_gravity(const DickeKet& state, double beta, double gamma, JzConvention convention) {
  require_finite(beta, "beta");
  require_finite(gamma, "gamma");
  return apply_diagonal(state, classical_phases(state.n(), beta, gamma, convention));
}

DickeDensity apply_classical_gravity(const DickeDensity& rho, double beta, double gamma, JzConvention convention) {
  require_finite(beta, "beta");
  require_finite(gamma, "gamma");
  return apply_diagonal(rho, classical_phases(rho.n(), beta, gamma, convention));
}

// --------------------------------------------------------------- dephasing

RealVector dephasing_eigenvalues(DephasingGenerator g, int n) {
  return make_operator(g == DephasingGenerator::kA ? OperatorKind::kA : OperatorKind::kJz, n).diagonal_values();
}

DickeDensity dephase(const DickeDensity& rho, const DephasingSpec& spec) {
  require_finite(spec.delta, "dephasing delta");
  if (spec.delta < 0) throw ConfigError(fmt::format("dephasing delta must be >= 0, got {}", spec.delta));
  const RealVector lambda = dephasing_eigenvalues(spec.generator, rho.n());
  ComplexMatrix out = rho.matrix();
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
      if (r == c) continue;
      const double gap = lambda(r) - lambda(c);
      out(r, c) *= std::exp(-spec.delta * gap * gap);
    }
  }
  return DickeDensity(rho.n(), std::move(out));
}

ComplexMatrix lindblad_derivative(const DickeDensity& rho, DephasingGenerator g) {
  const RealVector lambda = dephasing_eigenvalues(g, rho.n());
  ComplexMatrix out = rho.matrix();
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
      const double gap = lambda(r) - lambda(c);
      out(r, c) *= -gap * gap;
    }
  }
  return out;
}

ComplexMatrix lindblad_action(const DickeDensity& rho, DephasingGenerator g) {
  const ComplexMatrix gamma = dephasing_eigenvalues(g, rho.n()).cast<Complex>().asDiagonal();
  const ComplexMatrix gamma2 = gamma * gamma;
  const ComplexMatrix& r = rho.matrix();
  return gamma * r * gamma - 0.5 * (gamma2 * r + r * gamma2);
}

// ---------------------------------------------------------------- pipeline

ComplexMatrix oat_unitary(int n, const TwistingSpec& spec) {
  require_finite(spec.chi_tau, "chi_tau");
  const ComplexMatrix half_turn = rotation_x(n, kPi / 2);
  return half_turn * diagonal_phases(twist_generator(n), spec.chi_tau).asDiagonal() * half_turn;
}

ComplexMatrix recombiner_unitary(int n, Recombiner r, const TwistingSpec& twisting) {
  ComplexMatrix u = oat_unitary(n, twisting);
  if (r == Recombiner::kU0Dagger) u.adjointInPlace();
  return u;
}

DickeKet apply_recombiner(const DickeKet& state, Recombiner r, const TwistingSpec& twisting) {
  return r == Recombiner::kU0 ? oat_prepare(state, twisting) : oat_unprepare(state, twisting);
}

DickeDensity apply_recombiner(const DickeDensity& rho, Recombiner r, const TwistingSpec& twisting) {
  return r == Recombiner::kU0 ? oat_prepare(rho, twisting) : oat_unprepare(rho, twisting);
}

DickeKet prepare_probe(const ExperimentConfig& config) {
  config.validate();
  return oat_prepare(polarized_state(config.n), config.twisting);
}

DickeKet evolve_pure_before_recombiner(const ExperimentConfig& config) {
  if (config.has_active_dephasing()) throw ConfigError("pure pipeline requested with active dephasing");
  DickeKet psi = prepare_probe(config);
  psi = apply_classical_gravity(psi, config.gravity.beta, config.gravity.gamma, config.convention);
  return apply_quantum_gravity(psi, config.gravity.alpha);
}

DickeDensity evolve_before_recombiner(const ExperimentConfig& config, std::span<const ChannelStep> order) {
  for (ChannelStep step : kCanonicalOrder) {
    if (std::count(order.begin(), order.end(), step) != 1) {
      throw ConfigError("channel order must list each of classical, quantum, dephase-A, dephase-Jz exactly once");
    }
  }
  DickeDensity rho = DickeDensity::pure(prepare_probe(config));
  for (ChannelStep step : order) {
    switch (step) {
      case ChannelStep::kClassical:
        rho = apply_classical_gravity(rho, config.gravity.beta, config.gravity.gamma, config.convention);
        break;
      case ChannelStep::kQuantum:
        rho = apply_quantum_gravity(rho, config.gravity.alpha);
        break;
      case ChannelStep::kDephaseA:
      case ChannelStep::kDephaseJz: {
        const auto g = step == ChannelStep::kDephaseA ? DephasingGenerator::kA : DephasingGenerator::kJz;
        for (const auto& d : config.dephasing) {
          if (d.generator == g) rho = dephase(rho, d);
        }
        break;
      }
    }
  }
  return rho;
}

DickeKet run_experiment_pure(const ExperimentConfig& config) {
  return apply_recombiner(evolve_pure_before_recombiner(config), config.recombiner, config.twisting);
}

DickeDensity run_experiment(const ExperimentConfig& config) {
  config.validate();
  if (!config.has_active_dephasing()) return DickeDensity::pure(run_experiment_pure(config));
  return run_experiment(config, kCanonicalOrder);
}

DickeDensity run_experiment(const ExperimentConfig& config, std::span<const ChannelStep> order) {
  config.validate();
  return apply_recombiner(evolve_before_recombiner(config, order), config.recombiner, config.twisting);
}

}  // namespace qgsim
