#pragma once

// The interferometer's channels: OAT state preparation U_0, the
// quantum-gravity unitary U_Q = exp(i alpha A), the classical-gravity unitary
// U_C = exp(i(beta J_z + gamma N_+)), dephasing in the A or J_z eigenbasis,
// and the full pipeline U_2 . D . U_Q . U_C . U_0 |Psi_0>.

#include <span>
#include <string_view>
#include <vector>

#include "qgsim/dicke.hpp"

namespace qgsim {

struct TwistingSpec {
  double chi_tau = kPi / 4;  // radians of J_z^2 phase; pi/4 yields the cat state
};

struct GravityParams {
  double alpha = 0.0;  // coefficient of A (kappa_0 t / hbar)
  double beta = 0.0;   // differential classical phase
  double gamma = 0.0;  // common phase; global only at fixed N
};

enum class DephasingGenerator { kA, kJz };

std::string_view to_string(DephasingGenerator g);
DephasingGenerator parse_dephasing_generator(std::string_view name);

struct DephasingSpec {
  DephasingGenerator generator = DephasingGenerator::kA;
  double delta = 0.0;
};

enum class Recombiner { kU0Dagger, kU0 };

std::string_view to_string(Recombiner r);
Recombiner parse_recombiner(std::string_view name);

struct ExperimentConfig {
  int n = 100;
  TwistingSpec twisting;
  GravityParams gravity;
  std::vector<DephasingSpec> dephasing;
  Recombiner recombiner = Recombiner::kU0Dagger;
  JzConvention convention = kDefaultConvention;

  void validate() const;
  bool has_active_dephasing() const;
  // Sum of configured deltas for one generator (maps compose additively).
  double total_delta(DephasingGenerator g) const;
};

// exp(i pi/2 J_x) exp(i chi_tau J_z^2) exp(i pi/2 J_x), applied right to left.
DickeKet oat_prepare(const DickeKet& state, const TwistingSpec& spec);
DickeDensity oat_prepare(const DickeDensity& rho, const TwistingSpec& spec);
// U_0^dagger: the conjugate factors in reverse order.
DickeKet oat_unprepare(const DickeKet& state, const TwistingSpec& spec);
DickeDensity oat_unprepare(const DickeDensity& rho, const TwistingSpec& spec);

DickeKet apply_quantum_gravity(const DickeKet& state, double alpha);
DickeDensity apply_quantum_gravity(const DickeDensity& rho, double alpha);

DickeKet apply_classical_gravity(const DickeKet& state, double beta, double gamma,
                                 JzConvention convention = kDefaultConvention);
DickeDensity apply_classical_gravity(const DickeDensity& rho, double beta, double gamma,
                                     JzConvention convention = kDefaultConvention);

// Eigenvalues lambda_n of the dephasing generator in the Dicke basis.
RealVector dephasing_eigenvalues(DephasingGenerator g, int n);

// rho_nm -> exp(-delta (lambda_n - lambda_m)^2) rho_nm.
DickeDensity dephase(const DickeDensity& rho, const DephasingSpec& spec);

// d rho / d delta at the given (already dephased) rho: -(lambda_n - lambda_m)^2 rho_nm.
// The closed-form map solves d rho / d delta = 2 L[Gamma] rho, so this is
// twice the Lindblad action below.
ComplexMatrix lindblad_derivative(const DickeDensity& rho, DephasingGenerator g);
// Gamma rho Gamma - (Gamma^2 rho + rho Gamma^2)/2, by explicit matrix products.
ComplexMatrix lindblad_action(const DickeDensity& rho, DephasingGenerator g);

// Dense U_0 and U_2 for callers that conjugate arbitrary (traceless) matrices.
ComplexMatrix oat_unitary(int n, const TwistingSpec& spec);
ComplexMatrix recombiner_unitary(int n, Recombiner r, const TwistingSpec& twisting);

DickeKet apply_recombiner(const DickeKet& state, Recombiner r, const TwistingSpec& twisting);
DickeDensity apply_recombiner(const DickeDensity& rho, Recombiner r, const TwistingSpec& twisting);

// |Psi_i> = U_0 |(N/2)_z>.
DickeKet prepare_probe(const ExperimentConfig& config);

// The diagonal maps between U_0 and U_2. They all commute.
enum class ChannelStep { kClassical, kQuantum, kDephaseA, kDephaseJz };

inline constexpr ChannelStep kCanonicalOrder[] = {ChannelStep::kClassical, ChannelStep::kQuantum,
                                                   ChannelStep::kDephaseA, ChannelStep::kDephaseJz};

// State just before U_2 (pure pipeline). Throws if dephasing is active.
DickeKet evolve_pure_before_recombiner(const ExperimentConfig& config);
DickeDensity evolve_before_recombiner(const ExperimentConfig& config,
                                      std::span<const ChannelStep> order = kCanonicalOrder);

// Final pure state; throws ConfigError when any dephasing delta is nonzero.
DickeKet run_experiment_pure(const ExperimentConfig& config);
// Final density. Uses the ket pipeline when no dephasing is active.
DickeDensity run_experiment(const ExperimentConfig& config);
DickeDensity run_experiment(const ExperimentConfig& config, std::span<const ChannelStep> order);

}  // namespace qgsim
