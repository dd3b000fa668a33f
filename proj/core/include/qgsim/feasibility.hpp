#pragma once

// Laboratory numbers for the gravitational self-interaction of two Gaussian
// atomic clouds: the kappa_ij pair integrals, the resulting alpha, the atom
// number needed to resolve it, and the sigma scaling that separates gravity
// (~1/sigma) from s-wave contact interactions (~1/sigma^3). SI units
// throughout.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace qgsim {

inline constexpr double kAtomicMassUnit = 1.66053906660e-27;         // kg
inline constexpr double kRubidium87Mass = 86.909180527 * kAtomicMassUnit;  // kg
inline constexpr double kGravitationalConstant = 6.67430e-11;          // m^3 kg^-1 s^-2
inline constexpr double kReducedPlanck = 1.054571817e-34;              // J s
// Peak density quoted for the Rb-87 reference configuration, in cm^-3.
inline constexpr double kQuotedDensityPerCm3 = 4e13;

struct PhysicalConfig {
  double mass = kRubidium87Mass;
  double sigma = 50e-6;        // |u|^2 ~ exp(-r^2 / sigma^2)
  double separation = 500e-6;  // x_0: clouds centred at +/- x_0
  double time = 1.0;
  double repetitions = 1e5;
  double G = kGravitationalConstant;
  double hbar = kReducedPlanck;
  // Classical-field energies for the two modes, if a model supplies them.
  std::optional<double> v_a;
  std::optional<double> v_b;

  void validate() const;
};

enum class Mode { kA, kB };

// -1/2 G m^2 <1/|r - r'|> for two Gaussians whose centres are `distance` apart.
double kappa_at_distance(const PhysicalConfig& config, double distance);
double kappa_gaussian_analytic(const PhysicalConfig& config, Mode i, Mode j);

struct MonteCarloEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
};

// Samples r ~ |u_i|^2 and r' ~ |u_j|^2 independently in fixed batches with
// per-batch seeds; the estimate does not depend on `jobs`.
MonteCarloEstimate kappa_monte_carlo(const PhysicalConfig& config, Mode i, Mode j, std::uint64_t samples,
                                     std::uint64_t seed = 0, unsigned jobs = 1);

struct AlphaMagnitude {
  double closed_form = 0.0;  // t G m^2 / (hbar sigma sqrt(pi))
  double derived = 0.0;      // |kappa_aa| t / hbar
  double ratio() const { return derived / closed_form; }
};

AlphaMagnitude alpha_magnitude(const PhysicalConfig& config);

struct AtomNumber {
  double closed_form = 0.0;  // sqrt(2 hbar sigma sqrt(pi) / (sqrt(k) G m^2 t))
  double derived = 0.0;      // same bound with the first-principles alpha
};

AtomNumber minimum_atom_number(const PhysicalConfig& config);

// Smallest resolvable alpha, 2 / (sqrt(k) N^2), for the optimal state.
double detectable_alpha_bound(double atoms, double repetitions);

struct ScalingRow {
  double sigma = 0.0;
  double gravity = 0.0;  // alpha(sigma) / alpha(sigma_0)
  double contact = 0.0;  // (sigma_0 / sigma)^3
};

std::vector<ScalingRow> scaling_separation(const PhysicalConfig& config, std::span<const double> sigmas);

// Least-squares slope of log y against log x.
double loglog_slope(std::span<const double> x, std::span<const double> y);

double peak_density(const PhysicalConfig& config, double atoms);  // m^-3

struct DensityCheck {
  double atoms = 0.0;
  double peak_per_m3 = 0.0;
  double peak_per_cm3 = 0.0;
  double quoted_per_cm3 = kQuotedDensityPerCm3;
  bool flagged = false;  // more than 10x away from the quoted value
};

DensityCheck density_check(const PhysicalConfig& config, double atoms);

struct FeasibilityReport {
  PhysicalConfig config;
  AlphaMagnitude alpha;
  std::array<std::array<double, 2>, 2> kappa{};
  AtomNumber n_min;
  double cross_term_ratio = 0.0;
  DensityCheck density;
  // Dimensionless (v_b - v_a) t / hbar and -(v_a + v_b) t / (2 hbar), when v_a and v_b are given.
  std::optional<double> beta;
  std::optional<double> gamma;
};

FeasibilityReport feasibility_report(const PhysicalConfig& config);

}  // namespace qgsim
