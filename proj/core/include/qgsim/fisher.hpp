#pragma once

// Multi-parameter estimation: quantum Fisher matrix of pure probe states,
// J_z outcome probabilities and their parameter derivatives, the classical
// Fisher matrix, and Cramer-Rao inversion with nuisance parameters.

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "qgsim/channels.hpp"
#include "qgsim/dicke.hpp"

namespace qgsim {

enum class ParameterId { kAlpha, kBeta, kDeltaA, kDeltaJz };

inline constexpr ParameterId kAllParameters[] = {ParameterId::kAlpha, ParameterId::kBeta, ParameterId::kDeltaA,
                                                 ParameterId::kDeltaJz};

std::string_view to_string(ParameterId p);
ParameterId parse_parameter(std::string_view name);
bool is_dephasing_parameter(ParameterId p);

// Figure panels evaluate derivatives at alpha = beta = delta = 1e-8.
inline constexpr double kFigureOffset = 1e-8;

// Copy of `config` with alpha = beta = kFigureOffset and, when
// `with_dephasing`, A and J_z dephasing at delta = kFigureOffset.
ExperimentConfig figure_mode_base(ExperimentConfig config, bool with_dephasing);

struct FisherMatrix {
  std::vector<ParameterId> params;
  RealMatrix values;

  Eigen::Index index_of(ParameterId p) const;
  double at(ParameterId a, ParameterId b) const;
  double symmetry_error() const;
  double min_eigenvalue() const;
};

// 4 (Re<G_i psi|G_j psi> - <G_i><G_j>): the covariance form.
RealMatrix qfi_covariance_form(const DickeKet& state, std::span<const CollectiveOperator> generators);
// 2(<d_i|d_j> + <d_j|d_i> - 2<psi|d_i><d_j|psi>) with |d_k> = i G_k |psi>.
RealMatrix qfi_literal_form(const DickeKet& state, std::span<const CollectiveOperator> generators);

// QFI for the unitary parameters alpha (generator A) and beta (J_z under the
// convention). Dephasing parameters have no pure-state QFI and are rejected.
FisherMatrix qfi_pure(const DickeKet& state, std::span<const ParameterId> params,
                      JzConvention convention = kDefaultConvention);

CollectiveOperator parameter_generator(ParameterId p, int n, JzConvention convention);

// P_m over ascending m and dP_m/d theta_k, one column per parameter.
struct ProbabilityTable {
  int n = 0;
  std::vector<ParameterId> params;
  RealVector probabilities;
  RealMatrix derivatives;

  Eigen::Index column(ParameterId p) const;
};

ProbabilityTable prob_derivatives_analytic(const ExperimentConfig& config, std::span<const ParameterId> params);

// Central differences; dephasing parameters whose base minus step would be
// negative use the one-sided stencil (-3f(x) + 4f(x+h) - f(x+2h)) / 2h.
ProbabilityTable prob_derivatives_fd(const ExperimentConfig& config, std::span<const ParameterId> params,
                                     double step);

// `relative` divided by the spread of the parameter's exponent over the Dicke
// ladder: max-min eigenvalue for alpha and beta, its square for delta.
double fd_natural_step(ParameterId p, int n, JzConvention convention, double relative = 1e-4);

struct DerivativeCheck {
  std::vector<ParameterId> params;
  RealVector steps;
  RealVector max_abs_error;  // max_m |analytic - fd|
  RealVector scale;          // max(1, max_m |analytic|)
  double tolerance = 0.0;    // relative to scale

  bool passed() const;
};

DerivativeCheck check_derivatives(const ExperimentConfig& config, std::span<const ParameterId> params,
                                  double tolerance = 1e-5);

inline constexpr double kDefaultProbabilityFloor = 1e-14;

struct CfiResult {
  FisherMatrix fisher;
  int skipped_outcomes = 0;
  // Outcomes with zero probability but nonzero derivative (unbounded
  // information); reported and left out of the sum.
  std::vector<Eigen::Index> diverging_outcomes;
};

CfiResult cfi_matrix(const RealMatrix& derivatives, const RealVector& probabilities,
                     std::span<const ParameterId> params, double floor = kDefaultProbabilityFloor);
CfiResult cfi_matrix(const ProbabilityTable& table, double floor = kDefaultProbabilityFloor);

struct CrbOptions {
  bool allow_pseudo_inverse = false;
  double max_condition = 1e12;
};

struct CrbReport {
  std::vector<ParameterId> params;
  RealMatrix inverse;
  RealVector variances;  // [F^-1]_ii / k
  double repetitions = 1;
  // 1/sqrt(k / [F^-1]_aa); present when alpha is a parameter.
  std::optional<double> detectable_alpha;
  // Condition number of D^-1/2 F D^-1/2 with D = diag(F).
  double scaled_condition = 1.0;
  bool singular = false;
  std::vector<RealVector> degenerate_directions;
};

class SingularFisherError : public NumericalError {
 public:
  SingularFisherError(const std::string& what, std::vector<RealVector> directions)
      : NumericalError(what), directions_(std::move(directions)) {}
  const std::vector<RealVector>& directions() const { return directions_; }

 private:
  std::vector<RealVector> directions_;
};

CrbReport crb_invert(const FisherMatrix& f, double repetitions, const CrbOptions& options = {});

struct DecouplingRow {
  ParameterId param;
  double ratio;        // F_{alpha,k} / F_{alpha,alpha}
  double correlation;  // F_{alpha,k} / sqrt(F_{alpha,alpha} F_{k,k})
  bool flagged;
};

struct DecouplingReport {
  FisherMatrix fisher;
  double threshold;
  std::vector<DecouplingRow> rows;
  bool any_flagged() const;
};

inline constexpr double kDefaultDecouplingThreshold = 0.01;

DecouplingReport decoupling_report(const FisherMatrix& f, double threshold = kDefaultDecouplingThreshold);
DecouplingReport decoupling_report(const ExperimentConfig& config, std::span<const ParameterId> params,
                                   double threshold = kDefaultDecouplingThreshold);

}  // namespace qgsim
