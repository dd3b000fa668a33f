#include "qgsim/fisher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace qgsim {

namespace {

void require_unique(std::span<const ParameterId> params) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (std::size_t j = i + 1; j < params.size(); ++j) {
      if (params[i] == params[j]) throw ConfigError(fmt::format("parameter {} listed twice", to_string(params[i])));
    }
  }
}

DephasingGenerator dephasing_of(ParameterId p) {
  return p == ParameterId::kDeltaA ? DephasingGenerator::kA : DephasingGenerator::kJz;
}

void require_hermitian(const CollectiveOperator& g) {
  const ComplexMatrix m = g.matrix();
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (g.hermiticity_error() > 1e-12 * scale) {
    throw ConfigError(fmt::format("generator {} is not Hermitian (error {:.3g})", to_string(g.kind()),
                                  g.hermiticity_error()));
  }
}

double parameter_value(const ExperimentConfig& c, ParameterId p) {
  switch (p) {
    case ParameterId::kAlpha: return c.gravity.alpha;
    case ParameterId::kBeta: return c.gravity.beta;
    default: return c.total_delta(dephasing_of(p));
  }
}

ExperimentConfig with_parameter(ExperimentConfig c, ParameterId p, double value) {
  switch (p) {
    case ParameterId::kAlpha: c.gravity.alpha = value; break;
    case ParameterId::kBeta: c.gravity.beta = value; break;
    default: {
      const auto g = dephasing_of(p);
      std::erase_if(c.dephasing, [g](const DephasingSpec& d) { return d.generator == g; });
      c.dephasing.push_back({g, value});
      std::stable_sort(c.dephasing.begin(), c.dephasing.end(),
                       [](const DephasingSpec& a, const DephasingSpec& b) { return a.generator < b.generator; });
    }
  }
  return c;
}

RealVector outcome_probabilities(const ExperimentConfig& c) {
  return run_experiment(c).matrix().diagonal().real();
}

using WideComplex = std::complex<long double>;
using WideMatrix = Eigen::Matrix<WideComplex, Eigen::Dynamic, Eigen::Dynamic>;
using WideVector = Eigen::Matrix<WideComplex, Eigen::Dynamic, 1>;

WideVector wide_phases(const RealVector& generator, long double angle) {
  WideVector p(generator.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const long double a = angle * static_cast<long double>(generator(i));
    p(i) = WideComplex(std::cos(a), std::sin(a));
  }
  return p;
}

// U_2 rebuilt in long double from re-orthogonalized J_x eigenvectors. The
// derivative columns sum to tr(U^dagger U dRho), and for dephasing dRho has
// entries of order N^4, so a double-precision U_2 (unitary to ~1e-15) leaves
// sums near 1e-8 at N = 100.
WideMatrix wide_recombiner(int n, Recombiner r, const TwistingSpec& twisting) {
  using WideReal = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const auto& eig = *JxEigensystem::get(n);
  WideReal v = eig.vectors().cast<long double>();
  const WideReal identity = WideReal::Identity(n + 1, n + 1);
  for (int iter = 0; iter < 2; ++iter) {
    const WideReal gram = v.transpose() * v;
    v = v * (1.5L * identity - 0.5L * gram);  // Newton-Schulz step
  }
  const long double sign = r == Recombiner::kU0 ? 1.0L : -1.0L;
  const WideMatrix vc = v.cast<WideComplex>();
  const WideMatrix half_turn =
      vc * wide_phases(eig.eigenvalues(), sign * 3.14159265358979323846264338327950288L / 2).asDiagonal() * vc.transpose();
  const RealVector twist = make_operator(OperatorKind::kJz2, n).diagonal_values();
  return half_turn * wide_phases(twist, sign * static_cast<long double>(twisting.chi_tau)).asDiagonal() * half_turn;
}

RealVector narrow(const Eigen::Matrix<long double, Eigen::Dynamic, 1>& v) { return v.cast<double>(); }

RealVector wide_conjugated_diagonal(const WideMatrix& u, const ComplexMatrix& m) {
  return narrow((u * m.cast<WideComplex>()).cwiseProduct(u.conjugate()).rowwise().sum().real());
}

// diag(U M U^dagger) for an arbitrary square M.
RealVector conjugated_diagonal(const ComplexMatrix& u, const ComplexMatrix& m) {
  return (u * m).cwiseProduct(u.conjugate()).rowwise().sum().real();
}

}  // namespace

std::string_view to_string(ParameterId p) {
  switch (p) {
    case ParameterId::kAlpha: return "alpha";
    case ParameterId::kBeta: return "beta";
    case ParameterId::kDeltaA: return "delta_A";
    case ParameterId::kDeltaJz: return "delta_Jz";
  }
  return "unknown";
}

ParameterId parse_parameter(std::string_view name) {
  for (ParameterId p : kAllParameters) {
    if (to_string(p) == name) return p;
  }
  throw ConfigError(fmt::format("unknown parameter '{}' (expected alpha, beta, delta_A or delta_Jz)", name));
}

bool is_dephasing_parameter(ParameterId p) { return p == ParameterId::kDeltaA || p == ParameterId::kDeltaJz; }

ExperimentConfig figure_mode_base(ExperimentConfig config, bool with_dephasing) {
  config.gravity.alpha = kFigureOffset;
  config.gravity.beta = kFigureOffset;
  if (with_dephasing) {
    config = with_parameter(std::move(config), ParameterId::kDeltaA, kFigureOffset);
    config = with_parameter(std::move(config), ParameterId::kDeltaJz, kFigureOffset);
  }
  return config;
}

// ------------------------------------------------------------ FisherMatrix

Eigen::Index FisherMatrix::index_of(ParameterId p) const {
  auto it = std::find(params.begin(), params.end(), p);
  if (it == params.end()) throw ConfigError(fmt::format("parameter {} not in Fisher matrix", to_string(p)));
  return static_cast<Eigen::Index>(it - params.begin());
}

double FisherMatrix::at(ParameterId a, ParameterId b) const { return values(index_of(a), index_of(b)); }

double FisherMatrix::symmetry_error() const {
  if (values.size() == 0) return 0.0;
  return (values - values.transpose()).cwiseAbs().maxCoeff();
}

double FisherMatrix::min_eigenvalue() const {
  if (values.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(values, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// --------------------------------------------------------------------- QFI

RealMatrix qfi_covariance_form(const DickeKet& state, std::span<const CollectiveOperator> generators) {
  const auto k = static_cast<Eigen::Index>(generators.size());
  std::vector<ComplexVector> applied;
  RealVector means(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    require_hermitian(generators[i]);
    applied.push_back(generators[i].apply(state.amplitudes()));
    means(i) = state.amplitudes().dot(applied.back()).real();
  }
  RealMatrix f(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = i; j < k; ++j) {
      f(i, j) = f(j, i) = 4.0 * (applied[i].dot(applied[j]).real() - means(i) * means(j));
    }
  }
  return f;
}

RealMatrix qfi_literal_form(const DickeKet& state, std::span<const CollectiveOperator> generators) {
  const auto k = static_cast<Eigen::Index>(generators.size());
  const ComplexVector& psi = state.amplitudes();
  const Complex i_unit(0.0, 1.0);
  std::vector<ComplexVector> d;
  for (const auto& g : generators) {
    require_hermitian(g);
    d.push_back(i_unit * g.apply(psi));
  }
  RealMatrix f(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const Complex value = 2.0 * (d[i].dot(d[j]) + d[j].dot(d[i]) - 2.0 * psi.dot(d[i]) * d[j].dot(psi));
      f(i, j) = value.real();
    }
  }
  return f;
}

CollectiveOperator parameter_generator(ParameterId p, int n, JzConvention convention) {
  switch (p) {
    case ParameterId::kAlpha: return make_operator(OperatorKind::kA, n);
    case ParameterId::kBeta: return beta_generator(n, convention);
    default: break;
  }
  throw ConfigError(fmt::format("{} is a dephasing parameter and has no unitary generator", to_string(p)));
}

FisherMatrix qfi_pure(const DickeKet& state, std::span<const ParameterId> params, JzConvention convention) {
  require_unique(params);
  std::vector<CollectiveOperator> generators;
  for (ParameterId p : params) {
    if (is_dephasing_parameter(p)) {
      throw ConfigError(fmt::format("no pure-state QFI for dephasing parameter {}; use the classical Fisher matrix",
                                    to_string(p)));
    }
    generators.push_back(parameter_generator(p, state.n(), convention));
  }
  return FisherMatrix{{params.begin(), params.end()}, qfi_covariance_form(state, generators)};
}

// ------------------------------------------------------------- derivatives

Eigen::Index ProbabilityTable::column(ParameterId p) const {
  auto it = std::find(params.begin(), params.end(), p);
  if (it == params.end()) throw ConfigError(fmt::format("parameter {} not in table", to_string(p)));
  return static_cast<Eigen::Index>(it - params.begin());
}

ProbabilityTable prob_derivatives_analytic(const ExperimentConfig& config, std::span<const ParameterId> params) {
  config.validate();
  require_unique(params);
  const int n = config.n;
  const auto k = static_cast<Eigen::Index>(params.size());
  const ComplexMatrix u2 = recombiner_unitary(n, config.recombiner, config.twisting);
  const Complex i_unit(0.0, 1.0);

  ProbabilityTable table;
  table.n = n;
  table.params.assign(params.begin(), params.end());
  table.derivatives.resize(n + 1, k);

  const WideMatrix wide_u2 = wide_recombiner(n, config.recombiner, config.twisting);

  if (!config.has_active_dephasing()) {
    const ComplexVector psi = evolve_pure_before_recombiner(config).amplitudes();
    table.probabilities = (u2 * psi).cwiseAbs2();
    const WideVector wide_psi = psi.cast<WideComplex>();
    const WideVector out = wide_u2 * wide_psi;
    for (Eigen::Index c = 0; c < k; ++c) {
      const ParameterId p = params[c];
      if (!is_dephasing_parameter(p)) {
        const WideVector g = parameter_generator(p, n, config.convention).diagonal_values().cast<WideComplex>();
        const WideVector chi = wide_u2 * (WideComplex(0, 1) * g.cwiseProduct(wide_psi));
        table.derivatives.col(c) = narrow(2.0L * (out.conjugate().cwiseProduct(chi)).real());
      } else {
        // d rho / d delta = 2 L[G] rho on a pure state, pushed through U_2:
        // 2 |(U_2 G psi)_m|^2 - 2 Re(conj(psi_f,m) (U_2 G^2 psi)_m).
        const RealVector lambda = dephasing_eigenvalues(dephasing_of(p), n);
        const WideVector l = lambda.cast<WideComplex>();
        const WideVector g_psi = wide_u2 * l.cwiseProduct(wide_psi);
        const WideVector g2_psi = wide_u2 * l.cwiseProduct(l).cwiseProduct(wide_psi);
        table.derivatives.col(c) = narrow(2.0L * (g_psi.cwiseAbs2() - (out.conjugate().cwiseProduct(g2_psi)).real()));
      }
    }
    return table;
  }

  const DickeDensity rho = evolve_before_recombiner(config);
  table.probabilities = conjugated_diagonal(u2, rho.matrix());
  for (Eigen::Index c = 0; c < k; ++c) {
    const ParameterId p = params[c];
    ComplexMatrix d_rho;
    if (!is_dephasing_parameter(p)) {
      // d/d theta of e^{i theta G} rho e^{-i theta G} = i (g_r - g_c) rho_rc.
      const RealVector g = parameter_generator(p, n, config.convention).diagonal_values();
      d_rho = rho.matrix();
      for (Eigen::Index col = 0; col <= n; ++col) {
        for (Eigen::Index row = 0; row <= n; ++row) d_rho(row, col) *= i_unit * (g(row) - g(col));
      }
    } else {
      d_rho = lindblad_derivative(rho, dephasing_of(p));
    }
    table.derivatives.col(c) = wide_conjugated_diagonal(wide_u2, d_rho);
  }
  return table;
}

ProbabilityTable prob_derivatives_fd(const ExperimentConfig& config, std::span<const ParameterId> params,
                                     double step) {
  config.validate();
  require_unique(params);
  if (!(step > 0) || !std::isfinite(step)) throw ConfigError(fmt::format("step must be > 0, got {}", step));

  ProbabilityTable table;
  table.n = config.n;
  table.params.assign(params.begin(), params.end());
  table.probabilities = outcome_probabilities(config);
  table.derivatives.resize(config.n + 1, static_cast<Eigen::Index>(params.size()));

  for (std::size_t c = 0; c < params.size(); ++c) {
    const ParameterId p = params[c];
    const double x = parameter_value(config, p);
    const auto col = static_cast<Eigen::Index>(c);
    if (is_dephasing_parameter(p) && x - step < 0) {
      const RealVector f1 = outcome_probabilities(with_parameter(config, p, x + step));
      const RealVector f2 = outcome_probabilities(with_parameter(config, p, x + 2 * step));
      table.derivatives.col(col) = (-3.0 * table.probabilities + 4.0 * f1 - f2) / (2.0 * step);
    } else {
      const RealVector fp = outcome_probabilities(with_parameter(config, p, x + step));
      const RealVector fm = outcome_probabilities(with_parameter(config, p, x - step));
      table.derivatives.col(col) = (fp - fm) / (2.0 * step);
    }
  }
  return table;
}

double fd_natural_step(ParameterId p, int n, JzConvention convention, double relative) {
  if (!(relative > 0)) throw ConfigError("relative step must be > 0");
  RealVector lambda;
  if (is_dephasing_parameter(p)) {
    lambda = dephasing_eigenvalues(dephasing_of(p), n);
  } else {
    lambda = parameter_generator(p, n, convention).diagonal_values();
  }
  const double spread = lambda.maxCoeff() - lambda.minCoeff();
  if (spread == 0) return relative;
  return relative / (is_dephasing_parameter(p) ? spread * spread : spread);
}

bool DerivativeCheck::passed() const {
  for (Eigen::Index i = 0; i < max_abs_error.size(); ++i) {
    if (!(max_abs_error(i) <= tolerance * scale(i))) return false;
  }
  return true;
}

DerivativeCheck check_derivatives(const ExperimentConfig& config, std::span<const ParameterId> params,
                                  double tolerance) {
  const ProbabilityTable analytic = prob_derivatives_analytic(config, params);
  DerivativeCheck check;
  check.params.assign(params.begin(), params.end());
  check.tolerance = tolerance;
  const auto k = static_cast<Eigen::Index>(params.size());
  check.steps.resize(k);
  check.max_abs_error.resize(k);
  check.scale.resize(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const ParameterId p = params[static_cast<std::size_t>(c)];
    check.steps(c) = fd_natural_step(p, config.n, config.convention);
    const ParameterId single[] = {p};
    const ProbabilityTable fd = prob_derivatives_fd(config, single, check.steps(c));
    check.max_abs_error(c) = (analytic.derivatives.col(c) - fd.derivatives.col(0)).cwiseAbs().maxCoeff();
    check.scale(c) = std::max(1.0, analytic.derivatives.col(c).cwiseAbs().maxCoeff());
  }
  return check;
}

// --------------------------------------------------------------------- CFI

CfiResult cfi_matrix(const RealMatrix& derivatives, const RealVector& probabilities,
                     std::span<const ParameterId> params, double floor) {
  require_unique(params);
  if (!(floor >= 0)) throw ConfigError("probability floor must be >= 0");
  const auto k = static_cast<Eigen::Index>(params.size());
  if (derivatives.rows() != probabilities.size() || derivatives.cols() != k) {
    throw ConfigError("derivative table shape does not match probabilities and parameter list");
  }

  CfiResult result;
  result.fisher.params.assign(params.begin(), params.end());
  result.fisher.values = RealMatrix::Zero(k, k);
  for (Eigen::Index m = 0; m < probabilities.size(); ++m) {
    const double p = probabilities(m);
    if (p < -1e-12) throw NumericalError(fmt::format("negative probability {:.3g} at outcome {}", p, m));
    const auto row = derivatives.row(m);
    const double largest = k > 0 ? row.cwiseAbs().maxCoeff() : 0.0;
    if (p >= floor && p > 0) {
      result.fisher.values.noalias() += row.transpose() * row / p;
      continue;
    }
    if (p > 0 && largest * largest > floor * p) {
      // Below the floor but the term d^2/p itself exceeds the floor.
      result.fisher.values.noalias() += row.transpose() * row / p;
      continue;
    }
    if (p <= 0 && largest > 0) {
      result.diverging_outcomes.push_back(m);
      continue;
    }
    ++result.skipped_outcomes;
  }
  result.fisher.values = 0.5 * (result.fisher.values + result.fisher.values.transpose()).eval();
  return result;
}

CfiResult cfi_matrix(const ProbabilityTable& table, double floor) {
  return cfi_matrix(table.derivatives, table.probabilities, table.params, floor);
}

// --------------------------------------------------------------------- CRB

CrbReport crb_invert(const FisherMatrix& f, double repetitions, const CrbOptions& options) {
  if (!(repetitions >= 1) || !std::isfinite(repetitions)) {
    throw ConfigError(fmt::format("repetitions must be >= 1, got {}", repetitions));
  }
  const Eigen::Index k = f.values.rows();
  if (f.values.cols() != k || static_cast<std::size_t>(k) != f.params.size()) {
    throw ConfigError("Fisher matrix shape does not match its parameter list");
  }

  CrbReport report;
  report.params = f.params;
  report.repetitions = repetitions;

  // Parameters carry different units, so conditioning is judged on the
  // correlation matrix D^-1/2 F D^-1/2.
  RealVector scale(k);
  std::vector<RealVector> degenerate;
  for (Eigen::Index i = 0; i < k; ++i) {
    const double d = f.values(i, i);
    scale(i) = d > 0 ? 1.0 / std::sqrt(d) : 0.0;
    if (!(d > 0)) degenerate.push_back(RealVector::Unit(k, i));
  }
  const RealMatrix corr = scale.asDiagonal() * f.values * scale.asDiagonal();
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(corr);
  const RealVector& ev = es.eigenvalues();
  const double top = k > 0 ? ev.maxCoeff() : 0.0;
  const double bottom = k > 0 ? ev.minCoeff() : 0.0;
  report.scaled_condition = bottom > 0 ? top / bottom : std::numeric_limits<double>::infinity();

  const double cutoff = top / options.max_condition;
  if (degenerate.empty()) {
    for (Eigen::Index i = 0; i < k; ++i) {
      if (ev(i) <= cutoff) {
        RealVector dir = scale.asDiagonal() * es.eigenvectors().col(i);
        degenerate.push_back(dir / dir.norm());
      }
    }
  }
  report.singular = !degenerate.empty() || report.scaled_condition >= options.max_condition;

  if (report.singular && !options.allow_pseudo_inverse) {
    std::string dirs;
    for (const auto& d : degenerate) {
      dirs += " [";
      for (Eigen::Index i = 0; i < d.size(); ++i) {
        dirs += fmt::format("{}{}={:.4g}", i ? ", " : "", to_string(f.params[i]), d(i));
      }
      dirs += "]";
    }
    throw SingularFisherError(
        fmt::format("Fisher matrix is singular (scaled condition {:.3g}); degenerate directions:{}",
                    report.scaled_condition, dirs),
        degenerate);
  }
  report.degenerate_directions = degenerate;

  RealVector inv_ev = RealVector::Zero(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    if (ev(i) > cutoff) inv_ev(i) = 1.0 / ev(i);
  }
  const RealMatrix corr_inv = es.eigenvectors() * inv_ev.asDiagonal() * es.eigenvectors().transpose();
  report.inverse = scale.asDiagonal() * corr_inv * scale.asDiagonal();
  report.variances = report.inverse.diagonal() / repetitions;

  if (auto it = std::find(f.params.begin(), f.params.end(), ParameterId::kAlpha); it != f.params.end()) {
    const auto a = static_cast<Eigen::Index>(it - f.params.begin());
    const double precision = report.inverse(a, a) > 0 ? 1.0 / report.inverse(a, a) : 0.0;
    report.detectable_alpha = precision > 0 ? 1.0 / std::sqrt(repetitions * precision)
                                            : std::numeric_limits<double>::infinity();
  }
  return report;
}

// -------------------------------------------------------------- decoupling

bool DecouplingReport::any_flagged() const {
  return std::any_of(rows.begin(), rows.end(), [](const DecouplingRow& r) { return r.flagged; });
}

DecouplingReport decoupling_report(const FisherMatrix& f, double threshold) {
  const Eigen::Index a = f.index_of(ParameterId::kAlpha);
  DecouplingReport report{f, threshold, {}};
  const double faa = f.values(a, a);
  for (Eigen::Index k = 0; k < f.values.rows(); ++k) {
    if (k == a) continue;
    const double fak = f.values(a, k);
    const double fkk = f.values(k, k);
    const double ratio = faa != 0 ? fak / faa : std::numeric_limits<double>::infinity();
    const double denom = std::sqrt(std::max(faa, 0.0) * std::max(fkk, 0.0));
    const double corr = denom > 0 ? fak / denom : (fak == 0 ? 0.0 : std::numeric_limits<double>::infinity());
    report.rows.push_back({f.params[k], ratio, corr, std::abs(corr) > threshold});
  }
  return report;
}

DecouplingReport decoupling_report(const ExperimentConfig& config, std::span<const ParameterId> params,
                                   double threshold) {
  if (std::find(params.begin(), params.end(), ParameterId::kAlpha) == params.end()) {
    throw ConfigError("decoupling report needs alpha among the parameters");
  }
  return decoupling_report(cfi_matrix(prob_derivatives_analytic(config, params)).fisher, threshold);
}

}  // namespace qgsim
