#include "qgsim/dicke.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <string>

#include <fmt/format.h>

namespace qgsim {

namespace {

constexpr double kInputTolerance = 1e-10;

void require_positive_n(int n) {
  if (n < 1) throw ConfigError(fmt::format("particle count must be >= 1, got {}", n));
}

void require_even_n(int n, std::string_view what) {
  require_positive_n(n);
  if (n % 2 != 0) {
    throw ConfigError(fmt::format("{} requires an even particle count (needs the m = 0 level), got n = {}", what, n));
  }
}

ComplexVector basis_vector(int n, Eigen::Index i) {
  ComplexVector v = ComplexVector::Zero(n + 1);
  v(i) = 1.0;
  return v;
}

}  // namespace

double beta_generator_scale(JzConvention convention) {
  return convention == JzConvention::kUnit ? 2.0 : 1.0;
}

std::string_view to_string(JzConvention convention) {
  return convention == JzConvention::kUnit ? "unit" : "half";
}

JzConvention parse_convention(std::string_view name) {
  if (name == "unit") return JzConvention::kUnit;
  if (name == "half") return JzConvention::kHalf;
  throw ConfigError(fmt::format("convention must be 'half' or 'unit', got '{}'", name));
}

// ---------------------------------------------------------------- DickeKet

DickeKet::DickeKet(int n, ComplexVector amplitudes) : n_(n), amplitudes_(std::move(amplitudes)) {
  require_positive_n(n);
  if (amplitudes_.size() != n + 1) {
    throw ConfigError(fmt::format("ket for n = {} needs {} amplitudes, got {}", n, n + 1, amplitudes_.size()));
  }
  if (!amplitudes_.allFinite()) throw ConfigError("ket amplitudes must be finite");
  const double norm = amplitudes_.norm();
  if (std::abs(norm * norm - 1.0) > kInputTolerance) {
    throw ConfigError(fmt::format("ket is not normalized: sum |c|^2 = {:.17g}", norm * norm));
  }
  amplitudes_ /= norm;
}

Eigen::Index DickeKet::index_of(double m) const {
  const double idx = m + 0.5 * n_;
  const auto i = static_cast<Eigen::Index>(std::llround(idx));
  if (std::abs(idx - static_cast<double>(i)) > 1e-9 || i < 0 || i > n_) {
    throw ConfigError(fmt::format("m = {} is not a J_z eigenvalue for n = {}", m, n_));
  }
  return i;
}

Complex DickeKet::amplitude_at(double m) const { return amplitudes_(index_of(m)); }

// ------------------------------------------------------------ DickeDensity

DickeDensity::DickeDensity(int n, ComplexMatrix matrix) : n_(n), matrix_(std::move(matrix)) {
  require_positive_n(n);
  if (matrix_.rows() != n + 1 || matrix_.cols() != n + 1) {
    throw ConfigError(fmt::format("density for n = {} must be {}x{}", n, n + 1, n + 1));
  }
  if (!matrix_.allFinite()) throw ConfigError("density matrix entries must be finite");
  const double herm = (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
  if (herm > kInputTolerance) throw ConfigError(fmt::format("density matrix is not Hermitian (error {:.3g})", herm));
  const Complex tr = matrix_.trace();
  if (std::abs(tr - 1.0) > kInputTolerance) {
    throw ConfigError(fmt::format("density matrix trace is {:.17g}, expected 1", tr.real()));
  }
  matrix_ = 0.5 * (matrix_ + matrix_.adjoint()).eval();
}

DickeDensity DickeDensity::pure(const DickeKet& ket) {
  return DickeDensity(ket.n(), ket.amplitudes() * ket.amplitudes().adjoint());
}

double DickeDensity::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(matrix_, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// ------------------------------------------------------ CollectiveOperator

std::string_view to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::kJx: return "Jx";
    case OperatorKind::kJy: return "Jy";
    case OperatorKind::kJz: return "Jz";
    case OperatorKind::kJz2: return "Jz2";
    case OperatorKind::kA: return "A";
    case OperatorKind::kNplus: return "Nplus";
    case OperatorKind::kCustom: return "custom";
  }
  return "unknown";
}

CollectiveOperator CollectiveOperator::diagonal(int n, RealVector values, OperatorKind kind) {
  require_positive_n(n);
  if (values.size() != n + 1) throw ConfigError("diagonal operator has wrong dimension");
  CollectiveOperator op;
  op.n_ = n;
  op.kind_ = kind;
  op.is_diagonal_ = true;
  op.diag_ = std::move(values);
  return op;
}

CollectiveOperator CollectiveOperator::dense(int n, ComplexMatrix values, OperatorKind kind) {
  require_positive_n(n);
  if (values.rows() != n + 1 || values.cols() != n + 1) throw ConfigError("dense operator has wrong dimension");
  CollectiveOperator op;
  op.n_ = n;
  op.kind_ = kind;
  op.is_diagonal_ = false;
  op.dense_ = std::move(values);
  return op;
}

const RealVector& CollectiveOperator::diagonal_values() const {
  if (!is_diagonal_) {
    throw ConfigError(fmt::format("operator {} is not diagonal in the Dicke basis", to_string(kind_)));
  }
  return diag_;
}

ComplexMatrix CollectiveOperator::matrix() const {
  if (is_diagonal_) return diag_.cast<Complex>().asDiagonal();
  return dense_;
}

ComplexVector CollectiveOperator::apply(const ComplexVector& v) const {
  if (v.size() != n_ + 1) {
    throw ConfigError(fmt::format("dimension mismatch: operator n = {}, vector length {}", n_, v.size()));
  }
  if (is_diagonal_) return diag_.cast<Complex>().cwiseProduct(v);
  return dense_ * v;
}

CollectiveOperator CollectiveOperator::scaled(double factor) const {
  CollectiveOperator op = *this;
  if (is_diagonal_) {
    op.diag_ *= factor;
  } else {
    op.dense_ *= factor;
  }
  return op;
}

double CollectiveOperator::hermiticity_error() const {
  if (is_diagonal_) return 0.0;
  return (dense_ - dense_.adjoint()).cwiseAbs().maxCoeff();
}

CollectiveOperator make_operator(OperatorKind kind, int n) {
  require_positive_n(n);
  const Eigen::Index dim = n + 1;
  RealVector m(dim);
  for (Eigen::Index i = 0; i < dim; ++i) m(i) = dicke_m(n, i);

  switch (kind) {
    case OperatorKind::kJz:
      return CollectiveOperator::diagonal(n, m, kind);
    case OperatorKind::kJz2:
      return CollectiveOperator::diagonal(n, m.cwiseProduct(m), kind);
    case OperatorKind::kA: {
      // n_a(n_a - 1) + n_b(n_b - 1) = N^2/2 - N + 2m^2
      RealVector a(dim);
      for (Eigen::Index i = 0; i < dim; ++i) {
        const double na = 0.5 * n + m(i);
        const double nb = 0.5 * n - m(i);
        a(i) = na * (na - 1.0) + nb * (nb - 1.0);
      }
      return CollectiveOperator::diagonal(n, a, kind);
    }
    case OperatorKind::kNplus:
      return CollectiveOperator::diagonal(n, RealVector::Constant(dim, n), kind);
    case OperatorKind::kJx:
    case OperatorKind::kJy: {
      // <m+1|J_+|m> = sqrt(j(j+1) - m(m+1)); J_x = (J_+ + J_-)/2, J_y = (J_+ - J_-)/2i.
      const double j = 0.5 * n;
      ComplexMatrix mat = ComplexMatrix::Zero(dim, dim);
      for (Eigen::Index i = 0; i + 1 < dim; ++i) {
        const double half = 0.5 * std::sqrt(j * (j + 1.0) - m(i) * (m(i) + 1.0));
        if (kind == OperatorKind::kJx) {
          mat(i + 1, i) = half;
          mat(i, i + 1) = half;
        } else {
          mat(i + 1, i) = Complex(0.0, -half);
          mat(i, i + 1) = Complex(0.0, half);
        }
      }
      return CollectiveOperator::dense(n, std::move(mat), kind);
    }
    case OperatorKind::kCustom:
      break;
  }
  throw ConfigError("make_operator: custom operators must be built from explicit values");
}

CollectiveOperator beta_generator(int n, JzConvention convention) {
  return make_operator(OperatorKind::kJz, n).scaled(beta_generator_scale(convention));
}

// ------------------------------------------------------------ JxEigensystem

JxEigensystem::JxEigensystem(int n) : n_(n) {
  require_positive_n(n);
  const Eigen::Index dim = n + 1;
  const double j = 0.5 * n;
  RealVector diag = RealVector::Zero(dim);
  RealVector sub(std::max<Eigen::Index>(dim - 1, 0));
  for (Eigen::Index i = 0; i + 1 < dim; ++i) {
    const double m = dicke_m(n, i);
    sub(i) = 0.5 * std::sqrt(j * (j + 1.0) - m * (m + 1.0));
  }
  Eigen::SelfAdjointEigenSolver<RealMatrix> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw NumericalError(fmt::format("J_x eigensolver failed for n = {}", n));

  // The spectrum is exactly {-N/2, ..., N/2}; Eigen returns it ascending.
  eigenvalues_.resize(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    eigenvalues_(i) = dicke_m(n, i);
    drift_ = std::max(drift_, std::abs(es.eigenvalues()(i) - eigenvalues_(i)));
  }
  if (drift_ > 1e-8 * std::max(1.0, j)) {
    throw NumericalError(fmt::format("J_x spectrum drifted by {:.3g} for n = {}", drift_, n));
  }
  vectors_ = es.eigenvectors();
}

std::shared_ptr<const JxEigensystem> JxEigensystem::get(int n) {
  static std::shared_mutex mutex;
  static std::map<int, std::shared_ptr<const JxEigensystem>> cache;
  {
    std::shared_lock lock(mutex);
    if (auto it = cache.find(n); it != cache.end()) return it->second;
  }
  auto built = std::make_shared<const JxEigensystem>(n);
  std::unique_lock lock(mutex);
  return cache.try_emplace(n, std::move(built)).first->second;
}

ComplexVector JxEigensystem::rotate(const ComplexVector& v, double theta) const {
  if (v.size() != n_ + 1) throw ConfigError("rotate: dimension mismatch");
  ComplexVector w = vectors_.transpose().cast<Complex>() * v;
  for (Eigen::Index k = 0; k < w.size(); ++k) w(k) *= std::polar(1.0, theta * eigenvalues_(k));
  return vectors_.cast<Complex>() * w;
}

ComplexMatrix JxEigensystem::rotate(const ComplexMatrix& rho, double theta) const {
  if (rho.rows() != n_ + 1 || rho.cols() != n_ + 1) throw ConfigError("rotate: dimension mismatch");
  const ComplexMatrix v = vectors_.cast<Complex>();
  ComplexMatrix w = v.transpose() * rho * v;
  for (Eigen::Index l = 0; l < w.cols(); ++l) {
    for (Eigen::Index k = 0; k < w.rows(); ++k) {
      w(k, l) *= std::polar(1.0, theta * (eigenvalues_(k) - eigenvalues_(l)));
    }
  }
  return v * w * v.transpose();
}

ComplexMatrix JxEigensystem::unitary(double theta) const {
  ComplexVector phases(n_ + 1);
  for (Eigen::Index k = 0; k <= n_; ++k) phases(k) = std::polar(1.0, theta * eigenvalues_(k));
  const ComplexMatrix v = vectors_.cast<Complex>();
  return v * phases.asDiagonal() * v.transpose();
}

ComplexMatrix rotation_x(int n, double theta) {
  if (!std::isfinite(theta)) throw ConfigError("rotation angle must be finite");
  return JxEigensystem::get(n)->unitary(theta);
}

DickeKet rotate_x(const DickeKet& state, double theta) {
  if (!std::isfinite(theta)) throw ConfigError("rotation angle must be finite");
  return DickeKet(state.n(), JxEigensystem::get(state.n())->rotate(state.amplitudes(), theta));
}

DickeDensity rotate_x(const DickeDensity& rho, double theta) {
  if (!std::isfinite(theta)) throw ConfigError("rotation angle must be finite");
  return DickeDensity(rho.n(), JxEigensystem::get(rho.n())->rotate(rho.matrix(), theta));
}

DickeKet rotate_z(const DickeKet& state, double phi) {
  ComplexVector c = state.amplitudes();
  for (Eigen::Index i = 0; i < c.size(); ++i) c(i) *= std::polar(1.0, phi * state.m(i));
  return DickeKet(state.n(), std::move(c));
}

// ----------------------------------------------------------- named states

DickeKet polarized_state(int n) {
  require_positive_n(n);
  return DickeKet(n, basis_vector(n, n));
}

DickeKet optimal_state(int n) {
  require_even_n(n, "optimal_state");
  ComplexVector c = ComplexVector::Zero(n + 1);
  c(n / 2) = 1.0 / std::sqrt(2.0);
  c(0) = 0.5;
  c(n) = 0.5;
  return DickeKet(n, std::move(c));
}

XExtremalStates x_extremal_states(int n) {
  require_positive_n(n);
  const auto& eig = *JxEigensystem::get(n);
  auto to_x = [&](Eigen::Index pole, double phase) {
    ComplexVector v = eig.rotate(basis_vector(n, pole), kPi / 2);
    for (Eigen::Index i = 0; i <= n; ++i) v(i) *= std::polar(1.0, -0.5 * kPi * dicke_m(n, i) + phase);
    return DickeKet(n, std::move(v));
  };
  const double quarter = 0.25 * kPi * n;
  return XExtremalStates{to_x(0, -quarter), to_x(n, quarter)};
}

DickeKet cat_state_analytic(int n) {
  require_even_n(n, "cat_state_analytic");
  const auto x = x_extremal_states(n);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  const ComplexVector eta_x = inv_sqrt2 * (x.plus.amplitudes() + x.minus.amplitudes());
  const ComplexVector eta_z = inv_sqrt2 * (basis_vector(n, n) - basis_vector(n, 0));
  const ComplexVector sum = eta_x + std::polar(1.0, -0.75 * kPi) * eta_z;
  const double normalization = 1.0 / sum.norm();
  return DickeKet(n, normalization * std::polar(1.0, 0.5 * kPi * n) * sum);
}

DickeKet css_state(int n, double theta, double phi) {
  if (!std::isfinite(theta) || !std::isfinite(phi)) throw ConfigError("CSS angles must be finite");
  return rotate_z(rotate_x(polarized_state(n), theta), phi);
}

ComplexVector css_amplitudes_log_domain(int n, double theta, double phi) {
  require_positive_n(n);
  const double c = std::cos(0.5 * theta);
  const double s = std::sin(0.5 * theta);
  const double log_c = std::log(std::abs(c));
  const double log_s = std::log(std::abs(s));
  const double log_nfact = std::lgamma(n + 1.0);
  ComplexVector out(n + 1);
  for (int k = 0; k <= n; ++k) {
    const int down = n - k;
    // 0^0 = 1: skip the log term when its power is zero.
    double log_mag = 0.5 * (log_nfact - std::lgamma(k + 1.0) - std::lgamma(down + 1.0));
    if (k > 0) log_mag += k * log_c;
    if (down > 0) log_mag += down * log_s;
    double sign = 1.0;
    if (c < 0 && k % 2 == 1) sign = -sign;
    if (s < 0 && down % 2 == 1) sign = -sign;
    // i^down
    const double phase = 0.5 * kPi * (down % 4) + phi * dicke_m(n, k);
    out(k) = sign * std::exp(log_mag) * std::polar(1.0, phase);
  }
  return out;
}

// ------------------------------------------------------------ expectations

double expectation(const CollectiveOperator& op, const DickeKet& state) {
  if (op.n() != state.n()) {
    throw ConfigError(fmt::format("dimension mismatch: operator n = {}, state n = {}", op.n(), state.n()));
  }
  return state.amplitudes().dot(op.apply(state.amplitudes())).real();
}

double expectation(const CollectiveOperator& op, const DickeDensity& rho) {
  if (op.n() != rho.n()) {
    throw ConfigError(fmt::format("dimension mismatch: operator n = {}, state n = {}", op.n(), rho.n()));
  }
  if (op.is_diagonal()) {
    return (op.diagonal_values().cwiseProduct(rho.matrix().diagonal().real())).sum();
  }
  return (op.matrix() * rho.matrix()).trace().real();
}

double covariance(const CollectiveOperator& a, const CollectiveOperator& b, const DickeKet& state) {
  const ComplexVector& psi = state.amplitudes();
  const ComplexVector a_psi = a.apply(psi);
  const ComplexVector b_psi = b.apply(psi);
  const double sym = a_psi.dot(b_psi).real();
  return sym - psi.dot(a_psi).real() * psi.dot(b_psi).real();
}

double variance(const CollectiveOperator& op, const DickeKet& state) { return covariance(op, op, state); }

double fidelity(const DickeKet& a, const DickeKet& b) {
  if (a.n() != b.n()) throw ConfigError("fidelity: particle counts differ");
  return std::norm(a.amplitudes().dot(b.amplitudes()));
}

double fidelity(const DickeKet& a, const DickeDensity& rho) {
  if (a.n() != rho.n()) throw ConfigError("fidelity: particle counts differ");
  return a.amplitudes().dot(rho.matrix() * a.amplitudes()).real();
}

double unitarity_error(const ComplexMatrix& u) {
  return (u.adjoint() * u - ComplexMatrix::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff();
}

}  // namespace qgsim
