#pragma once

// Exact N-boson two-mode states in the Dicke (symmetric) basis.
//
// Index i in [0, N] labels the J_z eigenvalue m = i - N/2, so amplitudes are
// stored in ascending m. Mode occupations are n_a = N/2 + m, n_b = N/2 - m.

#include <complex>
#include <memory>
#include <string_view>

#include <Eigen/Dense>

#include "qgsim/errors.hpp"

namespace qgsim {

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;

// Normalization of the J_z generator that the classical phase beta couples
// to. kHalf is J_z = (a'a - b'b)/2; kUnit couples beta to a'a - b'b = 2 J_z,
// which is the normalization that reproduces F_bb = 2N^2 for the optimal
// state and 2(N^2 + N) for the twisted cat state.
enum class JzConvention { kHalf, kUnit };

inline constexpr JzConvention kDefaultConvention = JzConvention::kUnit;

double beta_generator_scale(JzConvention convention);
std::string_view to_string(JzConvention convention);
JzConvention parse_convention(std::string_view name);

// m value of Dicke index i for particle count n.
inline double dicke_m(int n, Eigen::Index i) { return static_cast<double>(i) - 0.5 * n; }

class DickeKet {
 public:
  // Rejects length != n + 1 and norms further than 1e-10 from one; the stored
  // vector is renormalized so the 1e-12 invariant holds exactly.
  DickeKet(int n, ComplexVector amplitudes);

  int n() const { return n_; }
  Eigen::Index dim() const { return amplitudes_.size(); }
  const ComplexVector& amplitudes() const { return amplitudes_; }
  Complex amplitude_at(double m) const;
  double m(Eigen::Index i) const { return dicke_m(n_, i); }
  Eigen::Index index_of(double m) const;

 private:
  int n_;
  ComplexVector amplitudes_;
};

class DickeDensity {
 public:
  // Validates shape, Hermiticity and unit trace within 1e-10, then
  // symmetrizes so the stored matrix is exactly Hermitian.
  DickeDensity(int n, ComplexMatrix matrix);

  static DickeDensity pure(const DickeKet& ket);

  int n() const { return n_; }
  Eigen::Index dim() const { return matrix_.rows(); }
  const ComplexMatrix& matrix() const { return matrix_; }
  double trace() const { return matrix_.trace().real(); }
  double min_eigenvalue() const;

 private:
  int n_;
  ComplexMatrix matrix_;
};

enum class OperatorKind { kJx, kJy, kJz, kJz2, kA, kNplus, kCustom };

std::string_view to_string(OperatorKind kind);

// Collective operator in the Dicke basis. J_z, J_z^2, A and N_+ are held as a
// real diagonal; J_x, J_y and user supplied matrices are dense.
class CollectiveOperator {
 public:
  static CollectiveOperator diagonal(int n, RealVector values, OperatorKind kind = OperatorKind::kCustom);
  static CollectiveOperator dense(int n, ComplexMatrix values, OperatorKind kind = OperatorKind::kCustom);

  int n() const { return n_; }
  OperatorKind kind() const { return kind_; }
  bool is_diagonal() const { return is_diagonal_; }
  const RealVector& diagonal_values() const;
  ComplexMatrix matrix() const;
  ComplexVector apply(const ComplexVector& v) const;
  CollectiveOperator scaled(double factor) const;
  double hermiticity_error() const;

 private:
  CollectiveOperator() = default;

  int n_ = 0;
  OperatorKind kind_ = OperatorKind::kCustom;
  bool is_diagonal_ = true;
  RealVector diag_;
  ComplexMatrix dense_;
};

CollectiveOperator make_operator(OperatorKind kind, int n);

// Generator that beta multiplies in U_C under the given convention.
CollectiveOperator beta_generator(int n, JzConvention convention = kDefaultConvention);

// Eigendecomposition J_x = V diag(m) V^T of the real symmetric tridiagonal
// J_x, shared per particle count through a process-wide cache.
class JxEigensystem {
 public:
  static std::shared_ptr<const JxEigensystem> get(int n);

  explicit JxEigensystem(int n);

  int n() const { return n_; }
  const RealMatrix& vectors() const { return vectors_; }
  const RealVector& eigenvalues() const { return eigenvalues_; }
  // Largest deviation of the solver's eigenvalues from the exact {-N/2..N/2}.
  double eigenvalue_drift() const { return drift_; }

  // exp(i theta J_x) v without materializing the unitary.
  ComplexVector rotate(const ComplexVector& v, double theta) const;
  ComplexMatrix rotate(const ComplexMatrix& rho, double theta) const;  // U rho U^dagger
  ComplexMatrix unitary(double theta) const;

 private:
  int n_;
  RealMatrix vectors_;
  RealVector eigenvalues_;
  double drift_ = 0.0;
};

ComplexMatrix rotation_x(int n, double theta);
DickeKet rotate_x(const DickeKet& state, double theta);
DickeDensity rotate_x(const DickeDensity& rho, double theta);

// exp(i phi J_z) applied as a diagonal phase.
DickeKet rotate_z(const DickeKet& state, double phi);

DickeKet polarized_state(int n);
DickeKet optimal_state(int n);

// |(N/2)_x> and |(-N/2)_x> with the phase convention under which the
// analytic cat state equals U_0|Psi_0> amplitude by amplitude.
struct XExtremalStates {
  DickeKet plus;
  DickeKet minus;
};
XExtremalStates x_extremal_states(int n);

DickeKet cat_state_analytic(int n);

// Coherent spin state exp(i phi J_z) exp(i theta J_x)|(N/2)_z>.
DickeKet css_state(int n, double theta, double phi);

// Closed-form CSS amplitudes sqrt(C(N,k)) cos^k(theta/2) (i sin(theta/2))^(N-k)
// e^{i phi m}, evaluated with log-gamma binomials so large N does not overflow.
ComplexVector css_amplitudes_log_domain(int n, double theta, double phi);

double expectation(const CollectiveOperator& op, const DickeKet& state);
double expectation(const CollectiveOperator& op, const DickeDensity& rho);
// Symmetrized covariance (<{A,B}>/2 - <A><B>) in a pure state.
double covariance(const CollectiveOperator& a, const CollectiveOperator& b, const DickeKet& state);
double variance(const CollectiveOperator& op, const DickeKet& state);

double fidelity(const DickeKet& a, const DickeKet& b);
double fidelity(const DickeKet& a, const DickeDensity& rho);

double unitarity_error(const ComplexMatrix& u);

}  // namespace qgsim
