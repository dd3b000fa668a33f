#pragma once

// Measurement statistics and figure data: P(J_z), basis projections,
// Husimi-Q grids, and the panel sets behind the state, U_0^dagger and U_0
// recombiner figures.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qgsim/channels.hpp"
#include "qgsim/dicke.hpp"

namespace qgsim {

struct JzDistribution {
  int n = 0;
  RealVector probabilities;  // ascending m

  double m(Eigen::Index i) const { return dicke_m(n, i); }
  double total() const { return probabilities.sum(); }
};

JzDistribution jz_distribution(const DickeKet& state);
JzDistribution jz_distribution(const DickeDensity& rho);

struct BasisProjections {
  JzDistribution x;
  JzDistribution y;
  JzDistribution z;
};

BasisProjections basis_projections(const DickeKet& state);

// Q(theta, phi) = |<xi(theta, phi)|psi>|^2 on inclusive grids
// theta in [0, pi] and phi in [-pi, pi]. Rows index theta.
struct HusimiGrid {
  RealVector theta;
  RealVector phi;
  RealMatrix values;
};

HusimiGrid husimi_grid(const DickeKet& state, int theta_points, int phi_points, unsigned jobs = 1);
HusimiGrid husimi_grid(const DickeDensity& rho, int theta_points, int phi_points, unsigned jobs = 1);

enum class FigureId { kFig2, kFig3, kFig4 };

std::string_view to_string(FigureId id);
FigureId parse_figure(std::string_view name);

struct FigureOverrides {
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<double> delta;
  double chi_tau = kPi / 4;
  int husimi_theta_points = 101;
  int husimi_phi_points = 101;
  JzConvention convention = kDefaultConvention;
  bool finite_difference = false;
  double fd_step = 1e-6;
  unsigned jobs = 1;
};

struct FigurePanel {
  std::string name;  // e.g. "fig3b"
  std::string description;
  std::vector<std::string> columns;
  RealMatrix data;  // one row per record
};

struct FigureData {
  FigureId id;
  int n = 0;
  std::vector<FigurePanel> panels;

  const FigurePanel& panel(std::string_view name) const;
};

FigureData figure_data(FigureId id, int n, const FigureOverrides& overrides = {});

}  // namespace qgsim
