#include "qgsim/distributions.hpp"

#include <cmath>

#include <fmt/format.h>

#include "qgsim/fisher.hpp"
#include "qgsim/parallel.hpp"

namespace qgsim {

namespace {

RealVector linspace(double lo, double hi, int count) {
  RealVector v(count);
  for (int i = 0; i < count; ++i) v(i) = lo + (hi - lo) * i / (count - 1);
  return v;
}

void require_grid(int theta_points, int phi_points) {
  if (theta_points < 2 || phi_points < 2) {
    throw ConfigError(fmt::format("Husimi grid needs >= 2 points per axis, got {}x{}", theta_points, phi_points));
  }
}

RealVector m_values(int n) {
  RealVector m(n + 1);
  for (int i = 0; i <= n; ++i) m(i) = dicke_m(n, i);
  return m;
}

// Evaluates f(row, xi) for every grid point, where xi is the CSS amplitude
// vector at (theta_row, phi_col).
template <typename Overlap>
HusimiGrid evaluate_grid(int n, int theta_points, int phi_points, unsigned jobs, Overlap&& overlap) {
  require_grid(theta_points, phi_points);
  HusimiGrid grid{linspace(0.0, kPi, theta_points), linspace(-kPi, kPi, phi_points),
                  RealMatrix(theta_points, phi_points)};
  const auto& eig = *JxEigensystem::get(n);
  const RealVector m = m_values(n);
  ComplexVector top = ComplexVector::Zero(n + 1);
  top(n) = 1.0;
  parallel_for(static_cast<std::size_t>(theta_points), jobs, [&](std::size_t row) {
    const auto r = static_cast<Eigen::Index>(row);
    const ComplexVector rotated = eig.rotate(top, grid.theta(r));
    ComplexVector xi(n + 1);
    for (Eigen::Index c = 0; c < phi_points; ++c) {
      for (Eigen::Index i = 0; i <= n; ++i) xi(i) = rotated(i) * std::polar(1.0, grid.phi(c) * m(i));
      grid.values(r, c) = overlap(xi);
    }
  });
  return grid;
}

RealMatrix two_columns(const RealVector& a, const RealVector& b) {
  RealMatrix out(a.size(), 2);
  out.col(0) = a;
  out.col(1) = b;
  return out;
}

FigurePanel distribution_panel(std::string name, std::string description, std::string value_column,
                               int n, const RealVector& values) {
  return FigurePanel{std::move(name), std::move(description), {"m", std::move(value_column)},
                     two_columns(m_values(n), values)};
}

FigurePanel husimi_panel(std::string name, std::string description, const HusimiGrid& grid) {
  const Eigen::Index rows = grid.theta.size() * grid.phi.size();
  RealMatrix data(rows, 3);
  Eigen::Index k = 0;
  for (Eigen::Index t = 0; t < grid.theta.size(); ++t) {
    for (Eigen::Index p = 0; p < grid.phi.size(); ++p, ++k) {
      data(k, 0) = grid.theta(t);
      data(k, 1) = grid.phi(p);
      data(k, 2) = grid.values(t, p);
    }
  }
  return FigurePanel{std::move(name), std::move(description), {"theta", "phi", "Q"}, std::move(data)};
}

ProbabilityTable panel_derivatives(const ExperimentConfig& base, std::span<const ParameterId> params,
                                   const FigureOverrides& o) {
  return o.finite_difference ? prob_derivatives_fd(base, params, o.fd_step) : prob_derivatives_analytic(base, params);
}

std::string column_name(ParameterId p) {
  switch (p) {
    case ParameterId::kAlpha: return "dP_dalpha";
    case ParameterId::kBeta: return "dP_dbeta";
    case ParameterId::kDeltaA: return "dP_ddeltaA";
    case ParameterId::kDeltaJz: return "dP_ddeltaJz";
  }
  return "dP";
}

}  // namespace

JzDistribution jz_distribution(const DickeKet& state) {
  return JzDistribution{state.n(), state.amplitudes().cwiseAbs2()};
}

JzDistribution jz_distribution(const DickeDensity& rho) {
  return JzDistribution{rho.n(), rho.matrix().diagonal().real()};
}

BasisProjections basis_projections(const DickeKet& state) {
  const int n = state.n();
  const auto& eig = *JxEigensystem::get(n);
  const ComplexVector& psi = state.amplitudes();
  // J_y = D J_x D^dagger with D = diag(e^{-i pi m / 2}), so its eigenvectors are D V.
  ComplexVector d_dag_psi(n + 1);
  for (int i = 0; i <= n; ++i) d_dag_psi(i) = std::polar(1.0, 0.5 * kPi * dicke_m(n, i)) * psi(i);
  const ComplexMatrix v = eig.vectors().cast<Complex>();
  return BasisProjections{JzDistribution{n, (v.transpose() * psi).cwiseAbs2()},
                          JzDistribution{n, (v.transpose() * d_dag_psi).cwiseAbs2()}, jz_distribution(state)};
}

HusimiGrid husimi_grid(const DickeKet& state, int theta_points, int phi_points, unsigned jobs) {
  const ComplexVector& psi = state.amplitudes();
  return evaluate_grid(state.n(), theta_points, phi_points, jobs,
                       [&](const ComplexVector& xi) { return std::norm(xi.dot(psi)); });
}

HusimiGrid husimi_grid(const DickeDensity& rho, int theta_points, int phi_points, unsigned jobs) {
  const ComplexMatrix& r = rho.matrix();
  return evaluate_grid(rho.n(), theta_points, phi_points, jobs,
                       [&](const ComplexVector& xi) { return xi.dot(r * xi).real(); });
}

std::string_view to_string(FigureId id) {
  switch (id) {
    case FigureId::kFig2: return "fig2";
    case FigureId::kFig3: return "fig3";
    case FigureId::kFig4: return "fig4";
  }
  return "unknown";
}

FigureId parse_figure(std::string_view name) {
  if (name == "fig2" || name == "FIG2") return FigureId::kFig2;
  if (name == "fig3" || name == "FIG3") return FigureId::kFig3;
  if (name == "fig4" || name == "FIG4") return FigureId::kFig4;
  throw ConfigError(fmt::format("unknown figure id '{}' (expected fig2, fig3 or fig4)", name));
}

const FigurePanel& FigureData::panel(std::string_view name) const {
  for (const auto& p : panels) {
    if (p.name == name) return p;
  }
  throw ConfigError(fmt::format("figure has no panel '{}'", name));
}

FigureData figure_data(FigureId id, int n, const FigureOverrides& o) {
  FigureData fig{id, n, {}};
  ExperimentConfig config;
  config.n = n;
  config.twisting.chi_tau = o.chi_tau;
  config.convention = o.convention;
  config.validate();

  if (id == FigureId::kFig2) {
    const DickeKet optimal = optimal_state(n);
    const DickeKet cat = prepare_probe(config);
    fig.panels.push_back(husimi_panel("fig2a", "Husimi Q of the optimal state",
                                      husimi_grid(optimal, o.husimi_theta_points, o.husimi_phi_points, o.jobs)));
    fig.panels.push_back(husimi_panel("fig2b", "Husimi Q of the OAT cat state",
                                      husimi_grid(cat, o.husimi_theta_points, o.husimi_phi_points, o.jobs)));
    const auto po = basis_projections(optimal);
    const auto pc = basis_projections(cat);
    fig.panels.push_back(distribution_panel("fig2c", "optimal state, J_x basis", "P", n, po.x.probabilities));
    fig.panels.push_back(distribution_panel("fig2d", "cat state, J_x basis", "P", n, pc.x.probabilities));
    fig.panels.push_back(distribution_panel("fig2e", "optimal state, J_y basis", "P", n, po.y.probabilities));
    fig.panels.push_back(distribution_panel("fig2f", "cat state, J_y basis", "P", n, pc.y.probabilities));
    fig.panels.push_back(distribution_panel("fig2g", "optimal state, J_z basis", "P", n, po.z.probabilities));
    fig.panels.push_back(distribution_panel("fig2h", "cat state, J_z basis", "P", n, pc.z.probabilities));
    return fig;
  }

  const bool fig4 = id == FigureId::kFig4;
  config.recombiner = fig4 ? Recombiner::kU0 : Recombiner::kU0Dagger;
  const std::string tag = fig4 ? "fig4" : "fig3";
  const std::string scheme = fig4 ? "U_2 = U_0" : "U_2 = U_0^dagger";

  fig.panels.push_back(distribution_panel(tag + "a", fmt::format("P(J_z), {}, alpha = beta = 0", scheme), "P", n,
                                          run_experiment(config).matrix().diagonal().real()));

  ExperimentConfig base = figure_mode_base(config, fig4);
  if (o.alpha) base.gravity.alpha = *o.alpha;
  if (o.beta) base.gravity.beta = *o.beta;
  if (fig4 && o.delta) {
    for (auto& d : base.dephasing) d.delta = *o.delta;
  }
  base.validate();

  std::vector<ParameterId> params = {ParameterId::kAlpha, ParameterId::kBeta};
  if (fig4) {
    params.push_back(ParameterId::kDeltaA);
    params.push_back(ParameterId::kDeltaJz);
  }
  const ProbabilityTable table = panel_derivatives(base, params, o);
  char letter = 'b';
  for (std::size_t c = 0; c < params.size(); ++c, ++letter) {
    const ParameterId p = params[c];
    fig.panels.push_back(distribution_panel(
        tag + letter,
        fmt::format("d P(J_z) / d {}, {}, alpha = {:g}, beta = {:g}, delta_A = {:g}, delta_Jz = {:g}", to_string(p),
                    scheme, base.gravity.alpha, base.gravity.beta, base.total_delta(DephasingGenerator::kA),
                    base.total_delta(DephasingGenerator::kJz)),
        column_name(p), n, table.derivatives.col(static_cast<Eigen::Index>(c))));
  }
  return fig;
}

}  // namespace qgsim
