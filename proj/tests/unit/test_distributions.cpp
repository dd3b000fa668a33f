#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "qgsim/distributions.hpp"
#include "qgsim/serialization.hpp"
#include "test_support.hpp"

using namespace qgsim;

namespace {

struct Peak {
  Eigen::Index row, col;
  double value;
};

// Strict local maxima over the 8-neighbourhood, periodic in phi.
std::vector<Peak> local_maxima(const HusimiGrid& g, double min_value) {
  std::vector<Peak> peaks;
  const Eigen::Index rows = g.values.rows(), cols = g.values.cols() - 1;  // last phi column repeats the first
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double v = g.values(r, c);
      if (v < min_value) continue;
      bool top = true;
      for (int dr = -1; dr <= 1 && top; ++dr) {
        for (int dc = -1; dc <= 1 && top; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const Eigen::Index rr = r + dr;
          if (rr < 0 || rr >= rows) continue;
          if (g.values(rr, (c + dc + cols) % cols) > v) top = false;
        }
      }
      if (top) peaks.push_back({r, c, v});
    }
  }
  return peaks;
}

}  // namespace

TEST_CASE("J_z distributions") {
  const JzDistribution p = jz_distribution(polarized_state(4));
  CHECK(p.probabilities(4) == 1.0);
  CHECK(p.probabilities.head(4).sum() == 0.0);

  const JzDistribution o = jz_distribution(optimal_state(100));
  CHECK(o.probabilities(50) == doctest::Approx(0.5));
  CHECK(o.probabilities(0) == doctest::Approx(0.25));
  CHECK(o.probabilities(100) == doctest::Approx(0.25));
  CHECK(o.m(0) == -50);

  std::mt19937_64 rng(31);
  const DickeDensity rho = qgsim::test::random_density(12, rng);
  for (double delta : {0.0, 0.3, 1e6}) {
    for (auto g : {DephasingGenerator::kA, DephasingGenerator::kJz}) {
      CHECK((jz_distribution(dephase(rho, {g, delta})).probabilities - jz_distribution(rho).probabilities)
                .cwiseAbs()
                .maxCoeff() == 0.0);
    }
  }
  const DickeKet k = qgsim::test::random_ket(12, rng);
  for (double beta : {0.1, 2.0}) {
    CHECK((jz_distribution(apply_classical_gravity(k, beta, 0.7)).probabilities - jz_distribution(k).probabilities)
              .cwiseAbs()
              .maxCoeff() < 1e-15);
  }
}

TEST_CASE("basis projections") {
  const BasisProjections o = basis_projections(optimal_state(100));
  CHECK(o.z.probabilities(50) == doctest::Approx(0.5));
  for (const auto* d : {&o.x, &o.y, &o.z}) CHECK(d->total() == doctest::Approx(1.0).epsilon(1e-12));

  const BasisProjections cat = basis_projections(cat_state_analytic(100));
  const double poles = cat.x.probabilities(0) + cat.x.probabilities(100);
  CHECK(poles > 0.45);
  CHECK(poles < 0.55 + 1e-12);
  for (const auto* d : {&cat.x, &cat.y, &cat.z}) CHECK(d->total() == doctest::Approx(1.0).epsilon(1e-12));

  // The polarized state is the J_y CSS: binomial in J_x and J_y, a spike in J_z.
  const BasisProjections pol = basis_projections(polarized_state(10));
  CHECK(pol.z.probabilities(10) == doctest::Approx(1.0));
  CHECK(pol.x.probabilities(5) == doctest::Approx(qgsim::test::binomial(10, 5) / 1024).epsilon(1e-12));
  CHECK(pol.y.probabilities(5) == doctest::Approx(qgsim::test::binomial(10, 5) / 1024).epsilon(1e-12));
}

TEST_CASE("Husimi grid") {
  SUBCASE("polarized state peaks at the north pole") {
    const HusimiGrid g = husimi_grid(polarized_state(20), 41, 41);
    CHECK(g.theta(0) == 0.0);
    CHECK(g.theta(40) == doctest::Approx(kPi));
    CHECK(g.phi(0) == doctest::Approx(-kPi));
    CHECK(g.phi(40) == doctest::Approx(kPi));
    CHECK((g.values.row(0).array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK(g.values.maxCoeff() <= 1 + 1e-12);
    CHECK(g.values.minCoeff() >= 0);
  }
  SUBCASE("a coherent state peaks at its own orientation") {
    const int points = 101;
    const double theta0 = kPi * 37 / 100, phi0 = -kPi + 2 * kPi * 71 / 100;
    const HusimiGrid g = husimi_grid(css_state(30, theta0, phi0), points, points);
    Eigen::Index r, c;
    CHECK(g.values.maxCoeff(&r, &c) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r == 37);
    CHECK(c == 71);
  }
  SUBCASE("global phase and density input") {
    std::mt19937_64 rng(32);
    const DickeKet k = qgsim::test::random_ket(15, rng);
    const DickeKet shifted(15, std::exp(Complex(0, 1.1)) * k.amplitudes());
    const HusimiGrid a = husimi_grid(k, 21, 31);
    CHECK((a.values - husimi_grid(shifted, 21, 31).values).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((a.values - husimi_grid(DickeDensity::pure(k), 21, 31).values).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((a.values - husimi_grid(k, 21, 31, 4).values).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("overcompleteness integral") {
    // (N+1)/(4 pi) * integral of Q over the sphere is one for any state.
    const int n = 10, pts = 201;
    std::mt19937_64 rng(33);
    for (const DickeKet& s : {cat_state_analytic(n), qgsim::test::random_ket(n, rng)}) {
      const HusimiGrid g = husimi_grid(s, pts, pts);
      const double dt = kPi / (pts - 1), dp = 2 * kPi / (pts - 1);
      double sum = 0;
      for (int t = 0; t < pts; ++t) {
        for (int p = 0; p < pts; ++p) {
          const double w = (t == 0 || t == pts - 1 ? 0.5 : 1.0) * (p == 0 || p == pts - 1 ? 0.5 : 1.0);
          sum += w * g.values(t, p) * std::sin(g.theta(t)) * dt * dp;
        }
      }
      CHECK((n + 1) / (4 * kPi) * sum == doctest::Approx(1.0).epsilon(0.02));
    }
  }
  SUBCASE("cat state has four lobes") {
    const int n = 100, pts = 101;
    const HusimiGrid g = husimi_grid(cat_state_analytic(n), pts, pts);
    CHECK(g.values.maxCoeff() <= 1 + 1e-12);
    const double top = g.values.maxCoeff();
    CHECK(g.values.row(0).maxCoeff() > 0.2);
    CHECK(g.values.row(pts - 1).maxCoeff() > 0.2);

    const RealVector equator = g.values.row(pts / 2).transpose();
    Eigen::Index c;
    const double eq = equator.head(pts - 1).maxCoeff(&c);
    CHECK(eq > 0.2);
    const Eigen::Index opposite = (c + (pts - 1) / 2) % (pts - 1);
    CHECK(equator(opposite) == doctest::Approx(eq).epsilon(1e-6));

    const auto peaks = local_maxima(g, 0.1 * top);
    int polar = 0, equatorial = 0;
    for (const auto& p : peaks) {
      if (p.row == 0 || p.row == pts - 1) ++polar;
      else if (std::abs(p.row - pts / 2) <= 1) ++equatorial;
    }
    // Pole rows are constant in phi, so every column there is a tied maximum.
    CHECK(polar >= 2);
    CHECK(equatorial == 2);
    CHECK(peaks.size() == static_cast<std::size_t>(polar + equatorial));
  }
  CHECK_THROWS_AS(husimi_grid(polarized_state(2), 1, 5), ConfigError);
}

TEST_CASE("figure 3 data") {
  const FigureData f = figure_data(FigureId::kFig3, 100);
  REQUIRE(f.panels.size() == 3);
  const auto& a = f.panel("fig3a");
  CHECK(a.columns == std::vector<std::string>{"m", "P"});
  CHECK(a.data(100, 0) == 50);
  CHECK(a.data(100, 1) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(f.panel("fig3b").data.col(1).sum()) < 1e-12);
  CHECK(f.panel("fig3c").columns[1] == "dP_dbeta");
  CHECK_THROWS_AS(f.panel("fig3d"), ConfigError);

  // Finite-difference panels agree with the analytic ones.
  FigureOverrides fd;
  fd.finite_difference = true;
  fd.fd_step = 1e-9;
  const FigureData g = figure_data(FigureId::kFig3, 100, fd);
  const RealVector an = f.panel("fig3b").data.col(1), num = g.panel("fig3b").data.col(1);
  CHECK((an - num).cwiseAbs().maxCoeff() < 1e-4 * an.cwiseAbs().maxCoeff());
}

TEST_CASE("figure 4 data") {
  const FigureData f = figure_data(FigureId::kFig4, 100);
  REQUIRE(f.panels.size() == 5);
  const RealVector p = f.panel("fig4a").data.col(1);
  CHECK(p(0) > 0.1);
  CHECK(p(100) > 0.1);
  CHECK(p(50) < 0.01 * p(0));
  const auto golden = qgsim::test::read_csv(qgsim::test::golden_path("fig4a_n100.csv"));
  CHECK((p - golden.column("P")).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(f.panel("fig4d").columns[1] == "dP_ddeltaA");
  CHECK(f.panel("fig4e").columns[1] == "dP_ddeltaJz");
}

TEST_CASE("figure 2 data") {
  FigureOverrides o;
  o.husimi_theta_points = 11;
  o.husimi_phi_points = 13;
  const FigureData f = figure_data(FigureId::kFig2, 20, o);
  REQUIRE(f.panels.size() == 8);
  CHECK(f.panel("fig2a").data.rows() == 11 * 13);
  CHECK(f.panel("fig2a").columns == std::vector<std::string>{"theta", "phi", "Q"});
  CHECK(f.panel("fig2g").data(10, 1) == doctest::Approx(0.5));
  CHECK(f.panel("fig2h").data.col(1).sum() == doctest::Approx(1.0));
  CHECK_THROWS_AS(figure_data(FigureId::kFig2, 21, o), ConfigError);
}

TEST_CASE("figure CSV output is deterministic") {
  const FigureData a = figure_data(FigureId::kFig4, 40);
  const FigureData b = figure_data(FigureId::kFig4, 40);
  for (std::size_t i = 0; i < a.panels.size(); ++i) {
    CHECK(panel_csv(a.panels[i], 40, "abc", kDefaultConvention) == panel_csv(b.panels[i], 40, "abc", kDefaultConvention));
  }
  CHECK(parse_figure("fig3") == FigureId::kFig3);
  CHECK_THROWS_AS(parse_figure("fig5"), ConfigError);
}
