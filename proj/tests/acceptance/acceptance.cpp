// Acceptance checks. Prints one PASS/FAIL line per criterion followed by
// indented measurements; exits 1 if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qgsim/channels.hpp"
#include "qgsim/dicke.hpp"
#include "qgsim/distributions.hpp"
#include "qgsim/feasibility.hpp"
#include "qgsim/fisher.hpp"
#include "test_support.hpp"

using namespace qgsim;
using qgsim::test::max_abs;

namespace {

const std::vector<ParameterId> kAlphaBeta = {ParameterId::kAlpha, ParameterId::kBeta};
const std::vector<ParameterId> kAll(std::begin(kAllParameters), std::end(kAllParameters));

class Criterion {
 public:
  explicit Criterion(std::string title) : title_(std::move(title)), start_(std::chrono::steady_clock::now()) {}

  // Records a sub-check, printed under the verdict line.
  bool check(bool ok, const char* format, ...) __attribute__((format(printf, 3, 4))) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof buf, format, args);
    va_end(args);
    lines_.push_back(std::string(ok ? "    ok    " : "    FAIL  ") + buf);
    ok_ = ok_ && ok;
    return ok;
  }
  void note(const std::string& text) { lines_.push_back("          " + text); }

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  bool finish() const {
    std::printf("%s  %s  (%.2f s)\n", ok_ ? "PASS" : "FAIL", title_.c_str(), elapsed());
    for (const auto& l : lines_) std::printf("%s\n", l.c_str());
    std::fflush(stdout);
    return ok_;
  }

 private:
  std::string title_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::string> lines_;
  bool ok_ = true;
};

double rel(double value, double reference) { return std::abs(value - reference) / std::abs(reference); }

ExperimentConfig config_at(int n, Recombiner r) {
  ExperimentConfig c;
  c.n = n;
  c.recombiner = r;
  return c;
}

double cosine(const RealVector& a, const RealVector& b) { return a.dot(b) / (a.norm() * b.norm()); }

bool criterion_1() {
  Criterion c("1 optimal-state QFI: F_aa = N^4/4, F_ab = 0");
  for (int n : {4, 10, 50, 100, 500}) {
    const RealMatrix f = qfi_pure(optimal_state(n), kAlphaBeta).values;
    const double n4 = std::pow(n, 4);
    c.check(rel(f(0, 0), n4 / 4) < 1e-9 && std::abs(f(0, 1)) < 1e-9 * n4,
            "N = %3d  F_aa rel err %.2e  |F_ab|/N^4 %.2e", n, rel(f(0, 0), n4 / 4), std::abs(f(0, 1)) / n4);
  }
  c.check(c.elapsed() < 1.0, "runtime %.3f s < 1 s", c.elapsed());
  return c.finish();
}

bool criterion_2() {
  Criterion c("2 F_bb convention: 2N^2 (optimal), 2(N^2+N) (cat)");
  int matching = 0;
  JzConvention winner = kDefaultConvention;
  for (auto conv : {JzConvention::kHalf, JzConvention::kUnit}) {
    bool ok = true;
    std::string detail;
    for (int n : {4, 10, 100, 500}) {
      const double f = qfi_pure(optimal_state(n), kAlphaBeta, conv).values(1, 1);
      ok = ok && rel(f, 2.0 * n * n) < 1e-9;
      char buf[96];
      std::snprintf(buf, sizeof buf, " opt N=%d %.3g", n, rel(f, 2.0 * n * n));
      detail += buf;
    }
    // Below N ~ 60 the pole and equator parts of the cat overlap and F_bb
    // carries an exponentially small excess (0.08 relative at N = 10).
    for (int n : {60, 100, 500}) {
      const double f = qfi_pure(cat_state_analytic(n), kAlphaBeta, conv).values(1, 1);
      const double ref = 2.0 * (static_cast<double>(n) * n + n);
      ok = ok && rel(f, ref) < 1e-9;
      char buf[96];
      std::snprintf(buf, sizeof buf, " cat N=%d %.3g", n, rel(f, ref));
      detail += buf;
    }
    c.note(std::string(to_string(conv)) + (ok ? " matches;" : " does not match;") + " rel err" + detail);
    if (ok) {
      ++matching;
      winner = conv;
    }
  }
  c.check(matching == 1, "conventions matching: %d (need exactly one)", matching);
  c.check(winner == kDefaultConvention, "matching convention '%s' is the default '%s'",
          std::string(to_string(winner)).c_str(), std::string(to_string(kDefaultConvention)).c_str());
  return c.finish();
}

bool criterion_3() {
  Criterion c("3 OAT cat construction and O(N^3) deficit");
  for (int n : {4, 10, 100}) {
    const double fid = fidelity(oat_prepare(polarized_state(n), TwistingSpec{kPi / 4}), cat_state_analytic(n));
    c.check(fid >= 1 - 1e-10, "N = %3d  1 - fidelity = %.2e", n, 1 - fid);
  }
  std::vector<double> ns, deficits;
  bool positive = true;
  for (int n = 20; n <= 200; n += 20) {
    const DickeKet cat = oat_prepare(polarized_state(n), TwistingSpec{kPi / 4});
    const double d = std::pow(n, 4) / 4 - qfi_pure(cat, kAlphaBeta).values(0, 0);
    positive = positive && d > 0;
    ns.push_back(n);
    deficits.push_back(d);
  }
  c.check(positive, "deficit positive for N = 20..200 (N = 200: %.6g)", deficits.back());
  const double slope = loglog_slope(ns, deficits);
  c.check(slope >= 2.5 && slope <= 3.5, "log-log slope %.4f in [2.5, 3.5]", slope);
  return c.finish();
}

bool criterion_4() {
  Criterion c("4 QCRB saturation with U2 = U0^dagger");
  for (int n : {10, 50, 100}) {
    const ExperimentConfig cfg = figure_mode_base(config_at(n, Recombiner::kU0Dagger), false);
    const RealMatrix f = cfi_matrix(prob_derivatives_analytic(cfg, kAlphaBeta)).fisher.values;
    const RealMatrix q = qfi_pure(prepare_probe(cfg), kAlphaBeta).values;
    const double err = max_abs(RealMatrix(f - q)) / max_abs(q);
    c.check(err <= 1e-6, "N = %3d  max|CFI - QFI| / max|QFI| = %.2e  (CFI_aa/QFI_aa %.6f, CFI_bb/QFI_bb %.6f)", n,
            err, f(0, 0) / q(0, 0), f(1, 1) / q(1, 1));
  }
  c.check(c.elapsed() < 10.0, "runtime %.3f s < 10 s", c.elapsed());
  return c.finish();
}

bool criterion_5() {
  Criterion c("5 dephasing failure mode under U0^dagger, alpha decoupling under U0");
  const int n = 100;
  const ExperimentConfig dag = figure_mode_base(config_at(n, Recombiner::kU0Dagger), true);
  const ProbabilityTable td = prob_derivatives_analytic(dag, kAll);
  const double cos_dag =
      cosine(td.derivatives.col(td.column(ParameterId::kDeltaA)), td.derivatives.col(td.column(ParameterId::kAlpha)));
  c.check(cos_dag > 0.99, "U0^dagger: cos(dP/d delta_A, dP/d alpha) = %.8f > 0.99", cos_dag);

  const ExperimentConfig u0 = figure_mode_base(config_at(n, Recombiner::kU0), true);
  const ProbabilityTable t0 = prob_derivatives_analytic(u0, kAll);
  const FisherMatrix f = cfi_matrix(t0).fisher;
  const CrbReport crb = crb_invert(f, 1.0);
  const double faa = f.at(ParameterId::kAlpha, ParameterId::kAlpha);
  const double effective = 1.0 / crb.inverse(0, 0);
  c.check(effective >= 0.99 * faa, "U0: 1/[F^-1]_aa / F_aa = %.8f >= 0.99  (F_aa / (N^4/4) = %.5f)", effective / faa,
          faa / (std::pow(n, 4) / 4));
  const double cos_u0 =
      cosine(t0.derivatives.col(t0.column(ParameterId::kDeltaA)), t0.derivatives.col(t0.column(ParameterId::kAlpha)));
  c.note("U0: cos(dP/d delta_A, dP/d alpha) = " + std::to_string(cos_u0));
  return c.finish();
}

bool criterion_6() {
  Criterion c("6 figure panels");
  const int n = 100;
  const FigureData f3 = figure_data(FigureId::kFig3, n);
  const FigureData f4 = figure_data(FigureId::kFig4, n);
  auto index_of_m = [&](const FigurePanel& p, double m) {
    for (Eigen::Index i = 0; i < p.data.rows(); ++i)
      if (p.data(i, 0) == m) return i;
    return Eigen::Index{-1};
  };

  const FigurePanel& a = f3.panel("fig3a");
  const double top = a.data(index_of_m(a, n / 2.0), 1);
  c.check(std::abs(top - 1) < 1e-10, "fig3a  |P(N/2) - 1| = %.2e", std::abs(top - 1));

  const FigurePanel& b = f3.panel("fig3b");
  Eigen::Index imin, imax;
  b.data.col(1).minCoeff(&imin);
  b.data.col(1).maxCoeff(&imax);
  c.check(b.data(imin, 0) == n / 2.0 && b.data(imax, 0) == -n / 2.0, "fig3b  most negative at m = %g, most positive at m = %g",
          b.data(imin, 0), b.data(imax, 0));

  const FigurePanel& cp = f3.panel("fig3c");
  double inner = 0, total = 0;
  for (Eigen::Index i = 0; i < cp.data.rows(); ++i) {
    total += std::abs(cp.data(i, 1));
    if (std::abs(cp.data(i, 0)) <= n / 4.0) inner += std::abs(cp.data(i, 1));
  }
  c.check(inner / total > 0.95, "fig3c  L1 fraction within |m| <= N/4 = %.4f > 0.95", inner / total);
  const Eigen::Index pole = index_of_m(cp, n / 2.0);
  c.note("fig3c  dP(N/2)/d beta = " + std::to_string(cp.data(pole, 1)) + ", |.| / L1 total = " +
         std::to_string(std::abs(cp.data(pole, 1)) / total));

  const FigurePanel& a4 = f4.panel("fig4a");
  const RealVector p4 = a4.data.col(1);
  const Eigen::Index lo = index_of_m(a4, -n / 2.0), hi = index_of_m(a4, n / 2.0);
  RealVector rest = p4;
  rest(lo) = rest(hi) = -1;
  const double interior = rest.maxCoeff();
  c.check(interior < std::min(p4(lo), p4(hi)), "fig4a  P(-N/2) = %.4f, P(N/2) = %.4f, largest interior P = %.2e",
          p4(lo), p4(hi), interior);

  for (const FigureData* fig : {&f3, &f4}) {
    for (const auto& panel : fig->panels) {
      if (panel.name.back() == 'a') continue;
      const double sum = panel.data.col(1).sum();
      c.check(std::abs(sum) < 1e-12, "%s  |sum| = %.2e < 1e-12  (max |entry| %.3g)", panel.name.c_str(),
              std::abs(sum), panel.data.col(1).cwiseAbs().maxCoeff());
    }
  }
  return c.finish();
}

bool criterion_7() {
  Criterion c("7 feasibility for Rb-87");
  const PhysicalConfig physical;  // sigma = 50 um, t = 1 s, k = 1e5
  const AtomNumber nmin = minimum_atom_number(physical);
  const double ratio = nmin.closed_form / 5e9;
  c.check(ratio >= 0.5 && ratio <= 2.0, "N_min = %.4g, ratio to 5e9 = %.4f", nmin.closed_form, ratio);
  c.note("first-principles alpha gives N_min = " + std::to_string(nmin.derived));

  for (auto [i, j] : {std::pair{Mode::kA, Mode::kA}, std::pair{Mode::kA, Mode::kB}}) {
    const double exact = kappa_gaussian_analytic(physical, i, j);
    const MonteCarloEstimate mc = kappa_monte_carlo(physical, i, j, 10'000'000, 0);
    const double z = std::abs(mc.value - exact) / mc.standard_error;
    c.check(z <= 3, "kappa_%s%s  closed form %.6e, MC %.6e +/- %.2e  (%.2f SE)", i == Mode::kA ? "a" : "b",
            j == Mode::kA ? "a" : "b", exact, mc.value, mc.standard_error, z);
  }

  const double sigmas[] = {25e-6, 50e-6, 100e-6, 200e-6};
  std::vector<double> s, g, k;
  for (const auto& row : scaling_separation(physical, sigmas)) {
    s.push_back(row.sigma);
    g.push_back(row.gravity);
    k.push_back(row.contact);
  }
  const double sg = loglog_slope(s, g), sk = loglog_slope(s, k);
  c.check(std::abs(sg + 1) < 1e-9 && std::abs(sk + 3) < 1e-9, "sigma slopes: gravity %.12f, contact %.12f", sg, sk);
  return c.finish();
}

bool criterion_8() {
  Criterion c("8 property suite");
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> angle(-kPi, kPi);

  double unitary = 0;
  for (int n : {1, 2, 3, 4, 7, 10, 31, 50, 100}) {
    const double theta = angle(rng);
    unitary = std::max({unitary, unitarity_error(rotation_x(n, theta)),
                        unitarity_error(oat_unitary(n, TwistingSpec{theta})),
                        unitarity_error(recombiner_unitary(n, Recombiner::kU0, TwistingSpec{theta})),
                        unitarity_error(recombiner_unitary(n, Recombiner::kU0Dagger, TwistingSpec{theta}))});
  }
  c.check(unitary < 1e-12, "unitarity: max ||U^dagger U - I|| = %.2e", unitary);

  double trace = 0;
  for (int trial = 0; trial < 20; ++trial) {
    ExperimentConfig cfg = config_at(2 + trial, trial % 2 ? Recombiner::kU0 : Recombiner::kU0Dagger);
    cfg.twisting.chi_tau = angle(rng);
    cfg.gravity.alpha = angle(rng);
    cfg.gravity.beta = angle(rng);
    cfg.dephasing = {{DephasingGenerator::kA, 0.01 * trial}, {DephasingGenerator::kJz, 0.02 * trial}};
    trace = std::max(trace, std::abs(run_experiment(cfg).trace() - 1));
    trace = std::max(trace, std::abs(dephase(qgsim::test::random_density(cfg.n, rng), cfg.dephasing[0]).trace() - 1));
  }
  c.check(trace < 1e-12, "trace preservation: max |tr - 1| = %.2e", trace);

  // PSD and CFI <= QFI over random pure pipelines.
  double worst_psd = 0, worst_gap = 0;
  for (int trial = 0; trial < 30; ++trial) {
    ExperimentConfig cfg = config_at(2 + 3 * trial, trial % 2 ? Recombiner::kU0 : Recombiner::kU0Dagger);
    cfg.twisting.chi_tau = angle(rng);
    cfg.gravity.alpha = 0.1 * angle(rng);
    cfg.gravity.beta = angle(rng);
    const FisherMatrix q = qfi_pure(prepare_probe(cfg), kAlphaBeta);
    const FisherMatrix f = cfi_matrix(prob_derivatives_analytic(cfg, kAlphaBeta)).fisher;
    const double scale = std::max(1.0, max_abs(q.values));
    worst_psd = std::max({worst_psd, -q.min_eigenvalue() / scale, -f.min_eigenvalue() / scale});
    Eigen::SelfAdjointEigenSolver<RealMatrix> gap(q.values - f.values);
    worst_gap = std::max(worst_gap, -gap.eigenvalues().minCoeff() / scale);

    cfg.dephasing = {{DephasingGenerator::kA, 1e-3}, {DephasingGenerator::kJz, 1e-2}};
    const FisherMatrix f4 = cfi_matrix(prob_derivatives_analytic(cfg, kAll)).fisher;
    worst_psd = std::max(worst_psd, -f4.min_eigenvalue() / std::max(1.0, max_abs(f4.values)));
  }
  c.check(worst_psd < 1e-10, "Fisher matrices PSD: worst scaled eigenvalue %.2e", -worst_psd);
  c.check(worst_gap < 1e-10, "QFI - CFI PSD: worst scaled eigenvalue %.2e", -worst_gap);

  for (auto r : {Recombiner::kU0Dagger, Recombiner::kU0}) {
    const ExperimentConfig cfg = figure_mode_base(config_at(100, r), true);
    const DerivativeCheck d = check_derivatives(cfg, kAll, 1e-7);
    std::string errs;
    for (Eigen::Index k = 0; k < d.max_abs_error.size(); ++k) {
      char buf[64];
      std::snprintf(buf, sizeof buf, " %s %.1e", std::string(to_string(d.params[k])).c_str(),
                    d.max_abs_error(k) / d.scale(k));
      errs += buf;
    }
    c.check(d.passed(), "analytic vs FD at N = 100, %s, scaled error:%s", std::string(to_string(r)).c_str(),
            errs.c_str());
  }

  double identity = 0, diagonal = 0;
  for (int n : {2, 5, 20, 60}) {
    const DickeDensity rho = qgsim::test::random_density(n, rng);
    for (auto g : {DephasingGenerator::kA, DephasingGenerator::kJz}) {
      identity = std::max(identity, max_abs(ComplexMatrix(dephase(rho, {g, 0.0}).matrix() - rho.matrix())));
      const ComplexMatrix out = dephase(rho, {g, 1e6}).matrix();
      const RealVector ev = dephasing_eigenvalues(g, n);
      for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j)
          if (ev(i) != ev(j)) diagonal = std::max(diagonal, std::abs(out(i, j)));
    }
  }
  c.check(identity == 0 && diagonal < 1e-300, "dephasing limits: delta = 0 change %.1e, delta = 1e6 coherence %.1e",
          identity, diagonal);

  double brute_err = 0;
  for (int n : {2, 3, 4}) {
    for (bool with_u0 : {false, true}) {
      const double theta[4] = {0.21, 0.13, 0.02, 0.05};
      const double chi = 0.37;
      ExperimentConfig cfg = config_at(n, with_u0 ? Recombiner::kU0 : Recombiner::kU0Dagger);
      cfg.twisting.chi_tau = chi;
      cfg.gravity.alpha = theta[0];
      cfg.gravity.beta = theta[1];
      cfg.dephasing = {{DephasingGenerator::kA, theta[2]}, {DephasingGenerator::kJz, theta[3]}};
      const RealMatrix brute = qgsim::test::brute_cfi(n, chi, with_u0, theta);
      const RealMatrix f = cfi_matrix(prob_derivatives_analytic(cfg, kAll)).fisher.values;
      brute_err = std::max(brute_err, max_abs(RealMatrix(f - brute)) / max_abs(brute));
    }
  }
  c.check(brute_err < 1e-8, "brute-force CFI at N = 2, 3, 4: max relative difference %.2e", brute_err);

  c.check(c.elapsed() < 60.0, "runtime %.2f s < 60 s", c.elapsed());
  return c.finish();
}

}  // namespace

int main() {
  const std::vector<std::function<bool()>> criteria = {criterion_1, criterion_2, criterion_3, criterion_4,
                                                        criterion_5, criterion_6, criterion_7, criterion_8};
  int failed = 0;
  for (const auto& run : criteria) {
    try {
      if (!run()) ++failed;
    } catch (const std::exception& e) {
      std::printf("FAIL  exception: %s\n", e.what());
      ++failed;
    }
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
