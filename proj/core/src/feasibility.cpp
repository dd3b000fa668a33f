#include "qgsim/feasibility.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "qgsim/errors.hpp"
#include "qgsim/parallel.hpp"

namespace qgsim {

namespace {

constexpr double kPiValue = 3.14159265358979323846;
constexpr int kMonteCarloBatches = 16;

double centre(const PhysicalConfig& c, Mode m) { return m == Mode::kA ? c.separation : -c.separation; }

void require_positive(double v, const char* name) {
  if (!(v > 0) || !std::isfinite(v)) throw ConfigError(fmt::format("{} must be positive and finite, got {}", name, v));
}

}  // namespace

void PhysicalConfig::validate() const {
  require_positive(mass, "mass");
  require_positive(sigma, "sigma");
  require_positive(separation, "separation");
  require_positive(time, "time");
  require_positive(repetitions, "repetitions");
  require_positive(G, "G");
  require_positive(hbar, "hbar");
  if (v_a.has_value() != v_b.has_value()) throw ConfigError("v_a and v_b must be given together");
}

double kappa_at_distance(const PhysicalConfig& c, double distance) {
  c.validate();
  const double prefactor = -0.5 * c.G * c.mass * c.mass;
  // r - r' is Gaussian with variance sigma^2 per axis, so <1/|r - r'|> = erf(d / (sqrt(2) sigma)) / d.
  const double x = distance / (std::sqrt(2.0) * c.sigma);
  if (x < 1e-4) {
    // erf(x)/d = sqrt(2/pi)/sigma (1 - x^2/3 + x^4/10 - ...)
    const double x2 = x * x;
    return prefactor * std::sqrt(2.0 / kPiValue) / c.sigma * (1.0 - x2 / 3.0 + x2 * x2 / 10.0);
  }
  return prefactor * std::erf(x) / distance;
}

double kappa_gaussian_analytic(const PhysicalConfig& c, Mode i, Mode j) {
  return kappa_at_distance(c, std::abs(centre(c, i) - centre(c, j)));
}

MonteCarloEstimate kappa_monte_carlo(const PhysicalConfig& c, Mode i, Mode j, std::uint64_t samples,
                                     std::uint64_t seed, unsigned jobs) {
  c.validate();
  if (samples < 2) throw ConfigError("Monte Carlo needs at least 2 samples");
  struct Batch {
    std::uint64_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;
  };
  std::vector<Batch> batches(kMonteCarloBatches);
  const double width = c.sigma / std::sqrt(2.0);  // |u|^2 has variance sigma^2/2 per axis
  const double ci = centre(c, i);
  const double cj = centre(c, j);

  parallel_for(batches.size(), jobs, [&](std::size_t b) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(b)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, width);
    const std::uint64_t count = samples / kMonteCarloBatches + (b < samples % kMonteCarloBatches ? 1 : 0);
    Batch acc;
    for (std::uint64_t s = 0; s < count; ++s) {
      const double dx = (ci + normal(rng)) - (cj + normal(rng));
      const double dy = normal(rng) - normal(rng);
      const double dz = normal(rng) - normal(rng);
      const double value = 1.0 / std::sqrt(dx * dx + dy * dy + dz * dz);
      ++acc.count;
      const double delta = value - acc.mean;
      acc.mean += delta / static_cast<double>(acc.count);
      acc.m2 += delta * (value - acc.mean);
    }
    batches[b] = acc;
  });

  // Chan et al. pairwise merge, in batch order.
  Batch total;
  for (const auto& b : batches) {
    if (b.count == 0) continue;
    const double n = static_cast<double>(total.count + b.count);
    const double delta = b.mean - total.mean;
    total.m2 += b.m2 + delta * delta * static_cast<double>(total.count) * static_cast<double>(b.count) / n;
    total.mean += delta * static_cast<double>(b.count) / n;
    total.count += b.count;
  }
  const double variance = total.m2 / static_cast<double>(total.count - 1);
  const double prefactor = -0.5 * c.G * c.mass * c.mass;
  return MonteCarloEstimate{prefactor * total.mean,
                            std::abs(prefactor) * std::sqrt(variance / static_cast<double>(total.count)),
                            total.count, seed};
}

AlphaMagnitude alpha_magnitude(const PhysicalConfig& c) {
  c.validate();
  AlphaMagnitude a;
  a.closed_form = c.time * c.G * c.mass * c.mass / (c.hbar * c.sigma * std::sqrt(kPiValue));
  a.derived = std::abs(kappa_gaussian_analytic(c, Mode::kA, Mode::kA)) * c.time / c.hbar;
  return a;
}

double detectable_alpha_bound(double atoms, double repetitions) {
  return 2.0 / (std::sqrt(repetitions) * atoms * atoms);
}

AtomNumber minimum_atom_number(const PhysicalConfig& c) {
  c.validate();
  AtomNumber n;
  n.closed_form = std::sqrt(2.0 * c.hbar * c.sigma * std::sqrt(kPiValue) /
                      (std::sqrt(c.repetitions) * c.G * c.mass * c.mass * c.time));
  // alpha = 2 / (sqrt(k) N^2)  =>  N = sqrt(2 / (sqrt(k) alpha))
  n.derived = std::sqrt(2.0 / (std::sqrt(c.repetitions) * alpha_magnitude(c).derived));
  return n;
}

std::vector<ScalingRow> scaling_separation(const PhysicalConfig& c, std::span<const double> sigmas) {
  if (sigmas.empty()) throw ConfigError("scaling_separation needs at least one sigma");
  PhysicalConfig probe = c;
  probe.sigma = sigmas.front();
  const double alpha0 = alpha_magnitude(probe).closed_form;
  const double sigma0 = sigmas.front();
  std::vector<ScalingRow> rows;
  for (double s : sigmas) {
    probe.sigma = s;
    const double ratio = sigma0 / s;
    rows.push_back({s, alpha_magnitude(probe).closed_form / alpha0, ratio * ratio * ratio});
  }
  return rows;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("slope fit needs two equal-length series of >= 2 points");
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += std::log(x[i]);
    sy += std::log(y[i]);
  }
  const double mx = sx / n, my = sy / n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0) throw ConfigError("slope fit needs distinct x values");
  return sxy / sxx;
}

double peak_density(const PhysicalConfig& c, double atoms) {
  c.validate();
  return atoms / (std::pow(kPiValue, 1.5) * c.sigma * c.sigma * c.sigma);
}

DensityCheck density_check(const PhysicalConfig& c, double atoms) {
  DensityCheck d;
  d.atoms = atoms;
  d.peak_per_m3 = peak_density(c, atoms);
  d.peak_per_cm3 = d.peak_per_m3 * 1e-6;
  const double ratio = d.peak_per_cm3 / d.quoted_per_cm3;
  d.flagged = ratio > 10.0 || ratio < 0.1;
  return d;
}

FeasibilityReport feasibility_report(const PhysicalConfig& c) {
  c.validate();
  FeasibilityReport r;
  r.config = c;
  r.alpha = alpha_magnitude(c);
  r.kappa = {{{kappa_gaussian_analytic(c, Mode::kA, Mode::kA), kappa_gaussian_analytic(c, Mode::kA, Mode::kB)},
              {kappa_gaussian_analytic(c, Mode::kB, Mode::kA), kappa_gaussian_analytic(c, Mode::kB, Mode::kB)}}};
  r.n_min = minimum_atom_number(c);
  r.cross_term_ratio = r.kappa[0][1] / r.kappa[0][0];
  r.density = density_check(c, r.n_min.closed_form);
  if (c.v_a && c.v_b) {
    r.beta = (*c.v_b - *c.v_a) * c.time / c.hbar;
    r.gamma = -0.5 * (*c.v_a + *c.v_b) * c.time / c.hbar;
  }
  return r;
}

}  // namespace qgsim
