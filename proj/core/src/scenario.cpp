#include "qgsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "qgsim/errors.hpp"
#include "qgsim/parallel.hpp"

namespace qgsim {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kReproduceN = 100;
constexpr double kQuotedAtomNumber = 5e9;
constexpr std::uint64_t kReproduceMonteCarloSamples = 1000000;

template <typename T>
bool contains(const std::vector<T>& v, const T& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

Json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot read '{}'", path.string()));
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
  }
}

// Collects files for one run and writes manifest.json last.
class OutputWriter {
 public:
  OutputWriter(const RunOptions& options, std::string hash, JzConvention convention, std::uint64_t seed)
      : dir_(options.out_dir), hash_(std::move(hash)), convention_(convention), seed_(seed) {
    std::error_code ec;
    if (fs::exists(dir_, ec)) {
      if (!fs::is_directory(dir_, ec)) throw ConfigError(fmt::format("--out '{}' is not a directory", dir_.string()));
      if (!fs::is_empty(dir_, ec) && !options.force) {
        throw ConfigError(fmt::format("output directory '{}' is not empty (pass --force to overwrite)", dir_.string()));
      }
    } else if (!fs::create_directories(dir_, ec) || ec) {
      throw ConfigError(fmt::format("cannot create output directory '{}': {}", dir_.string(), ec.message()));
    }
  }

  const std::string& hash() const { return hash_; }
  JzConvention convention() const { return convention_; }

  void write(const std::string& name, const std::string& content) {
    const fs::path path = dir_ / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !out.write(content.data(), static_cast<std::streamsize>(content.size()))) {
      throw ConfigError(fmt::format("cannot write '{}'", path.string()));
    }
    entries_.push_back(Json{{"path", name}, {"sha256", sha256_hex(content)}, {"bytes", content.size()}});
    files_.emplace_back(name);
  }

  void write_json(const std::string& name, Json body) { write(name, dump_json(with_meta(std::move(body), hash_, convention_))); }

  RunResult finish(const Json& config, int exit_code = kExitSuccess, std::string message = {}) {
    Json manifest{{"tool_version", tool_version()},
                  {"config_hash", hash_},
                  {"convention", std::string(to_string(convention_))},
                  {"seed", seed_},
                  {"config", config},
                  {"files", entries_}};
    write("manifest.json", dump_json(manifest));
    return RunResult{exit_code, files_, std::move(message)};
  }

 private:
  fs::path dir_;
  std::string hash_;
  JzConvention convention_;
  std::uint64_t seed_;
  Json entries_ = Json::array();
  std::vector<fs::path> files_;
};

std::vector<ParameterId> unitary_params(const std::vector<ParameterId>& params) {
  std::vector<ParameterId> out;
  for (ParameterId p : params) {
    if (!is_dephasing_parameter(p)) out.push_back(p);
  }
  return out;
}

Json monte_carlo_json(const PhysicalConfig& physical, std::uint64_t samples, std::uint64_t seed, unsigned jobs) {
  Json rows = Json::array();
  const std::pair<Mode, Mode> pairs[] = {{Mode::kA, Mode::kA}, {Mode::kA, Mode::kB}};
  const char* names[] = {"aa", "ab"};
  for (std::size_t k = 0; k < 2; ++k) {
    const auto [i, j] = pairs[k];
    const MonteCarloEstimate mc = kappa_monte_carlo(physical, i, j, samples, seed, jobs);
    const double analytic = kappa_gaussian_analytic(physical, i, j);
    rows.push_back(Json{{"pair", names[k]},
                        {"estimate", mc.value},
                        {"standard_error", mc.standard_error},
                        {"analytic", analytic},
                        {"z_score", (mc.value - analytic) / mc.standard_error},
                        {"samples", mc.samples},
                        {"seed", mc.seed}});
  }
  return rows;
}

RealMatrix distribution_rows(int n, const RealVector& p) {
  RealMatrix data(n + 1, 2);
  for (int i = 0; i <= n; ++i) data(i, 0) = dicke_m(n, i);
  data.col(1) = p;
  return data;
}

ExperimentConfig figure_base(const ExperimentConfig& experiment, FigureId id) {
  ExperimentConfig c = experiment;
  c.recombiner = id == FigureId::kFig4 ? Recombiner::kU0 : Recombiner::kU0Dagger;
  return figure_mode_base(c, id == FigureId::kFig4);
}

std::vector<ParameterId> figure_params(FigureId id) {
  if (id == FigureId::kFig4) return {kAllParameters, kAllParameters + 4};
  return {ParameterId::kAlpha, ParameterId::kBeta};
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else if (c == '\n') out += ' ';
    else out += c;
  }
  return out + "\"";
}

}  // namespace

// ------------------------------------------------------------ probe states

std::string_view to_string(ProbeState s) {
  switch (s) {
    case ProbeState::kOat: return "oat";
    case ProbeState::kOptimal: return "optimal";
    case ProbeState::kCatAnalytic: return "cat_analytic";
    case ProbeState::kPolarized: return "polarized";
  }
  return "unknown";
}

ProbeState parse_probe_state(std::string_view name) {
  for (ProbeState s : {ProbeState::kOat, ProbeState::kOptimal, ProbeState::kCatAnalytic, ProbeState::kPolarized}) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError(fmt::format("unknown state '{}' (expected oat, optimal, cat_analytic or polarized)", name));
}

DickeKet make_probe(ProbeState s, const ExperimentConfig& config) {
  switch (s) {
    case ProbeState::kOat: return prepare_probe(config);
    case ProbeState::kOptimal: return optimal_state(config.n);
    case ProbeState::kCatAnalytic: return cat_state_analytic(config.n);
    case ProbeState::kPolarized: return polarized_state(config.n);
  }
  throw ConfigError("unknown probe state");
}

// ----------------------------------------------------------------- outputs

std::string to_string(const OutputRequest& r) {
  switch (r.kind) {
    case OutputKind::kState: return "state";
    case OutputKind::kDistribution: return "distribution";
    case OutputKind::kDerivatives: return "derivatives";
    case OutputKind::kQfi: return "qfi";
    case OutputKind::kCfi: return "cfi";
    case OutputKind::kCrb: return "crb";
    case OutputKind::kDecoupling: return "decoupling";
    case OutputKind::kFigure: return std::string(to_string(r.figure.value_or(FigureId::kFig2)));
    case OutputKind::kFeasibility: return "feasibility";
  }
  return "unknown";
}

OutputRequest parse_output(std::string_view name) {
  static const std::pair<std::string_view, OutputKind> kinds[] = {
      {"state", OutputKind::kState},   {"distribution", OutputKind::kDistribution},
      {"derivatives", OutputKind::kDerivatives}, {"qfi", OutputKind::kQfi},
      {"cfi", OutputKind::kCfi},       {"crb", OutputKind::kCrb},
      {"decoupling", OutputKind::kDecoupling},   {"feasibility", OutputKind::kFeasibility}};
  for (const auto& [n, k] : kinds) {
    if (n == name) return {k, std::nullopt};
  }
  try {
    return {OutputKind::kFigure, parse_figure(name)};
  } catch (const ConfigError&) {
    throw ConfigError(fmt::format(
        "unknown output '{}' (expected state, distribution, derivatives, qfi, cfi, crb, decoupling, feasibility, "
        "fig2, fig3 or fig4)",
        name));
  }
}

// ---------------------------------------------------------------- scenario

void ScenarioFile::validate(bool require_outputs) const {
  experiment.validate();
  if (require_outputs && outputs.empty()) throw ConfigError("scenario: field 'outputs' must list at least one product");
  if (params.empty()) throw ConfigError("scenario: field 'params' must not be empty");
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (std::size_t j = i + 1; j < params.size(); ++j) {
      if (params[i] == params[j]) {
        throw ConfigError(fmt::format("scenario: field 'params' repeats '{}'", to_string(params[i])));
      }
    }
  }
  if (!(repetitions > 0) || !std::isfinite(repetitions)) throw ConfigError("scenario: field 'repetitions' must be > 0");
  if (!(probability_floor >= 0)) throw ConfigError("scenario: field 'probability_floor' must be >= 0");
  if (!(decoupling_threshold > 0)) throw ConfigError("scenario: field 'decoupling_threshold' must be > 0");
  if (husimi_points < 2) throw ConfigError("scenario: field 'husimi_points' must be >= 2");
  if (physical) physical->validate();

  const bool even = experiment.n % 2 == 0;
  if (!even && (state == ProbeState::kOptimal || state == ProbeState::kCatAnalytic)) {
    throw ConfigError(fmt::format("scenario: field 'state' = '{}' requires an even particle count n, got n = {}",
                                  to_string(state), experiment.n));
  }
  for (const auto& o : outputs) {
    if (o.kind == OutputKind::kDecoupling && !contains(params, ParameterId::kAlpha)) {
      throw ConfigError("scenario: output 'decoupling' requires 'alpha' in field 'params'");
    }
    if (o.kind == OutputKind::kFigure && o.figure == FigureId::kFig2 && !even) {
      throw ConfigError(fmt::format("scenario: output 'fig2' shows the optimal state and requires an even n, got n = {}",
                                    experiment.n));
    }
    if (o.kind == OutputKind::kQfi && unitary_params(params).empty()) {
      throw ConfigError("scenario: output 'qfi' needs 'alpha' or 'beta' in field 'params'");
    }
  }
}

ExperimentConfig ScenarioFile::derivative_base() const {
  if (!figure_mode) return experiment;
  const bool dephasing = std::any_of(params.begin(), params.end(), is_dephasing_parameter);
  return figure_mode_base(experiment, dephasing);
}

Json scenario_to_json(const ScenarioFile& s) {
  Json outputs = Json::array();
  for (const auto& o : s.outputs) outputs.push_back(to_string(o));
  Json params = Json::array();
  for (ParameterId p : s.params) params.push_back(std::string(to_string(p)));
  Json j{{"experiment", experiment_to_json(s.experiment)},
         {"state", std::string(to_string(s.state))},
         {"outputs", std::move(outputs)},
         {"params", std::move(params)},
         {"repetitions", s.repetitions},
         {"figure_mode", s.figure_mode},
         {"allow_pseudo_inverse", s.allow_pseudo_inverse},
         {"probability_floor", s.probability_floor},
         {"decoupling_threshold", s.decoupling_threshold},
         {"seed", s.seed},
         {"monte_carlo_samples", s.monte_carlo_samples},
         {"husimi_points", s.husimi_points},
         {"fd_check", s.fd_check}};
  if (s.physical) j["physical"] = physical_to_json(*s.physical);
  return j;
}

ScenarioFile scenario_from_json(const Json& j, bool require_outputs) {
  if (!j.is_object()) throw ConfigError("scenario: expected a JSON object");
  static const char* const known[] = {"experiment",   "state",        "physical",          "outputs",
                                      "convention",   "params",       "repetitions",       "figure_mode",
                                      "allow_pseudo_inverse", "probability_floor", "decoupling_threshold", "seed",
                                      "monte_carlo_samples",  "husimi_points",     "fd_check"};
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(std::begin(known), std::end(known), [&](const char* k) { return key == k; })) {
      throw ConfigError(fmt::format("scenario: unknown field '{}'", key));
    }
  }
  auto field = [&](const char* key) -> const Json* {
    auto it = j.find(key);
    return it == j.end() || it->is_null() ? nullptr : &*it;
  };
  auto number = [&](const char* key, double fallback) {
    const Json* v = field(key);
    if (!v) return fallback;
    if (!v->is_number() || !std::isfinite(v->get<double>())) {
      throw ConfigError(fmt::format("scenario: field '{}' must be a finite number", key));
    }
    return v->get<double>();
  };
  auto boolean = [&](const char* key, bool fallback) {
    const Json* v = field(key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(fmt::format("scenario: field '{}' must be true or false", key));
    return v->get<bool>();
  };
  auto unsigned_int = [&](const char* key, std::uint64_t fallback) {
    const Json* v = field(key);
    if (!v) return fallback;
    if (!v->is_number_unsigned()) throw ConfigError(fmt::format("scenario: field '{}' must be a non-negative integer", key));
    return v->get<std::uint64_t>();
  };
  auto string = [&](const char* key) {
    const Json* v = field(key);
    if (!v->is_string()) throw ConfigError(fmt::format("scenario: field '{}' must be a string", key));
    return v->get<std::string>();
  };
  auto with_field = [](const char* key, auto&& parse) {
    try {
      return parse();
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("scenario: field '{}': {}", key, e.what()));
    }
  };

  ScenarioFile s;
  if (!field("experiment")) throw ConfigError("scenario: missing required field 'experiment'");
  s.experiment = experiment_from_json(j.at("experiment"));
  if (field("convention")) {
    s.experiment.convention = with_field("convention", [&] { return parse_convention(string("convention")); });
  }
  if (field("state")) s.state = with_field("state", [&] { return parse_probe_state(string("state")); });
  if (field("physical")) s.physical = physical_from_json(j.at("physical"));
  if (const Json* outputs = field("outputs")) {
    if (!outputs->is_array()) throw ConfigError("scenario: field 'outputs' must be an array of names");
    for (const auto& o : *outputs) {
      if (!o.is_string()) throw ConfigError("scenario: field 'outputs' must be an array of names");
      s.outputs.push_back(with_field("outputs", [&] { return parse_output(o.get<std::string>()); }));
    }
  }
  if (const Json* params = field("params")) {
    if (!params->is_array()) throw ConfigError("scenario: field 'params' must be an array of names");
    s.params.clear();
    for (const auto& p : *params) {
      if (!p.is_string()) throw ConfigError("scenario: field 'params' must be an array of names");
      s.params.push_back(with_field("params", [&] { return parse_parameter(p.get<std::string>()); }));
    }
  }
  s.repetitions = number("repetitions", s.physical ? s.physical->repetitions : s.repetitions);
  s.figure_mode = boolean("figure_mode", s.figure_mode);
  s.allow_pseudo_inverse = boolean("allow_pseudo_inverse", s.allow_pseudo_inverse);
  s.probability_floor = number("probability_floor", s.probability_floor);
  s.decoupling_threshold = number("decoupling_threshold", s.decoupling_threshold);
  s.seed = unsigned_int("seed", s.seed);
  s.monte_carlo_samples = unsigned_int("monte_carlo_samples", s.monte_carlo_samples);
  s.husimi_points = static_cast<int>(unsigned_int("husimi_points", static_cast<std::uint64_t>(s.husimi_points)));
  s.fd_check = boolean("fd_check", s.fd_check);
  s.validate(require_outputs);
  return s;
}

ScenarioFile load_scenario(const fs::path& path) { return scenario_from_json(read_json_file(path)); }

RunResult run_scenario(ScenarioFile s, const RunOptions& options) {
  if (options.convention) s.experiment.convention = *options.convention;
  s.fd_check = s.fd_check || options.fd_check;
  s.validate();
  const Json canonical = scenario_to_json(s);
  const JzConvention conv = s.experiment.convention;
  OutputWriter out(options, config_hash(canonical), conv, s.seed);

  const ExperimentConfig base = s.derivative_base();
  std::optional<ProbabilityTable> table;
  std::optional<CfiResult> cfi;
  auto need_table = [&]() -> const ProbabilityTable& {
    if (!table) table = prob_derivatives_analytic(base, s.params);
    return *table;
  };
  auto need_cfi = [&]() -> const CfiResult& {
    if (!cfi) cfi = cfi_matrix(need_table(), s.probability_floor);
    return *cfi;
  };

  Json checks = Json::array();
  auto fd_check = [&](const std::string& label, const ExperimentConfig& config, const std::vector<ParameterId>& params) {
    Json c = derivative_check_to_json(check_derivatives(config, params));
    c["product"] = label;
    checks.push_back(std::move(c));
  };

  for (const auto& o : s.outputs) {
    switch (o.kind) {
      case OutputKind::kState:
        out.write_json("state.json", ket_to_json(make_probe(s.state, s.experiment)));
        break;
      case OutputKind::kDistribution: {
        const RealMatrix data = distribution_rows(s.experiment.n, run_experiment(s.experiment).matrix().diagonal().real());
        CsvHeader h = make_header(out.hash(), conv);
        h.add("n", std::to_string(s.experiment.n)).add("description", "P(J_z) after the full interferometer");
        out.write("distribution.csv", csv_table(h, {"m", "P"}, data));
        break;
      }
      case OutputKind::kDerivatives:
        out.write("derivatives.csv", derivative_csv(need_table(), out.hash(), conv));
        if (s.fd_check) fd_check("derivatives", base, s.params);
        break;
      case OutputKind::kQfi: {
        const auto params = unitary_params(s.params);
        Json body = fisher_to_json(qfi_pure(make_probe(s.state, s.experiment), params, conv));
        body["state"] = std::string(to_string(s.state));
        out.write_json("qfi.json", std::move(body));
        break;
      }
      case OutputKind::kCfi:
        out.write_json("cfi.json", cfi_to_json(need_cfi()));
        if (s.fd_check) fd_check("cfi", base, s.params);
        break;
      case OutputKind::kCrb: {
        CrbOptions opts;
        opts.allow_pseudo_inverse = s.allow_pseudo_inverse;
        out.write_json("crb.json", crb_to_json(crb_invert(need_cfi().fisher, s.repetitions, opts)));
        break;
      }
      case OutputKind::kDecoupling:
        out.write_json("decoupling.json", decoupling_to_json(decoupling_report(need_cfi().fisher, s.decoupling_threshold)));
        break;
      case OutputKind::kFigure: {
        const FigureId id = *o.figure;
        FigureOverrides fo;
        fo.chi_tau = s.experiment.twisting.chi_tau;
        fo.husimi_theta_points = fo.husimi_phi_points = s.husimi_points;
        fo.convention = conv;
        fo.jobs = options.jobs;
        const FigureData fig = figure_data(id, s.experiment.n, fo);
        for (const auto& panel : fig.panels) {
          out.write(panel.name + ".csv", panel_csv(panel, fig.n, out.hash(), conv));
        }
        if (s.fd_check && id != FigureId::kFig2) {
          fd_check(std::string(to_string(id)), figure_base(s.experiment, id), figure_params(id));
        }
        break;
      }
      case OutputKind::kFeasibility: {
        const PhysicalConfig physical = s.physical.value_or(PhysicalConfig{});
        Json body = feasibility_to_json(feasibility_report(physical));
        if (s.monte_carlo_samples > 0) {
          body["monte_carlo"] = monte_carlo_json(physical, s.monte_carlo_samples, s.seed, options.jobs);
        }
        out.write_json("feasibility.json", std::move(body));
        break;
      }
    }
  }

  if (s.fd_check && !checks.empty()) {
    bool passed = true;
    for (const auto& c : checks) passed = passed && c.at("passed").get<bool>();
    out.write_json("fd_check.json", Json{{"checks", checks}, {"passed", passed}});
    if (!passed) {
      return out.finish(canonical, kExitNumericalError,
                        "finite-difference cross-check disagrees with the analytic derivatives (see fd_check.json)");
    }
  }
  return out.finish(canonical);
}

// --------------------------------------------------------------- reproduce

std::string_view to_string(ReproduceId id) {
  switch (id) {
    case ReproduceId::kFig2: return "fig2";
    case ReproduceId::kFig3: return "fig3";
    case ReproduceId::kFig4: return "fig4";
    case ReproduceId::kQfiTable: return "qfi-table";
    case ReproduceId::kFeasibility: return "feasibility";
  }
  return "unknown";
}

ReproduceId parse_reproduce_id(std::string_view name) {
  for (ReproduceId id : {ReproduceId::kFig2, ReproduceId::kFig3, ReproduceId::kFig4, ReproduceId::kQfiTable,
                         ReproduceId::kFeasibility}) {
    if (to_string(id) == name) return id;
  }
  throw ConfigError(fmt::format("unknown reproduce target '{}' (expected fig2, fig3, fig4, qfi-table or feasibility)", name));
}

namespace {

Json qfi_claim(const std::string& entry, double computed, double claimed, const std::string& claim, bool match) {
  return Json{{"entry", entry}, {"computed", computed}, {"claimed", claimed}, {"claim", claim}, {"match", match}};
}

bool relative_match(double computed, double claimed) {
  return std::abs(computed - claimed) <= 1e-9 * std::max(1.0, std::abs(claimed));
}

RunResult reproduce_qfi_table(const RunOptions& options) {
  const JzConvention conv = options.convention.value_or(kDefaultConvention);
  ExperimentConfig config;
  config.n = kReproduceN;
  config.convention = conv;
  const Json canonical{{"reproduce", "qfi-table"}, {"n", config.n}, {"chi_tau", config.twisting.chi_tau},
                       {"convention", std::string(to_string(conv))}};
  OutputWriter out(options, config_hash(canonical), conv, 0);

  const ParameterId ab[] = {ParameterId::kAlpha, ParameterId::kBeta};
  const double n = config.n;
  const double n4 = n * n * n * n / 4;
  Json rows = Json::array();

  const FisherMatrix opt = qfi_pure(optimal_state(config.n), ab, conv);
  Json optimal{{"state", "optimal"}, {"fisher", fisher_to_json(opt)}};
  optimal["claims"] = Json::array(
      {qfi_claim("F_alpha_alpha", opt.at(ab[0], ab[0]), n4, "N^4/4", relative_match(opt.at(ab[0], ab[0]), n4)),
       qfi_claim("F_beta_beta", opt.at(ab[1], ab[1]), 2 * n * n, "2N^2",
                 relative_match(opt.at(ab[1], ab[1]), 2 * n * n)),
       qfi_claim("F_alpha_beta", opt.at(ab[0], ab[1]), 0.0, "0", std::abs(opt.at(ab[0], ab[1])) < 1e-9 * n4)});
  rows.push_back(std::move(optimal));

  const FisherMatrix cat = qfi_pure(prepare_probe(config), ab, conv);
  const double deficit = n4 - cat.at(ab[0], ab[0]);
  Json oat{{"state", "oat_cat"}, {"fisher", fisher_to_json(cat)}};
  oat["claims"] = Json::array(
      {qfi_claim("F_alpha_alpha", cat.at(ab[0], ab[0]), n4, "N^4/4 - O(N^3)", deficit > 0 && deficit < n * n * n),
       qfi_claim("F_beta_beta", cat.at(ab[1], ab[1]), 2 * (n * n + n), "2(N^2 + N)",
                 relative_match(cat.at(ab[1], ab[1]), 2 * (n * n + n))),
       qfi_claim("F_alpha_beta", cat.at(ab[0], ab[1]), 0.0, "0", std::abs(cat.at(ab[0], ab[1])) < 1e-9 * n4)});
  oat["deficit"] = deficit;
  oat["deficit_over_n3"] = deficit / (n * n * n);
  rows.push_back(std::move(oat));

  out.write_json("qfi_table.json", Json{{"n", config.n}, {"rows", std::move(rows)}});
  return out.finish(canonical);
}

RunResult reproduce_feasibility(const RunOptions& options) {
  const PhysicalConfig physical;
  const JzConvention conv = options.convention.value_or(kDefaultConvention);
  const Json canonical{{"reproduce", "feasibility"}, {"physical", physical_to_json(physical)},
                       {"monte_carlo_samples", kReproduceMonteCarloSamples}, {"seed", 0}};
  OutputWriter out(options, config_hash(canonical), conv, 0);

  const FeasibilityReport report = feasibility_report(physical);
  Json body = feasibility_to_json(report);
  const double ratio = report.n_min.closed_form / kQuotedAtomNumber;
  body["quoted_n_min"] = kQuotedAtomNumber;
  body["n_min_over_quoted"] = ratio;
  body["within_factor_2"] = ratio >= 0.5 && ratio <= 2.0;
  body["density_at_quoted_n"] = Json{{"peak_per_m3", peak_density(physical, kQuotedAtomNumber)},
                                     {"peak_per_cm3", peak_density(physical, kQuotedAtomNumber) * 1e-6},
                                     {"flagged", density_check(physical, kQuotedAtomNumber).flagged}};
  const double sigmas[] = {25e-6, 50e-6, 100e-6, 200e-6};
  Json scaling = Json::array();
  for (const auto& row : scaling_separation(physical, sigmas)) {
    scaling.push_back(Json{{"sigma", row.sigma}, {"gravity", row.gravity}, {"contact", row.contact}});
  }
  body["sigma_scaling"] = std::move(scaling);
  body["monte_carlo"] = monte_carlo_json(physical, kReproduceMonteCarloSamples, 0, options.jobs);
  out.write_json("feasibility.json", std::move(body));
  return out.finish(canonical);
}

}  // namespace

RunResult reproduce(ReproduceId id, const RunOptions& options) {
  switch (id) {
    case ReproduceId::kQfiTable: return reproduce_qfi_table(options);
    case ReproduceId::kFeasibility: return reproduce_feasibility(options);
    default: break;
  }
  ScenarioFile s;
  s.experiment.n = kReproduceN;
  s.outputs.push_back({OutputKind::kFigure, parse_figure(to_string(id))});
  return run_scenario(std::move(s), options);
}

// ------------------------------------------------------------------- sweep

std::string_view to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::kN: return "n";
    case SweepAxis::kChiTau: return "chi_tau";
    case SweepAxis::kAlpha: return "alpha";
    case SweepAxis::kBeta: return "beta";
    case SweepAxis::kDeltaA: return "delta_A";
    case SweepAxis::kDeltaJz: return "delta_Jz";
    case SweepAxis::kSigma: return "sigma";
  }
  return "unknown";
}

SweepAxis parse_sweep_axis(std::string_view name) {
  for (SweepAxis a : {SweepAxis::kN, SweepAxis::kChiTau, SweepAxis::kAlpha, SweepAxis::kBeta, SweepAxis::kDeltaA,
                      SweepAxis::kDeltaJz, SweepAxis::kSigma}) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError(fmt::format(
      "sweep: field 'axis' = '{}' is not one of n, chi_tau, alpha, beta, delta_A, delta_Jz, sigma", name));
}

const std::vector<std::string>& sweep_output_names() {
  static const std::vector<std::string> names = {
      "F_alpha_alpha", "F_beta_beta",   "F_alpha_beta", "CFI_alpha_alpha", "alpha_row_ratio",
      "detectable_alpha", "max_decoupling", "alpha_closed_form", "alpha_derived",  "n_min",
      "n_min_derived", "density_peak",  "gravity_coeff", "contact_coeff"};
  return names;
}

void SweepSpec::validate() const {
  if (values.empty()) throw ConfigError("sweep: field 'values' must not be empty");
  for (double v : values) {
    if (!std::isfinite(v)) throw ConfigError("sweep: field 'values' must be finite");
  }
  if (outputs.empty()) throw ConfigError("sweep: field 'outputs' must list at least one column");
  for (const auto& o : outputs) {
    if (!contains(sweep_output_names(), o)) {
      throw ConfigError(fmt::format("sweep: field 'outputs' has unknown column '{}'", o));
    }
  }
  base.validate(false);
}

namespace {

std::vector<double> sweep_values(const Json& v) {
  if (v.is_array()) {
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigError("sweep: field 'values' must hold numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }
  if (!v.is_object()) throw ConfigError("sweep: field 'values' must be a list or {start, stop, count, scale}");
  for (const auto& [key, value] : v.items()) {
    if (key != "start" && key != "stop" && key != "count" && key != "scale") {
      throw ConfigError(fmt::format("sweep: field 'values' has unknown key '{}'", key));
    }
  }
  if (!v.contains("start") || !v.contains("stop") || !v.contains("count") || !v["start"].is_number() ||
      !v["stop"].is_number() || !v["count"].is_number_unsigned()) {
    throw ConfigError("sweep: field 'values' needs numeric 'start', 'stop' and a positive integer 'count'");
  }
  const double start = v["start"].get<double>();
  const double stop = v["stop"].get<double>();
  const auto count = v["count"].get<std::size_t>();
  const std::string scale = v.contains("scale") ? v["scale"].get<std::string>() : "linear";
  if (count == 0) throw ConfigError("sweep: field 'values.count' must be >= 1");
  if (scale != "linear" && scale != "log") throw ConfigError("sweep: field 'values.scale' must be linear or log");
  if (scale == "log" && !(start > 0 && stop > 0)) throw ConfigError("sweep: log scale needs positive start and stop");
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    out[i] = scale == "log" ? std::exp(std::log(start) + t * (std::log(stop) - std::log(start)))
                            : start + t * (stop - start);
  }
  if (count > 1) out.back() = stop;
  return out;
}

struct SweepRow {
  std::vector<double> values;
  std::string error;
};

ScenarioFile apply_axis(const SweepSpec& spec, double x) {
  ScenarioFile s = spec.base;
  switch (spec.axis) {
    case SweepAxis::kN:
      if (x != std::floor(x) || x < 1 || x > 1e6) throw ConfigError(fmt::format("n = {} is not a positive integer", x));
      s.experiment.n = static_cast<int>(x);
      break;
    case SweepAxis::kChiTau: s.experiment.twisting.chi_tau = x; break;
    case SweepAxis::kAlpha: s.experiment.gravity.alpha = x; break;
    case SweepAxis::kBeta: s.experiment.gravity.beta = x; break;
    case SweepAxis::kDeltaA:
    case SweepAxis::kDeltaJz: {
      const auto g = spec.axis == SweepAxis::kDeltaA ? DephasingGenerator::kA : DephasingGenerator::kJz;
      std::erase_if(s.experiment.dephasing, [g](const DephasingSpec& d) { return d.generator == g; });
      s.experiment.dephasing.push_back({g, x});
      break;
    }
    case SweepAxis::kSigma: {
      PhysicalConfig p = s.physical.value_or(PhysicalConfig{});
      p.sigma = x;
      s.physical = p;
      break;
    }
  }
  s.validate(false);
  return s;
}

SweepRow evaluate_row(const SweepSpec& spec, double x, double sigma_ref) {
  SweepRow row;
  row.values.assign(spec.outputs.size(), kNaN);
  try {
    const ScenarioFile s = apply_axis(spec, x);
    const JzConvention conv = s.experiment.convention;
    std::optional<FisherMatrix> qfi;
    std::optional<FisherMatrix> cfi;
    std::optional<FeasibilityReport> feas;
    const PhysicalConfig physical = s.physical.value_or(PhysicalConfig{});
    const ParameterId ab[] = {ParameterId::kAlpha, ParameterId::kBeta};
    auto need_qfi = [&]() -> const FisherMatrix& {
      if (!qfi) qfi = qfi_pure(make_probe(s.state, s.experiment), ab, conv);
      return *qfi;
    };
    auto need_cfi = [&]() -> const FisherMatrix& {
      if (!contains(s.params, ParameterId::kAlpha)) throw ConfigError("CFI columns need 'alpha' in base.params");
      if (!cfi) cfi = cfi_matrix(prob_derivatives_analytic(s.derivative_base(), s.params), s.probability_floor).fisher;
      return *cfi;
    };
    auto need_feas = [&]() -> const FeasibilityReport& {
      if (!feas) feas = feasibility_report(physical);
      return *feas;
    };
    auto crb = [&] {
      CrbOptions opts;
      opts.allow_pseudo_inverse = s.allow_pseudo_inverse;
      return crb_invert(need_cfi(), s.repetitions, opts);
    };

    for (std::size_t c = 0; c < spec.outputs.size(); ++c) {
      const std::string& o = spec.outputs[c];
      double v = kNaN;
      if (o == "F_alpha_alpha") v = need_qfi().at(ab[0], ab[0]);
      else if (o == "F_beta_beta") v = need_qfi().at(ab[1], ab[1]);
      else if (o == "F_alpha_beta") v = need_qfi().at(ab[0], ab[1]);
      else if (o == "CFI_alpha_alpha") v = need_cfi().at(ParameterId::kAlpha, ParameterId::kAlpha);
      else if (o == "alpha_row_ratio") {
        const CrbReport r = crb();
        const auto a = r.inverse.rows() ? need_cfi().index_of(ParameterId::kAlpha) : 0;
        v = 1.0 / (r.inverse(a, a) * need_cfi().values(a, a));
      } else if (o == "detectable_alpha") {
        v = crb().detectable_alpha.value_or(kNaN);
      } else if (o == "max_decoupling") {
        v = 0.0;
        for (const auto& r : decoupling_report(need_cfi(), s.decoupling_threshold).rows) {
          v = std::max(v, std::abs(r.correlation));
        }
      } else if (o == "alpha_closed_form") v = need_feas().alpha.closed_form;
      else if (o == "alpha_derived") v = need_feas().alpha.derived;
      else if (o == "n_min") v = need_feas().n_min.closed_form;
      else if (o == "n_min_derived") v = need_feas().n_min.derived;
      else if (o == "density_peak") v = need_feas().density.peak_per_m3;
      else if (o == "gravity_coeff") {
        PhysicalConfig ref = physical;
        ref.sigma = sigma_ref;
        v = need_feas().alpha.closed_form / alpha_magnitude(ref).closed_form;
      } else if (o == "contact_coeff") {
        const double r = sigma_ref / physical.sigma;
        v = r * r * r;
      }
      row.values[c] = v;
    }
  } catch (const ConfigError& e) {
    row.values.assign(spec.outputs.size(), kNaN);
    row.error = fmt::format("config: {}", e.what());
  } catch (const NumericalError& e) {
    row.values.assign(spec.outputs.size(), kNaN);
    row.error = fmt::format("numerical: {}", e.what());
  }
  return row;
}

Json sweep_to_json(const SweepSpec& spec) {
  Json values = Json::array();
  for (double v : spec.values) values.push_back(v);
  return Json{{"axis", std::string(to_string(spec.axis))},
              {"values", std::move(values)},
              {"outputs", spec.outputs},
              {"base", scenario_to_json(spec.base)}};
}

}  // namespace

SweepSpec sweep_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("sweep: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key != "axis" && key != "values" && key != "base" && key != "outputs") {
      throw ConfigError(fmt::format("sweep: unknown field '{}'", key));
    }
  }
  for (const char* key : {"axis", "values", "base", "outputs"}) {
    if (!j.contains(key)) throw ConfigError(fmt::format("sweep: missing required field '{}'", key));
  }
  SweepSpec spec;
  if (!j["axis"].is_string()) throw ConfigError("sweep: field 'axis' must be a string");
  spec.axis = parse_sweep_axis(j["axis"].get<std::string>());
  spec.values = sweep_values(j["values"]);
  spec.base = scenario_from_json(j["base"], false);
  if (!j["outputs"].is_array()) throw ConfigError("sweep: field 'outputs' must be an array of column names");
  for (const auto& o : j["outputs"]) {
    if (!o.is_string()) throw ConfigError("sweep: field 'outputs' must be an array of column names");
    spec.outputs.push_back(o.get<std::string>());
  }
  spec.validate();
  return spec;
}

SweepSpec load_sweep(const fs::path& path) { return sweep_from_json(read_json_file(path)); }

RunResult run_sweep(const SweepSpec& input, const RunOptions& options) {
  SweepSpec spec = input;
  if (options.convention) spec.base.experiment.convention = *options.convention;
  spec.validate();
  const Json canonical = sweep_to_json(spec);
  const JzConvention conv = spec.base.experiment.convention;
  OutputWriter out(options, config_hash(canonical), conv, spec.base.seed);

  const double sigma_ref = spec.axis == SweepAxis::kSigma
                               ? spec.values.front()
                               : spec.base.physical.value_or(PhysicalConfig{}).sigma;
  std::vector<SweepRow> rows(spec.values.size());
  parallel_for(rows.size(), options.jobs, [&](std::size_t i) { rows[i] = evaluate_row(spec, spec.values[i], sigma_ref); });

  CsvHeader h = make_header(out.hash(), conv);
  h.add("axis", std::string(to_string(spec.axis)));
  std::string csv = h.render();
  csv += std::string(to_string(spec.axis));
  for (const auto& o : spec.outputs) csv += "," + o;
  csv += ",error\n";
  int failures = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    csv += format_number(spec.values[i]);
    for (double v : rows[i].values) csv += "," + (std::isnan(v) ? std::string() : format_number(v));
    csv += "," + csv_escape(rows[i].error) + "\n";
    failures += rows[i].error.empty() ? 0 : 1;
  }
  out.write("sweep.csv", csv);
  if (failures > 0) {
    return out.finish(canonical, kExitPartialFailure, fmt::format("{} of {} sweep points failed", failures, rows.size()));
  }
  return out.finish(canonical);
}

}  // namespace qgsim
