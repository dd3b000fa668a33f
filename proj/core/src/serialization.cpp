#include "qgsim/serialization.hpp"

#include <cmath>
#include <initializer_list>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "qgsim/errors.hpp"

#ifndef QGSIM_VERSION
#define QGSIM_VERSION "0.0.0"
#endif

namespace qgsim {

namespace {

// Field access with error messages that name the offending key.
class Reader {
 public:
  Reader(const Json& j, std::string context) : j_(j), context_(std::move(context)) {
    if (!j_.is_object()) throw ConfigError(fmt::format("{}: expected a JSON object", context_));
  }

  void allow_only(std::initializer_list<std::string_view> keys) const {
    for (const auto& [key, value] : j_.items()) {
      bool known = false;
      for (auto k : keys) known = known || key == k;
      if (!known) throw ConfigError(fmt::format("{}: unknown field '{}'", context_, key));
    }
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  const Json& at(const char* key) const {
    if (!has(key)) throw ConfigError(fmt::format("{}: missing required field '{}'", context_, key));
    return j_.at(key);
  }

  double number(const char* key) const {
    const Json& v = at(key);
    if (!v.is_number()) throw ConfigError(fmt::format("{}: field '{}' must be a number", context_, key));
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(fmt::format("{}: field '{}' must be finite", context_, key));
    return x;
  }

  double number_or(const char* key, double fallback) const { return has(key) ? number(key) : fallback; }

  int integer(const char* key) const {
    const Json& v = at(key);
    if (!v.is_number_integer()) throw ConfigError(fmt::format("{}: field '{}' must be an integer", context_, key));
    return v.get<int>();
  }

  std::string string(const char* key) const {
    const Json& v = at(key);
    if (!v.is_string()) throw ConfigError(fmt::format("{}: field '{}' must be a string", context_, key));
    return v.get<std::string>();
  }

  const std::string& context() const { return context_; }

 private:
  const Json& j_;
  std::string context_;
};

// Re-throws a ConfigError from a parse_* helper with the field name attached.
template <typename F>
auto named(const Reader& r, const char* key, F&& parse) {
  try {
    return parse(r.string(key));
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    if (what.find(key) != std::string::npos) throw;
    throw ConfigError(fmt::format("{}: field '{}': {}", r.context(), key, what));
  }
}

Json matrix_to_json(const RealMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vector_to_json(const RealVector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Json params_to_json(const std::vector<ParameterId>& params) {
  Json out = Json::array();
  for (ParameterId p : params) out.push_back(std::string(to_string(p)));
  return out;
}

}  // namespace

std::string tool_version() { return std::string("qgsim ") + QGSIM_VERSION; }

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0) return "0";  // folds -0
  return fmt::format("{:.17g}", value);
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw NumericalError("SHA-256 digest failed");
  }
  std::string hex;
  hex.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string config_hash(const Json& config) { return sha256_hex(config.dump()).substr(0, 16); }

Json ket_to_json(const DickeKet& state) {
  Json amps = Json::array();
  for (Eigen::Index i = 0; i < state.dim(); ++i) {
    amps.push_back(Json::array({state.amplitudes()(i).real(), state.amplitudes()(i).imag()}));
  }
  return Json{{"n", state.n()}, {"amplitudes", std::move(amps)}};
}

DickeKet ket_from_json(const Json& j) {
  Reader r(j, "state");
  r.allow_only({"n", "amplitudes", "meta"});
  const int n = r.integer("n");
  if (n < 1) throw ConfigError(fmt::format("state: field 'n' must be >= 1, got {}", n));
  const Json& amps = r.at("amplitudes");
  if (!amps.is_array() || amps.size() != static_cast<std::size_t>(n) + 1) {
    throw ConfigError(fmt::format("state: field 'amplitudes' must be an array of n + 1 = {} pairs", n + 1));
  }
  ComplexVector v(n + 1);
  for (int i = 0; i <= n; ++i) {
    const Json& pair = amps[static_cast<std::size_t>(i)];
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number()) {
      throw ConfigError(fmt::format("state: field 'amplitudes[{}]' must be [re, im]", i));
    }
    v(i) = Complex(pair[0].get<double>(), pair[1].get<double>());
  }
  return DickeKet(n, std::move(v));
}

Json experiment_to_json(const ExperimentConfig& c) {
  Json dephasing = Json::array();
  for (const auto& d : c.dephasing) {
    dephasing.push_back(Json{{"generator", std::string(to_string(d.generator))}, {"delta", d.delta}});
  }
  return Json{{"n", c.n},
              {"chi_tau", c.twisting.chi_tau},
              {"alpha", c.gravity.alpha},
              {"beta", c.gravity.beta},
              {"gamma", c.gravity.gamma},
              {"dephasing", std::move(dephasing)},
              {"recombiner", std::string(to_string(c.recombiner))},
              {"convention", std::string(to_string(c.convention))}};
}

ExperimentConfig experiment_from_json(const Json& j) {
  Reader r(j, "experiment");
  r.allow_only({"n", "chi_tau", "alpha", "beta", "gamma", "dephasing", "recombiner", "convention"});
  ExperimentConfig c;
  c.n = r.integer("n");
  c.twisting.chi_tau = r.number_or("chi_tau", c.twisting.chi_tau);
  c.gravity.alpha = r.number_or("alpha", 0.0);
  c.gravity.beta = r.number_or("beta", 0.0);
  c.gravity.gamma = r.number_or("gamma", 0.0);
  if (r.has("dephasing")) {
    const Json& list = r.at("dephasing");
    if (!list.is_array()) throw ConfigError("experiment: field 'dephasing' must be an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      Reader d(list[i], fmt::format("experiment.dephasing[{}]", i));
      d.allow_only({"generator", "delta"});
      c.dephasing.push_back(
          {named(d, "generator", [](const std::string& s) { return parse_dephasing_generator(s); }), d.number("delta")});
    }
  }
  if (r.has("recombiner")) c.recombiner = named(r, "recombiner", [](const std::string& s) { return parse_recombiner(s); });
  if (r.has("convention")) c.convention = named(r, "convention", [](const std::string& s) { return parse_convention(s); });
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("experiment: {}", e.what()));
  }
  return c;
}

Json physical_to_json(const PhysicalConfig& c) {
  Json j{{"mass", c.mass},       {"sigma", c.sigma}, {"separation", c.separation}, {"time", c.time},
         {"repetitions", c.repetitions}, {"G", c.G}, {"hbar", c.hbar}};
  if (c.v_a) j["v_a"] = *c.v_a;
  if (c.v_b) j["v_b"] = *c.v_b;
  return j;
}

PhysicalConfig physical_from_json(const Json& j) {
  Reader r(j, "physical");
  r.allow_only({"mass", "mass_amu", "sigma", "sigma_um", "separation", "separation_um", "time", "repetitions", "G",
                "hbar", "v_a", "v_b"});
  PhysicalConfig c;
  if (r.has("mass") && r.has("mass_amu")) throw ConfigError("physical: give only one of 'mass' and 'mass_amu'");
  if (r.has("sigma") && r.has("sigma_um")) throw ConfigError("physical: give only one of 'sigma' and 'sigma_um'");
  if (r.has("separation") && r.has("separation_um")) {
    throw ConfigError("physical: give only one of 'separation' and 'separation_um'");
  }
  c.mass = r.has("mass_amu") ? r.number("mass_amu") * kAtomicMassUnit : r.number_or("mass", c.mass);
  c.sigma = r.has("sigma_um") ? r.number("sigma_um") * 1e-6 : r.number_or("sigma", c.sigma);
  c.separation = r.has("separation_um") ? r.number("separation_um") * 1e-6 : r.number_or("separation", c.separation);
  c.time = r.number_or("time", c.time);
  c.repetitions = r.number_or("repetitions", c.repetitions);
  c.G = r.number_or("G", c.G);
  c.hbar = r.number_or("hbar", c.hbar);
  if (r.has("v_a")) c.v_a = r.number("v_a");
  if (r.has("v_b")) c.v_b = r.number("v_b");
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("physical: {}", e.what()));
  }
  return c;
}

Json fisher_to_json(const FisherMatrix& f) {
  return Json{{"params", params_to_json(f.params)}, {"matrix", matrix_to_json(f.values)}};
}

FisherMatrix fisher_from_json(const Json& j) {
  Reader r(j, "fisher");
  r.allow_only({"params", "matrix", "meta"});
  FisherMatrix f;
  const Json& params = r.at("params");
  if (!params.is_array()) throw ConfigError("fisher: field 'params' must be an array");
  for (const auto& p : params) {
    if (!p.is_string()) throw ConfigError("fisher: field 'params' must hold strings");
    f.params.push_back(parse_parameter(p.get<std::string>()));
  }
  const auto k = static_cast<Eigen::Index>(f.params.size());
  const Json& m = r.at("matrix");
  if (!m.is_array() || m.size() != f.params.size()) throw ConfigError("fisher: field 'matrix' must be k x k");
  f.values.resize(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const Json& row = m[static_cast<std::size_t>(i)];
    if (!row.is_array() || row.size() != f.params.size()) throw ConfigError("fisher: field 'matrix' must be k x k");
    for (Eigen::Index c = 0; c < k; ++c) f.values(i, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return f;
}

Json crb_to_json(const CrbReport& report) {
  Json j{{"params", params_to_json(report.params)},
         {"inverse", matrix_to_json(report.inverse)},
         {"variances", vector_to_json(report.variances)},
         {"repetitions", report.repetitions},
         {"scaled_condition", report.scaled_condition},
         {"singular", report.singular}};
  if (report.detectable_alpha) j["detectable_alpha"] = *report.detectable_alpha;
  Json dirs = Json::array();
  for (const auto& d : report.degenerate_directions) dirs.push_back(vector_to_json(d));
  j["degenerate_directions"] = std::move(dirs);
  return j;
}

Json decoupling_to_json(const DecouplingReport& report) {
  Json rows = Json::array();
  for (const auto& row : report.rows) {
    rows.push_back(Json{{"param", std::string(to_string(row.param))},
                        {"ratio", row.ratio},
                        {"correlation", row.correlation},
                        {"flagged", row.flagged}});
  }
  return Json{{"fisher", fisher_to_json(report.fisher)},
              {"threshold", report.threshold},
              {"rows", std::move(rows)},
              {"any_flagged", report.any_flagged()}};
}

Json cfi_to_json(const CfiResult& result) {
  Json diverging = Json::array();
  for (auto m : result.diverging_outcomes) diverging.push_back(m);
  Json j = fisher_to_json(result.fisher);
  j["skipped_outcomes"] = result.skipped_outcomes;
  j["diverging_outcomes"] = std::move(diverging);
  return j;
}

Json feasibility_to_json(const FeasibilityReport& r) {
  Json kappa = Json::array();
  for (const auto& row : r.kappa) kappa.push_back(Json::array({row[0], row[1]}));
  Json config = physical_to_json(r.config);
  config["mass_amu"] = r.config.mass / kAtomicMassUnit;
  config["sigma_um"] = r.config.sigma * 1e6;
  config["separation_um"] = r.config.separation * 1e6;
  Json j{{"config", std::move(config)},
         {"alpha_closed_form", r.alpha.closed_form},
         {"alpha_derived", r.alpha.derived},
         {"alpha_ratio", r.alpha.ratio()},
         {"kappa_matrix", std::move(kappa)},
         {"n_min", r.n_min.closed_form},
         {"n_min_derived", r.n_min.derived},
         {"n_min_ratio", r.n_min.derived / r.n_min.closed_form},
         {"detectable_alpha_at_n_min", detectable_alpha_bound(r.n_min.closed_form, r.config.repetitions)},
         {"cross_term_ratio", r.cross_term_ratio},
         {"density_peak", r.density.peak_per_m3},
         {"density_peak_cm3", r.density.peak_per_cm3},
         {"density_quoted_cm3", r.density.quoted_per_cm3},
         {"density_flagged", r.density.flagged}};
  if (r.beta) j["beta"] = *r.beta;
  if (r.gamma) j["gamma"] = *r.gamma;
  return j;
}

Json derivative_check_to_json(const DerivativeCheck& check) {
  return Json{{"params", params_to_json(check.params)},
              {"steps", vector_to_json(check.steps)},
              {"max_abs_error", vector_to_json(check.max_abs_error)},
              {"scale", vector_to_json(check.scale)},
              {"tolerance", check.tolerance},
              {"passed", check.passed()}};
}

CsvHeader& CsvHeader::add(std::string key, std::string value) {
  fields.emplace_back(std::move(key), std::move(value));
  return *this;
}

std::string CsvHeader::render() const {
  std::string out;
  for (const auto& [k, v] : fields) out += fmt::format("# {}: {}\n", k, v);
  return out;
}

CsvHeader make_header(const std::string& hash, JzConvention convention) {
  CsvHeader h;
  h.add("tool_version", tool_version()).add("config_hash", hash).add("convention", std::string(to_string(convention)));
  return h;
}

std::string csv_table(const CsvHeader& header, const std::vector<std::string>& columns, const RealMatrix& data) {
  if (static_cast<Eigen::Index>(columns.size()) != data.cols()) {
    throw ConfigError("CSV column names do not match the data width");
  }
  std::string out = header.render();
  for (std::size_t c = 0; c < columns.size(); ++c) out += (c ? "," : "") + columns[c];
  out += '\n';
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (Eigen::Index c = 0; c < data.cols(); ++c) {
      if (c) out += ',';
      if (!std::isnan(data(i, c))) out += format_number(data(i, c));
    }
    out += '\n';
  }
  return out;
}

std::string panel_csv(const FigurePanel& panel, int n, const std::string& hash, JzConvention convention) {
  CsvHeader h = make_header(hash, convention);
  h.add("panel", panel.name).add("n", std::to_string(n)).add("description", panel.description);
  if (!panel.columns.empty() && panel.columns.front() == "theta") {
    h.add("grid", "theta in [0, pi] including both poles; phi in [-pi, pi] with both periodic endpoints emitted");
  }
  return csv_table(h, panel.columns, panel.data);
}

std::string derivative_csv(const ProbabilityTable& table, const std::string& hash, JzConvention convention) {
  const std::vector<std::string> columns = {"m", "P", "dP_dalpha", "dP_dbeta", "dP_ddeltaA", "dP_ddeltaJz"};
  RealMatrix data = RealMatrix::Constant(table.n + 1, 6, std::numeric_limits<double>::quiet_NaN());
  for (int i = 0; i <= table.n; ++i) data(i, 0) = dicke_m(table.n, i);
  data.col(1) = table.probabilities;
  for (std::size_t c = 0; c < table.params.size(); ++c) {
    data.col(2 + static_cast<Eigen::Index>(table.params[c])) = table.derivatives.col(static_cast<Eigen::Index>(c));
  }
  CsvHeader h = make_header(hash, convention);
  h.add("n", std::to_string(table.n));
  return csv_table(h, columns, data);
}

std::string strip_tool_version(std::string_view text) {
  std::string out;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("# tool_version:", 0) == 0) continue;
    if (line.find("\"tool_version\"") != std::string::npos) continue;
    out += line;
    out += '\n';
  }
  return out;
}

Json with_meta(Json body, const std::string& hash, JzConvention convention) {
  Json out{{"meta",
            {{"tool_version", tool_version()},
             {"config_hash", hash},
             {"convention", std::string(to_string(convention))}}}};
  for (auto& [k, v] : body.items()) out[k] = std::move(v);
  return out;
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace qgsim
