#pragma once

// JSON and CSV formats shared by the library and the command-line tool.
// Numbers are written with 17 significant digits so files round-trip and
// are byte-identical across runs.

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qgsim/channels.hpp"
#include "qgsim/dicke.hpp"
#include "qgsim/distributions.hpp"
#include "qgsim/feasibility.hpp"
#include "qgsim/fisher.hpp"

namespace qgsim {

using Json = nlohmann::ordered_json;

std::string tool_version();  // "qgsim <major>.<minor>.<patch>"

std::string format_number(double value);
std::string sha256_hex(std::string_view data);
// First 16 hex digits of the SHA-256 of the compact JSON dump.
std::string config_hash(const Json& config);

// {"n": int, "amplitudes": [[re, im], ...]}, ascending m.
Json ket_to_json(const DickeKet& state);
DickeKet ket_from_json(const Json& j);

Json experiment_to_json(const ExperimentConfig& config);
// Unknown keys and wrong types raise ConfigError naming the field.
ExperimentConfig experiment_from_json(const Json& j);

Json physical_to_json(const PhysicalConfig& config);
PhysicalConfig physical_from_json(const Json& j);

Json fisher_to_json(const FisherMatrix& f);
FisherMatrix fisher_from_json(const Json& j);
Json crb_to_json(const CrbReport& report);
Json decoupling_to_json(const DecouplingReport& report);
Json cfi_to_json(const CfiResult& result);
Json feasibility_to_json(const FeasibilityReport& report);
Json derivative_check_to_json(const DerivativeCheck& check);

// Lines written as "# key: value" ahead of a CSV payload.
struct CsvHeader {
  std::vector<std::pair<std::string, std::string>> fields;

  CsvHeader& add(std::string key, std::string value);
  std::string render() const;
};

// Standard header: tool_version, config_hash, convention, then `extra`.
CsvHeader make_header(const std::string& hash, JzConvention convention);

std::string csv_table(const CsvHeader& header, const std::vector<std::string>& columns, const RealMatrix& data);
std::string panel_csv(const FigurePanel& panel, int n, const std::string& hash, JzConvention convention);
// Columns m, P, dP_dalpha, dP_dbeta, dP_ddeltaA, dP_ddeltaJz; parameters absent
// from the table are written as empty cells.
std::string derivative_csv(const ProbabilityTable& table, const std::string& hash, JzConvention convention);

// Drops "# tool_version:" lines so payloads compare across releases.
std::string strip_tool_version(std::string_view text);

// JSON payloads carry the same metadata under "meta".
Json with_meta(Json body, const std::string& hash, JzConvention convention);
std::string dump_json(const Json& j);  // 2-space indent, trailing newline

}  // namespace qgsim
