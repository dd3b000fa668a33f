#pragma once

// Scenario files, reproduction targets and parameter sweeps. Every product
// is written into one output directory together with manifest.json, which
// lists each file with its SHA-256.
//
// Exit codes: 0 success, 1 partial sweep failure, 2 configuration error,
// 3 numerical error.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qgsim/channels.hpp"
#include "qgsim/distributions.hpp"
#include "qgsim/feasibility.hpp"
#include "qgsim/fisher.hpp"
#include "qgsim/serialization.hpp"

namespace qgsim {

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitPartialFailure = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitNumericalError = 3;

// Probe used by the "state" and "qfi" products. The measurement products
// always run the full OAT interferometer.
enum class ProbeState { kOat, kOptimal, kCatAnalytic, kPolarized };

std::string_view to_string(ProbeState s);
ProbeState parse_probe_state(std::string_view name);
DickeKet make_probe(ProbeState s, const ExperimentConfig& config);

enum class OutputKind { kState, kDistribution, kDerivatives, kQfi, kCfi, kCrb, kDecoupling, kFigure, kFeasibility };

struct OutputRequest {
  OutputKind kind;
  std::optional<FigureId> figure;
};

std::string to_string(const OutputRequest& r);
OutputRequest parse_output(std::string_view name);

struct ScenarioFile {
  ExperimentConfig experiment;
  ProbeState state = ProbeState::kOat;
  std::optional<PhysicalConfig> physical;
  std::vector<OutputRequest> outputs;
  std::vector<ParameterId> params = {ParameterId::kAlpha, ParameterId::kBeta};
  double repetitions = 1e5;
  bool figure_mode = false;
  bool allow_pseudo_inverse = false;
  double probability_floor = kDefaultProbabilityFloor;
  double decoupling_threshold = kDefaultDecouplingThreshold;
  std::uint64_t seed = 0;
  std::uint64_t monte_carlo_samples = 0;
  int husimi_points = 101;
  bool fd_check = false;

  void validate(bool require_outputs = true) const;
  // Base point for derivative products (figure-mode offsets applied if set).
  ExperimentConfig derivative_base() const;
};

Json scenario_to_json(const ScenarioFile& s);
ScenarioFile scenario_from_json(const Json& j, bool require_outputs = true);
ScenarioFile load_scenario(const std::filesystem::path& path);

struct RunOptions {
  std::filesystem::path out_dir = "out";
  bool force = false;
  bool fd_check = false;
  unsigned jobs = 1;
  std::optional<JzConvention> convention;
};

struct RunResult {
  int exit_code = kExitSuccess;
  std::vector<std::filesystem::path> files;  // relative to out_dir, manifest last
  std::string message;
};

// These throw ConfigError / NumericalError; run_guarded maps them to exit codes.
RunResult run_scenario(ScenarioFile scenario, const RunOptions& options);

enum class ReproduceId { kFig2, kFig3, kFig4, kQfiTable, kFeasibility };

std::string_view to_string(ReproduceId id);
ReproduceId parse_reproduce_id(std::string_view name);
RunResult reproduce(ReproduceId id, const RunOptions& options);

enum class SweepAxis { kN, kChiTau, kAlpha, kBeta, kDeltaA, kDeltaJz, kSigma };

std::string_view to_string(SweepAxis a);
SweepAxis parse_sweep_axis(std::string_view name);

// Scalar columns a sweep can report.
const std::vector<std::string>& sweep_output_names();

struct SweepSpec {
  SweepAxis axis = SweepAxis::kN;
  std::vector<double> values;
  ScenarioFile base;
  std::vector<std::string> outputs;

  void validate() const;
};

SweepSpec sweep_from_json(const Json& j);
SweepSpec load_sweep(const std::filesystem::path& path);
RunResult run_sweep(const SweepSpec& spec, const RunOptions& options);

// Runs `body` and converts ConfigError to exit 2 and NumericalError to exit 3,
// with the message in RunResult::message.
template <typename Body>
RunResult run_guarded(Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    return RunResult{kExitConfigError, {}, e.what()};
  } catch (const NumericalError& e) {
    return RunResult{kExitNumericalError, {}, e.what()};
  }
}

}  // namespace qgsim
