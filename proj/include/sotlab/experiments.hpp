#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sotlab/analysis.hpp"
#include "sotlab/simulate.hpp"

namespace sotlab {

// Batch experiment layer: every run is described by one JSON config file
// and writes its results to a JSON or CSV file. Configs round-trip through
// parse/serialize, and identical configs produce byte-identical outputs.

struct WassersteinParams {
  GridMeasure mu, nu;
  double k = 2.0;
  bool operator==(const WassersteinParams&) const = default;
};

struct DetValueParams {
  double t = 0.0;
  Horizon horizon;
  PowerCost cost;
  GridMeasure mu, nu;
  bool operator==(const DetValueParams&) const = default;
};

struct SimulateParams {
  SimConfig sim;
  bool operator==(const SimulateParams&) const = default;
};

struct GapCurveParams {
  SimConfig sim_template;
  std::vector<double> T_minus_t_list;
  GapCurveOptions options;
  bool operator==(const GapCurveParams&) const = default;
};

struct BlowupProbeParams {
  GridMeasure mu, nu;
  double lambda_const = 2.0;
  TorusDisplacement shift;  // jump operator: translation by this shift
  double t = 0.0;
  Horizon horizon;
  std::vector<double> epsilons{1e-2, 1e-3, 1e-4, 1e-5};
  bool operator==(const BlowupProbeParams&) const = default;
};

struct SteeringCheckParams {
  RateFunction sigma;
  double t0 = 0.0;
  Horizon horizon;
  long long n_paths = 10000;
  double x0_offset = 0.0;
  std::uint64_t base_seed = 0;
  double dt_coarse = 1e-3;
  double dt_min = 1e-7;
  double refine_ratio = 0.5;
  bool operator==(const SteeringCheckParams&) const = default;
};

struct HjbResidualParams {
  int n = 16;
  int dim = 1;
  int instances = 100;
  int atoms = 8;  // equal-weight atoms per measure
  std::vector<double> T_minus_t_list{1.0, 0.5, 0.1};
  std::uint64_t base_seed = 0;
  bool operator==(const HjbResidualParams&) const = default;
};

struct SuperdiffTestParams {
  std::vector<int> n_list{4, 8};
  int dim = 1;
  int instances = 1000;
  std::uint64_t base_seed = 0;
  bool operator==(const SuperdiffTestParams&) const = default;
};

using ExperimentParams =
    std::variant<WassersteinParams, DetValueParams, SimulateParams, GapCurveParams,
                 BlowupProbeParams, SteeringCheckParams, HjbResidualParams, SuperdiffTestParams>;

struct RunConfig {
  std::string experiment;
  std::optional<std::uint64_t> seed;   // overrides the params' base seed
  std::optional<std::string> output;
  ExperimentParams params;

  bool operator==(const RunConfig&) const = default;
};

/// Thrown for malformed configs and field validation failures (exit 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& file_path);
std::string serialize_run_config(const RunConfig& cfg, int indent = 2);

struct RunOverrides {
  std::optional<std::string> output;
  std::optional<std::uint64_t> seed;
  int threads = 0;
};

struct RunOutcome {
  int exit_code = 0;  // 0 ok, 1 validation error, 2 runtime error
  std::string summary;
  std::string output_path;
};

/// Executes the configured experiment and writes its output file.
RunOutcome run_experiment(const RunConfig& cfg, const RunOverrides& overrides = {});

struct ExperimentInfo {
  std::string name;
  std::string description;
  std::string fields;
};

const std::vector<ExperimentInfo>& list_experiments();
std::string experiments_table();

/// Shortest round-trip decimal representation.
std::string format_double(double value);

std::uint64_t fnv1a_hash(const std::string& text);

}  // namespace sotlab
