#pragma once

// Experiment configuration, orchestration and report emission.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fkent/rds.hpp"

namespace fkent {

inline constexpr const char* kToolVersion = "0.1.0";

enum class Command {
  estimate_top,
  estimate_local,
  estimate_katok,
  compare_top,
  compare_local,
  compare_katok,
};

std::string to_string(Command command);
Command parse_command(const std::string& name);

struct SystemConfig {
  std::string family;                 // expanding | tent | full_shift
  std::vector<int> params;            // m per base symbol, or k for full_shift
  std::size_t dim = 1;
  std::optional<std::string> metric;  // full_shift only: cylinder | discrete
};

struct DrivingConfig {
  std::string law = "bernoulli";  // bernoulli | markov
  std::vector<double> p;
  std::vector<std::vector<double>> transition;
  std::vector<double> initial;
};

// Unset optionals take per-command defaults (see resolve_defaults).
struct ExperimentConfig {
  SystemConfig system;
  DrivingConfig driving;
  std::optional<std::vector<std::size_t>> n_values;
  std::optional<std::vector<double>> eps_values;
  std::optional<std::vector<double>> delta_values;
  std::optional<std::size_t> M;
  std::optional<std::size_t> omega_samples;
  std::optional<std::size_t> candidates;
  std::optional<std::size_t> base_points;
  std::optional<std::vector<std::string>> metrics;  // bowen, fk
  std::uint64_t seed = 0;
  std::string output_dir;  // empty: no files written
};

// Schema (every key optional except system.family; unknown keys rejected):
//
//   { "system":   { "family", "params", "dim", "metric" },
//     "driving":  { "law", "p", "transition", "initial" },
//     "schedule": { "n", "eps", "delta" },
//     "budget":   { "M", "omega_samples", "candidates", "base_points" },
//     "metrics":  [ "bowen", "fk" ],
//     "seed":     7,
//     "output":   { "dir" } }
//
// ConfigError messages name the offending field.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& config);

// Fills unset fields with the defaults of `command`, then validates:
// family known, n strictly increasing, eps and delta strictly decreasing,
// budgets positive, metrics known. ConfigError naming the field.
ExperimentConfig resolve_defaults(Command command, ExperimentConfig config);
void validate(const ExperimentConfig& config);

RandomSystem build_system(const ExperimentConfig& config);
DrivingProcess build_process(const ExperimentConfig& config);

struct CsvTable {
  std::string name;  // file stem
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  // Header line plus rows; no comment line.
  std::string body() const;
};

struct Report {
  nlohmann::json json;
  std::vector<CsvTable> tables;
  std::vector<std::string> violations;  // failed invariant assertions
};

// Runs one experiment. Deterministic for a fixed config, for any worker count.
Report run(Command command, const ExperimentConfig& config);

// report.json plus <name>.csv per table; each CSV starts with one "# "
// comment line carrying the tool version and a timestamp.
void write_report(const Report& report, const std::string& dir);

// 17 significant digits; "nan"/"inf" for non-finite values.
std::string format_double(double value);

struct SelftestCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

// DP vs brute force, banded vs full DP, Bowen/FK domination, metric laws,
// combinatorial oracles and exact cover on small random instances.
std::vector<SelftestCheck> selftest(std::uint64_t seed);

}  // namespace fkent
