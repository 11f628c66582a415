#pragma once

#include "stag/dataset.hpp"
#include "stag/metrics.hpp"
#include "stag/training.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace stag {

/// Malformed config text or an unknown key.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct KeyValue {
  std::string key;
  std::string value;
  int line = 0;
};

/// `key = value` lines; `#` starts a comment, blank lines are skipped.
/// `[name]` lines are returned as entries with key "[" and the name as value.
std::vector<KeyValue> parse_key_values(std::istream& is, const std::string& origin);

/// Everything a train / eval / predict run reads from its config file.
struct RunConfig {
  ForecastConfig forecast;
  TrainingConfig training;
  int eval_stride = 30;
  std::vector<double> horizons = kDefaultHorizons;
};

// Each returns false when `key` is not one of its fields and throws
// ConfigError when the value does not parse. `seed` sets both seeds.
bool apply_forecast_key(ForecastConfig& config, const std::string& key, const std::string& value);
bool apply_run_key(RunConfig& config, const std::string& key, const std::string& value);
bool apply_synthetic_key(SyntheticSpec& spec, const std::string& key, const std::string& value);

RunConfig parse_run_config(std::istream& is, const std::string& origin = "config");
RunConfig load_run_config(const std::filesystem::path& path);
SyntheticSpec parse_synthetic_spec(std::istream& is, const std::string& origin = "spec");
SyntheticSpec load_synthetic_spec(const std::filesystem::path& path);

/// Space-separated key=value pairs, round-trippable through apply_forecast_key.
std::string format_forecast_config(const ForecastConfig& config);
std::string format_run_config(const RunConfig& config);

/// Throws ConfigError when the forecast invariants fail.
void check_forecast_config(const ForecastConfig& config);

struct AblationCell {
  std::string name;
  RunConfig config;
};

/// Shared keys first, then `[cell name]` sections overriding them. The
/// `seeds` key (comma-separated) is only valid before the first section.
struct AblationGrid {
  std::vector<AblationCell> cells;
  std::vector<std::uint64_t> seeds = {0};
};

AblationGrid parse_ablation_grid(std::istream& is, const std::string& origin = "grid");
AblationGrid load_ablation_grid(const std::filesystem::path& path);

}  // namespace stag
