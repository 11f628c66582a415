#pragma once

#include "stag/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace stag {

struct AblationRow {
  std::string cell;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  Index windows = 0;
  std::vector<double> path;  // per horizon
  std::vector<double> pose;
  double contact_l2 = 0.0;
  std::vector<double> per_frame;
};

/// Seed-averaged metrics of one cell over its successful runs.
struct AblationSummary {
  std::string cell;
  int seeds_ok = 0;
  int seeds_failed = 0;
  std::vector<double> path;
  std::vector<double> pose;
  double contact_l2 = 0.0;
  std::vector<double> per_frame;
};

struct AblationReport {
  std::vector<double> horizons;
  std::vector<AblationRow> rows;
  std::vector<AblationSummary> summary;

  [[nodiscard]] const AblationSummary* find(const std::string& cell) const;
};

struct AblationOptions {
  int jobs = 1;
  std::ostream* progress = nullptr;
};

/// Trains and evaluates every (cell, seed) pair on `<data>/train` and
/// `<data>/test`. Each finished pair is stored under `<out>/cells/`, so a
/// rerun only repeats missing or failed pairs. Stage-1 models are trained
/// once per seed and shared across cells with the same stage-1 settings.
/// Writes results.csv, summary.csv, summary_curves.csv and summary.txt.
AblationReport run_ablation(const AblationGrid& grid, const std::filesystem::path& data_root,
                            const std::filesystem::path& out_dir, const AblationOptions& options = {});

void write_results_csv(std::ostream& os, const AblationReport& report);
void write_summary_csv(std::ostream& os, const AblationReport& report);
void write_summary_text(std::ostream& os, const AblationReport& report);

/// Reads the cell files of a finished or partial run without training.
AblationReport read_ablation(const AblationGrid& grid, const std::filesystem::path& out_dir);

}  // namespace stag
