#include "stag/ablation.hpp"

#include "stag/checkpoint.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

namespace stag {

namespace fs = std::filesystem;

const AblationSummary* AblationReport::find(const std::string& cell) const {
  for (const AblationSummary& s : summary)
    if (s.cell == cell) return &s;
  return nullptr;
}

namespace {

std::string join(const std::vector<double>& v) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

std::vector<double> split_doubles(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

std::string fnv_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream hex;
  hex << std::hex << std::setw(16) << std::setfill('0') << h;
  return hex.str();
}

fs::path cell_file(const fs::path& out, const std::string& cell, std::uint64_t seed) {
  return out / "cells" / (cell + "__seed" + std::to_string(seed) + ".txt");
}

void write_cell(const fs::path& path, const AblationRow& row, const std::string& fingerprint) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    out.precision(17);
    out << "status=" << (row.ok ? "ok" : "failed") << '\n' << "config=" << fingerprint << '\n';
    if (!row.ok) {
      std::string msg = row.error;
      for (char& c : msg)
        if (c == '\n') c = ' ';
      out << "error=" << msg << '\n';
    }
    out << "windows=" << row.windows << '\n'
        << "path=" << join(row.path) << '\n'
        << "pose=" << join(row.pose) << '\n'
        << "contact_l2=" << row.contact_l2 << '\n'
        << "per_frame=" << join(row.per_frame) << '\n';
  }
  fs::rename(tmp, path);
}

bool read_cell(const fs::path& path, AblationRow& row, std::string& fingerprint) {
  std::ifstream in(path);
  if (!in) return false;
  std::string line;
  try {
    while (std::getline(in, line)) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string k = line.substr(0, eq), v = line.substr(eq + 1);
      if (k == "status") row.ok = v == "ok";
      else if (k == "config") fingerprint = v;
      else if (k == "error") row.error = v;
      else if (k == "windows") row.windows = std::stol(v);
      else if (k == "path") row.path = split_doubles(v);
      else if (k == "pose") row.pose = split_doubles(v);
      else if (k == "contact_l2") row.contact_l2 = std::stod(v);
      else if (k == "per_frame") row.per_frame = split_doubles(v);
    }
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

std::string stage1_key(const RunConfig& c, std::uint64_t seed) {
  ForecastConfig f = c.forecast;
  f.seed = seed;
  std::ostringstream os;
  os.precision(17);
  os << format_forecast_config(f) << " epochs=" << c.training.epochs << " lr=" << c.training.lr_stage1
     << " batch=" << c.training.batch_size << " clip=" << c.training.grad_clip
     << " stride=" << c.training.train_stride << " w1=" << c.training.weight_stage1;
  return "seed" + std::to_string(seed) + '_' + fnv_hex(os.str());
}

RunConfig seeded(const RunConfig& base, std::uint64_t seed) {
  RunConfig c = base;
  c.forecast.seed = c.training.seed = seed;
  return c;
}

// Identifies the settings a cell file was produced with.
std::string cell_fingerprint(const AblationCell& cell, std::uint64_t seed) {
  return fnv_hex(format_run_config(seeded(cell.config, seed)));
}

// Loads a cell result; a file written under other settings counts as not run.
bool read_current_cell(const fs::path& out_dir, const AblationCell& cell, std::uint64_t seed,
                       AblationRow& row) {
  std::string fingerprint;
  if (!read_cell(cell_file(out_dir, cell.name, seed), row, fingerprint)) return false;
  if (fingerprint != cell_fingerprint(cell, seed)) {
    row = AblationRow{};
    return false;
  }
  return true;
}

void summarize(AblationReport& report, const AblationGrid& grid) {
  report.summary.clear();
  for (const AblationCell& cell : grid.cells) {
    AblationSummary s;
    s.cell = cell.name;
    s.path.assign(report.horizons.size(), 0.0);
    s.pose.assign(report.horizons.size(), 0.0);
    for (const AblationRow& r : report.rows) {
      if (r.cell != cell.name) continue;
      if (!r.ok || r.path.size() != s.path.size()) {
        ++s.seeds_failed;
        continue;
      }
      ++s.seeds_ok;
      for (std::size_t h = 0; h < s.path.size(); ++h) {
        s.path[h] += r.path[h];
        s.pose[h] += r.pose[h];
      }
      s.contact_l2 += r.contact_l2;
      if (s.per_frame.empty()) s.per_frame.assign(r.per_frame.size(), 0.0);
      for (std::size_t f = 0; f < std::min(s.per_frame.size(), r.per_frame.size()); ++f)
        s.per_frame[f] += r.per_frame[f];
    }
    if (s.seeds_ok > 0) {
      const double n = s.seeds_ok;
      for (double& v : s.path) v /= n;
      for (double& v : s.pose) v /= n;
      for (double& v : s.per_frame) v /= n;
      s.contact_l2 /= n;
    }
    report.summary.push_back(std::move(s));
  }
}

std::vector<double> shared_horizons(const AblationGrid& grid) {
  if (grid.cells.empty()) throw ConfigError("ablation grid has no cells");
  const std::vector<double>& h = grid.cells.front().config.horizons;
  for (const AblationCell& c : grid.cells)
    if (c.config.horizons != h) throw ConfigError("ablation cells must share the horizon list");
  return h;
}

// Runs `count` tasks over `jobs` threads; task exceptions are the task's own business.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& task) {
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) task(i);
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(count)));
  if (n == 1) {
    worker();
    return;
  }
  std::vector<std::thread> threads;
  for (int i = 0; i < n; ++i) threads.emplace_back(worker);
  for (std::thread& t : threads) t.join();
}

}  // namespace

AblationReport read_ablation(const AblationGrid& grid, const fs::path& out_dir) {
  AblationReport report;
  report.horizons = shared_horizons(grid);
  for (const AblationCell& cell : grid.cells)
    for (std::uint64_t seed : grid.seeds) {
      AblationRow row;
      if (!read_current_cell(out_dir, cell, seed, row)) {
        row.ok = false;
        row.error = "not run";
      }
      row.cell = cell.name;
      row.seed = seed;
      report.rows.push_back(std::move(row));
    }
  summarize(report, grid);
  return report;
}

AblationReport run_ablation(const AblationGrid& grid, const fs::path& data_root, const fs::path& out_dir,
                            const AblationOptions& options) {
  const std::vector<double> horizons = shared_horizons(grid);
  fs::create_directories(out_dir);
  std::mutex io;
  auto say = [&](const std::string& msg) {
    if (!options.progress) return;
    std::lock_guard<std::mutex> lock(io);
    *options.progress << msg << std::endl;
  };

  struct Task {
    const AblationCell* cell;
    std::uint64_t seed;
  };
  std::vector<Task> pending;
  for (const AblationCell& cell : grid.cells)
    for (std::uint64_t seed : grid.seeds) {
      AblationRow done;
      if (read_current_cell(out_dir, cell, seed, done) && done.ok) continue;
      pending.push_back({&cell, seed});
    }

  if (!pending.empty()) {
    const std::vector<Sequence> train_data = load_dataset(data_root, "train");
    const std::vector<Sequence> test_data = load_dataset(data_root, "test");
    if (train_data.empty() || test_data.empty())
      throw DataError("ablation needs non-empty train and test splits under " + data_root.string());
    const auto skeleton = train_data.front().motion.skeleton;

    // Stage-1 models shared by every pending cell with identical stage-1 settings.
    std::vector<std::pair<std::string, RunConfig>> stage1_jobs;
    for (const Task& t : pending) {
      if (!t.cell->config.training.train_stage1) continue;
      const std::string key = stage1_key(t.cell->config, t.seed);
      bool listed = false;
      for (const auto& j : stage1_jobs) listed = listed || j.first == key;
      if (!listed && !fs::exists(out_dir / "stage1" / (key + ".ckpt")))
        stage1_jobs.push_back({key, seeded(t.cell->config, t.seed)});
    }
    parallel_for(stage1_jobs.size(), options.jobs, [&](std::size_t i) {
      const auto& [key, rc] = stage1_jobs[i];
      const auto start = std::chrono::steady_clock::now();
      say("stage1 " + key + ": training");
      try {
        ModelBundle bundle(rc.forecast, skeleton, rc.training.stage_options());
        TrainingHooks hooks;
        hooks.output_dir = out_dir / "stage1" / key;
        train_phases(rc.training, train_data, bundle, {"stage1"}, hooks);
        save_checkpoint(bundle, out_dir / "stage1" / (key + ".ckpt"));
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        say("stage1 " + key + ": done in " + std::to_string(static_cast<int>(secs)) + " s");
      } catch (const std::exception& e) {
        say("stage1 " + key + ": failed: " + e.what());
      }
    });

    parallel_for(pending.size(), options.jobs, [&](std::size_t i) {
      const Task& t = pending[i];
      const RunConfig rc = seeded(t.cell->config, t.seed);
      AblationRow row;
      row.cell = t.cell->name;
      row.seed = t.seed;
      const auto start = std::chrono::steady_clock::now();
      say(row.cell + " seed " + std::to_string(t.seed) + ": training");
      try {
        ModelBundle bundle(rc.forecast, skeleton, rc.training.stage_options());
        if (rc.training.train_stage1) {
          const fs::path cache = out_dir / "stage1" / (stage1_key(rc, t.seed) + ".ckpt");
          ModelBundle trained = load_checkpoint(cache, rc.forecast);
          const nn::ParameterList dst = bundle.parameters(1), src = trained.parameters(1);
          for (std::size_t p = 0; p < dst.size(); ++p) dst[p]->value = src[p]->value;
        }
        TrainingConfig tc = rc.training;
        tc.train_stage1 = false;
        TrainingHooks hooks;
        hooks.output_dir = out_dir / "runs" / (row.cell + "__seed" + std::to_string(t.seed));
        train(tc, train_data, bundle, hooks);
        const EvalResult eval =
            evaluate(bundle, test_data, tc.contact_source, rc.eval_stride, horizons);
        row.ok = true;
        row.windows = eval.windows;
        row.path = eval.path;
        row.pose = eval.pose;
        row.contact_l2 = eval.contact_l2;
        row.per_frame = eval.per_frame;
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
      }
      write_cell(cell_file(out_dir, row.cell, row.seed), row, cell_fingerprint(*t.cell, t.seed));
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      say(row.cell + " seed " + std::to_string(t.seed) + ": " +
          (row.ok ? "done" : "failed: " + row.error) + " (" + std::to_string(static_cast<int>(secs)) +
          " s)");
    });
  }

  AblationReport report = read_ablation(grid, out_dir);
  auto write = [&](const char* name, void (*fn)(std::ostream&, const AblationReport&)) {
    std::ofstream out(out_dir / name);
    if (!out) throw DataError("cannot write " + (out_dir / name).string());
    fn(out, report);
  };
  write("results.csv", write_results_csv);
  write("summary.csv", write_summary_csv);
  write("summary.txt", write_summary_text);
  {
    std::ofstream out(out_dir / "summary_curves.csv");
    out.precision(10);
    out << "frame";
    for (const AblationSummary& s : report.summary) out << ',' << s.cell;
    out << '\n';
    std::size_t frames = 0;
    for (const AblationSummary& s : report.summary) frames = std::max(frames, s.per_frame.size());
    for (std::size_t f = 0; f < frames; ++f) {
      out << f + 1;
      for (const AblationSummary& s : report.summary)
        out << ',' << (f < s.per_frame.size() ? s.per_frame[f] : 0.0);
      out << '\n';
    }
  }
  return report;
}

namespace {

void header(std::ostream& os, const std::vector<double>& horizons, bool per_seed) {
  os << "cell," << (per_seed ? "seed,status,windows" : "seeds_ok,seeds_failed");
  for (double h : horizons) os << ",path@" << h << "s";
  for (double h : horizons) os << ",pose@" << h << "s";
  os << ",contact_l2\n";
}

}  // namespace

void write_results_csv(std::ostream& os, const AblationReport& report) {
  os.precision(10);
  header(os, report.horizons, true);
  for (const AblationRow& r : report.rows) {
    os << r.cell << ',' << r.seed << ',' << (r.ok ? "ok" : "failed") << ',' << r.windows;
    for (std::size_t h = 0; h < report.horizons.size(); ++h)
      os << ',' << (r.ok && h < r.path.size() ? r.path[h] : std::nan(""));
    for (std::size_t h = 0; h < report.horizons.size(); ++h)
      os << ',' << (r.ok && h < r.pose.size() ? r.pose[h] : std::nan(""));
    os << ',' << (r.ok ? r.contact_l2 : std::nan("")) << '\n';
  }
}

void write_summary_csv(std::ostream& os, const AblationReport& report) {
  os.precision(10);
  header(os, report.horizons, false);
  for (const AblationSummary& s : report.summary) {
    os << s.cell << ',' << s.seeds_ok << ',' << s.seeds_failed;
    for (double v : s.path) os << ',' << (s.seeds_ok ? v : std::nan(""));
    for (double v : s.pose) os << ',' << (s.seeds_ok ? v : std::nan(""));
    os << ',' << (s.seeds_ok ? s.contact_l2 : std::nan("")) << '\n';
  }
}

void write_summary_text(std::ostream& os, const AblationReport& report) {
  std::size_t width = 4;
  for (const AblationSummary& s : report.summary) width = std::max(width, s.cell.size());
  os << std::left << std::setw(static_cast<int>(width)) << "cell" << "  seeds";
  for (double h : report.horizons) {
    std::ostringstream label;
    label << "path@" << h << "s";
    os << "  " << std::setw(10) << label.str();
  }
  for (double h : report.horizons) {
    std::ostringstream label;
    label << "pose@" << h << "s";
    os << "  " << std::setw(10) << label.str();
  }
  os << "  contact_l2\n";
  os << std::fixed << std::setprecision(4);
  for (const AblationSummary& s : report.summary) {
    os << std::left << std::setw(static_cast<int>(width)) << s.cell << "  " << std::setw(5)
       << (std::to_string(s.seeds_ok) + "/" + std::to_string(s.seeds_ok + s.seeds_failed));
    for (double v : s.path) os << "  " << std::setw(10) << v;
    for (double v : s.pose) os << "  " << std::setw(10) << v;
    os << "  " << s.contact_l2 << '\n';
  }
  os << "(meters, seed-averaged over successful runs)\n";
}

}  // namespace stag
