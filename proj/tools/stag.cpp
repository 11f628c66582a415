// Command-line driver: gen-data | train | eval | predict | ablate | plot.

#include "stag/ablation.hpp"
#include "stag/checkpoint.hpp"
#include "stag/config.hpp"
#include "stag/dataset.hpp"
#include "stag/plot.hpp"
#include "stag/training.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace stag;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

struct Sample {
  MotionSequence motion;
  SceneCloud scene;
  bool has_scene = false;
};

Sample load_sample(const fs::path& dir) {
  Sample s;
  std::ifstream skel(dir / "skeleton.txt");
  if (!skel) throw DataError("cannot open " + (dir / "skeleton.txt").string());
  auto skeleton = std::make_shared<const Skeleton>(read_skeleton(skel, (dir / "skeleton.txt").string()));
  std::ifstream motion(dir / "motion.txt");
  if (!motion) throw DataError("cannot open " + (dir / "motion.txt").string());
  s.motion.frames = read_motion(motion, 3 * skeleton->joint_count(), (dir / "motion.txt").string());
  s.motion.skeleton = skeleton;
  std::ifstream scene(dir / "scene.xyz");
  if (scene) {
    s.scene = read_scene(scene, (dir / "scene.xyz").string());
    s.has_scene = true;
  }
  return s;
}

int gen_data(const std::string& spec_path, const fs::path& out) {
  const SyntheticSpec spec = spec_path.empty() ? SyntheticSpec{} : load_synthetic_spec(spec_path);
  generate_synthetic(spec, out);
  std::cout << "wrote " << spec.train_sequences << " train and " << spec.test_sequences
            << " test sequences to " << out.string() << '\n';
  return kOk;
}

int train_cmd(const fs::path& config_path, const fs::path& data, const fs::path& out,
              const std::string& init, bool quiet) {
  const RunConfig rc = load_run_config(config_path);
  const std::vector<Sequence> train_data = load_dataset(data, "train");
  if (train_data.empty()) throw DataError("no training sequences under " + (data / "train").string());
  ModelBundle bundle = init.empty()
                           ? ModelBundle(rc.forecast, train_data.front().motion.skeleton,
                                         rc.training.stage_options())
                           : load_checkpoint(init, rc.forecast);
  TrainingHooks hooks;
  hooks.output_dir = out;
  hooks.progress = quiet ? nullptr : &std::cerr;
  fs::create_directories(out);
  {
    auto os = open_out(out / "config.txt");
    os << format_run_config(rc);
  }
  const TrainingResult result = train(rc.training, train_data, bundle, hooks);
  std::cout << "phases:";
  for (const std::string& p : result.phases) std::cout << ' ' << p;
  std::cout << "\ncheckpoint: " << (out / "model.ckpt").string() << '\n';
  return kOk;
}

int eval_cmd(const fs::path& config_path, const fs::path& ckpt, const fs::path& data,
             const std::string& split, const std::string& out, const std::string& curve) {
  const RunConfig rc = load_run_config(config_path);
  ModelBundle bundle = load_checkpoint(ckpt, rc.forecast);
  bundle.options = rc.training.stage_options();
  const std::vector<Sequence> seqs = load_dataset(data, split);
  const EvalResult r = evaluate(bundle, seqs, rc.training.contact_source, rc.eval_stride, rc.horizons);

  std::ostringstream table;
  table.precision(10);
  table << "metric,horizon_s,value\n";
  for (std::size_t h = 0; h < r.horizons.size(); ++h)
    table << "path_error," << r.horizons[h] << ',' << r.path[h] << '\n';
  for (std::size_t h = 0; h < r.horizons.size(); ++h)
    table << "pose_error," << r.horizons[h] << ',' << r.pose[h] << '\n';
  table << "contact_l2,," << r.contact_l2 << '\n' << "windows,," << r.windows << '\n';
  std::cout << table.str();
  if (!out.empty()) {
    auto os = open_out(out);
    os << table.str();
  }
  if (!curve.empty()) {
    auto os = open_out(curve);
    os.precision(10);
    os << "frame,per_frame_mae\n";
    for (std::size_t f = 0; f < r.per_frame.size(); ++f) os << f + 1 << ',' << r.per_frame[f] << '\n';
  }
  return kOk;
}

int predict_cmd(const fs::path& config_path, const fs::path& ckpt, const fs::path& sample_dir,
                long start, const fs::path& out, bool planar, double planar_extent,
                double planar_spacing) {
  const RunConfig rc = load_run_config(config_path);
  ModelBundle bundle = load_checkpoint(ckpt, rc.forecast);
  bundle.options = rc.training.stage_options();
  const ForecastConfig& cfg = bundle.config;
  Sample s = load_sample(sample_dir);
  if (start < 0 || start + cfg.t_obs > s.motion.length())
    throw DataError("sample has " + std::to_string(s.motion.length()) + " frames; cannot observe " +
                    std::to_string(cfg.t_obs) + " frames from " + std::to_string(start));
  const MotionSequence observed = s.motion.slice(start, cfg.t_obs);
  if (planar || !s.has_scene) s.scene = planar_ground_scene(observed, planar_extent, planar_spacing);

  const ContactSource source = rc.training.contact_source;
  PipelineResult r;
  if (source == ContactSource::ground_truth) {
    if (start + cfg.t_total() > s.motion.length())
      throw DataError("ground-truth contacts need T_obs + F_fut frames in the sample");
    const SceneCloud sampled = sample_scene_points(s.scene, window_anchor(observed), cfg.sample_radius,
                                                   cfg.sample_count, cfg.seed);
    const ContactMap gt = contacts_from_distances(
        distance_tensor(s.motion.slice(start, cfg.t_total()), sampled), sampled, cfg.contact_threshold,
        subset_indices(*bundle.skeleton, bundle.options.contact_subset));
    r = full_pipeline(sampled, observed, bundle, source, &gt, true);
  } else {
    r = full_pipeline(s.scene, observed, bundle, source);
  }
  fs::create_directories(out);
  {
    auto os = open_out(out / "contacts.txt");
    write_motion(os, r.contacts.entries);
  }
  {
    auto os = open_out(out / "root.txt");
    write_motion(os, r.future_root.positions);
  }
  {
    auto os = open_out(out / "motion.txt");
    write_motion(os, r.future_motion.frames);
  }
  std::cout << "contacts: " << r.contacts.length() << " frames, root: " << r.future_root.length()
            << " frames, pose: " << r.future_motion.length() << " frames -> " << out.string() << '\n';
  return kOk;
}

int ablate_cmd(const fs::path& grid_path, const fs::path& data, const fs::path& out, int jobs,
               bool quiet) {
  const AblationGrid grid = load_ablation_grid(grid_path);
  AblationOptions options;
  options.jobs = jobs;
  options.progress = quiet ? nullptr : &std::cerr;
  const AblationReport report = run_ablation(grid, data, out, options);
  write_summary_text(std::cout, report);
  int failed = 0;
  for (const AblationRow& r : report.rows) failed += r.ok ? 0 : 1;
  if (failed) std::cerr << failed << " cell runs failed; see " << (out / "results.csv").string() << '\n';
  return kOk;
}

int plot_cmd(const std::vector<std::string>& curves, const std::string& sample, long start,
             const std::string& prediction, double fps, int t_obs, const fs::path& out,
             const std::string& title) {
  auto os = open_out(out);
  if (!curves.empty()) {
    std::vector<CurveSeries> series;
    for (const std::string& path : curves) {
      std::ifstream in(path);
      if (!in) throw DataError("cannot open " + path);
      for (CurveSeries& s : read_curve_csv(in, path)) {
        if (curves.size() > 1) s.name = fs::path(path).stem().string() + ":" + s.name;
        series.push_back(std::move(s));
      }
    }
    write_curve_svg(os, title.empty() ? "per-frame mean joint error" : title, series, fps);
    return kOk;
  }
  if (sample.empty()) throw std::invalid_argument("plot needs --curves or --sample");
  Sample s = load_sample(sample);
  if (start < 0 || start + t_obs > s.motion.length()) throw DataError("observation window outside the sample");
  const RootTrajectory root = root_of(s.motion);
  RootTrajectory observed{root.positions.middleRows(start, t_obs)};
  RootTrajectory gt, pred;
  ContactMap contacts;
  BirdseyeView view;
  view.scene = s.has_scene ? &s.scene : nullptr;
  view.observed = &observed;
  view.title = title;
  if (!prediction.empty()) {
    const fs::path dir = prediction;
    std::ifstream r(dir / "root.txt"), c(dir / "contacts.txt");
    if (!r || !c) throw DataError("prediction directory lacks root.txt or contacts.txt");
    pred.positions = read_motion(r, 3, (dir / "root.txt").string());
    contacts.entries = read_motion(c, 4 * s.motion.joint_count(), (dir / "contacts.txt").string());
    view.predicted_future = &pred;
    view.contacts = &contacts;
    const Index f = pred.length();
    if (start + t_obs + f <= s.motion.length()) {
      gt.positions = root.positions.middleRows(start + t_obs, f);
      view.gt_future = &gt;
    }
  }
  write_birdseye_svg(os, view);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contact-aware global human motion forecasting"};
  app.require_subcommand(1);

  std::string spec_path, config_path, data_dir, out_path, init, checkpoint, split = "test", curve,
                                                                  sample, grid, prediction, title;
  std::vector<std::string> curves;
  long start = 0;
  int jobs = 1, t_obs = 30;
  double fps = 30.0, planar_extent = 5.0, planar_spacing = 0.1;
  bool quiet = false, planar = false;

  auto* gen = app.add_subcommand("gen-data", "write a synthetic dataset");
  gen->add_option("--spec", spec_path, "synthetic spec file (key = value)")->check(CLI::ExistingFile);
  gen->add_option("--out", out_path, "dataset root")->required();

  auto* tr = app.add_subcommand("train", "train a model");
  tr->add_option("--config", config_path, "run config file")->required()->check(CLI::ExistingFile);
  tr->add_option("--data", data_dir, "dataset root")->required();
  tr->add_option("--out", out_path, "output directory")->required();
  tr->add_option("--init", init, "initial checkpoint")->check(CLI::ExistingFile);
  tr->add_flag("--quiet", quiet, "no per-epoch progress");

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  ev->add_option("--config", config_path, "run config file")->required()->check(CLI::ExistingFile);
  ev->add_option("--checkpoint", checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  ev->add_option("--data", data_dir, "dataset root")->required();
  ev->add_option("--split", split, "dataset split");
  ev->add_option("--out", out_path, "metrics CSV");
  ev->add_option("--curve", curve, "per-frame error CSV");

  auto* pr = app.add_subcommand("predict", "forecast one window of a sample");
  pr->add_option("--config", config_path, "run config file")->required()->check(CLI::ExistingFile);
  pr->add_option("--checkpoint", checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  pr->add_option("--sample", sample, "sequence directory")->required()->check(CLI::ExistingDirectory);
  pr->add_option("--start", start, "first observed frame");
  pr->add_option("--out", out_path, "output directory")->required();
  pr->add_flag("--planar-ground", planar, "replace the scene by a ground plane under the observation");
  pr->add_option("--planar-extent", planar_extent, "ground plane side (m)");
  pr->add_option("--planar-spacing", planar_spacing, "ground plane grid spacing (m)");

  auto* ab = app.add_subcommand("ablate", "run an ablation grid");
  ab->add_option("--grid", grid, "grid file")->required()->check(CLI::ExistingFile);
  ab->add_option("--data", data_dir, "dataset root")->required();
  ab->add_option("--out", out_path, "output directory")->required();
  ab->add_option("--jobs", jobs, "parallel cell runs")->check(CLI::PositiveNumber);
  ab->add_flag("--quiet", quiet, "no progress messages");

  auto* pl = app.add_subcommand("plot", "render SVG figures");
  pl->add_option("--curves", curves, "per-frame curve CSV (repeatable)");
  pl->add_option("--sample", sample, "sequence directory for a top-down view");
  pl->add_option("--start", start, "first observed frame");
  pl->add_option("--prediction", prediction, "predict output directory");
  pl->add_option("--fps", fps, "frames per second");
  pl->add_option("--t-obs", t_obs, "observed frame count");
  pl->add_option("--title", title, "figure title");
  pl->add_option("--out", out_path, "SVG file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return gen_data(spec_path, out_path);
    if (*tr) return train_cmd(config_path, data_dir, out_path, init, quiet);
    if (*ev) return eval_cmd(config_path, checkpoint, data_dir, split, out_path, curve);
    if (*pr)
      return predict_cmd(config_path, checkpoint, sample, start, out_path, planar, planar_extent,
                         planar_spacing);
    if (*ab) return ablate_cmd(grid, data_dir, out_path, jobs, quiet);
    if (*pl) return plot_cmd(curves, sample, start, prediction, fps, t_obs, out_path, title);
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
