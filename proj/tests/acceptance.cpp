// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "support.hpp"

#include "stag/ablation.hpp"
#include "stag/config.hpp"
#include "stag/metrics.hpp"
#include "stag/training.hpp"

#include <CLI11.hpp>

#include <sys/wait.h>

#include <chrono>
#include <cstring>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

using namespace stag;
using namespace stag::testing;
using ad::Matrix;
using ad::Tape;
using ad::Var;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

// Small model and data for the gradient and training-contract checks.
ForecastConfig small_config() {
  ForecastConfig c;
  c.t_obs = 6;
  c.f_fut = 6;
  c.k_dct = 4;
  c.hidden_dim = 6;
  c.sample_count = 40;
  c.voxel_resolution = 2;
  c.seed = 3;
  return c;
}

std::vector<Sequence> small_dataset(int count) {
  SyntheticSpec spec;
  spec.extent = 6.0;
  spec.obstacles_min = spec.obstacles_max = 1;
  spec.floor_spacing = 0.4;
  spec.sequence_length = 36;
  std::vector<Sequence> out;
  for (int i = 0; i < count; ++i) out.push_back(generate_sequence(spec, 100 + i).sequence);
  return out;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

// 1. Transform suite.
Verdict transforms() {
  Verdict v;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> len(1, 120), width(1, 6);
  double worst_trip = 0, worst_parseval = 0, worst_dc = 0;
  int monotone_violations = 0;
  for (int c = 0; c < 200; ++c) {
    const int t = len(rng), d = width(rng);
    const DctBasis full(t, t);
    const Matrix x = random_matrix(t, d, rng, -3, 3);
    const Matrix coeffs = dct_encode(x, full);
    worst_trip = std::max(worst_trip, (dct_decode(coeffs, full) - x).cwiseAbs().maxCoeff());
    worst_parseval = std::max(worst_parseval, std::abs(coeffs.norm() - x.norm()));

    const Matrix constant = Matrix::Constant(t, d, x(0, 0));
    const Matrix dc = dct_encode(constant, full);
    for (int j = 0; j < d; ++j)
      worst_dc = std::max(worst_dc, std::abs(dc(0, j) - std::sqrt(double(t)) * x(0, 0)));
    if (t > 1) worst_dc = std::max(worst_dc, dc.bottomRows(t - 1).cwiseAbs().maxCoeff());

    double previous = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= t; ++k) {
      const DctBasis b(t, k);
      const double err = (dct_decode(dct_encode(x, b), b) - x).norm();
      if (err > previous + 1e-12) ++monotone_violations;
      previous = err;
    }
  }
  const double secs = seconds_since(t0);
  v.require(worst_trip < 1e-9, "round trip " + fmt(worst_trip));
  v.require(worst_parseval < 1e-9, "Parseval " + fmt(worst_parseval));
  v.require(worst_dc < 1e-9, "DC-only " + fmt(worst_dc));
  v.require(monotone_violations == 0, std::to_string(monotone_violations) + " monotonicity violations");
  v.require(secs < 10, "runtime " + fmt(secs) + " s");
  if (v.pass)
    v.detail = "200 cases, round trip " + fmt(worst_trip) + ", Parseval " + fmt(worst_parseval) +
               ", " + fmt(secs) + " s";
  return v;
}

// 2. Geometry oracle equality.
double brute_distance(const Matrix& f, const Matrix& p, Index t, int j, Index n) {
  const double dx = f(t, 3 * j) - p(n, 0), dy = f(t, 3 * j + 1) - p(n, 1), dz = f(t, 3 * j + 2) - p(n, 2);
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

Verdict geometry() {
  Verdict v;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<int> frames(1, 5), joints(1, 5), points(1, 50);
  int distance_mismatch = 0, contact_mismatch = 0;
  for (int c = 0; c < 100; ++c) {
    const int t = frames(rng), nj = joints(rng), n = points(rng);
    const Matrix f = random_matrix(t, 3 * nj, rng, -1, 1), p = random_matrix(n, 3, rng, -1, 1);
    const SceneCloud scene{p};
    std::vector<int> subset;
    for (int j = 0; j < nj; ++j)
      if (rng() % 3) subset.push_back(j);
    const DistanceTensor d = distance_tensor(f, p);
    const ContactMap got = contacts_from_distances(d, scene, 0.32, subset);
    for (Index a = 0; a < t; ++a)
      for (int j = 0; j < nj; ++j) {
        Index arg = 0;
        for (Index k = 0; k < n; ++k) {
          if (d.at(a, j, k) != brute_distance(f, p, a, j, k)) ++distance_mismatch;
          if (brute_distance(f, p, a, j, k) < brute_distance(f, p, a, j, arg)) arg = k;
        }
        const bool in = std::find(subset.begin(), subset.end(), j) != subset.end();
        const double flag = in && brute_distance(f, p, a, j, arg) < 0.32 ? 1.0 : 0.0;
        if (got.point(a, j) != p.row(arg).transpose() || got.flag(a, j) != flag) ++contact_mismatch;
      }
  }
  // Threshold boundary, strict inequality.
  Matrix joint = Matrix::Zero(1, 3);
  auto flag_at = [&](double dist) {
    SceneCloud s;
    s.points = Matrix(1, 3);
    s.points << 0, dist, 0;
    return contacts_from_distances(distance_tensor(joint, s.points), s, 0.32, {0}).flag(0, 0);
  };
  DistanceTensor exact;
  exact.joints = 1;
  exact.values = Matrix::Constant(1, 1, 0.32);
  const double at = contacts_from_distances(exact, SceneCloud{Matrix::Zero(1, 3)}, 0.32, {0}).flag(0, 0);
  const double secs = seconds_since(t0);
  v.require(distance_mismatch == 0, std::to_string(distance_mismatch) + " distance mismatches");
  v.require(contact_mismatch == 0, std::to_string(contact_mismatch) + " contact mismatches");
  v.require(flag_at(0.319) == 1.0, "0.319 not flagged");
  v.require(flag_at(0.321) == 0.0, "0.321 flagged");
  v.require(at == 0.0, "distance equal to the threshold flagged");
  v.require(secs < 10, "runtime " + fmt(secs) + " s");
  if (v.pass) v.detail = "100 instances exact, 0.319 -> 1, 0.321 -> 0, " + fmt(secs) + " s";
  return v;
}

// 3. Gradient checks of every learnable block.
Verdict gradients() {
  Verdict v;
  const auto t0 = Clock::now();
  double worst = 0;
  std::string worst_name;
  int blocks = 0;
  auto record = [&](const std::string& block, const GradCheck& g) {
    ++blocks;
    if (g.checked == 0) v.require(false, block + " has no gradient");
    if (g.worst > worst) {
      worst = g.worst;
      worst_name = block + ":" + g.worst_name;
    }
  };
  const auto skel = chain_skeleton(3);
  std::mt19937_64 data(303);

  for (bool spatial_first : {false, true}) {
    nn::Rng rng(1);
    nn::GraphEncoder enc("graph", 4, 3, 2, 5, nn::skeleton_adjacency(*skel), spatial_first, rng);
    ad::Parameter x{"x", random_matrix(12, 2, data)};
    nn::ParameterList params;
    enc.collect(params);
    params.push_back(&x);
    record("graph encoder", gradient_check(params, [&](Tape& t) { return probe_loss(t, enc(t, t.parameter(x))); }));
  }
  {
    nn::Rng rng(2);
    nn::GcnMlp mlp("gcn_mlp", 4, 3, 5, 6, rng);
    ad::Parameter x{"x", random_matrix(12, 5, data)};
    nn::ParameterList params;
    mlp.collect(params);
    params.push_back(&x);
    record("gcn-mlp", gradient_check(params, [&](Tape& t) { return probe_loss(t, mlp(t, t.parameter(x))); }));
  }
  for (int resolution : {1, 3}) {
    nn::Rng rng(3);
    nn::PointVoxelEncoder enc("point_voxel", 2, 3, 4, 5, resolution, rng);
    const Matrix pts = random_matrix(20, 3, data);
    ad::Parameter feat{"features", random_matrix(20, 2, data)}, latent{"latent", random_matrix(1, 3, data)};
    nn::ParameterList params;
    enc.collect(params);
    params.push_back(&feat);
    params.push_back(&latent);
    record("point-voxel", gradient_check(params, [&](Tape& t) {
             return probe_loss(t, enc(t, pts, t.parameter(feat), t.parameter(latent)));
           }));
  }
  {
    // Batched single-frame encoding as used for contact frames.
    nn::Rng rng(5);
    nn::SequenceEncoder enc("contact_frame", 1, 3, 4, 5, nn::skeleton_adjacency(*skel), false, rng);
    ad::Parameter x{"x", random_matrix(4 * 3, 4, data)};
    nn::ParameterList params;
    enc.collect(params);
    params.push_back(&x);
    record("frame encoder", gradient_check(params, [&](Tape& t) {
             return probe_loss(t, enc.encode_frames(t, t.parameter(x), 4));
           }));
  }
  {
    nn::Rng rng(4);
    nn::TimeToGoTable table("ttg", 4, 3, rng);
    nn::ParameterList params;
    table.collect(params);
    record("time-to-go", gradient_check(params, [&](Tape& t) {
             return probe_loss(t, table.embed_rows(t, {4, 3, 2, 1, 1}));
           }));
  }
  {
    // Stage MLPs through the stage objectives on a small synthetic window.
    const ForecastConfig c = small_config();
    const auto windows = make_windows(small_dataset(1), c, ContactSubset::all, 12);
    const TrainingWindow& w = windows.at(0);
    ModelBundle b(c, w.observed.skeleton, {});
    nn::Linear& out = b.stage1.scene_encoder().output();
    out.weight().value = random_matrix(out.in_dim(), out.out_dim(), data, -0.3, 0.3);
    record("stage 1", gradient_check(b.parameters(1), [&](Tape& t) { return stage1_objective(t, b.stage1, w); }));
    record("stage 2", gradient_check(b.parameters(2), [&](Tape& t) {
             return stage2_objective(t, b.stage2, w, &w.gt_contacts);
           }));
    const Matrix root = root_of(w.future).positions * c.norm_factor;
    record("stage 3", gradient_check(b.parameters(3), [&](Tape& t) {
             return stage3_objective(t, b.stage3, w, &w.gt_contacts, t.constant(root), b.options);
           }));
    nn::ParameterList p23 = b.parameters(2);
    for (ad::Parameter* p : b.parameters(3)) p23.push_back(p);
    record("joint 2+3", gradient_check(p23, [&](Tape& t) {
             return joint_objective(t, b, w, &w.gt_contacts, 1.0, 1.0);
           }));
  }
  const double secs = seconds_since(t0);
  v.require(worst < 1e-4, "worst relative error " + fmt(worst) + " at " + worst_name);
  v.require(secs < 60, "runtime " + fmt(secs) + " s");
  if (v.pass)
    v.detail = std::to_string(blocks) + " blocks, worst relative error " + fmt(worst) + " (" + worst_name +
               "), " + fmt(secs) + " s";
  return v;
}

// 4. Residual identity at initialization.
Verdict residual_identity() {
  Verdict v;
  SyntheticSpec spec;
  spec.sequence_length = 90;
  const SyntheticSequence syn = generate_sequence(spec, 0);
  const ForecastConfig defaults;
  const auto windows = make_windows({syn.sequence}, defaults, ContactSubset::all, 30);
  const TrainingWindow& w = windows.at(0);
  const MotionSequence padded{pad_replicate(w.observed.frames, defaults.f_fut), w.observed.skeleton};
  const Matrix target = distance_tensor(padded, w.scene).values;
  const auto subset = subset_indices(*w.observed.skeleton, ContactSubset::all);

  // Full-rank basis: the zero residual reproduces the padded tensor itself.
  ForecastConfig full = defaults;
  full.k_dct = full.t_total();
  ModelBundle b(full, w.observed.skeleton, {});
  const double err = (b.stage1.forward(w.scene, w.observed, subset).distances.values - target).cwiseAbs().maxCoeff();
  // Default K: the zero residual is the K-term projection of the same tensor.
  ModelBundle d(defaults, w.observed.skeleton, {});
  const DctBasis basis(defaults.t_total(), defaults.k_dct);
  const Matrix projected = dct_decode(dct_encode(target, basis), basis).cwiseMax(0.0);
  const double err_k = (d.stage1.forward(w.scene, w.observed, subset).distances.values - projected).cwiseAbs().maxCoeff();
  v.require(err < 1e-6, "K = T deviation " + fmt(err));
  v.require(err_k < 1e-6, "K = 20 projection deviation " + fmt(err_k));
  if (v.pass)
    v.detail = "K = T: max deviation " + fmt(err) + " m; K = 20: equals the truncated projection within " + fmt(err_k);
  return v;
}

// 5. Single-sequence overfit of each stage alone.
Verdict overfit() {
  Verdict v;
  const auto t0 = Clock::now();
  SyntheticSpec spec;
  spec.sequence_length = 90;
  const SyntheticSequence syn = generate_sequence(spec, 0);
  const ForecastConfig config;
  const auto windows = make_windows({syn.sequence}, config, ContactSubset::all, 30);
  const TrainingWindow& w = windows.at(0);
  ModelBundle b(config, w.observed.skeleton, {});
  const auto subset = subset_indices(*b.skeleton, ContactSubset::all);
  const RootTrajectory future_root = root_of(w.future);
  const Matrix future_root_norm = future_root.positions * config.norm_factor;

  auto run = [&](int stage, double lr, const std::function<Var(Tape&)>& objective,
                 const std::function<double()>& metric, const std::string& label) {
    const nn::ParameterList params = b.parameters(stage);
    Adam opt(params, lr);
    double m = metric();
    int steps = 0;
    for (int step = 1; step <= 2000; ++step) {
      Tape tape;
      tape.backward(objective(tape));
      clip_grad_norm(params, 1.0);
      opt.step();
      steps = step;
      if (step % 25 == 0) {
        m = metric();
        if (m < 0.05) break;
      }
    }
    v.require(m < 0.05, label + " " + fmt(m) + " m after " + std::to_string(steps) + " steps");
    return label + " " + fmt(m) + " m @" + std::to_string(steps);
  };

  const std::string s1 = run(1, 2e-3, [&](Tape& t) { return stage1_objective(t, b.stage1, w); },
                             [&] { return contact_l2_error(b.stage1.forward(w.scene, w.observed, subset).contacts, w.gt_contacts); },
                             "contact L2");
  const std::string s2 = run(2, 1e-3, [&](Tape& t) { return stage2_objective(t, b.stage2, w, &w.gt_contacts); },
                             [&] { return stage2_loss(b.stage2.forward(root_of(w.observed), &w.gt_contacts), future_root); },
                             "root error");
  const std::string s3 = run(3, 1e-3,
                             [&](Tape& t) {
                               return stage3_objective(t, b.stage3, w, &w.gt_contacts, t.constant(future_root_norm), b.options);
                             },
                             [&] { return stage3_loss(b.stage3.forward(w.observed, &w.gt_contacts, future_root, b.options), w.future); },
                             "per-joint error");
  const double secs = seconds_since(t0);
  v.require(secs < 300, "runtime " + fmt(secs) + " s");
  if (v.pass) v.detail = s1 + ", " + s2 + ", " + s3 + ", " + fmt(secs) + " s";
  return v;
}

// 6. Metric algebra.
Verdict metric_algebra() {
  Verdict v;
  std::mt19937_64 rng(606);
  auto skel = std::make_shared<Skeleton>(Skeleton::standard21());
  const MotionSequence gt{random_matrix(60, 63, rng, -2, 2), skel};
  MotionSequence shifted = gt;
  for (int j = 0; j < 21; ++j) shifted.frames.col(3 * j).array() += 1.0;
  double path_dev = 0, pose_dev = 0;
  for (double e : path_error(shifted, gt, kDefaultHorizons, 30.0)) path_dev = std::max(path_dev, std::abs(e - 1.0));
  for (double e : pose_error(shifted, gt, kDefaultHorizons, 30.0)) pose_dev = std::max(pose_dev, std::abs(e));

  double oracle_dev = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const MotionSequence a{random_matrix(60, 63, rng, -2, 2), skel}, b{random_matrix(60, 63, rng, -2, 2), skel};
    const int r = skel->root_index;
    auto norm3 = [](double x, double y, double z) { return std::sqrt(x * x + y * y + z * z); };
    std::vector<double> root_err(60), pose_err(60), mae(60);
    for (int t = 0; t < 60; ++t) {
      root_err[t] = norm3(a.frames(t, 3 * r) - b.frames(t, 3 * r), a.frames(t, 3 * r + 1) - b.frames(t, 3 * r + 1),
                          a.frames(t, 3 * r + 2) - b.frames(t, 3 * r + 2));
      double ps = 0, ms = 0;
      for (int j = 0; j < 21; ++j) {
        double d[3], g[3];
        for (int k = 0; k < 3; ++k) {
          d[k] = (a.frames(t, 3 * j + k) - a.frames(t, 3 * r + k)) - (b.frames(t, 3 * j + k) - b.frames(t, 3 * r + k));
          g[k] = a.frames(t, 3 * j + k) - b.frames(t, 3 * j + k);
        }
        ps += norm3(d[0], d[1], d[2]);
        ms += norm3(g[0], g[1], g[2]);
      }
      pose_err[t] = ps / 21;
      mae[t] = ms / 21;
    }
    const auto path = path_error(a, b, kDefaultHorizons, 30.0), pose = pose_error(a, b, kDefaultHorizons, 30.0);
    for (std::size_t h = 0; h < kDefaultHorizons.size(); ++h) {
      const int n = static_cast<int>(std::lround(kDefaultHorizons[h] * 30));
      double sp = 0, sq = 0;
      for (int t = 0; t < n; ++t) {
        sp += root_err[t];
        sq += pose_err[t];
      }
      oracle_dev = std::max({oracle_dev, std::abs(path[h] - sp / n), std::abs(pose[h] - sq / n)});
    }
    const auto curve = per_frame_mae(a, b);
    for (int t = 0; t < 60; ++t) oracle_dev = std::max(oracle_dev, std::abs(curve[t] - mae[t]));
  }
  v.require(path_dev < 1e-12, "shifted path error off by " + fmt(path_dev));
  v.require(pose_dev < 1e-12, "shifted pose error " + fmt(pose_dev));
  v.require(oracle_dev < 1e-12, "loop oracle deviation " + fmt(oracle_dev));
  if (v.pass)
    v.detail = "shift: path |e-1| " + fmt(path_dev) + ", pose " + fmt(pose_dev) + "; oracles within " + fmt(oracle_dev);
  return v;
}

// 7. Staged-training contracts.
Verdict staged_training() {
  Verdict v;
  const ForecastConfig c = small_config();
  const std::vector<Sequence> data = small_dataset(2);
  TrainingConfig t;
  t.epochs = 3;
  t.batch_size = 2;
  t.train_stride = 12;
  t.seed = 3;

  ModelBundle b(c, data[0].motion.skeleton, {});
  train_phases(t, data, b, {"stage1"});
  std::vector<Matrix> after_stage1;
  for (const ad::Parameter* p : b.parameters(1)) after_stage1.push_back(p->value);
  const std::vector<Matrix> stage3_before = [&] {
    std::vector<Matrix> out;
    for (const ad::Parameter* p : b.parameters(3)) out.push_back(p->value);
    return out;
  }();
  train_phases(t, data, b, {"stage2", "stage3"});
  int changed = 0;
  const auto p1 = b.parameters(1);
  for (std::size_t i = 0; i < p1.size(); ++i)
    if (std::memcmp(p1[i]->value.data(), after_stage1[i].data(), sizeof(double) * after_stage1[i].size()) != 0) ++changed;
  double moved3 = 0;
  const auto p3 = b.parameters(3);
  for (std::size_t i = 0; i < p3.size(); ++i) moved3 += (p3[i]->value - stage3_before[i]).norm();
  v.require(changed == 0, std::to_string(changed) + " stage-1 tensors changed in later phases");
  v.require(moved3 > 0, "stage 3 did not train");

  // two_stage_e2e: the stage-3 loss alone reaches stage 2.
  ModelBundle e(c, data[0].motion.skeleton, {});
  const auto windows = make_windows(data, c, ContactSubset::all, 12);
  const nn::ParameterList p2 = e.parameters(2);
  nn::zero_grads(p2);
  {
    Tape tape;
    tape.backward(joint_objective(tape, e, windows.at(0), &windows.at(0).gt_contacts, 0.0, 1.0));
  }
  double grad2 = 0;
  for (const ad::Parameter* p : p2) grad2 += p->grad.squaredNorm();
  grad2 = std::sqrt(grad2);
  v.require(grad2 > 0, "stage-2 gradient from the stage-3 loss is zero");
  if (v.pass)
    v.detail = "three_stage: " + std::to_string(p1.size()) + " stage-1 tensors bit-identical; e2e stage-2 gradient norm " +
               fmt(grad2);
  return v;
}

// 8. Directional replication on the default benchmark.
int shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

double mean_path(const AblationSummary& s) {
  double sum = 0;
  for (double p : s.path) sum += p;
  return s.path.empty() ? std::numeric_limits<double>::quiet_NaN() : sum / double(s.path.size());
}

Verdict replication(const fs::path& work, const fs::path& grid_path, const std::string& cli) {
  Verdict v;
  const auto t0 = Clock::now();
  const fs::path data = work / "benchmark", out = work / "ablation";
  if (!fs::exists(data / "test")) {
    if (shell(cli + " gen-data --out " + data.string() + " > /dev/null") != 0) {
      v.require(false, "gen-data failed");
      return v;
    }
  }
  const int code = shell(cli + " ablate --quiet --grid " + grid_path.string() + " --data " + data.string() +
                         " --out " + out.string() + " > " + (work / "ablate_stdout.txt").string());
  v.require(code == 0, "ablate exited with " + std::to_string(code));
  const AblationGrid grid = load_ablation_grid(grid_path);
  const AblationReport report = read_ablation(grid, out);
  const AblationSummary *gt = report.find("gt"), *pred = report.find("predicted"), *none = report.find("none"),
                        *nottg = report.find("predicted_nottg");
  if (!gt || !pred || !none || !nottg) {
    v.require(false, "grid lacks a gt / predicted / none / predicted_nottg cell");
    return v;
  }
  for (const AblationSummary* s : {gt, pred, none, nottg})
    v.require(s->seeds_ok == static_cast<int>(grid.seeds.size()),
              s->cell + " finished " + std::to_string(s->seeds_ok) + " of " + std::to_string(grid.seeds.size()) + " seeds");
  const double g = mean_path(*gt), p = mean_path(*pred), n = mean_path(*none), q = mean_path(*nottg);
  const std::string numbers = "mean path error gt " + fmt(g) + ", predicted " + fmt(p) + ", none " + fmt(n) +
                              ", predicted without TTG " + fmt(q);
  v.require(g <= p, "gt > predicted");
  v.require(p <= n, "predicted > none");
  v.require(p <= q, "TTG on > TTG off");
  v.detail = v.pass ? numbers + " (" + fmt(seconds_since(t0)) + " s)" : v.detail + " [" + numbers + "]";
  return v;
}

// 9. Pipeline shape / causality suite.
Verdict pipeline_contracts() {
  Verdict v;
  SyntheticSpec spec;
  spec.sequence_length = 90;
  const Sequence seq = generate_sequence(spec, 9).sequence;
  const ForecastConfig config;
  const MotionSequence observed = seq.motion.slice(0, config.t_obs);
  ModelBundle a(config, seq.motion.skeleton, {}), b(config, seq.motion.skeleton, {});
  for (ModelBundle* m : {&a, &b}) {
    // Identical nonzero residual weights so stage 1 does more than project.
    std::mt19937_64 same(910);
    nn::Linear& out = m->stage1.scene_encoder().output();
    out.weight().value = random_matrix(out.in_dim(), out.out_dim(), same, -0.05, 0.05);
  }
  const PipelineResult r1 = full_pipeline(seq.scene, observed, a, ContactSource::predicted);
  const PipelineResult r2 = full_pipeline(seq.scene, observed, a, ContactSource::predicted);
  const PipelineResult r3 = full_pipeline(seq.scene, observed, b, ContactSource::predicted);
  v.require(r1.contacts.length() == config.t_total(), "contacts cover " + std::to_string(r1.contacts.length()) + " frames");
  v.require(r1.future_root.length() == config.f_fut, "root covers " + std::to_string(r1.future_root.length()) + " frames");
  v.require(r1.future_motion.length() == config.f_fut, "pose covers " + std::to_string(r1.future_motion.length()) + " frames");
  auto same_bits = [](const Matrix& x, const Matrix& y) {
    return x.rows() == y.rows() && x.cols() == y.cols() && std::memcmp(x.data(), y.data(), sizeof(double) * x.size()) == 0;
  };
  v.require(same_bits(r1.future_motion.frames, r2.future_motion.frames) && same_bits(r1.contacts.entries, r2.contacts.entries),
            "rerun differs");
  v.require(same_bits(r1.future_motion.frames, r3.future_motion.frames) &&
                same_bits(r1.future_root.positions, r3.future_root.positions),
            "same-seed bundle differs");

  std::vector<int> counter;
  a.stage3.forward(observed, &r1.contacts, r1.future_root, a.options, &counter);
  std::vector<int> expected(config.f_fut);
  for (int i = 0; i < config.f_fut; ++i) expected[i] = config.f_fut - i;
  v.require(counter == expected, "remaining counter is not F_fut..1");

  const SceneCloud ground = planar_ground_scene(observed, 5.0, 0.1);
  const ValidationReport report = validate(config, ground, observed);
  v.require(report.ok(), "planar ground fails validation: " + report.failures());
  try {
    const PipelineResult g = full_pipeline(ground, observed, a, ContactSource::predicted);
    v.require(g.future_motion.length() == config.f_fut && g.future_motion.frames.allFinite(),
              "planar-ground forecast malformed");
  } catch (const std::exception& e) {
    v.require(false, std::string("planar ground rejected: ") + e.what());
  }
  if (v.pass)
    v.detail = "contacts " + std::to_string(r1.contacts.length()) + ", root/pose " + std::to_string(config.f_fut) +
               " frames; counter " + std::to_string(config.f_fut) + "..1; bit-identical reruns; planar ground " +
               std::to_string(ground.size()) + " points accepted";
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria 1-9"};
  std::set<int> only;
  std::string work = STAG_ACCEPTANCE_DIR, grid = STAG_ACCEPTANCE_GRID, cli = STAG_CLI;
  app.add_option("--only", only, "criteria to run (default: all)")->delimiter(',')->check(CLI::Range(1, 9));
  app.add_option("--work", work, "directory for the benchmark and ablation outputs");
  app.add_option("--grid", grid, "ablation grid for criterion 8");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"transform suite", transforms},
      {"geometry oracle equality", geometry},
      {"gradient checks", gradients},
      {"residual identity", residual_identity},
      {"overfit oracles", overfit},
      {"metric algebra", metric_algebra},
      {"staged-training contracts", staged_training},
      {"directional replication", [&] { return replication(work, grid, cli); }},
      {"pipeline shape/causality", pipeline_contracts},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    failed += v.pass ? 0 : 1;
    std::cout << "criterion " << id << ": " << (v.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << " - "
              << v.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
