#include "stag/training.hpp"

#include "stag/checkpoint.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <ostream>

namespace stag {

using ad::Matrix;
using ad::Tape;
using ad::Var;

TrainingMode parse_training_mode(const std::string& name) {
  if (name == "three_stage") return TrainingMode::three_stage;
  if (name == "two_stage_finetune") return TrainingMode::two_stage_finetune;
  if (name == "two_stage_e2e") return TrainingMode::two_stage_e2e;
  throw std::invalid_argument("unknown training mode '" + name + "'");
}

std::string to_string(TrainingMode mode) {
  switch (mode) {
    case TrainingMode::three_stage: return "three_stage";
    case TrainingMode::two_stage_finetune: return "two_stage_finetune";
    case TrainingMode::two_stage_e2e: return "two_stage_e2e";
  }
  return "three_stage";
}

void check_training_config(const TrainingConfig& c) {
  auto bad = [](const std::string& what) { throw std::invalid_argument("training config: " + what); };
  if (c.epochs < 1) bad("epochs must be >= 1");
  if (!(c.lr_stage1 > 0) || !(c.lr_stage23 > 0)) bad("learning rates must be > 0");
  if (c.batch_size < 1) bad("batch_size must be >= 1");
  if (c.weight_stage1 < 0 || c.weight_stage2 < 0 || c.weight_stage3 < 0)
    bad("loss weights must be >= 0");
  if (c.teacher_forcing < 0 || c.teacher_forcing > 1) bad("teacher_forcing must lie in [0, 1]");
  if (!(c.grad_clip >= 0)) bad("grad_clip must be >= 0");
  if (c.train_stride < 1) bad("train_stride must be >= 1");
}

double stage1_loss(const DistanceTensor& pred, const DistanceTensor& gt) {
  if (pred.values.rows() != gt.values.rows() || pred.values.cols() != gt.values.cols() ||
      pred.joints != gt.joints)
    throw ShapeError("stage1_loss: tensors differ in shape");
  if (pred.values.size() == 0) throw ShapeError("stage1_loss: empty tensors");
  return (pred.values - gt.values).squaredNorm() / static_cast<double>(pred.values.size());
}

namespace {

double mean_group_norm(const Matrix& diff) {
  double s = 0;
  for (Index r = 0; r < diff.rows(); ++r)
    for (Index g = 0; g < diff.cols() / 3; ++g) s += diff.row(r).segment(3 * g, 3).norm();
  return s / static_cast<double>(diff.rows() * (diff.cols() / 3));
}

}  // namespace

double stage2_loss(const RootTrajectory& pred, const RootTrajectory& gt) {
  if (pred.positions.rows() != gt.positions.rows())
    throw ShapeError("stage2_loss: lengths differ");
  if (pred.length() == 0) throw ShapeError("stage2_loss: empty trajectories");
  return mean_group_norm(pred.positions - gt.positions);
}

double stage3_loss(const MotionSequence& pred, const MotionSequence& gt) {
  if (pred.frames.rows() != gt.frames.rows() || pred.frames.cols() != gt.frames.cols())
    throw ShapeError("stage3_loss: sequences differ in shape");
  if (pred.frames.size() == 0) throw ShapeError("stage3_loss: empty sequences");
  return mean_group_norm(pred.frames - gt.frames);
}

// ---------------------------------------------------------------- windows

std::vector<TrainingWindow> make_windows(const std::vector<Sequence>& sequences,
                                         const ForecastConfig& config, ContactSubset subset,
                                         int stride) {
  std::vector<TrainingWindow> out;
  for (const Sequence& seq : sequences) {
    if (seq.motion.joint_count() != config.joints)
      throw DataError("sequence " + seq.id + ": joint count differs from config");
    const std::vector<int> joints = subset_indices(*seq.motion.skeleton, subset);
    for (Index start : window_split(seq.motion.length(), config.t_obs, config.f_fut, stride)) {
      TrainingWindow w;
      w.sequence_id = seq.id;
      w.start = start;
      const MotionSequence observed = seq.motion.slice(start, config.t_obs);
      w.anchor = window_anchor(observed);
      const SceneCloud sampled = sample_scene_points(seq.scene, w.anchor, config.sample_radius,
                                                     config.sample_count, config.seed);
      w.scene = translate(sampled, -w.anchor);
      const MotionSequence window = translate(seq.motion.slice(start, config.t_total()), -w.anchor);
      w.observed = window.slice(0, config.t_obs);
      w.future = window.slice(config.t_obs, config.f_fut);
      w.gt_contacts = contacts_from_distances(distance_tensor(window, w.scene), w.scene,
                                              config.contact_threshold, joints);
      out.push_back(std::move(w));
    }
  }
  return out;
}

void attach_predicted_contacts(std::vector<TrainingWindow>& windows, ModelBundle& bundle) {
  const std::vector<int> joints = subset_indices(*bundle.skeleton, bundle.options.contact_subset);
  for (TrainingWindow& w : windows)
    w.predicted_contacts = bundle.stage1.forward(w.scene, w.observed, joints).contacts;
}

const ContactMap* window_contacts(const TrainingWindow& w, ContactSource source) {
  switch (source) {
    case ContactSource::none: return nullptr;
    case ContactSource::ground_truth: return &w.gt_contacts;
    case ContactSource::predicted:
      if (w.predicted_contacts.length() == 0)
        throw std::logic_error("predicted contacts requested before they were attached");
      return &w.predicted_contacts;
  }
  return nullptr;
}

// ---------------------------------------------------------------- objectives

namespace {

Matrix full_window(const TrainingWindow& w) {
  Matrix m(w.observed.length() + w.future.length(), w.observed.frames.cols());
  m << w.observed.frames, w.future.frames;
  return m;
}

Var scalar(Tape& tape, double v) { return tape.constant(Matrix::Constant(1, 1, v)); }

}  // namespace

Var stage1_objective(Tape& tape, ContactModel& model, const TrainingWindow& w) {
  const double s = model.config().norm_factor;
  const ContactModel::Input in = model.prepare(w.scene, w.observed);
  Var coeffs = model.coefficients(tape, in);
  // Mean squared distance error of the decoded tensor, evaluated in
  // coefficient space: the basis rows are orthonormal, so
  // |B^T c - D|^2 = |c - B D|^2 + |D|^2 - |B D|^2.
  const DistanceTensor gt = distance_tensor(Matrix(full_window(w) * s), in.points);
  const Matrix target = dct_encode(gt.values, model.basis());
  const double entries = static_cast<double>(gt.values.size());
  const double residual = gt.values.squaredNorm() - target.squaredNorm();
  Var fit = ad::scale(ad::mean_squared_error(coeffs, tape.constant(target)),
                      static_cast<double>(target.size()) / entries);
  return ad::add(fit, scalar(tape, std::max(residual, 0.0) / entries));
}

Var stage2_objective(Tape& tape, TrajectoryModel& model, const TrainingWindow& w,
                     const ContactMap* contacts) {
  const double s = model.config().norm_factor;
  Matrix c;
  if (contacts) c = scale_contacts(contacts->entries, s);
  Var pred = model.future(tape, root_of(w.observed).positions * s, contacts ? &c : nullptr);
  return ad::mean_euclidean_error(pred, tape.constant(root_of(w.future).positions * s));
}

Var stage3_objective(Tape& tape, PoseModel& model, const TrainingWindow& w,
                     const ContactMap* contacts, Var future_root, const StageOptions& options) {
  const double s = model.config().norm_factor;
  Matrix c;
  if (contacts) c = scale_contacts(contacts->entries, s);
  Var pred = model.decode(tape, w.observed.frames * s, contacts ? &c : nullptr, future_root, options);
  return ad::mean_euclidean_error(pred, tape.constant(w.future.frames * s));
}

Var joint_objective(Tape& tape, ModelBundle& bundle, const TrainingWindow& w,
                    const ContactMap* contacts, double weight2, double weight3) {
  const double s = bundle.config.norm_factor;
  Matrix c;
  if (contacts) c = scale_contacts(contacts->entries, s);
  const Matrix* cp = contacts ? &c : nullptr;
  Var root = bundle.stage2.future(tape, root_of(w.observed).positions * s, cp);
  Var root_loss = ad::mean_euclidean_error(root, tape.constant(root_of(w.future).positions * s));
  Var pose = bundle.stage3.decode(tape, w.observed.frames * s, cp, root, bundle.options);
  Var pose_loss = ad::mean_euclidean_error(pose, tape.constant(w.future.frames * s));
  return ad::add(ad::scale(root_loss, weight2), ad::scale(pose_loss, weight3));
}

// ---------------------------------------------------------------- optimizer

double clip_grad_norm(const nn::ParameterList& params, double max_norm) {
  double sq = 0;
  for (const ad::Parameter* p : params) sq += p->grad.squaredNorm();
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) throw NumericalError("non-finite gradient norm");
  if (max_norm > 0 && norm > max_norm)
    for (ad::Parameter* p : params) p->grad *= max_norm / norm;
  return norm;
}

Adam::Adam(nn::ParameterList params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const ad::Parameter* p : params_) {
    m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    ad::Parameter& p = *params_[i];
    m_[i] = beta1_ * m_[i] + (1 - beta1_) * p.grad;
    v_[i] = beta2_ * v_[i] + (1 - beta2_) * p.grad.cwiseAbs2();
    p.value.array() -= lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
    p.zero_grad();
  }
}

// ---------------------------------------------------------------- training

std::vector<std::string> phase_plan(const TrainingConfig& config) {
  std::vector<std::string> phases;
  if (config.train_stage1) phases.push_back("stage1");
  switch (config.mode) {
    case TrainingMode::three_stage:
      phases.push_back("stage2");
      phases.push_back("stage3");
      break;
    case TrainingMode::two_stage_finetune:
      phases.push_back("stage2");
      phases.push_back("joint23");
      break;
    case TrainingMode::two_stage_e2e:
      phases.push_back("joint23");
      break;
  }
  return phases;
}

void write_loss_log(std::ostream& os, const std::vector<LossRecord>& log) {
  const auto flags = os.flags();
  const auto precision = os.precision(17);
  for (const LossRecord& r : log) os << r.epoch << ',' << r.phase << ',' << r.loss << '\n';
  os.precision(precision);
  os.flags(flags);
}

namespace {

using Objective = std::function<Var(Tape&, std::size_t window, int epoch)>;

struct PhaseContext {
  const TrainingConfig& config;
  std::size_t windows;
  std::vector<LossRecord>& log;
  std::ofstream* log_file;
  std::ostream* progress;
};

void run_phase(PhaseContext& ctx, const std::string& name, int phase_index,
               const nn::ParameterList& params, double lr, double log_scale,
               const Objective& objective) {
  nn::zero_grads(params);
  Adam opt(params, lr);
  std::vector<std::size_t> order(ctx.windows);
  for (int epoch = 1; epoch <= ctx.config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    nn::Rng rng(ctx.config.seed * 1000003ULL + std::uint64_t(phase_index) * 10007ULL + epoch);
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0;
    int in_batch = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      Tape tape;
      Var loss = objective(tape, order[k], epoch);
      const double value = loss.value()(0, 0);
      if (!std::isfinite(value))
        throw NumericalError("non-finite loss in phase " + name + " at epoch " +
                             std::to_string(epoch));
      tape.backward(loss);
      total += value;
      if (++in_batch == ctx.config.batch_size || k + 1 == order.size()) {
        for (ad::Parameter* p : params) p->grad /= in_batch;
        clip_grad_norm(params, ctx.config.grad_clip);
        opt.step();
        in_batch = 0;
      }
    }
    LossRecord record{epoch, name, total / static_cast<double>(order.size()) * log_scale};
    ctx.log.push_back(record);
    if (ctx.log_file) {
      write_loss_log(*ctx.log_file, {record});
      ctx.log_file->flush();
    }
    if (ctx.progress)
      *ctx.progress << name << " epoch " << epoch << "/" << ctx.config.epochs << " loss "
                    << record.loss << std::endl;
  }
}

}  // namespace

TrainingResult train(const TrainingConfig& config, const std::vector<Sequence>& data,
                     ModelBundle& bundle, const TrainingHooks& hooks) {
  return train_phases(config, data, bundle, phase_plan(config), hooks);
}

TrainingResult train_phases(const TrainingConfig& config, const std::vector<Sequence>& data,
                            ModelBundle& bundle, const std::vector<std::string>& phases,
                            const TrainingHooks& hooks) {
  check_training_config(config);
  for (const std::string& p : phases)
    if (p != "stage1" && p != "stage2" && p != "stage3" && p != "joint23")
      throw std::invalid_argument("unknown training phase '" + p + "'");
  if (data.empty()) throw DataError("training dataset is empty");
  bundle.options = config.stage_options();
  std::vector<TrainingWindow> windows =
      make_windows(data, bundle.config, config.contact_subset, config.train_stride);
  if (windows.empty())
    throw DataError("training dataset yields no window of T_obs + F_fut frames");

  TrainingResult result;
  result.phases = phases;
  std::ofstream log_file;
  if (!hooks.output_dir.empty()) {
    std::filesystem::create_directories(hooks.output_dir);
    log_file.open(hooks.output_dir / "loss.log", std::ios::trunc);
    if (!log_file) throw DataError("cannot write " + (hooks.output_dir / "loss.log").string());
  }
  PhaseContext ctx{config, windows.size(), result.log, log_file.is_open() ? &log_file : nullptr,
                   hooks.progress};

  const double s = bundle.config.norm_factor;
  const ContactSource source = config.contact_source;
  bool contacts_ready = source != ContactSource::predicted;
  auto ensure_contacts = [&] {
    if (!contacts_ready) attach_predicted_contacts(windows, bundle);
    contacts_ready = true;
  };

  for (std::size_t phase_index = 0; phase_index < result.phases.size(); ++phase_index) {
    const std::string& phase = result.phases[phase_index];
    const int pi = static_cast<int>(phase_index);
    if (phase == "stage1") {
      const double w1 = config.weight_stage1;
      run_phase(ctx, phase, pi, bundle.parameters(1), config.lr_stage1, 1.0 / (s * s),
                [&](Tape& tape, std::size_t i, int) {
                  return ad::scale(stage1_objective(tape, bundle.stage1, windows[i]), w1);
                });
      contacts_ready = source != ContactSource::predicted;
    } else if (phase == "stage2") {
      ensure_contacts();
      const double w2 = config.weight_stage2;
      run_phase(ctx, phase, pi, bundle.parameters(2), config.lr_stage23, 1.0 / s,
                [&](Tape& tape, std::size_t i, int) {
                  return ad::scale(stage2_objective(tape, bundle.stage2, windows[i],
                                                    window_contacts(windows[i], source)),
                                   w2);
                });
    } else if (phase == "stage3") {
      ensure_contacts();
      // Stage 2 is frozen here, so its forecasts are computed once.
      std::vector<Matrix> predicted_root(windows.size());
      for (std::size_t i = 0; i < windows.size(); ++i) {
        Tape tape(false);
        Matrix c;
        const ContactMap* cm = window_contacts(windows[i], source);
        if (cm) c = scale_contacts(cm->entries, s);
        predicted_root[i] =
            bundle.stage2.future(tape, root_of(windows[i].observed).positions * s, cm ? &c : nullptr)
                .value();
      }
      const int forced_epochs =
          static_cast<int>(std::ceil(config.teacher_forcing * config.epochs - 1e-9));
      const double w3 = config.weight_stage3;
      run_phase(ctx, phase, pi, bundle.parameters(3), config.lr_stage23, 1.0 / s,
                [&](Tape& tape, std::size_t i, int epoch) {
                  const TrainingWindow& w = windows[i];
                  Matrix root = epoch <= forced_epochs ? Matrix(root_of(w.future).positions * s)
                                                       : predicted_root[i];
                  return ad::scale(stage3_objective(tape, bundle.stage3, w, window_contacts(w, source),
                                                    tape.constant(std::move(root)), bundle.options),
                                   w3);
                });
    } else {
      ensure_contacts();
      nn::ParameterList params = bundle.parameters(2);
      const nn::ParameterList p3 = bundle.parameters(3);
      params.insert(params.end(), p3.begin(), p3.end());
      run_phase(ctx, phase, pi, params, config.lr_stage23, 1.0 / s,
                [&](Tape& tape, std::size_t i, int) {
                  return joint_objective(tape, bundle, windows[i], window_contacts(windows[i], source),
                                         config.weight_stage2, config.weight_stage3);
                });
    }
    if (!hooks.output_dir.empty()) save_checkpoint(bundle, hooks.output_dir / (phase + ".ckpt"));
  }
  if (!hooks.output_dir.empty()) save_checkpoint(bundle, hooks.output_dir / "model.ckpt");
  return result;
}

// ---------------------------------------------------------------- evaluation

EvalResult evaluate(ModelBundle& bundle, const std::vector<Sequence>& sequences,
                    ContactSource source, int stride, const std::vector<double>& horizons) {
  const ForecastConfig& cfg = bundle.config;
  const std::vector<TrainingWindow> windows =
      make_windows(sequences, cfg, bundle.options.contact_subset, stride);
  if (windows.empty()) throw DataError("evaluation set yields no window of T_obs + F_fut frames");
  const std::vector<int> joints = subset_indices(*bundle.skeleton, bundle.options.contact_subset);

  EvalResult r;
  r.horizons = horizons;
  r.path.assign(horizons.size(), 0.0);
  r.pose.assign(horizons.size(), 0.0);
  r.per_frame.assign(cfg.f_fut, 0.0);
  for (const TrainingWindow& w : windows) {
    const ContactMap gt_world = translate(w.gt_contacts, w.anchor);
    const MotionSequence future_world = translate(w.future, w.anchor);
    const PipelineResult out = full_pipeline(translate(w.scene, w.anchor), translate(w.observed, w.anchor),
                                             bundle, source, &gt_world, true);
    const std::vector<double> path = path_error(out.future_motion, future_world, horizons, cfg.fps);
    const std::vector<double> pose = pose_error(out.future_motion, future_world, horizons, cfg.fps);
    const std::vector<double> curve = per_frame_mae(out.future_motion, future_world);
    for (std::size_t h = 0; h < horizons.size(); ++h) {
      r.path[h] += path[h];
      r.pose[h] += pose[h];
    }
    for (int f = 0; f < cfg.f_fut; ++f) r.per_frame[f] += curve[f];
    r.contact_l2 += source == ContactSource::predicted
                        ? contact_l2_error(out.contacts, gt_world)
                        : contact_l2_error(bundle.stage1.forward(w.scene, w.observed, joints).contacts,
                                           w.gt_contacts);
  }
  const double n = static_cast<double>(windows.size());
  for (double& v : r.path) v /= n;
  for (double& v : r.pose) v /= n;
  for (double& v : r.per_frame) v /= n;
  r.contact_l2 /= n;
  r.windows = static_cast<Index>(windows.size());
  return r;
}

}  // namespace stag
