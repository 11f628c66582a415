#pragma once

#include "stag/dataset.hpp"
#include "stag/metrics.hpp"
#include "stag/stages.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace stag {

/// three_stage: stage 1, then stage 2, then stage 3, each frozen after its
/// phase. two_stage_finetune: stage 2 pre-trained, then tuned jointly with
/// stage 3. two_stage_e2e: stages 2 and 3 trained jointly from scratch.
enum class TrainingMode { three_stage, two_stage_finetune, two_stage_e2e };

TrainingMode parse_training_mode(const std::string& name);
std::string to_string(TrainingMode mode);

struct TrainingConfig {
  TrainingMode mode = TrainingMode::three_stage;
  int epochs = 50;
  double lr_stage1 = 5e-4;
  double lr_stage23 = 1e-3;
  int batch_size = 8;
  bool use_end_goal = true;
  bool use_ttg = true;
  ContactSubset contact_subset = ContactSubset::all;
  ContactSource contact_source = ContactSource::predicted;
  std::uint64_t seed = 0;
  double weight_stage1 = 1.0;
  double weight_stage2 = 1.0;
  double weight_stage3 = 1.0;
  // Fraction of stage-3 epochs fed the ground-truth future root.
  double teacher_forcing = 0.5;
  double grad_clip = 1.0;
  int train_stride = 30;
  bool train_stage1 = true;

  [[nodiscard]] StageOptions stage_options() const {
    return {contact_subset, use_end_goal, use_ttg};
  }
};

/// Throws std::invalid_argument naming the first bad field.
void check_training_config(const TrainingConfig& config);

// Losses on plain tensors (meters).
double stage1_loss(const DistanceTensor& pred, const DistanceTensor& gt);  // mean squared error
double stage2_loss(const RootTrajectory& pred, const RootTrajectory& gt);   // mean Euclidean error
double stage3_loss(const MotionSequence& pred, const MotionSequence& gt);   // mean per-joint error

/// One training / evaluation window moved into the model frame (last
/// observed root at the origin). Lengths stay in meters.
struct TrainingWindow {
  std::string sequence_id;
  Index start = 0;
  Eigen::Vector3d anchor = Eigen::Vector3d::Zero();
  SceneCloud scene;             // sampled around the anchor
  MotionSequence observed;      // T_obs frames
  MotionSequence future;        // F_fut frames
  ContactMap gt_contacts;       // T_obs + F_fut frames
  ContactMap predicted_contacts;  // filled by attach_predicted_contacts
};

std::vector<TrainingWindow> make_windows(const std::vector<Sequence>& sequences,
                                         const ForecastConfig& config, ContactSubset subset,
                                         int stride);

void attach_predicted_contacts(std::vector<TrainingWindow>& windows, ModelBundle& bundle);

/// Contact conditioning of a window for `source`; null for ContactSource::none.
const ContactMap* window_contacts(const TrainingWindow& w, ContactSource source);

// Differentiable per-window objectives, evaluated in normalized units and
// reported by the returned Var in those units.
ad::Var stage1_objective(ad::Tape& tape, ContactModel& model, const TrainingWindow& w);
ad::Var stage2_objective(ad::Tape& tape, TrajectoryModel& model, const TrainingWindow& w,
                         const ContactMap* contacts);
/// `future_root` is the normalized F_fut x 3 root fed to the decoder.
ad::Var stage3_objective(ad::Tape& tape, PoseModel& model, const TrainingWindow& w,
                         const ContactMap* contacts, ad::Var future_root,
                         const StageOptions& options);
/// Weighted stage-2 + stage-3 loss with the decoder consuming stage 2's output.
ad::Var joint_objective(ad::Tape& tape, ModelBundle& bundle, const TrainingWindow& w,
                        const ContactMap* contacts, double weight2, double weight3);

/// Rescales every gradient so the global norm is at most `max_norm`; returns
/// the norm before clipping.
double clip_grad_norm(const nn::ParameterList& params, double max_norm);

class Adam {
 public:
  Adam(nn::ParameterList params, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);
  /// Applies one update from the accumulated gradients, then zeroes them.
  void step();
  [[nodiscard]] const nn::ParameterList& parameters() const noexcept { return params_; }

 private:
  nn::ParameterList params_;
  std::vector<ad::Matrix> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

struct LossRecord {
  int epoch = 0;
  std::string phase;
  double loss = 0.0;
};

/// Phase names in execution order: "stage1", "stage2", "stage3", "joint23".
std::vector<std::string> phase_plan(const TrainingConfig& config);

struct TrainingHooks {
  std::filesystem::path output_dir;  // empty: no checkpoints / log files
  std::ostream* progress = nullptr;
};

struct TrainingResult {
  std::vector<LossRecord> log;
  std::vector<std::string> phases;
};

/// Trains `bundle` in place. Losses are logged in meters (m^2 for stage 1).
/// Writes `<dir>/loss.log` and `<dir>/<phase>.ckpt` after each phase plus
/// `<dir>/model.ckpt` when an output directory is given.
TrainingResult train(const TrainingConfig& config, const std::vector<Sequence>& data,
                     ModelBundle& bundle, const TrainingHooks& hooks = {});

/// Runs an explicit phase list (names as in phase_plan) instead of the
/// mode's plan; used to train a stage alone.
TrainingResult train_phases(const TrainingConfig& config, const std::vector<Sequence>& data,
                            ModelBundle& bundle, const std::vector<std::string>& phases,
                            const TrainingHooks& hooks = {});

void write_loss_log(std::ostream& os, const std::vector<LossRecord>& log);

struct EvalResult {
  std::vector<double> horizons;
  std::vector<double> path;  // meters, per horizon
  std::vector<double> pose;
  double contact_l2 = 0.0;   // stage-1 contacts vs ground truth
  std::vector<double> per_frame;  // mean per-joint error, F_fut entries
  Index windows = 0;
};

EvalResult evaluate(ModelBundle& bundle, const std::vector<Sequence>& sequences,
                    ContactSource source, int stride,
                    const std::vector<double>& horizons = kDefaultHorizons);

}  // namespace stag
