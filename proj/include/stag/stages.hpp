#pragma once

#include "stag/encoders.hpp"
#include "stag/geometry.hpp"
#include "stag/transforms.hpp"

#include <optional>
#include <vector>

namespace stag {

using nn::ParameterList;
using nn::Rng;

/// Where stages 2 and 3 take their contact conditioning from.
enum class ContactSource { none, predicted, ground_truth };

ContactSource parse_contact_source(const std::string& name);
std::string to_string(ContactSource source);

struct StageOptions {
  ContactSubset contact_subset = ContactSubset::all;
  bool use_end_goal = true;
  bool use_ttg = true;
};

/// (T*V) x d graph layout (row t*V + v) of an L x dV frame-major matrix.
ad::Matrix to_graph_layout(const ad::Matrix& frames, Index width);

/// Scales contact coordinates by `factor`, leaving flags untouched.
ad::Matrix scale_contacts(const ad::Matrix& entries, double factor);

/// Stage 1: residual DCT-domain distance forecasting plus contact inversion.
class ContactModel {
 public:
  ContactModel() = default;
  ContactModel(const ForecastConfig& config, const Skeleton& skeleton, Rng& rng);

  /// Normalized-space inputs for one window.
  struct Input {
    ad::Matrix points;    // N x 3
    ad::Matrix observed;  // T_obs x 3V
    ad::Matrix base;      // K x (V*N), DCT of the replicate-padded observed distances
  };
  [[nodiscard]] Input prepare(const SceneCloud& scene, const MotionSequence& observed) const;

  /// Predicted DCT coefficients of the distance tensor, K x (V*N), normalized units.
  ad::Var coefficients(ad::Tape& tape, const Input& in);

  struct Output {
    DistanceTensor distances;  // meters, T_obs + F_fut frames, negatives clamped
    ContactMap contacts;
  };
  Output forward(const SceneCloud& scene, const MotionSequence& observed,
                 const std::vector<int>& subset);

  void collect(ParameterList& out);
  nn::SequenceEncoder& motion_encoder() noexcept { return motion_; }
  nn::PointVoxelEncoder& scene_encoder() noexcept { return scene_; }
  [[nodiscard]] const DctBasis& basis() const noexcept { return basis_; }
  [[nodiscard]] const ForecastConfig& config() const noexcept { return config_; }

 private:
  ForecastConfig config_;
  DctBasis basis_{1, 1};
  nn::SequenceEncoder motion_;
  nn::PointVoxelEncoder scene_;
};

/// Stage 2: future root from DCT(root) || encoded root || encoded contacts.
class TrajectoryModel {
 public:
  TrajectoryModel() = default;
  TrajectoryModel(const ForecastConfig& config, const Skeleton& skeleton, Rng& rng);

  /// observed_root T_obs x 3 and contacts (T_obs+F_fut) x 4V, both normalized;
  /// a null contacts pointer zeroes the contact latent. Returns F_fut x 3.
  ad::Var future(ad::Tape& tape, const ad::Matrix& observed_root, const ad::Matrix* contacts);

  RootTrajectory forward(const RootTrajectory& observed_root, const ContactMap* contacts);

  void collect(ParameterList& out);
  nn::Linear& output_layer() noexcept { return output_; }
  nn::SequenceEncoder& contact_encoder() noexcept { return contact_enc_; }
  [[nodiscard]] const ForecastConfig& config() const noexcept { return config_; }

 private:
  ForecastConfig config_;
  DctBasis basis_{1, 1};
  nn::SequenceEncoder root_enc_;
  nn::SequenceEncoder contact_enc_;
  nn::Mlp2 hidden_;
  nn::Linear output_;
};

/// Stage 3: autoregressive global pose decoding with end-goal and
/// time-to-go conditioning.
class PoseModel {
 public:
  PoseModel() = default;
  PoseModel(const ForecastConfig& config, const Skeleton& skeleton, Rng& rng);

  ad::Var encode_motion(ad::Tape& tape, const ad::Matrix& observed);      // 1 x h
  ad::Var encode_contact_frame(ad::Tape& tape, const ad::Matrix& row);    // 1 x 4V -> 1 x h
  ad::Var lift_end_root(ad::Tape& tape, ad::Var end_root);                // 1 x 3 -> 1 x h

  /// One decoding step; every row input is normalized. Empty (invalid) Vars
  /// for contact / end-goal latents are replaced by zeros. Returns 1 x 3V.
  ad::Var step(ad::Tape& tape, ad::Var latent_motion, ad::Var next_root, ad::Var end_root_latent,
               ad::Var next_contact_latent, ad::Var contact_end_latent, int remaining,
               bool use_ttg);

  /// Decodes F_fut poses. observed T_obs x 3V, contacts (T_obs+F_fut) x 4V
  /// (null for no contacts), future_root F_fut x 3. Returns F_fut x 3V.
  ad::Var decode(ad::Tape& tape, const ad::Matrix& observed, const ad::Matrix* contacts,
                 ad::Var future_root, const StageOptions& options,
                 std::vector<int>* remaining_log = nullptr);

  MotionSequence forward(const MotionSequence& observed, const ContactMap* contacts,
                         const RootTrajectory& future_root, const StageOptions& options,
                         std::vector<int>* remaining_log = nullptr);

  void collect(ParameterList& out);
  nn::Linear& decoder_output() noexcept { return decoder_.last(); }
  nn::TimeToGoTable& time_to_go() noexcept { return ttg_; }
  [[nodiscard]] const ForecastConfig& config() const noexcept { return config_; }

 private:
  ForecastConfig config_;
  nn::SequenceEncoder motion_enc_;
  nn::SequenceEncoder contact_frame_enc_;
  nn::Linear end_root_lift_;
  nn::Mlp2 step_mlp_;
  nn::TimeToGoTable ttg_;
  nn::Mlp2 decoder_;
};

/// All three stages plus the settings that shaped them.
struct ModelBundle {
  ForecastConfig config;
  std::shared_ptr<const Skeleton> skeleton;
  StageOptions options;
  ContactModel stage1;
  TrajectoryModel stage2;
  PoseModel stage3;

  ModelBundle(const ForecastConfig& config, std::shared_ptr<const Skeleton> skeleton,
              const StageOptions& options);

  [[nodiscard]] ParameterList parameters(int stage);  // 1, 2 or 3
  [[nodiscard]] ParameterList all_parameters();
};

struct PipelineResult {
  ContactMap contacts;          // T_obs + F_fut frames, world coordinates
  RootTrajectory future_root;   // F_fut frames
  MotionSequence future_motion; // F_fut frames
};

/// Translation that maps a window into the model frame (last observed root
/// at the origin).
Eigen::Vector3d window_anchor(const MotionSequence& observed);
MotionSequence translate(const MotionSequence& m, const Eigen::Vector3d& offset);
SceneCloud translate(const SceneCloud& s, const Eigen::Vector3d& offset);
RootTrajectory translate(const RootTrajectory& r, const Eigen::Vector3d& offset);
ContactMap translate(const ContactMap& c, const Eigen::Vector3d& offset);

/// Scene window -> stage 1 -> stage 2 -> stage 3. `scene` is the full scene
/// (sampled here around the last observed root) or an already sampled one
/// when `presampled`. Ground-truth contacts are required for that source.
PipelineResult full_pipeline(const SceneCloud& scene, const MotionSequence& observed,
                             ModelBundle& bundle, ContactSource source,
                             const ContactMap* gt_contacts = nullptr, bool presampled = false);

}  // namespace stag
