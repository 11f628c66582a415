#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace stag {

using Index = Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Points3 = Eigen::Matrix<Scalar, Eigen::Dynamic, 3>;
template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

// Error families. The CLI maps them onto exit codes.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Window sizes, scene sampling and normalization constants shared by every
/// stage. Distances and radii are in meters.
struct ForecastConfig {
  int t_obs = 30;
  int f_fut = 60;
  int joints = 21;
  double fps = 30.0;
  int k_dct = 20;
  double contact_threshold = 0.32;
  double sample_radius = 2.5;
  int sample_count = 5000;
  double norm_factor = 0.2;
  int hidden_dim = 64;
  int voxel_resolution = 8;
  // Graph contraction order: false mixes over time first, then joints.
  bool spatial_first = false;
  std::uint64_t seed = 0;

  [[nodiscard]] int t_total() const noexcept { return t_obs + f_fut; }
};

template <typename Scalar>
struct SceneCloudT {
  Points3<Scalar> points;

  [[nodiscard]] Index size() const noexcept { return points.rows(); }
  [[nodiscard]] Vector3<Scalar> point(Index n) const { return points.row(n).transpose(); }
};

struct Skeleton {
  std::vector<std::string> joint_names;
  std::vector<std::pair<int, int>> edges;  // (parent, child)
  int root_index = 0;
  std::vector<int> feet_indices;
  std::vector<int> wrist_indices;

  [[nodiscard]] int joint_count() const noexcept { return static_cast<int>(joint_names.size()); }

  /// The 21-joint layout produced by the synthetic generator.
  static Skeleton standard21();
};

/// Global joint positions, one row per frame laid out as x0 y0 z0 x1 y1 z1 ...
template <typename Scalar>
struct MotionSequenceT {
  MatrixX<Scalar> frames;  // L x 3V
  std::shared_ptr<const Skeleton> skeleton;

  [[nodiscard]] Index length() const noexcept { return frames.rows(); }
  [[nodiscard]] int joint_count() const noexcept { return static_cast<int>(frames.cols() / 3); }
  [[nodiscard]] Vector3<Scalar> joint(Index t, int v) const {
    return frames.row(t).segment(3 * v, 3).transpose();
  }
  [[nodiscard]] MatrixX<Scalar> pose(Index t) const {  // V x 3
    MatrixX<Scalar> p(joint_count(), 3);
    for (int v = 0; v < joint_count(); ++v) p.row(v) = frames.row(t).segment(3 * v, 3);
    return p;
  }
  [[nodiscard]] MotionSequenceT slice(Index start, Index count) const {
    return {frames.middleRows(start, count), skeleton};
  }
};

template <typename Scalar>
struct RootTrajectoryT {
  Points3<Scalar> positions;  // L x 3

  [[nodiscard]] Index length() const noexcept { return positions.rows(); }
};

/// Per-frame, per-joint nearest scene point plus a binary contact flag,
/// laid out as x y z flag per joint.
template <typename Scalar>
struct ContactMapT {
  MatrixX<Scalar> entries;  // L x 4V

  [[nodiscard]] Index length() const noexcept { return entries.rows(); }
  [[nodiscard]] int joint_count() const noexcept { return static_cast<int>(entries.cols() / 4); }
  [[nodiscard]] Vector3<Scalar> point(Index t, int v) const {
    return entries.row(t).segment(4 * v, 3).transpose();
  }
  [[nodiscard]] Scalar flag(Index t, int v) const { return entries(t, 4 * v + 3); }
};

/// Joint-to-scene distances stored frame-major as frames x (joints * points),
/// column v + joints * n.
template <typename Scalar>
struct DistanceTensorT {
  MatrixX<Scalar> values;
  int joints = 0;

  [[nodiscard]] Index frames() const noexcept { return values.rows(); }
  [[nodiscard]] Index points() const noexcept { return joints == 0 ? 0 : values.cols() / joints; }
  [[nodiscard]] Scalar at(Index t, int v, Index n) const { return values(t, v + joints * n); }

  /// (frames * joints) x points, row t * joints + v.
  [[nodiscard]] MatrixX<Scalar> flattened() const {
    MatrixX<Scalar> out(frames() * joints, points());
    for (Index n = 0; n < points(); ++n)
      for (Index t = 0; t < frames(); ++t)
        for (int v = 0; v < joints; ++v) out(t * joints + v, n) = at(t, v, n);
    return out;
  }
};

template <typename Scalar>
struct EndGoalT {
  Vector3<Scalar> root_end;
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> contacts_end;  // 1 x 4V
};

using SceneCloud = SceneCloudT<double>;
using MotionSequence = MotionSequenceT<double>;
using RootTrajectory = RootTrajectoryT<double>;
using ContactMap = ContactMapT<double>;
using DistanceTensor = DistanceTensorT<double>;
using EndGoal = EndGoalT<double>;

struct ValidationItem {
  std::string name;
  bool passed = true;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationItem> items;

  [[nodiscard]] bool ok() const noexcept;
  [[nodiscard]] const ValidationItem* find(const std::string& name) const noexcept;
  [[nodiscard]] std::string failures() const;
};

// Item names reported by validate().
inline constexpr const char* kItemConfigPositive = "config sizes";
inline constexpr const char* kItemKdctBound = "K_dct bound";
inline constexpr const char* kItemConfigConstants = "config constants";
inline constexpr const char* kItemSceneNonEmpty = "scene non-empty";
inline constexpr const char* kItemFinite = "finite coordinates";
inline constexpr const char* kItemMotionLength = "motion length";
inline constexpr const char* kItemJointCount = "joint count";
inline constexpr const char* kItemSkeleton = "skeleton tree";

ValidationReport validate(const ForecastConfig& config, const SceneCloud& scene,
                          const MotionSequence& motion);

// Per-type checks used by validate() and by loaders.
ValidationItem check_skeleton(const Skeleton& skeleton);
bool is_binary_flags(const ContactMap& contacts);

RootTrajectory root_of(const MotionSequence& motion);

}  // namespace stag
