#pragma once

#include "stag/types.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace stag {

enum class ContactSubset { all, feet, feet_wrist };

ContactSubset parse_contact_subset(const std::string& name);
std::string to_string(ContactSubset subset);
std::vector<int> subset_indices(const Skeleton& skeleton, ContactSubset subset);

/// Uniform sample without replacement of at most `count` scene points lying
/// within `radius` of `center`. Selected points keep their scene order.
SceneCloud sample_scene_points(const SceneCloud& scene, const Eigen::Vector3d& center,
                               double radius, int count, std::uint64_t seed);

/// values(t, v + V n) = |joint(t, v) - point(n)|. `frames` is L x 3V.
template <typename DerivedF, typename DerivedP>
DistanceTensorT<typename DerivedF::Scalar> distance_tensor(
    const Eigen::MatrixBase<DerivedF>& frames, const Eigen::MatrixBase<DerivedP>& points) {
  using Scalar = typename DerivedF::Scalar;
  if (frames.cols() % 3 != 0) throw ShapeError("distance_tensor: frames must be L x 3V");
  if (points.cols() != 3) throw ShapeError("distance_tensor: points must be N x 3");
  const int joints = static_cast<int>(frames.cols() / 3);
  const Index n_points = points.rows();
  DistanceTensorT<Scalar> d;
  d.joints = joints;
  d.values.resize(frames.rows(), joints * n_points);
  for (Index n = 0; n < n_points; ++n) {
    const Scalar px = points(n, 0), py = points(n, 1), pz = points(n, 2);
    for (int v = 0; v < joints; ++v) {
      auto col = d.values.col(v + joints * n);
      for (Index t = 0; t < frames.rows(); ++t) {
        const Scalar dx = frames(t, 3 * v) - px;
        const Scalar dy = frames(t, 3 * v + 1) - py;
        const Scalar dz = frames(t, 3 * v + 2) - pz;
        col(t) = std::sqrt(dx * dx + dy * dy + dz * dz);
      }
    }
  }
  return d;
}

inline DistanceTensor distance_tensor(const MotionSequence& motion, const SceneCloud& scene) {
  return distance_tensor(motion.frames, scene.points);
}

/// Nearest scene point per (frame, joint) (ties go to the lowest index); the
/// flag is set when the joint is in `subset` and the distance is strictly
/// below `threshold`. Distances and threshold must share units.
ContactMap contacts_from_distances(const DistanceTensor& distances, const SceneCloud& scene,
                                   double threshold, const std::vector<int>& subset);

/// Mean contact-coordinate error over entries whose ground-truth flag is 1.
/// Returns 0 when the ground truth has no contact entries.
double contact_l2_error(const ContactMap& pred, const ContactMap& gt);
/// Same, averaged over every (frame, joint) entry.
double contact_l2_error_all(const ContactMap& pred, const ContactMap& gt);

}  // namespace stag
