#include "stag/geometry.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

namespace stag {

ContactSubset parse_contact_subset(const std::string& name) {
  if (name == "all") return ContactSubset::all;
  if (name == "feet") return ContactSubset::feet;
  if (name == "feet_wrist") return ContactSubset::feet_wrist;
  throw std::invalid_argument("unknown contact subset '" + name + "'");
}

std::string to_string(ContactSubset subset) {
  switch (subset) {
    case ContactSubset::all: return "all";
    case ContactSubset::feet: return "feet";
    case ContactSubset::feet_wrist: return "feet_wrist";
  }
  return "all";
}

std::vector<int> subset_indices(const Skeleton& skeleton, ContactSubset subset) {
  std::vector<int> out;
  switch (subset) {
    case ContactSubset::all:
      out.resize(skeleton.joint_count());
      std::iota(out.begin(), out.end(), 0);
      break;
    case ContactSubset::feet:
      out = skeleton.feet_indices;
      break;
    case ContactSubset::feet_wrist:
      out = skeleton.feet_indices;
      out.insert(out.end(), skeleton.wrist_indices.begin(), skeleton.wrist_indices.end());
      break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

SceneCloud sample_scene_points(const SceneCloud& scene, const Eigen::Vector3d& center,
                               double radius, int count, std::uint64_t seed) {
  if (scene.size() == 0) throw DataError("sample_scene_points: empty scene");
  if (count < 1) throw ShapeError("sample_scene_points: count must be positive");
  std::vector<Index> inside;
  const double r2 = radius * radius;
  for (Index n = 0; n < scene.size(); ++n)
    if ((scene.points.row(n).transpose() - center).squaredNorm() <= r2) inside.push_back(n);
  if (inside.empty())
    throw DataError("sample_scene_points: no scene points within radius (degenerate window)");

  if (static_cast<Index>(inside.size()) > count) {
    // Partial Fisher-Yates over the in-radius indices.
    std::mt19937_64 rng(seed);
    for (int i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, inside.size() - 1);
      std::swap(inside[i], inside[pick(rng)]);
    }
    inside.resize(count);
    std::sort(inside.begin(), inside.end());
  }

  SceneCloud out;
  out.points.resize(static_cast<Index>(inside.size()), 3);
  for (std::size_t i = 0; i < inside.size(); ++i) out.points.row(i) = scene.points.row(inside[i]);
  return out;
}

ContactMap contacts_from_distances(const DistanceTensor& distances, const SceneCloud& scene,
                                   double threshold, const std::vector<int>& subset) {
  const int joints = distances.joints;
  const Index frames = distances.frames();
  const Index n_points = distances.points();
  if (n_points != scene.size())
    throw ShapeError("contacts_from_distances: distance tensor has " + std::to_string(n_points) +
                     " points, scene has " + std::to_string(scene.size()));
  std::vector<bool> in_subset(joints, false);
  for (int v : subset) {
    if (v < 0 || v >= joints)
      throw ShapeError("contacts_from_distances: subset index " + std::to_string(v) +
                       " out of range");
    in_subset[v] = true;
  }

  Eigen::MatrixXd best = Eigen::MatrixXd::Constant(frames, joints,
                                                   std::numeric_limits<double>::infinity());
  Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic> arg =
      Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic>::Zero(frames, joints);
  for (Index n = 0; n < n_points; ++n)
    for (int v = 0; v < joints; ++v) {
      const double* col = distances.values.col(v + joints * n).data();
      for (Index t = 0; t < frames; ++t)
        if (col[t] < best(t, v)) {  // strict: ties keep the lower index
          best(t, v) = col[t];
          arg(t, v) = n;
        }
    }

  ContactMap out;
  out.entries.resize(frames, 4 * joints);
  for (Index t = 0; t < frames; ++t)
    for (int v = 0; v < joints; ++v) {
      out.entries.row(t).segment(4 * v, 3) = scene.points.row(arg(t, v));
      out.entries(t, 4 * v + 3) = (in_subset[v] && best(t, v) < threshold) ? 1.0 : 0.0;
    }
  return out;
}

namespace {

void check_same_shape(const ContactMap& pred, const ContactMap& gt) {
  if (pred.entries.rows() != gt.entries.rows() || pred.entries.cols() != gt.entries.cols())
    throw ShapeError("contact_l2_error: contact maps differ in shape");
}

}  // namespace

double contact_l2_error(const ContactMap& pred, const ContactMap& gt) {
  check_same_shape(pred, gt);
  double sum = 0.0;
  Index count = 0;
  for (Index t = 0; t < gt.length(); ++t)
    for (int v = 0; v < gt.joint_count(); ++v)
      if (gt.flag(t, v) == 1.0) {
        sum += (pred.point(t, v) - gt.point(t, v)).norm();
        ++count;
      }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

double contact_l2_error_all(const ContactMap& pred, const ContactMap& gt) {
  check_same_shape(pred, gt);
  double sum = 0.0;
  for (Index t = 0; t < gt.length(); ++t)
    for (int v = 0; v < gt.joint_count(); ++v) sum += (pred.point(t, v) - gt.point(t, v)).norm();
  const Index count = gt.length() * gt.joint_count();
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

}  // namespace stag
