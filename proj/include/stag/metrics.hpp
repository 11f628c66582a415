#pragma once

#include "stag/types.hpp"

#include <cmath>
#include <vector>

namespace stag {

/// Default evaluation horizons in seconds (15 / 30 / 60 frames at 30 fps).
inline const std::vector<double> kDefaultHorizons = {0.5, 1.0, 2.0};

/// Frame count covered by a horizon in seconds; throws when it exceeds `length`.
int horizon_frames(double seconds, double fps, Index length);

namespace detail {

template <typename Scalar>
void require_same_shape(const MotionSequenceT<Scalar>& a, const MotionSequenceT<Scalar>& b) {
  if (a.frames.rows() != b.frames.rows() || a.frames.cols() != b.frames.cols())
    throw ShapeError("metric: sequences differ in shape");
}

template <typename Scalar>
int root_index(const MotionSequenceT<Scalar>& m) {
  return m.skeleton ? m.skeleton->root_index : 0;
}

// Cumulative-mean curve helper: mean of per_frame[0 .. frames).
template <typename Scalar>
std::vector<Scalar> horizon_means(const std::vector<Scalar>& per_frame,
                                  const std::vector<double>& horizons, double fps) {
  std::vector<Scalar> out;
  for (double h : horizons) {
    const int n = horizon_frames(h, fps, static_cast<Index>(per_frame.size()));
    Scalar s = 0;
    for (int i = 0; i < n; ++i) s += per_frame[i];
    out.push_back(s / Scalar(n));
  }
  return out;
}

}  // namespace detail

/// Root-joint Euclidean error per frame.
template <typename Scalar>
std::vector<Scalar> root_error_curve(const MotionSequenceT<Scalar>& pred,
                                     const MotionSequenceT<Scalar>& gt) {
  detail::require_same_shape(pred, gt);
  const int r = detail::root_index(gt);
  std::vector<Scalar> out(pred.length());
  for (Index t = 0; t < pred.length(); ++t)
    out[t] = (pred.frames.row(t).segment(3 * r, 3) - gt.frames.row(t).segment(3 * r, 3)).norm();
  return out;
}

/// Mean per-joint error per frame after subtracting each sequence's own root.
template <typename Scalar>
std::vector<Scalar> root_aligned_error_curve(const MotionSequenceT<Scalar>& pred,
                                             const MotionSequenceT<Scalar>& gt) {
  detail::require_same_shape(pred, gt);
  const int r = detail::root_index(gt);
  const int joints = gt.joint_count();
  std::vector<Scalar> out(pred.length());
  for (Index t = 0; t < pred.length(); ++t) {
    const Vector3<Scalar> pr = pred.frames.row(t).segment(3 * r, 3).transpose();
    const Vector3<Scalar> gr = gt.frames.row(t).segment(3 * r, 3).transpose();
    Scalar s = 0;
    for (int v = 0; v < joints; ++v) {
      const Vector3<Scalar> a = pred.frames.row(t).segment(3 * v, 3).transpose() - pr;
      const Vector3<Scalar> b = gt.frames.row(t).segment(3 * v, 3).transpose() - gr;
      s += (a - b).norm();
    }
    out[t] = s / Scalar(joints);
  }
  return out;
}

/// Path Error: mean root-joint error over the first h seconds, per horizon.
template <typename Scalar>
std::vector<Scalar> path_error(const MotionSequenceT<Scalar>& pred, const MotionSequenceT<Scalar>& gt,
                               const std::vector<double>& horizons, double fps) {
  return detail::horizon_means(root_error_curve(pred, gt), horizons, fps);
}

/// Pose Error: root-aligned mean per-joint error over the first h seconds.
template <typename Scalar>
std::vector<Scalar> pose_error(const MotionSequenceT<Scalar>& pred, const MotionSequenceT<Scalar>& gt,
                               const std::vector<double>& horizons, double fps) {
  return detail::horizon_means(root_aligned_error_curve(pred, gt), horizons, fps);
}

/// Global mean per-joint error at every frame.
template <typename Scalar>
std::vector<Scalar> per_frame_mae(const MotionSequenceT<Scalar>& pred,
                                  const MotionSequenceT<Scalar>& gt) {
  detail::require_same_shape(pred, gt);
  const int joints = gt.joint_count();
  std::vector<Scalar> out(pred.length());
  for (Index t = 0; t < pred.length(); ++t) {
    Scalar s = 0;
    for (int v = 0; v < joints; ++v)
      s += (pred.frames.row(t).segment(3 * v, 3) - gt.frames.row(t).segment(3 * v, 3)).norm();
    out[t] = s / Scalar(joints);
  }
  return out;
}

}  // namespace stag
