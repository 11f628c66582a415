#pragma once

// Shared fixtures for the unit tests and the acceptance runner.

#include "stag/stages.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <random>

namespace stag::testing {

/// Chain skeleton 0-1-2-...; joint 0 is the root, the last joint is a foot.
inline std::shared_ptr<const Skeleton> chain_skeleton(int joints) {
  auto s = std::make_shared<Skeleton>();
  for (int v = 0; v < joints; ++v) s->joint_names.push_back("j" + std::to_string(v));
  for (int v = 1; v < joints; ++v) s->edges.emplace_back(v - 1, v);
  s->root_index = 0;
  s->feet_indices = {joints - 1};
  if (joints > 2) s->wrist_indices = {1};
  return s;
}

inline ForecastConfig tiny_config() {
  ForecastConfig c;
  c.t_obs = 4;
  c.f_fut = 3;
  c.joints = 3;
  c.k_dct = 5;
  c.hidden_dim = 4;
  c.sample_count = 12;
  c.voxel_resolution = 2;
  c.seed = 7;
  return c;
}

inline Eigen::MatrixXd random_matrix(Index rows, Index cols, std::mt19937_64& rng, double lo = -1,
                                     double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

/// Walks the root along +x at `speed` per frame with joints stacked above it.
inline MotionSequence walking_motion(int frames, int joints, double speed,
                                     std::shared_ptr<const Skeleton> skeleton) {
  MotionSequence m{Eigen::MatrixXd(frames, 3 * joints), std::move(skeleton)};
  for (int t = 0; t < frames; ++t)
    for (int v = 0; v < joints; ++v) {
      m.frames(t, 3 * v) = speed * t + 0.05 * v;
      m.frames(t, 3 * v + 1) = 0.1 * std::sin(0.3 * t + v);
      m.frames(t, 3 * v + 2) = 0.9 - 0.4 * v;
    }
  return m;
}

inline SceneCloud random_scene(Index points, std::mt19937_64& rng, double extent = 1.5) {
  SceneCloud s;
  s.points = random_matrix(points, 3, rng, -extent, extent);
  return s;
}

struct GradCheck {
  double worst = 0.0;       // largest per-tensor relative error
  std::string worst_name;
  Index checked = 0;        // tensors with a nonzero gradient
  Index tensors = 0;
};

/// Compares reverse-mode gradients of the scalar `loss` against central
/// differences. The error of each tensor is |g - g_fd| / max(|g|, |g_fd|),
/// taken at the better of steps h and h / 10: an activation kink closer than
/// h to some pre-activation spoils one step size but rarely both.
inline GradCheck gradient_check(const nn::ParameterList& params,
                                const std::function<ad::Var(ad::Tape&)>& loss, double h = 1e-6) {
  nn::zero_grads(params);
  {
    ad::Tape tape;
    ad::Var l = loss(tape);
    tape.backward(l);
  }
  auto eval = [&] {
    ad::Tape tape(false);
    return loss(tape).value()(0, 0);
  };
  GradCheck out;
  for (ad::Parameter* p : params) {
    ++out.tensors;
    double best = std::numeric_limits<double>::infinity();
    bool nonzero = false;
    for (double step : {h, h / 10}) {
      Eigen::MatrixXd numeric(p->value.rows(), p->value.cols());
      for (Index i = 0; i < p->value.size(); ++i) {
        const double keep = p->value.data()[i];
        p->value.data()[i] = keep + step;
        const double up = eval();
        p->value.data()[i] = keep - step;
        const double down = eval();
        p->value.data()[i] = keep;
        numeric.data()[i] = (up - down) / (2 * step);
      }
      const double scale = std::max(p->grad.norm(), numeric.norm());
      if (scale == 0.0) {
        best = 0.0;
        break;
      }
      nonzero = true;
      best = std::min(best, (p->grad - numeric).norm() / scale);
      if (best < 1e-6) break;
    }
    if (!nonzero) continue;
    ++out.checked;
    if (best > out.worst) {
      out.worst = best;
      out.worst_name = p->name;
    }
  }
  return out;
}

/// sum(out .* weights) with fixed random weights: a generic scalar probe of
/// every output entry.
inline ad::Var probe_loss(ad::Tape& tape, ad::Var out, std::uint64_t seed = 99) {
  std::mt19937_64 rng(seed);
  return ad::sum(ad::hadamard(out, tape.constant(random_matrix(out.rows(), out.cols(), rng))));
}

}  // namespace stag::testing
