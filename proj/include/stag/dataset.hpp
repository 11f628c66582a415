#pragma once

#include "stag/types.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace stag {

/// Procedural benchmark parameters. Lengths in meters, speeds in m/s.
struct SyntheticSpec {
  double extent = 10.0;
  int obstacles_min = 2;
  int obstacles_max = 4;
  int train_sequences = 32;
  int test_sequences = 8;
  int sequence_length = 300;
  double floor_spacing = 0.1;
  double fps = 30.0;
  double speed_min = 0.9;
  double speed_max = 1.4;
  double stride_length = 1.3;
  std::uint64_t seed = 0;
};

struct Box {
  Eigen::Vector3d min;
  Eigen::Vector3d max;

  [[nodiscard]] bool contains_interior(const Eigen::Vector3d& p) const {
    return (p.array() > min.array()).all() && (p.array() < max.array()).all();
  }
};

struct Sequence {
  std::string id;
  SceneCloud scene;
  MotionSequence motion;
};

struct SyntheticSequence {
  Sequence sequence;
  std::vector<Box> obstacles;
  std::vector<bool> left_stance;  // per frame
  std::vector<bool> right_stance;
};

/// One procedural sequence; deterministic in (spec, seed).
SyntheticSequence generate_sequence(const SyntheticSpec& spec, std::uint64_t seed);

/// Writes `<root>/{train,test}/<seq_id>/{scene.xyz,motion.txt,skeleton.txt}`.
void generate_synthetic(const SyntheticSpec& spec, const std::filesystem::path& root);

// Plain-text formats. Readers throw DataError naming the file and line.
void write_scene(std::ostream& os, const SceneCloud& scene);
SceneCloud read_scene(std::istream& is, const std::string& origin = "scene");
void write_motion(std::ostream& os, const Eigen::MatrixXd& frames);
Eigen::MatrixXd read_motion(std::istream& is, Index width, const std::string& origin = "motion");
void write_skeleton(std::ostream& os, const Skeleton& skeleton);
Skeleton read_skeleton(std::istream& is, const std::string& origin = "skeleton");

void save_sequence(const Sequence& seq, const std::filesystem::path& dir);
Sequence load_sequence(const std::filesystem::path& dir);
/// All sequences of `<root>/<split>` in sorted directory order.
std::vector<Sequence> load_dataset(const std::filesystem::path& root, const std::string& split);

/// Window start frames of length T_obs + F_fut; shorter tails are dropped.
std::vector<Index> window_split(Index length, int t_obs, int f_fut, int stride);

/// Flat square grid of side `extent` centered under the last root position
/// at `ground_height`.
SceneCloud planar_ground_scene(const RootTrajectory& root_history, double extent, double spacing,
                               double ground_height);
/// Same, with the ground at the lowest observed joint height.
SceneCloud planar_ground_scene(const MotionSequence& observed, double extent, double spacing);

}  // namespace stag
