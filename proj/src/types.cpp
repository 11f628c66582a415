#include "stag/types.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

namespace stag {

Skeleton Skeleton::standard21() {
  Skeleton s;
  s.joint_names = {"pelvis",     "spine1",     "spine2",    "neck",       "head",
                   "l_hip",      "l_knee",     "l_ankle",   "l_toe",      "r_hip",
                   "r_knee",     "r_ankle",    "r_toe",     "l_collar",   "l_shoulder",
                   "l_elbow",    "l_wrist",    "r_collar",  "r_shoulder", "r_elbow",
                   "r_wrist"};
  s.edges = {{0, 1},   {1, 2},   {2, 3},   {3, 4},   {0, 5},   {5, 6},   {6, 7},
             {7, 8},   {0, 9},   {9, 10},  {10, 11}, {11, 12}, {2, 13},  {13, 14},
             {14, 15}, {15, 16}, {2, 17},  {17, 18}, {18, 19}, {19, 20}};
  s.root_index = 0;
  s.feet_indices = {7, 8, 11, 12};
  s.wrist_indices = {16, 20};
  return s;
}

bool ValidationReport::ok() const noexcept {
  return std::all_of(items.begin(), items.end(), [](const auto& i) { return i.passed; });
}

const ValidationItem* ValidationReport::find(const std::string& name) const noexcept {
  for (const auto& item : items)
    if (item.name == name) return &item;
  return nullptr;
}

std::string ValidationReport::failures() const {
  std::ostringstream os;
  for (const auto& item : items)
    if (!item.passed) os << item.name << ": " << item.detail << "; ";
  return os.str();
}

ValidationItem check_skeleton(const Skeleton& skeleton) {
  ValidationItem item{kItemSkeleton, true, {}};
  const int v = skeleton.joint_count();
  auto fail = [&](std::string why) {
    item.passed = false;
    item.detail = std::move(why);
    return item;
  };
  if (v < 1) return fail("no joints");
  if (skeleton.root_index < 0 || skeleton.root_index >= v) return fail("root index out of range");
  if (static_cast<int>(skeleton.edges.size()) != v - 1) return fail("edge count is not V-1");

  // Union-find: V-1 edges without a cycle span a tree.
  std::vector<int> parent(v);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (auto [a, b] : skeleton.edges) {
    if (a < 0 || a >= v || b < 0 || b >= v) return fail("edge index out of range");
    int ra = find(a), rb = find(b);
    if (ra == rb) return fail("edges contain a cycle");
    parent[ra] = rb;
  }

  std::set<int> feet(skeleton.feet_indices.begin(), skeleton.feet_indices.end());
  for (int w : skeleton.wrist_indices)
    if (feet.count(w)) return fail("feet and wrist subsets overlap");
  for (int f : skeleton.feet_indices)
    if (f < 0 || f >= v) return fail("feet index out of range");
  for (int w : skeleton.wrist_indices)
    if (w < 0 || w >= v) return fail("wrist index out of range");
  return item;
}

bool is_binary_flags(const ContactMap& contacts) {
  for (Index t = 0; t < contacts.length(); ++t)
    for (int v = 0; v < contacts.joint_count(); ++v) {
      double f = contacts.flag(t, v);
      if (f != 0.0 && f != 1.0) return false;
    }
  return true;
}

ValidationReport validate(const ForecastConfig& config, const SceneCloud& scene,
                          const MotionSequence& motion) {
  ValidationReport report;
  auto add = [&](const char* name, bool passed, std::string detail = {}) {
    report.items.push_back({name, passed, passed ? std::string{} : std::move(detail)});
  };

  add(kItemConfigPositive, config.t_obs >= 1 && config.f_fut >= 1 && config.joints >= 1,
      "T_obs, F_fut and V must be at least 1");
  add(kItemKdctBound, config.k_dct >= 1 && config.k_dct <= config.t_total(),
      "K_dct=" + std::to_string(config.k_dct) + " exceeds T_obs+F_fut=" +
          std::to_string(config.t_total()));
  add(kItemConfigConstants,
      config.contact_threshold > 0 && config.sample_radius > 0 && config.sample_count >= 1 &&
          config.norm_factor > 0,
      "threshold, radius, sample count and normalization must be positive");

  add(kItemSceneNonEmpty, scene.size() >= 1, "scene has no points");
  bool finite = scene.points.allFinite() && motion.frames.allFinite();
  add(kItemFinite, finite, "scene or motion contains a non-finite coordinate");
  add(kItemMotionLength, motion.length() >= 1, "motion has no frames");

  bool joints_ok = motion.frames.cols() % 3 == 0 && motion.joint_count() == config.joints &&
                   (!motion.skeleton || motion.skeleton->joint_count() == motion.joint_count());
  add(kItemJointCount, joints_ok,
      "motion has " + std::to_string(motion.frames.cols() / 3) + " joints, expected " +
          std::to_string(config.joints));

  if (motion.skeleton) {
    auto item = check_skeleton(*motion.skeleton);
    report.items.push_back(item);
  } else {
    add(kItemSkeleton, false, "motion has no skeleton");
  }
  return report;
}

RootTrajectory root_of(const MotionSequence& motion) {
  const int r = motion.skeleton ? motion.skeleton->root_index : 0;
  return {motion.frames.middleCols(3 * r, 3)};
}

}  // namespace stag
