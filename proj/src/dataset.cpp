#include "stag/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

namespace stag {

namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kBodyRadius = 0.35;   // root keeps this clearance from obstacle footprints
constexpr double kBoxClearance = 1.2;  // free corridor between obstacles
constexpr double kWallMargin = 0.6;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double footprint_distance(const Box& b, const Eigen::Vector2d& p, Eigen::Vector2d* nearest = nullptr) {
  Eigen::Vector2d q(std::clamp(p.x(), b.min.x(), b.max.x()), std::clamp(p.y(), b.min.y(), b.max.y()));
  if (nearest) *nearest = q;
  return (p - q).norm();
}

bool walkable(const std::vector<Box>& boxes, const Eigen::Vector2d& p, double extent) {
  if (p.x() < kWallMargin || p.y() < kWallMargin || p.x() > extent - kWallMargin ||
      p.y() > extent - kWallMargin)
    return false;
  for (const Box& b : boxes)
    if (footprint_distance(b, p) < kBodyRadius) return false;
  return true;
}

Eigen::Vector2d random_free_point(const std::vector<Box>& boxes, double extent, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(1.0, extent - 1.0);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Eigen::Vector2d p(u(rng), u(rng));
    bool clear = walkable(boxes, p, extent);
    for (const Box& b : boxes) clear = clear && footprint_distance(b, p) > 2 * kBodyRadius;
    if (clear) return p;
  }
  throw DataError("synthetic spec infeasible: no free floor area left");
}

void add_face(std::vector<Eigen::Vector3d>& pts, const Eigen::Vector3d& origin, const Eigen::Vector3d& u,
              double u_len, const Eigen::Vector3d& v, double v_len, double spacing) {
  const int nu = std::max(1, static_cast<int>(std::floor(u_len / spacing + 1e-9)));
  const int nv = std::max(1, static_cast<int>(std::floor(v_len / spacing + 1e-9)));
  for (int i = 0; i <= nu; ++i)
    for (int j = 0; j <= nv; ++j)
      pts.push_back(origin + u * (u_len * i / nu) + v * (v_len * j / nv));
}

struct Gait {
  double phase = 0.0;  // radians, advances 2π per stride
};

// Procedural walking pose for the standard 21-joint skeleton, z up.
Eigen::MatrixXd body_pose(const Eigen::Vector2d& xy, double heading, double phase, bool* left_stance,
                          bool* right_stance, double stride) {
  const Eigen::Vector3d up(0, 0, 1);
  const Eigen::Vector3d fwd(std::cos(heading), std::sin(heading), 0);
  const Eigen::Vector3d left(-std::sin(heading), std::cos(heading), 0);
  const Eigen::Vector3d root(xy.x(), xy.y(), 0.92 + 0.02 * std::cos(2 * phase));

  Eigen::MatrixXd p(21, 3);
  auto set = [&](int j, const Eigen::Vector3d& v) { p.row(j) = v.transpose(); };
  set(0, root);
  set(1, root + 0.12 * up);
  const Eigen::Vector3d chest = root + 0.30 * up;
  set(2, chest);
  set(3, root + 0.52 * up);
  set(4, root + 0.68 * up + 0.03 * fwd);

  auto leg = [&](int hip_j, double side, double psi, bool* stance) {
    const double swing = std::cos(psi);
    *stance = swing <= 0.0;
    const double lift = swing > 0 ? 0.12 * swing * swing : 0.0;
    const Eigen::Vector3d hip = root - 0.06 * up + side * 0.10 * left;
    Eigen::Vector3d ankle = root + side * 0.10 * left + (stride / 4.0) * std::sin(psi) * fwd;
    ankle.z() = 0.08 + lift;
    Eigen::Vector3d knee = 0.5 * (hip + ankle) + (0.06 + 0.4 * lift) * fwd;
    Eigen::Vector3d toe = ankle + 0.14 * fwd;
    toe.z() = 0.02 + lift;
    set(hip_j, hip);
    set(hip_j + 1, knee);
    set(hip_j + 2, ankle);
    set(hip_j + 3, toe);
  };
  leg(5, 1.0, phase, left_stance);
  leg(9, -1.0, phase + kPi, right_stance);

  auto arm = [&](int collar_j, double side, double psi) {
    const Eigen::Vector3d collar = chest + 0.18 * up + side * 0.08 * left;
    const Eigen::Vector3d shoulder = chest + 0.20 * up + side * 0.18 * left;
    const Eigen::Vector3d elbow = shoulder - 0.27 * up + 0.10 * std::sin(psi) * fwd;
    const Eigen::Vector3d wrist = elbow - 0.24 * up + 0.16 * std::sin(psi) * fwd + 0.04 * fwd;
    set(collar_j, collar);
    set(collar_j + 1, shoulder);
    set(collar_j + 2, elbow);
    set(collar_j + 3, wrist);
  };
  // Arms swing against the same-side leg.
  arm(13, 1.0, phase + kPi);
  arm(17, -1.0, phase);
  return p;
}

void expect_tokens(std::istringstream& ls, const std::string& origin, int line) {
  if (ls.fail()) throw DataError(origin + ":" + std::to_string(line) + ": malformed line");
}

}  // namespace

SyntheticSequence generate_sequence(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.extent < 4.0) throw DataError("synthetic spec infeasible: extent below 4 m");
  if (spec.obstacles_min < 0 || spec.obstacles_max < spec.obstacles_min)
    throw DataError("synthetic spec: bad obstacle count range");
  if (spec.sequence_length < 1 || spec.floor_spacing <= 0 || spec.fps <= 0 || spec.speed_min <= 0 ||
      spec.speed_max < spec.speed_min || spec.stride_length <= 0)
    throw DataError("synthetic spec: non-positive length, spacing, rate or speed");

  std::mt19937_64 rng(seed);
  SyntheticSequence out;

  // Obstacles: axis-aligned boxes separated by walkable corridors.
  const int obstacle_count =
      std::uniform_int_distribution<int>(spec.obstacles_min, spec.obstacles_max)(rng);
  std::uniform_real_distribution<double> size(0.6, 1.4), height(0.4, 1.2);
  std::uniform_real_distribution<double> place(1.5, spec.extent - 1.5);
  int attempts = 0;
  while (static_cast<int>(out.obstacles.size()) < obstacle_count) {
    if (++attempts > 5000) throw DataError("synthetic spec infeasible: obstacles fill the extent");
    const double sx = size(rng), sy = size(rng), h = height(rng);
    const double cx = place(rng), cy = place(rng);
    Box b{{cx - sx / 2, cy - sy / 2, 0.0}, {cx + sx / 2, cy + sy / 2, h}};
    bool clear = true;
    for (const Box& o : out.obstacles) {
      const bool apart = b.min.x() > o.max.x() + kBoxClearance || o.min.x() > b.max.x() + kBoxClearance ||
                         b.min.y() > o.max.y() + kBoxClearance || o.min.y() > b.max.y() + kBoxClearance;
      clear = clear && apart;
    }
    if (clear) out.obstacles.push_back(b);
  }

  // Scene points: floor grid (skipping covered cells) plus box surfaces.
  std::vector<Eigen::Vector3d> pts;
  const int cells = static_cast<int>(std::floor(spec.extent / spec.floor_spacing + 1e-9));
  for (int i = 0; i <= cells; ++i)
    for (int j = 0; j <= cells; ++j) {
      const Eigen::Vector3d p(i * spec.floor_spacing, j * spec.floor_spacing, 0.0);
      bool covered = false;
      for (const Box& b : out.obstacles)
        covered = covered || (p.x() > b.min.x() && p.x() < b.max.x() && p.y() > b.min.y() && p.y() < b.max.y());
      if (!covered) pts.push_back(p);
    }
  for (const Box& b : out.obstacles) {
    const Eigen::Vector3d d = b.max - b.min;
    const Eigen::Vector3d ex(1, 0, 0), ey(0, 1, 0), ez(0, 0, 1);
    add_face(pts, {b.min.x(), b.min.y(), b.max.z()}, ex, d.x(), ey, d.y(), spec.floor_spacing);
    add_face(pts, b.min, ex, d.x(), ez, d.z(), spec.floor_spacing);
    add_face(pts, {b.min.x(), b.max.y(), 0.0}, ex, d.x(), ez, d.z(), spec.floor_spacing);
    add_face(pts, b.min, ey, d.y(), ez, d.z(), spec.floor_spacing);
    add_face(pts, {b.max.x(), b.min.y(), 0.0}, ey, d.y(), ez, d.z(), spec.floor_spacing);
  }
  out.sequence.scene.points.resize(static_cast<Index>(pts.size()), 3);
  for (std::size_t i = 0; i < pts.size(); ++i) out.sequence.scene.points.row(i) = pts[i].transpose();

  // Goal-seeking walker with obstacle repulsion and a bounded turn rate.
  const double dt = 1.0 / spec.fps;
  const double speed = std::uniform_real_distribution<double>(spec.speed_min, spec.speed_max)(rng);
  Eigen::Vector2d pos = random_free_point(out.obstacles, spec.extent, rng);
  double heading = std::uniform_real_distribution<double>(-kPi, kPi)(rng);
  auto new_goal = [&]() {
    for (int i = 0; i < 1000; ++i) {
      Eigen::Vector2d g = random_free_point(out.obstacles, spec.extent, rng);
      if ((g - pos).norm() > 3.0) return g;
    }
    return random_free_point(out.obstacles, spec.extent, rng);
  };
  Eigen::Vector2d goal = new_goal();
  Gait gait;
  const double max_turn = 2.0 * dt;

  auto skeleton = std::make_shared<const Skeleton>(Skeleton::standard21());
  out.sequence.motion.skeleton = skeleton;
  out.sequence.motion.frames.resize(spec.sequence_length, 3 * 21);
  out.left_stance.resize(spec.sequence_length);
  out.right_stance.resize(spec.sequence_length);

  for (int f = 0; f < spec.sequence_length; ++f) {
    bool ls = false, rs = false;
    const Eigen::MatrixXd pose = body_pose(pos, heading, gait.phase, &ls, &rs, spec.stride_length);
    for (int v = 0; v < 21; ++v) out.sequence.motion.frames.row(f).segment(3 * v, 3) = pose.row(v);
    out.left_stance[f] = ls;
    out.right_stance[f] = rs;

    if ((goal - pos).norm() < 0.7) goal = new_goal();
    Eigen::Vector2d desired = (goal - pos).normalized();
    for (const Box& b : out.obstacles) {
      Eigen::Vector2d q;
      const double d = footprint_distance(b, pos, &q);
      if (d < 1.2 && d > 1e-9) desired += 2.0 * (1.2 - d) / 1.2 * (pos - q) / d;
    }
    double target = std::atan2(desired.y(), desired.x());
    double delta = std::remainder(target - heading, 2 * kPi);
    heading += std::clamp(delta, -max_turn, max_turn);

    const double step = speed * dt;
    bool moved = false;
    for (int k = 0; k <= 30 && !moved; ++k) {
      const double turn = (k % 2 == 1 ? 1.0 : -1.0) * 0.15 * ((k + 1) / 2);
      const double h = heading + turn;
      const Eigen::Vector2d next = pos + step * Eigen::Vector2d(std::cos(h), std::sin(h));
      if (walkable(out.obstacles, next, spec.extent)) {
        pos = next;
        heading = h;
        moved = true;
      }
    }
    if (moved) gait.phase += 2 * kPi * step / spec.stride_length;
  }
  out.sequence.id = "seq";
  return out;
}

void generate_synthetic(const SyntheticSpec& spec, const fs::path& root) {
  const std::pair<const char*, int> splits[] = {{"train", spec.train_sequences},
                                                {"test", spec.test_sequences}};
  for (std::uint64_t s = 0; s < 2; ++s) {
    const auto [split, count] = splits[s];
    for (int i = 0; i < count; ++i) {
      const std::uint64_t seed = splitmix64(spec.seed ^ splitmix64((s << 32) | std::uint64_t(i)));
      SyntheticSequence gen = generate_sequence(spec, seed);
      std::ostringstream id;
      id << "seq_" << std::setw(4) << std::setfill('0') << i;
      gen.sequence.id = id.str();
      save_sequence(gen.sequence, root / split / id.str());
    }
  }
}

void write_scene(std::ostream& os, const SceneCloud& scene) {
  os << std::setprecision(17);
  for (Index n = 0; n < scene.size(); ++n)
    os << scene.points(n, 0) << ' ' << scene.points(n, 1) << ' ' << scene.points(n, 2) << '\n';
}

SceneCloud read_scene(std::istream& is, const std::string& origin) {
  std::vector<Eigen::Vector3d> pts;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    Eigen::Vector3d p;
    ls >> p.x() >> p.y() >> p.z();
    expect_tokens(ls, origin, line_no);
    std::string extra;
    if (ls >> extra) throw DataError(origin + ":" + std::to_string(line_no) + ": expected 3 values");
    pts.push_back(p);
  }
  SceneCloud scene;
  scene.points.resize(static_cast<Index>(pts.size()), 3);
  for (std::size_t i = 0; i < pts.size(); ++i) scene.points.row(i) = pts[i].transpose();
  return scene;
}

void write_motion(std::ostream& os, const Eigen::MatrixXd& frames) {
  os << std::setprecision(17);
  for (Index t = 0; t < frames.rows(); ++t) {
    for (Index j = 0; j < frames.cols(); ++j) os << (j ? " " : "") << frames(t, j);
    os << '\n';
  }
}

Eigen::MatrixXd read_motion(std::istream& is, Index width, const std::string& origin) {
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::vector<double> row;
    double x;
    while (ls >> x) row.push_back(x);
    if (!ls.eof()) throw DataError(origin + ":" + std::to_string(line_no) + ": non-numeric value");
    if (static_cast<Index>(row.size()) != width)
      throw DataError(origin + ":" + std::to_string(line_no) + ": expected " + std::to_string(width) +
                      " values, found " + std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd m(static_cast<Index>(rows.size()), width);
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (Index j = 0; j < width; ++j) m(t, j) = rows[t][j];
  return m;
}

void write_skeleton(std::ostream& os, const Skeleton& s) {
  os << "joints " << s.joint_count() << '\n';
  for (const auto& name : s.joint_names) os << "joint " << name << '\n';
  for (auto [p, c] : s.edges) os << "edge " << p << ' ' << c << '\n';
  os << "root " << s.root_index << '\n';
  os << "feet";
  for (int f : s.feet_indices) os << ' ' << f;
  os << "\nwrists";
  for (int w : s.wrist_indices) os << ' ' << w;
  os << '\n';
}

Skeleton read_skeleton(std::istream& is, const std::string& origin) {
  Skeleton s;
  int declared = -1;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& why) {
    throw DataError(origin + ":" + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(is, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (key == "joints") {
      if (!(ls >> declared)) fail("joints needs a count");
    } else if (key == "joint") {
      std::string name;
      if (!(ls >> name)) fail("joint needs a name");
      s.joint_names.push_back(name);
    } else if (key == "edge") {
      int p, c;
      if (!(ls >> p >> c)) fail("edge needs two indices");
      s.edges.emplace_back(p, c);
    } else if (key == "root") {
      if (!(ls >> s.root_index)) fail("root needs an index");
    } else if (key == "feet" || key == "wrists") {
      auto& dst = key == "feet" ? s.feet_indices : s.wrist_indices;
      int i;
      while (ls >> i) dst.push_back(i);
      if (!ls.eof()) fail("non-integer joint index");
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  if (declared != s.joint_count())
    throw DataError(origin + ": declared " + std::to_string(declared) + " joints, listed " +
                    std::to_string(s.joint_count()));
  const ValidationItem check = check_skeleton(s);
  if (!check.passed) throw DataError(origin + ": " + check.detail);
  return s;
}

namespace {

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw DataError("cannot open " + p.string());
  return in;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw DataError("cannot write " + p.string());
  return out;
}

}  // namespace

void save_sequence(const Sequence& seq, const fs::path& dir) {
  fs::create_directories(dir);
  auto scene = open_out(dir / "scene.xyz");
  write_scene(scene, seq.scene);
  auto motion = open_out(dir / "motion.txt");
  write_motion(motion, seq.motion.frames);
  auto skel = open_out(dir / "skeleton.txt");
  write_skeleton(skel, *seq.motion.skeleton);
}

Sequence load_sequence(const fs::path& dir) {
  Sequence seq;
  seq.id = dir.filename().string();
  auto skel_in = open_in(dir / "skeleton.txt");
  auto skeleton = std::make_shared<const Skeleton>(read_skeleton(skel_in, (dir / "skeleton.txt").string()));
  auto scene_in = open_in(dir / "scene.xyz");
  seq.scene = read_scene(scene_in, (dir / "scene.xyz").string());
  auto motion_in = open_in(dir / "motion.txt");
  seq.motion.frames = read_motion(motion_in, 3 * skeleton->joint_count(), (dir / "motion.txt").string());
  seq.motion.skeleton = skeleton;
  return seq;
}

std::vector<Sequence> load_dataset(const fs::path& root, const std::string& split) {
  const fs::path dir = root / split;
  if (!fs::is_directory(dir)) throw DataError("dataset split not found: " + dir.string());
  std::vector<fs::path> entries;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory()) entries.push_back(e.path());
  std::sort(entries.begin(), entries.end());
  std::vector<Sequence> out;
  for (const auto& p : entries) out.push_back(load_sequence(p));
  return out;
}

std::vector<Index> window_split(Index length, int t_obs, int f_fut, int stride) {
  if (stride < 1) throw std::invalid_argument("window stride must be positive");
  std::vector<Index> starts;
  const Index window = Index(t_obs) + f_fut;
  for (Index s = 0; s + window <= length; s += stride) starts.push_back(s);
  return starts;
}

SceneCloud planar_ground_scene(const RootTrajectory& root_history, double extent, double spacing,
                               double ground_height) {
  if (root_history.length() < 1) throw DataError("planar_ground_scene: empty root history");
  if (!(extent > 0) || !(spacing > 0))
    throw std::invalid_argument("planar_ground_scene: extent and spacing must be positive");
  const Eigen::RowVector3d center = root_history.positions.row(root_history.length() - 1);
  const int per_axis = static_cast<int>(std::floor(extent / spacing + 1e-9)) + 1;
  SceneCloud s;
  s.points.resize(Index(per_axis) * per_axis, 3);
  Index n = 0;
  for (int i = 0; i < per_axis; ++i)
    for (int j = 0; j < per_axis; ++j, ++n)
      s.points.row(n) << center.x() - extent / 2 + i * spacing, center.y() - extent / 2 + j * spacing,
          ground_height;
  return s;
}

SceneCloud planar_ground_scene(const MotionSequence& observed, double extent, double spacing) {
  if (observed.length() < 1) throw DataError("planar_ground_scene: empty motion");
  double ground = std::numeric_limits<double>::infinity();
  for (int v = 0; v < observed.joint_count(); ++v)
    ground = std::min(ground, observed.frames.col(3 * v + 2).minCoeff());
  return planar_ground_scene(root_of(observed), extent, spacing, ground);
}

}  // namespace stag
