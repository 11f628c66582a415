#pragma once

#include "stag/layers.hpp"

namespace stag::nn {

/// Symmetric-normalized skeleton adjacency with self loops, V x V.
ad::Matrix skeleton_adjacency(const Skeleton& skeleton);
/// Row-normalized band matrix linking frames within `radius` of each other.
ad::Matrix banded_adjacency(Index frames, Index radius);

/// Mixes a (T*V) x d sequence (row t*V + v) over time per joint with the
/// temporal adjacency (V*T x T, block v) and over joints per frame with the
/// spatial adjacency (T*V x V, block t). Temporal mixing comes first unless
/// `spatial_first`.
Var st_mix(Var x, Var spatial, Var temporal, Index frames, Index joints, bool spatial_first);

/// σ(A_s A_t X W) over a T x V graph of d-dimensional nodes.
class GraphEncoder {
 public:
  GraphEncoder() = default;
  GraphEncoder(const std::string& name, Index frames, Index joints, Index in_dim, Index out_dim,
               const ad::Matrix& joint_adjacency, bool spatial_first, Rng& rng);

  Var operator()(Tape& tape, Var x);
  /// Single-frame graphs only: `batch` graphs stacked as (B*V) x d, row
  /// b*V + v. Block b equals operator() on graph b.
  Var batch(Tape& tape, Var x, Index batch);
  void collect(ParameterList& out);

  [[nodiscard]] Index frames() const noexcept { return frames_; }
  [[nodiscard]] Index joints() const noexcept { return joints_; }
  [[nodiscard]] Index out_dim() const noexcept { return weight_.value.cols(); }
  Parameter& spatial() noexcept { return spatial_; }
  Parameter& temporal() noexcept { return temporal_; }
  Parameter& weight() noexcept { return weight_; }

 private:
  Index frames_ = 0;
  Index joints_ = 0;
  bool spatial_first_ = false;
  Parameter spatial_;   // T*V x V
  Parameter temporal_;  // V*T x T
  Parameter weight_;    // d x h
};

/// Collapses a (T*V) x h encoding to one latent row: MLP_T over the time
/// axis of every (joint, channel), then MLP_S over the flattened joints.
class GcnMlp {
 public:
  GcnMlp() = default;
  GcnMlp(const std::string& name, Index frames, Index joints, Index in_dim, Index latent_dim,
         Rng& rng);

  Var operator()(Tape& tape, Var encoded);
  /// Single-frame encodings stacked as (B*V) x h; returns B x latent.
  Var batch(Tape& tape, Var encoded, Index batch);
  void collect(ParameterList& out);

  [[nodiscard]] Index latent_dim() const noexcept { return latent_dim_; }
  Mlp2& temporal_mlp() noexcept { return mlp_t_; }
  Mlp2& spatial_mlp() noexcept { return mlp_s_; }

 private:
  Index frames_ = 0;
  Index joints_ = 0;
  Index in_dim_ = 0;
  Index latent_dim_ = 0;
  Mlp2 mlp_t_;
  Mlp2 mlp_s_;
};

/// Graph encoder followed by GCN-MLP compression.
class SequenceEncoder {
 public:
  SequenceEncoder() = default;
  SequenceEncoder(const std::string& name, Index frames, Index joints, Index in_dim, Index width,
                  const ad::Matrix& joint_adjacency, bool spatial_first, Rng& rng);

  /// x is (T*V) x d with row t*V + v.
  Var operator()(Tape& tape, Var x);
  /// For T = 1: encodes `batch` stacked frames at once; row b of the
  /// B x latent result equals operator() on frame b.
  Var encode_frames(Tape& tape, Var x, Index batch);
  void collect(ParameterList& out);

  GraphEncoder& graph() noexcept { return graph_; }
  GcnMlp& compressor() noexcept { return compress_; }
  [[nodiscard]] Index latent_dim() const noexcept { return compress_.latent_dim(); }

 private:
  GraphEncoder graph_;
  GcnMlp compress_;
};

struct VoxelAssignment {
  std::vector<Index> voxel_of_point;
  Index occupied = 0;
};

/// Buckets points into a resolution^3 grid over their bounding box and
/// numbers occupied cells in increasing linear-cell order.
VoxelAssignment voxelize(const ad::Matrix& points, int resolution);

/// Simplified point-voxel scene encoder: a per-point branch and a voxel
/// branch (mean-pool, MLP, broadcast back), fused by addition and projected
/// to `out_dim` values per point.
class PointVoxelEncoder {
 public:
  PointVoxelEncoder() = default;
  PointVoxelEncoder(const std::string& name, Index feature_dim, Index latent_dim, Index width,
                    Index out_dim, int resolution, Rng& rng);

  /// points N x 3 (constant), features N x feature_dim, latent 1 x latent_dim.
  Var operator()(Tape& tape, const ad::Matrix& points, Var features, Var latent);
  void collect(ParameterList& out);

  Linear& output() noexcept { return output_; }
  [[nodiscard]] int resolution() const noexcept { return resolution_; }

 private:
  int resolution_ = 8;
  Linear point_in_;
  Linear latent_in_;
  Mlp2 point_branch_;
  Mlp2 voxel_branch_;
  Linear output_;
};

/// Learnable embedding per remaining-frame count, rows 1..F.
class TimeToGoTable {
 public:
  TimeToGoTable() = default;
  TimeToGoTable(const std::string& name, Index horizon, Index width, Rng& rng);

  /// Row `remaining - 1`; remaining must lie in [1, horizon].
  Var embed(Tape& tape, int remaining);
  /// One row per entry of `remaining`.
  Var embed_rows(Tape& tape, const std::vector<int>& remaining);
  void collect(ParameterList& out);

  [[nodiscard]] Index horizon() const noexcept { return table_.value.rows(); }
  Parameter& table() noexcept { return table_; }

 private:
  Parameter table_;
};

}  // namespace stag::nn
