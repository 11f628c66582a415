#include "stag/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace stag::nn {

using ad::Matrix;

namespace {

using StridedMap = Eigen::Map<Matrix, 0, Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>>;
using ConstStridedMap =
    Eigen::Map<const Matrix, 0, Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>>;

// Rows of joint v across all frames of a (T*V) x d matrix.
ConstStridedMap joint_rows(const Matrix& m, Index v, Index frames, Index joints) {
  return {m.data() + v, frames, m.cols(), Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>(m.rows(), joints)};
}
StridedMap joint_rows(Matrix& m, Index v, Index frames, Index joints) {
  return {m.data() + v, frames, m.cols(), Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>(m.rows(), joints)};
}

Matrix temporal_apply(const Matrix& a_t, const Matrix& x, Index frames, Index joints) {
  Matrix y(x.rows(), x.cols());
  for (Index v = 0; v < joints; ++v)
    joint_rows(y, v, frames, joints) = a_t.middleRows(v * frames, frames) * joint_rows(x, v, frames, joints);
  return y;
}

Matrix spatial_apply(const Matrix& a_s, const Matrix& x, Index frames, Index joints) {
  Matrix y(x.rows(), x.cols());
  for (Index t = 0; t < frames; ++t)
    y.middleRows(t * joints, joints) = a_s.middleRows(t * joints, joints) * x.middleRows(t * joints, joints);
  return y;
}

// Given dY for Y = temporal(A_t, X): accumulate dA_t and return dX.
Matrix temporal_backward(const Matrix& a_t, const Matrix& x, const Matrix& gy, Matrix* ga_t,
                         Index frames, Index joints) {
  Matrix gx(x.rows(), x.cols());
  for (Index v = 0; v < joints; ++v) {
    auto gyv = joint_rows(gy, v, frames, joints);
    if (ga_t) ga_t->middleRows(v * frames, frames).noalias() += gyv * joint_rows(x, v, frames, joints).transpose();
    joint_rows(gx, v, frames, joints) = a_t.middleRows(v * frames, frames).transpose() * gyv;
  }
  return gx;
}

Matrix spatial_backward(const Matrix& a_s, const Matrix& x, const Matrix& gy, Matrix* ga_s,
                        Index frames, Index joints) {
  Matrix gx(x.rows(), x.cols());
  for (Index t = 0; t < frames; ++t) {
    auto gyt = gy.middleRows(t * joints, joints);
    if (ga_s) ga_s->middleRows(t * joints, joints).noalias() += gyt * x.middleRows(t * joints, joints).transpose();
    gx.middleRows(t * joints, joints).noalias() = a_s.middleRows(t * joints, joints).transpose() * gyt;
  }
  return gx;
}

Matrix small_noise(Index rows, Index cols, Rng& rng) {
  std::uniform_real_distribution<double> u(-0.01, 0.01);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

}  // namespace

Matrix skeleton_adjacency(const Skeleton& skeleton) {
  const Index v = skeleton.joint_count();
  Matrix a = Matrix::Identity(v, v);
  for (auto [p, c] : skeleton.edges) {
    a(p, c) = 1.0;
    a(c, p) = 1.0;
  }
  Eigen::VectorXd d = a.rowwise().sum().cwiseSqrt().cwiseInverse();
  return d.asDiagonal() * a * d.asDiagonal();
}

Matrix banded_adjacency(Index frames, Index radius) {
  Matrix a = Matrix::Zero(frames, frames);
  for (Index i = 0; i < frames; ++i) {
    const Index lo = std::max<Index>(0, i - radius), hi = std::min<Index>(frames - 1, i + radius);
    a.row(i).segment(lo, hi - lo + 1).setConstant(1.0 / static_cast<double>(hi - lo + 1));
  }
  return a;
}

Var st_mix(Var x, Var spatial, Var temporal, Index frames, Index joints, bool spatial_first) {
  if (x.rows() != frames * joints) throw ShapeError("st_mix: input rows must equal T*V");
  if (spatial.rows() != frames * joints || spatial.cols() != joints)
    throw ShapeError("st_mix: spatial adjacency must be (T*V) x V");
  if (temporal.rows() != joints * frames || temporal.cols() != frames)
    throw ShapeError("st_mix: temporal adjacency must be (V*T) x T");
  Tape& tape = *x.tape();
  const Matrix& xs = x.value();
  Matrix mid = spatial_first ? spatial_apply(spatial.value(), xs, frames, joints)
                             : temporal_apply(temporal.value(), xs, frames, joints);
  Matrix out = spatial_first ? temporal_apply(temporal.value(), mid, frames, joints)
                             : spatial_apply(spatial.value(), mid, frames, joints);
  return tape.record(
      std::move(out), {x, spatial, temporal},
      [x, spatial, temporal, frames, joints, spatial_first, mid = std::move(mid)](Tape& t, int self) {
        const Matrix& g = t.grad_of(self);
        Matrix* gs = t.needs_grad(spatial) ? &t.grad(spatial.id()) : nullptr;
        Matrix* gt = t.needs_grad(temporal) ? &t.grad(temporal.id()) : nullptr;
        Matrix gx;
        if (spatial_first) {
          Matrix gmid = temporal_backward(temporal.value(), mid, g, gt, frames, joints);
          gx = spatial_backward(spatial.value(), x.value(), gmid, gs, frames, joints);
        } else {
          Matrix gmid = spatial_backward(spatial.value(), mid, g, gs, frames, joints);
          gx = temporal_backward(temporal.value(), x.value(), gmid, gt, frames, joints);
        }
        if (t.needs_grad(x)) t.grad(x.id()) += gx;
      });
}

GraphEncoder::GraphEncoder(const std::string& name, Index frames, Index joints, Index in_dim,
                           Index out_dim, const Matrix& joint_adjacency, bool spatial_first,
                           Rng& rng)
    : frames_(frames), joints_(joints), spatial_first_(spatial_first) {
  if (joint_adjacency.rows() != joints || joint_adjacency.cols() != joints)
    throw ShapeError("GraphEncoder: joint adjacency must be V x V");
  spatial_ = Parameter(name + ".spatial",
                       joint_adjacency.replicate(frames, 1) + small_noise(frames * joints, joints, rng));
  temporal_ = Parameter(name + ".temporal", banded_adjacency(frames, 2).replicate(joints, 1) +
                                                small_noise(joints * frames, frames, rng));
  weight_ = Parameter(name + ".weight", xavier(in_dim, out_dim, rng));
}

Var GraphEncoder::operator()(Tape& tape, Var x) {
  if (x.cols() != weight_.value.rows()) throw ShapeError("GraphEncoder: input width mismatch");
  Var mixed = st_mix(x, tape.parameter(spatial_), tape.parameter(temporal_), frames_, joints_,
                     spatial_first_);
  return ad::leaky_relu(ad::matmul(mixed, tape.parameter(weight_)));
}

Var GraphEncoder::batch(Tape& tape, Var x, Index batch) {
  if (frames_ != 1) throw ShapeError("GraphEncoder::batch: single-frame graphs only");
  if (x.rows() != batch * joints_ || x.cols() != weight_.value.rows())
    throw ShapeError("GraphEncoder::batch: input must be (B*V) x d");
  const Index d = x.cols();
  // (B*V) x d storage is the (V, B, d) tensor, i.e. a V x (B*d) matrix whose
  // columns are the per-graph channels.
  Var m = ad::reshape(x, joints_, batch * d);
  Var scale = ad::matmul(tape.parameter(temporal_), tape.constant(Matrix::Ones(1, batch * d)));
  Var spatial = tape.parameter(spatial_);
  Var mixed = spatial_first_ ? ad::hadamard(ad::matmul(spatial, m), scale)
                             : ad::matmul(spatial, ad::hadamard(m, scale));
  return ad::leaky_relu(ad::matmul(ad::reshape(mixed, batch * joints_, d), tape.parameter(weight_)));
}

void GraphEncoder::collect(ParameterList& out) {
  out.push_back(&spatial_);
  out.push_back(&temporal_);
  out.push_back(&weight_);
}

GcnMlp::GcnMlp(const std::string& name, Index frames, Index joints, Index in_dim, Index latent_dim,
               Rng& rng)
    : frames_(frames),
      joints_(joints),
      in_dim_(in_dim),
      latent_dim_(latent_dim),
      mlp_t_(name + ".mlp_t", frames, frames, 1, true, rng),
      mlp_s_(name + ".mlp_s", joints * in_dim, latent_dim, latent_dim, true, rng) {}

Var GcnMlp::operator()(Tape& tape, Var encoded) {
  if (encoded.rows() != frames_ * joints_ || encoded.cols() != in_dim_)
    throw ShapeError("GcnMlp: encoding must be (T*V) x h");
  // Storage of the (T*V) x h encoding is the (V, T, h) tensor.
  Var per_channel = ad::swap_last_axes(encoded, joints_, frames_, in_dim_);  // (V*h) x T
  Var collapsed_time = mlp_t_(tape, per_channel);                           // (V*h) x 1
  Var flat = ad::reshape(collapsed_time, 1, joints_ * in_dim_);
  return mlp_s_(tape, flat);
}

Var GcnMlp::batch(Tape& tape, Var encoded, Index batch) {
  if (frames_ != 1) throw ShapeError("GcnMlp::batch: single-frame encodings only");
  if (encoded.rows() != batch * joints_ || encoded.cols() != in_dim_)
    throw ShapeError("GcnMlp::batch: encoding must be (B*V) x h");
  Var per_channel = ad::swap_last_axes(encoded, joints_, batch, in_dim_);  // (V*h) x B
  Var collapsed = mlp_t_(tape, ad::reshape(per_channel, joints_ * in_dim_ * batch, 1));
  Var flat = ad::transpose(ad::reshape(collapsed, joints_ * in_dim_, batch));  // B x (V*h)
  return mlp_s_(tape, flat);
}

void GcnMlp::collect(ParameterList& out) {
  mlp_t_.collect(out);
  mlp_s_.collect(out);
}

SequenceEncoder::SequenceEncoder(const std::string& name, Index frames, Index joints,
                                 Index in_dim, Index width, const Matrix& joint_adjacency,
                                 bool spatial_first, Rng& rng)
    : graph_(name + ".graph", frames, joints, in_dim, width, joint_adjacency, spatial_first, rng),
      compress_(name + ".gcn_mlp", frames, joints, width, width, rng) {}

Var SequenceEncoder::operator()(Tape& tape, Var x) { return compress_(tape, graph_(tape, x)); }

Var SequenceEncoder::encode_frames(Tape& tape, Var x, Index batch) {
  return compress_.batch(tape, graph_.batch(tape, x, batch), batch);
}

void SequenceEncoder::collect(ParameterList& out) {
  graph_.collect(out);
  compress_.collect(out);
}

VoxelAssignment voxelize(const Matrix& points, int resolution) {
  if (resolution < 1) throw ShapeError("voxelize: resolution must be at least 1");
  if (points.cols() != 3) throw ShapeError("voxelize: points must be N x 3");
  VoxelAssignment out;
  out.voxel_of_point.resize(points.rows());
  if (points.rows() == 0) return out;
  const Eigen::RowVector3d lo = points.colwise().minCoeff();
  const Eigen::RowVector3d extent = points.colwise().maxCoeff() - lo;
  std::vector<Index> cell(points.rows());
  for (Index n = 0; n < points.rows(); ++n) {
    Index linear = 0;
    for (int a = 2; a >= 0; --a) {
      Index c = 0;
      if (extent(a) > 0)
        c = std::min<Index>(resolution - 1,
                            static_cast<Index>(std::floor((points(n, a) - lo(a)) / extent(a) * resolution)));
      linear = linear * resolution + c;
    }
    cell[n] = linear;
  }
  std::map<Index, Index> compact;
  for (Index c : cell) compact.emplace(c, 0);
  Index next = 0;
  for (auto& [c, id] : compact) id = next++;
  for (Index n = 0; n < points.rows(); ++n) out.voxel_of_point[n] = compact[cell[n]];
  out.occupied = next;
  return out;
}

PointVoxelEncoder::PointVoxelEncoder(const std::string& name, Index feature_dim, Index latent_dim,
                                     Index width, Index out_dim, int resolution, Rng& rng)
    : resolution_(resolution),
      point_in_(name + ".point_in", 3 + feature_dim, width, rng),
      latent_in_(name + ".latent_in", latent_dim, width, rng),
      point_branch_(name + ".point_branch", width, width, width, true, rng),
      voxel_branch_(name + ".voxel_branch", width, width, width, true, rng),
      output_(name + ".output", width, out_dim, rng) {}

Var PointVoxelEncoder::operator()(Tape& tape, const Matrix& points, Var features, Var latent) {
  if (features.rows() != points.rows()) throw ShapeError("PointVoxelEncoder: feature rows != N");
  if (features.cols() + 3 != point_in_.in_dim())
    throw ShapeError("PointVoxelEncoder: feature width mismatch");
  if (latent.rows() != 1 || latent.cols() != latent_in_.in_dim())
    throw ShapeError("PointVoxelEncoder: latent width mismatch");
  const VoxelAssignment voxels = voxelize(points, resolution_);

  const Var parts[] = {tape.constant(points), features};
  Var input = ad::concat_cols(parts);
  Var shared = ad::leaky_relu(ad::add_row(point_in_(tape, input), latent_in_(tape, latent)));

  Var point_feat = point_branch_(tape, shared);
  Var pooled = ad::group_mean_rows(shared, voxels.voxel_of_point, voxels.occupied);
  Var voxel_feat = voxel_branch_(tape, pooled);
  Var fused = ad::add(point_feat, ad::gather_rows(voxel_feat, voxels.voxel_of_point));
  return output_(tape, fused);
}

void PointVoxelEncoder::collect(ParameterList& out) {
  point_in_.collect(out);
  latent_in_.collect(out);
  point_branch_.collect(out);
  voxel_branch_.collect(out);
  output_.collect(out);
}

TimeToGoTable::TimeToGoTable(const std::string& name, Index horizon, Index width, Rng& rng)
    : table_(name + ".table", xavier(horizon, width, rng)) {}

Var TimeToGoTable::embed(Tape& tape, int remaining) {
  if (remaining < 1 || remaining > horizon())
    throw std::out_of_range("time-to-go " + std::to_string(remaining) + " outside [1, " +
                            std::to_string(horizon()) + "]");
  return ad::slice_rows(tape.parameter(table_), remaining - 1, 1);
}

Var TimeToGoTable::embed_rows(Tape& tape, const std::vector<int>& remaining) {
  std::vector<Index> rows;
  rows.reserve(remaining.size());
  for (int r : remaining) {
    if (r < 1 || r > horizon())
      throw std::out_of_range("time-to-go " + std::to_string(r) + " outside [1, " +
                              std::to_string(horizon()) + "]");
    rows.push_back(r - 1);
  }
  return ad::gather_rows(tape.parameter(table_), rows);
}

void TimeToGoTable::collect(ParameterList& out) { out.push_back(&table_); }

}  // namespace stag::nn
