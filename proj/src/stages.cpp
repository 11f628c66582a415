#include "stag/stages.hpp"

namespace stag {

using ad::Matrix;
using ad::Tape;
using ad::Var;

ContactSource parse_contact_source(const std::string& name) {
  if (name == "none") return ContactSource::none;
  if (name == "predicted") return ContactSource::predicted;
  if (name == "gt" || name == "ground_truth") return ContactSource::ground_truth;
  throw std::invalid_argument("unknown contact source '" + name + "'");
}

std::string to_string(ContactSource source) {
  switch (source) {
    case ContactSource::none: return "none";
    case ContactSource::predicted: return "predicted";
    case ContactSource::ground_truth: return "gt";
  }
  return "none";
}

Matrix to_graph_layout(const Matrix& frames, Index width) {
  if (frames.cols() % width != 0) throw ShapeError("to_graph_layout: width does not divide columns");
  const Index nodes = frames.cols() / width;
  Matrix out(frames.rows() * nodes, width);
  for (Index t = 0; t < frames.rows(); ++t)
    for (Index v = 0; v < nodes; ++v) out.row(t * nodes + v) = frames.row(t).segment(width * v, width);
  return out;
}

Matrix scale_contacts(const Matrix& entries, double factor) {
  Matrix out = entries;
  for (Index j = 0; j < out.cols(); ++j)
    if (j % 4 != 3) out.col(j) *= factor;
  return out;
}

namespace {

Matrix zeros_row(Index width) { return Matrix::Zero(1, width); }

}  // namespace

// ---------------------------------------------------------------- stage 1

ContactModel::ContactModel(const ForecastConfig& config, const Skeleton& skeleton, Rng& rng)
    : config_(config),
      basis_(config.t_total(), config.k_dct),
      motion_("stage1.motion", config.t_obs, config.joints, 3, config.hidden_dim,
              nn::skeleton_adjacency(skeleton), config.spatial_first, rng),
      scene_("stage1.scene", Index(config.k_dct) * config.joints, config.hidden_dim,
             config.hidden_dim, Index(config.k_dct) * config.joints, config.voxel_resolution, rng) {
  // Zero residual at initialization: the forecast starts at the padded observation.
  scene_.output().zero();
}

ContactModel::Input ContactModel::prepare(const SceneCloud& scene,
                                          const MotionSequence& observed) const {
  if (observed.length() != config_.t_obs)
    throw ShapeError("stage 1 expects exactly T_obs observed frames");
  Input in;
  in.points = scene.points * config_.norm_factor;
  in.observed = observed.frames * config_.norm_factor;
  const DistanceTensor d = distance_tensor(in.observed, in.points);
  in.base = dct_encode_padded(d.values, basis_);
  return in;
}

Var ContactModel::coefficients(Tape& tape, const Input& in) {
  const Index k = config_.k_dct, v = config_.joints, n = in.points.rows();
  if (in.base.rows() != k || in.base.cols() != v * n)
    throw ShapeError("stage 1: base coefficients must be K x (V*N)");
  Var latent = motion_(tape, tape.constant(to_graph_layout(in.observed, 3)));
  // K x (V*N) storage is the (K*V) x N matrix; per-point rows are its transpose.
  Matrix per_point = Eigen::Map<const Matrix>(in.base.data(), k * v, n).transpose();
  Var residual_pts = scene_(tape, in.points, tape.constant(std::move(per_point)), latent);
  Var residual = ad::reshape(ad::transpose(residual_pts), k, v * n);
  return ad::add(tape.constant(in.base), residual);
}

ContactModel::Output ContactModel::forward(const SceneCloud& scene,
                                           const MotionSequence& observed,
                                           const std::vector<int>& subset) {
  Tape tape(false);
  const Input in = prepare(scene, observed);
  Var coeffs = coefficients(tape, in);
  Output out;
  out.distances.joints = config_.joints;
  out.distances.values = dct_decode(coeffs.value(), basis_).cwiseMax(0.0) / config_.norm_factor;
  out.contacts = contacts_from_distances(out.distances, scene, config_.contact_threshold, subset);
  return out;
}

void ContactModel::collect(ParameterList& out) {
  motion_.collect(out);
  scene_.collect(out);
}

// ---------------------------------------------------------------- stage 2

TrajectoryModel::TrajectoryModel(const ForecastConfig& config, const Skeleton& skeleton, Rng& rng)
    : config_(config), basis_(config.t_total(), config.k_dct) {
  const Index h = config.hidden_dim;
  root_enc_ = nn::SequenceEncoder("stage2.root", config.t_obs, 1, 3, h, Matrix::Ones(1, 1),
                                  config.spatial_first, rng);
  contact_enc_ = nn::SequenceEncoder("stage2.contacts", config.t_total(), config.joints, 4, h,
                                     nn::skeleton_adjacency(skeleton), config.spatial_first, rng);
  hidden_ = nn::Mlp2("stage2.mlp", 3 * Index(config.k_dct) + 2 * h, h, h, true, rng);
  output_ = nn::Linear("stage2.out", h, 3 * Index(config.k_dct), rng);
}

Var TrajectoryModel::future(Tape& tape, const Matrix& observed_root, const Matrix* contacts) {
  if (observed_root.rows() != config_.t_obs || observed_root.cols() != 3)
    throw ShapeError("stage 2: observed root must be T_obs x 3");
  if (contacts && (contacts->rows() != config_.t_total() || contacts->cols() != 4 * config_.joints))
    throw ShapeError("stage 2: contacts must span T_obs + F_fut frames of V x 4");
  const Index k = config_.k_dct;
  Matrix dct = dct_encode_padded(observed_root, basis_);  // K x 3
  Var dct_row = tape.constant(Eigen::Map<const Matrix>(dct.data(), 1, 3 * k));
  Var root_latent = root_enc_(tape, tape.constant(observed_root));
  Var contact_latent = contacts ? contact_enc_(tape, tape.constant(to_graph_layout(*contacts, 4)))
                                : tape.constant(zeros_row(contact_enc_.latent_dim()));
  const Var parts[] = {dct_row, root_latent, contact_latent};
  Var coeff_row = output_(tape, hidden_(tape, ad::concat_cols(parts)));
  Var coeffs = ad::reshape(coeff_row, k, 3);
  Var traj = ad::matmul(tape.constant(basis_.matrix().transpose()), coeffs);
  return ad::slice_rows(traj, config_.t_obs, config_.f_fut);
}

RootTrajectory TrajectoryModel::forward(const RootTrajectory& observed_root,
                                        const ContactMap* contacts) {
  Tape tape(false);
  Matrix root = observed_root.positions * config_.norm_factor;
  Matrix c;
  if (contacts) c = scale_contacts(contacts->entries, config_.norm_factor);
  Var out = future(tape, root, contacts ? &c : nullptr);
  return {out.value() / config_.norm_factor};
}

void TrajectoryModel::collect(ParameterList& out) {
  root_enc_.collect(out);
  contact_enc_.collect(out);
  hidden_.collect(out);
  output_.collect(out);
}

// ---------------------------------------------------------------- stage 3

PoseModel::PoseModel(const ForecastConfig& config, const Skeleton& skeleton, Rng& rng)
    : config_(config) {
  const Index h = config.hidden_dim;
  const Matrix adjacency = nn::skeleton_adjacency(skeleton);
  motion_enc_ = nn::SequenceEncoder("stage3.motion", config.t_obs, config.joints, 3, h, adjacency,
                                    config.spatial_first, rng);
  contact_frame_enc_ = nn::SequenceEncoder("stage3.contact_frame", 1, config.joints, 4, h,
                                           adjacency, config.spatial_first, rng);
  end_root_lift_ = nn::Linear("stage3.end_root", 3, h, rng);
  step_mlp_ = nn::Mlp2("stage3.step", 4 * h + 3, h, h, true, rng);
  ttg_ = nn::TimeToGoTable("stage3.ttg", config.f_fut, h, rng);
  decoder_ = nn::Mlp2("stage3.decoder", h, h, 3 * Index(config.joints), false, rng);
}

Var PoseModel::encode_motion(Tape& tape, const Matrix& observed) {
  if (observed.rows() != config_.t_obs || observed.cols() != 3 * config_.joints)
    throw ShapeError("stage 3: observed motion must be T_obs x 3V");
  return motion_enc_(tape, tape.constant(to_graph_layout(observed, 3)));
}

Var PoseModel::encode_contact_frame(Tape& tape, const Matrix& row) {
  if (row.rows() != 1 || row.cols() != 4 * config_.joints)
    throw ShapeError("stage 3: contact frame must be 1 x 4V");
  return contact_frame_enc_(tape, tape.constant(to_graph_layout(row, 4)));
}

Var PoseModel::lift_end_root(Tape& tape, Var end_root) { return end_root_lift_(tape, end_root); }

Var PoseModel::step(Tape& tape, Var latent_motion, Var next_root, Var end_root_latent,
                    Var next_contact_latent, Var contact_end_latent, int remaining, bool use_ttg) {
  const Index h = config_.hidden_dim;
  if (remaining < 1 || remaining > config_.f_fut)
    throw std::out_of_range("stage 3: remaining frame count " + std::to_string(remaining) +
                            " outside [1, F_fut]");
  auto or_zero = [&](Var v) { return v.valid() ? v : tape.constant(zeros_row(h)); };
  const Var parts[] = {latent_motion, next_root, or_zero(end_root_latent),
                       or_zero(next_contact_latent), or_zero(contact_end_latent)};
  Var joined = ad::concat_cols(parts);
  if (joined.cols() != 4 * h + 3) throw ShapeError("stage 3: step input width mismatch");
  Var embedding = step_mlp_(tape, joined);
  Var ttg = use_ttg ? ttg_.embed(tape, remaining) : tape.constant(zeros_row(h));
  return decoder_(tape, ad::add(embedding, ttg));
}

Var PoseModel::decode(Tape& tape, const Matrix& observed, const Matrix* contacts, Var future_root,
                      const StageOptions& options, std::vector<int>* remaining_log) {
  const int f = config_.f_fut, t_obs = config_.t_obs;
  if (future_root.rows() != f || future_root.cols() != 3)
    throw ShapeError("stage 3: future root must be F_fut x 3");
  if (contacts && (contacts->rows() != config_.t_total() || contacts->cols() != 4 * config_.joints))
    throw ShapeError("stage 3: contacts must span T_obs + F_fut frames of V x 4");

  Var latent = encode_motion(tape, observed);
  Var end_root = ad::slice_rows(future_root, f - 1, 1);
  Var end_latent = options.use_end_goal ? lift_end_root(tape, end_root) : Var{};
  Var contact_end = (contacts && options.use_end_goal)
                        ? encode_contact_frame(tape, contacts->row(config_.t_total() - 1))
                        : Var{};

  // Steps share no state, so they are evaluated as one row-stacked batch;
  // row i equals step(..., remaining = F - i).
  const Index h = config_.hidden_dim;
  std::vector<Index> next_rows(f), broadcast(f, 0);
  std::vector<int> remaining(f);
  for (int i = 0; i < f; ++i) {
    next_rows[i] = std::min(i + 1, f - 1);
    remaining[i] = f - i;
  }
  if (remaining_log) remaining_log->insert(remaining_log->end(), remaining.begin(), remaining.end());

  auto zeros = [&] { return tape.constant(Matrix::Zero(f, h)); };
  Var next_contact;
  if (contacts) {
    // Frames t_obs + 1 .. t_obs + F - 1; the last one repeats for the final step.
    const int first = f == 1 ? t_obs : t_obs + 1, count = std::max(f - 1, 1);
    const Matrix rows = contacts->middleRows(first, count);
    Var encoded = contact_frame_enc_.encode_frames(tape, tape.constant(to_graph_layout(rows, 4)), count);
    std::vector<Index> pick(f);
    for (int i = 0; i < f; ++i) pick[i] = f == 1 ? 0 : next_rows[i] - 1;
    next_contact = ad::gather_rows(encoded, pick);
  }
  const Var parts[] = {
      ad::gather_rows(latent, broadcast),
      ad::gather_rows(future_root, next_rows),
      end_latent.valid() ? ad::gather_rows(end_latent, broadcast) : zeros(),
      next_contact.valid() ? next_contact : zeros(),
      contact_end.valid() ? ad::gather_rows(contact_end, broadcast) : zeros(),
  };
  Var embedding = step_mlp_(tape, ad::concat_cols(parts));
  Var ttg = options.use_ttg ? ttg_.embed_rows(tape, remaining) : zeros();
  return decoder_(tape, ad::add(embedding, ttg));
}

MotionSequence PoseModel::forward(const MotionSequence& observed, const ContactMap* contacts,
                                  const RootTrajectory& future_root, const StageOptions& options,
                                  std::vector<int>* remaining_log) {
  Tape tape(false);
  const double s = config_.norm_factor;
  Matrix c;
  if (contacts) c = scale_contacts(contacts->entries, s);
  Var root = tape.constant(future_root.positions * s);
  Var out = decode(tape, observed.frames * s, contacts ? &c : nullptr, root, options, remaining_log);
  return {out.value() / s, observed.skeleton};
}

void PoseModel::collect(ParameterList& out) {
  motion_enc_.collect(out);
  contact_frame_enc_.collect(out);
  end_root_lift_.collect(out);
  step_mlp_.collect(out);
  ttg_.collect(out);
  decoder_.collect(out);
}

// ---------------------------------------------------------------- bundle

namespace {

ContactModel make_stage1(const ForecastConfig& c, const Skeleton& s) {
  Rng rng(c.seed * 3 + 1);
  return ContactModel(c, s, rng);
}
TrajectoryModel make_stage2(const ForecastConfig& c, const Skeleton& s) {
  Rng rng(c.seed * 3 + 2);
  return TrajectoryModel(c, s, rng);
}
PoseModel make_stage3(const ForecastConfig& c, const Skeleton& s) {
  Rng rng(c.seed * 3 + 3);
  return PoseModel(c, s, rng);
}

}  // namespace

ModelBundle::ModelBundle(const ForecastConfig& cfg, std::shared_ptr<const Skeleton> skel,
                         const StageOptions& opts)
    : config(cfg),
      skeleton(std::move(skel)),
      options(opts),
      stage1(make_stage1(cfg, *skeleton)),
      stage2(make_stage2(cfg, *skeleton)),
      stage3(make_stage3(cfg, *skeleton)) {
  if (skeleton->joint_count() != cfg.joints)
    throw ShapeError("model bundle: skeleton joint count differs from config");
}

ParameterList ModelBundle::parameters(int stage) {
  ParameterList out;
  switch (stage) {
    case 1: stage1.collect(out); break;
    case 2: stage2.collect(out); break;
    case 3: stage3.collect(out); break;
    default: throw std::out_of_range("stage must be 1, 2 or 3");
  }
  return out;
}

ParameterList ModelBundle::all_parameters() {
  ParameterList out;
  stage1.collect(out);
  stage2.collect(out);
  stage3.collect(out);
  return out;
}

// ---------------------------------------------------------------- pipeline

Eigen::Vector3d window_anchor(const MotionSequence& observed) {
  const RootTrajectory root = root_of(observed);
  return root.positions.row(root.length() - 1).transpose();
}

MotionSequence translate(const MotionSequence& m, const Eigen::Vector3d& offset) {
  MotionSequence out = m;
  for (Index j = 0; j < out.frames.cols(); ++j) out.frames.col(j).array() += offset(j % 3);
  return out;
}

SceneCloud translate(const SceneCloud& s, const Eigen::Vector3d& offset) {
  SceneCloud out = s;
  out.points.rowwise() += offset.transpose();
  return out;
}

RootTrajectory translate(const RootTrajectory& r, const Eigen::Vector3d& offset) {
  RootTrajectory out = r;
  out.positions.rowwise() += offset.transpose();
  return out;
}

ContactMap translate(const ContactMap& c, const Eigen::Vector3d& offset) {
  ContactMap out = c;
  for (Index j = 0; j < out.entries.cols(); ++j)
    if (j % 4 != 3) out.entries.col(j).array() += offset(j % 4);
  return out;
}

PipelineResult full_pipeline(const SceneCloud& scene, const MotionSequence& observed,
                             ModelBundle& bundle, ContactSource source,
                             const ContactMap* gt_contacts, bool presampled) {
  const ForecastConfig& cfg = bundle.config;
  const ValidationReport report = validate(cfg, scene, observed);
  if (!report.ok()) throw DataError("pipeline input invalid: " + report.failures());
  if (observed.length() != cfg.t_obs) throw ShapeError("pipeline expects T_obs observed frames");
  if (source == ContactSource::ground_truth && !gt_contacts)
    throw std::invalid_argument("ground-truth contact mode needs ground-truth contacts");

  const Eigen::Vector3d anchor = window_anchor(observed);
  const SceneCloud sampled =
      presampled ? scene
                 : sample_scene_points(scene, anchor, cfg.sample_radius, cfg.sample_count, cfg.seed);
  const SceneCloud scene_c = translate(sampled, -anchor);
  const MotionSequence obs_c = translate(observed, -anchor);

  ContactMap contacts_c;
  switch (source) {
    case ContactSource::predicted:
      contacts_c = bundle.stage1
                       .forward(scene_c, obs_c, subset_indices(*bundle.skeleton, bundle.options.contact_subset))
                       .contacts;
      break;
    case ContactSource::ground_truth:
      contacts_c = translate(*gt_contacts, -anchor);
      break;
    case ContactSource::none:
      contacts_c.entries = Matrix::Zero(cfg.t_total(), 4 * cfg.joints);
      break;
  }
  if (contacts_c.length() != cfg.t_total())
    throw ShapeError("pipeline: contacts must span T_obs + F_fut frames");
  const ContactMap* cond = source == ContactSource::none ? nullptr : &contacts_c;

  const RootTrajectory root_c = bundle.stage2.forward(root_of(obs_c), cond);
  const MotionSequence motion_c = bundle.stage3.forward(obs_c, cond, root_c, bundle.options);

  PipelineResult result;
  result.contacts = source == ContactSource::none ? contacts_c : translate(contacts_c, anchor);
  result.future_root = translate(root_c, anchor);
  result.future_motion = translate(motion_c, anchor);
  return result;
}

}  // namespace stag
