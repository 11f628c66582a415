#include "stag/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace stag {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* kind) {
  throw ConfigError("key '" + key + "': '" + value + "' is not " + kind);
}

int to_int(const std::string& key, const std::string& v) {
  int out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used == v.size()) return out;
  } catch (const std::exception&) {
  }
  bad_value(key, v, "a number");
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, "a boolean");
}

template <typename Parse>
auto wrap(const std::string& key, Parse parse) {
  try {
    return parse();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError("key '" + key + "': " + e.what());
  }
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::vector<KeyValue> parse_key_values(std::istream& is, const std::string& origin) {
  std::vector<KeyValue> out;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3)
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": malformed section header");
      out.push_back({"[", trim(line.substr(1, line.size() - 2)), line_no});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
    KeyValue kv{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no};
    if (kv.key.empty()) throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
    out.push_back(std::move(kv));
  }
  return out;
}

bool apply_forecast_key(ForecastConfig& c, const std::string& k, const std::string& v) {
  if (k == "t_obs") c.t_obs = to_int(k, v);
  else if (k == "f_fut") c.f_fut = to_int(k, v);
  else if (k == "joints") c.joints = to_int(k, v);
  else if (k == "fps") c.fps = to_double(k, v);
  else if (k == "k_dct") c.k_dct = to_int(k, v);
  else if (k == "contact_threshold") c.contact_threshold = to_double(k, v);
  else if (k == "sample_radius") c.sample_radius = to_double(k, v);
  else if (k == "sample_count") c.sample_count = to_int(k, v);
  else if (k == "norm_factor") c.norm_factor = to_double(k, v);
  else if (k == "hidden_dim") c.hidden_dim = to_int(k, v);
  else if (k == "voxel_resolution") c.voxel_resolution = to_int(k, v);
  else if (k == "spatial_first") c.spatial_first = to_bool(k, v);
  else if (k == "seed") c.seed = to_u64(k, v);
  else return false;
  return true;
}

bool apply_run_key(RunConfig& c, const std::string& k, const std::string& v) {
  TrainingConfig& t = c.training;
  if (k == "seed") {
    c.forecast.seed = t.seed = to_u64(k, v);
    return true;
  }
  if (apply_forecast_key(c.forecast, k, v)) return true;
  if (k == "mode") t.mode = wrap(k, [&] { return parse_training_mode(v); });
  else if (k == "epochs") t.epochs = to_int(k, v);
  else if (k == "lr_stage1") t.lr_stage1 = to_double(k, v);
  else if (k == "lr_stage23") t.lr_stage23 = to_double(k, v);
  else if (k == "batch_size") t.batch_size = to_int(k, v);
  else if (k == "use_end_goal") t.use_end_goal = to_bool(k, v);
  else if (k == "use_ttg") t.use_ttg = to_bool(k, v);
  else if (k == "contact_subset") t.contact_subset = wrap(k, [&] { return parse_contact_subset(v); });
  else if (k == "contact_source") t.contact_source = wrap(k, [&] { return parse_contact_source(v); });
  else if (k == "weight_stage1") t.weight_stage1 = to_double(k, v);
  else if (k == "weight_stage2") t.weight_stage2 = to_double(k, v);
  else if (k == "weight_stage3") t.weight_stage3 = to_double(k, v);
  else if (k == "teacher_forcing") t.teacher_forcing = to_double(k, v);
  else if (k == "grad_clip") t.grad_clip = to_double(k, v);
  else if (k == "train_stride") t.train_stride = to_int(k, v);
  else if (k == "train_stage1") t.train_stage1 = to_bool(k, v);
  else if (k == "eval_stride") c.eval_stride = to_int(k, v);
  else if (k == "horizons") {
    c.horizons.clear();
    for (const std::string& h : split_list(v)) c.horizons.push_back(to_double(k, h));
    if (c.horizons.empty()) bad_value(k, v, "a non-empty list");
  } else {
    return false;
  }
  return true;
}

bool apply_synthetic_key(SyntheticSpec& s, const std::string& k, const std::string& v) {
  if (k == "extent") s.extent = to_double(k, v);
  else if (k == "obstacles_min") s.obstacles_min = to_int(k, v);
  else if (k == "obstacles_max") s.obstacles_max = to_int(k, v);
  else if (k == "train_sequences") s.train_sequences = to_int(k, v);
  else if (k == "test_sequences") s.test_sequences = to_int(k, v);
  else if (k == "sequence_length") s.sequence_length = to_int(k, v);
  else if (k == "floor_spacing") s.floor_spacing = to_double(k, v);
  else if (k == "fps") s.fps = to_double(k, v);
  else if (k == "speed_min") s.speed_min = to_double(k, v);
  else if (k == "speed_max") s.speed_max = to_double(k, v);
  else if (k == "stride_length") s.stride_length = to_double(k, v);
  else if (k == "seed") s.seed = to_u64(k, v);
  else return false;
  return true;
}

void check_forecast_config(const ForecastConfig& c) {
  if (c.t_obs < 1 || c.f_fut < 1 || c.joints < 1)
    throw ConfigError("t_obs, f_fut and joints must be at least 1");
  if (c.k_dct < 1 || c.k_dct > c.t_total()) throw ConfigError("k_dct must lie in [1, t_obs + f_fut]");
  if (!(c.contact_threshold > 0) || !(c.sample_radius > 0) || c.sample_count < 1 ||
      !(c.norm_factor > 0))
    throw ConfigError("contact_threshold, sample_radius, sample_count and norm_factor must be positive");
  if (c.hidden_dim < 1 || c.voxel_resolution < 1 || !(c.fps > 0))
    throw ConfigError("hidden_dim, voxel_resolution and fps must be positive");
}

namespace {

void check_run(const RunConfig& c, const std::string& origin) {
  try {
    check_forecast_config(c.forecast);
    check_training_config(c.training);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  if (c.eval_stride < 1) throw ConfigError(origin + ": eval_stride must be >= 1");
  for (double h : c.horizons)
    if (!(h > 0)) throw ConfigError(origin + ": horizons must be positive");
}

[[noreturn]] void unknown(const std::string& origin, const KeyValue& kv) {
  throw ConfigError(origin + ":" + std::to_string(kv.line) + ": unknown key '" + kv.key + "'");
}

template <typename Apply>
void apply_all(const std::vector<KeyValue>& kvs, const std::string& origin, Apply apply) {
  for (const KeyValue& kv : kvs) {
    if (kv.key == "[") throw ConfigError(origin + ":" + std::to_string(kv.line) + ": unexpected section");
    bool known = false;
    try {
      known = apply(kv.key, kv.value);
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(kv.line) + ": " + e.what());
    }
    if (!known) unknown(origin, kv);
  }
}

}  // namespace

RunConfig parse_run_config(std::istream& is, const std::string& origin) {
  RunConfig c;
  apply_all(parse_key_values(is, origin), origin,
            [&](const std::string& k, const std::string& v) { return apply_run_key(c, k, v); });
  check_run(c, origin);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  auto in = open(path);
  return parse_run_config(in, path.string());
}

SyntheticSpec parse_synthetic_spec(std::istream& is, const std::string& origin) {
  SyntheticSpec s;
  apply_all(parse_key_values(is, origin), origin,
            [&](const std::string& k, const std::string& v) { return apply_synthetic_key(s, k, v); });
  return s;
}

SyntheticSpec load_synthetic_spec(const std::filesystem::path& path) {
  auto in = open(path);
  return parse_synthetic_spec(in, path.string());
}

std::string format_forecast_config(const ForecastConfig& c) {
  std::ostringstream os;
  os << "t_obs=" << c.t_obs << " f_fut=" << c.f_fut << " joints=" << c.joints
     << " fps=" << fmt(c.fps) << " k_dct=" << c.k_dct
     << " contact_threshold=" << fmt(c.contact_threshold)
     << " sample_radius=" << fmt(c.sample_radius) << " sample_count=" << c.sample_count
     << " norm_factor=" << fmt(c.norm_factor) << " hidden_dim=" << c.hidden_dim
     << " voxel_resolution=" << c.voxel_resolution
     << " spatial_first=" << (c.spatial_first ? "true" : "false") << " seed=" << c.seed;
  return os.str();
}

std::string format_run_config(const RunConfig& c) {
  const TrainingConfig& t = c.training;
  auto b = [](bool v) { return v ? "true" : "false"; };
  std::ostringstream os;
  std::string forecast = format_forecast_config(c.forecast);
  for (char& ch : forecast)
    if (ch == ' ') ch = '\n';
  os << forecast << '\n'
     << "mode=" << to_string(t.mode) << "\nepochs=" << t.epochs << "\nlr_stage1=" << fmt(t.lr_stage1)
     << "\nlr_stage23=" << fmt(t.lr_stage23) << "\nbatch_size=" << t.batch_size
     << "\nuse_end_goal=" << b(t.use_end_goal) << "\nuse_ttg=" << b(t.use_ttg)
     << "\ncontact_subset=" << to_string(t.contact_subset)
     << "\ncontact_source=" << to_string(t.contact_source)
     << "\nweight_stage1=" << fmt(t.weight_stage1) << "\nweight_stage2=" << fmt(t.weight_stage2)
     << "\nweight_stage3=" << fmt(t.weight_stage3) << "\nteacher_forcing=" << fmt(t.teacher_forcing)
     << "\ngrad_clip=" << fmt(t.grad_clip) << "\ntrain_stride=" << t.train_stride
     << "\ntrain_stage1=" << b(t.train_stage1) << "\neval_stride=" << c.eval_stride << "\nhorizons=";
  for (std::size_t i = 0; i < c.horizons.size(); ++i) os << (i ? "," : "") << fmt(c.horizons[i]);
  os << '\n';
  return os.str();
}

AblationGrid parse_ablation_grid(std::istream& is, const std::string& origin) {
  const std::vector<KeyValue> kvs = parse_key_values(is, origin);
  AblationGrid grid;
  std::vector<KeyValue> shared;
  std::vector<std::pair<std::string, std::vector<KeyValue>>> sections;
  for (const KeyValue& kv : kvs) {
    if (kv.key == "[") {
      for (const auto& s : sections)
        if (s.first == kv.value)
          throw ConfigError(origin + ":" + std::to_string(kv.line) + ": duplicate cell '" + kv.value + "'");
      for (char ch : kv.value)
        if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-'))
          throw ConfigError(origin + ":" + std::to_string(kv.line) +
                            ": cell names use letters, digits, '_' and '-'");
      sections.push_back({kv.value, {}});
    } else if (kv.key == "seeds") {
      if (!sections.empty())
        throw ConfigError(origin + ":" + std::to_string(kv.line) + ": seeds must precede the cells");
      grid.seeds.clear();
      for (const std::string& s : split_list(kv.value)) grid.seeds.push_back(to_u64("seeds", s));
      if (grid.seeds.empty()) throw ConfigError(origin + ": seeds list is empty");
    } else if (sections.empty()) {
      shared.push_back(kv);
    } else {
      sections.back().second.push_back(kv);
    }
  }
  if (sections.empty()) throw ConfigError(origin + ": grid defines no [cell] sections");
  for (const auto& [name, overrides] : sections) {
    AblationCell cell{name, {}};
    auto apply = [&](const std::string& k, const std::string& v) {
      if (k == "seed") throw ConfigError("per-cell seeds come from the seeds list");
      return apply_run_key(cell.config, k, v);
    };
    apply_all(shared, origin, apply);
    apply_all(overrides, origin, apply);
    check_run(cell.config, origin + " [" + name + "]");
    grid.cells.push_back(std::move(cell));
  }
  return grid;
}

AblationGrid load_ablation_grid(const std::filesystem::path& path) {
  auto in = open(path);
  return parse_ablation_grid(in, path.string());
}

}  // namespace stag
