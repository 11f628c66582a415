#include "stag/checkpoint.hpp"

#include "stag/config.hpp"
#include "stag/dataset.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace stag {

namespace {

constexpr const char* kMagic = "STAG-CHECKPOINT 1";
constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload is written in native little-endian order");

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h = kFnvOffset) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

struct TensorEntry {
  Index rows = 0, cols = 0, offset = 0;
};

}  // namespace

std::uint64_t config_hash(const ForecastConfig& config) {
  ForecastConfig c = config;
  c.seed = 0;
  const std::string text = format_forecast_config(c);
  return fnv1a(text.data(), text.size());
}

void save_checkpoint(ModelBundle& bundle, const std::filesystem::path& path) {
  const nn::ParameterList params = bundle.all_parameters();
  std::vector<double> payload;
  std::ostringstream tensors;
  std::set<std::string> names;
  for (const ad::Parameter* p : params) {
    if (!names.insert(p->name).second) throw std::logic_error("duplicate parameter name " + p->name);
    tensors << "tensor " << p->name << ' ' << p->value.rows() << ' ' << p->value.cols() << ' '
            << payload.size() << '\n';
    payload.insert(payload.end(), p->value.data(), p->value.data() + p->value.size());
  }
  std::ostringstream skeleton;
  write_skeleton(skeleton, *bundle.skeleton);
  const std::string skeleton_text = skeleton.str();
  const auto skeleton_lines = std::count(skeleton_text.begin(), skeleton_text.end(), '\n');

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << kMagic << '\n'
        << "config " << format_forecast_config(bundle.config) << '\n'
        << "config_hash " << hex(config_hash(bundle.config)) << '\n'
        << "options contact_subset=" << to_string(bundle.options.contact_subset)
        << " use_end_goal=" << bundle.options.use_end_goal << " use_ttg=" << bundle.options.use_ttg
        << '\n'
        << "skeleton " << skeleton_lines << '\n'
        << skeleton_text << tensors.str() << "payload " << payload.size() << ' '
        << hex(fnv1a(payload.data(), payload.size() * sizeof(double))) << '\n'
        << "end\n";
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(double)));
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

namespace {

ModelBundle load_impl(const std::filesystem::path& path, const ForecastConfig* current) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  const std::string origin = path.string();
  auto fail = [&](const std::string& why) -> CheckpointError {
    return CheckpointError("checkpoint " + origin + ": " + why);
  };

  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw fail("missing header");

  ForecastConfig config;
  std::uint64_t stored_hash = 0;
  StageOptions options;
  std::string skeleton_text;
  std::map<std::string, TensorEntry> tensors;
  std::size_t payload_size = 0;
  std::uint64_t payload_hash = 0;
  bool seen_config = false, seen_hash = false, seen_payload = false, seen_skeleton = false;

  while (true) {
    if (!std::getline(in, line)) throw fail("header ends before 'end'");
    if (line == "end") break;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "config") {
      std::string pair;
      while (ls >> pair) {
        const auto eq = pair.find('=');
        if (eq == std::string::npos) throw fail("malformed config entry '" + pair + "'");
        try {
          if (!apply_forecast_key(config, pair.substr(0, eq), pair.substr(eq + 1)))
            throw fail("unknown config key '" + pair.substr(0, eq) + "'");
        } catch (const ConfigError& e) {
          throw fail(e.what());
        }
      }
      seen_config = true;
    } else if (key == "config_hash") {
      std::string h;
      ls >> h;
      try {
        stored_hash = std::stoull(h, nullptr, 16);
      } catch (const std::exception&) {
        throw fail("malformed config hash");
      }
      seen_hash = true;
    } else if (key == "options") {
      std::string pair;
      while (ls >> pair) {
        const auto eq = pair.find('=');
        const std::string k = pair.substr(0, eq), v = eq == std::string::npos ? "" : pair.substr(eq + 1);
        if (k == "contact_subset") options.contact_subset = parse_contact_subset(v);
        else if (k == "use_end_goal") options.use_end_goal = v == "1";
        else if (k == "use_ttg") options.use_ttg = v == "1";
        else throw fail("unknown option '" + k + "'");
      }
    } else if (key == "skeleton") {
      int n = 0;
      if (!(ls >> n) || n < 0) throw fail("malformed skeleton line count");
      for (int i = 0; i < n; ++i) {
        if (!std::getline(in, line)) throw fail("truncated skeleton");
        skeleton_text += line + '\n';
      }
      seen_skeleton = true;
    } else if (key == "tensor") {
      std::string name;
      TensorEntry e;
      if (!(ls >> name >> e.rows >> e.cols >> e.offset) || e.rows < 0 || e.cols < 0 || e.offset < 0)
        throw fail("malformed tensor line '" + line + "'");
      tensors[name] = e;
    } else if (key == "payload") {
      std::string h;
      if (!(ls >> payload_size >> h)) throw fail("malformed payload line");
      try {
        payload_hash = std::stoull(h, nullptr, 16);
      } catch (const std::exception&) {
        throw fail("malformed payload checksum");
      }
      seen_payload = true;
    } else {
      throw fail("unknown header line '" + line + "'");
    }
  }
  if (!seen_config || !seen_hash || !seen_payload || !seen_skeleton)
    throw fail("header lacks config, hash, skeleton or payload");
  if (stored_hash != config_hash(config)) throw fail("config hash does not match stored config");
  if (current && config_hash(*current) != stored_hash)
    throw fail("config hash " + hex(stored_hash) + " differs from the current config (" +
               hex(config_hash(*current)) + ")");

  std::vector<double> payload(payload_size);
  in.read(reinterpret_cast<char*>(payload.data()),
          static_cast<std::streamsize>(payload_size * sizeof(double)));
  if (static_cast<std::size_t>(in.gcount()) != payload_size * sizeof(double))
    throw fail("payload truncated");
  if (in.peek() != std::char_traits<char>::eof()) throw fail("trailing bytes after payload");
  if (fnv1a(payload.data(), payload.size() * sizeof(double)) != payload_hash)
    throw fail("payload checksum mismatch");

  std::istringstream skel_in(skeleton_text);
  auto skeleton = std::make_shared<const Skeleton>(read_skeleton(skel_in, origin + " skeleton"));
  if (current) config.seed = current->seed;
  ModelBundle bundle(config, skeleton, options);
  const nn::ParameterList params = bundle.all_parameters();
  if (params.size() != tensors.size())
    throw fail("stores " + std::to_string(tensors.size()) + " tensors, model has " +
               std::to_string(params.size()));
  for (ad::Parameter* p : params) {
    auto it = tensors.find(p->name);
    if (it == tensors.end()) throw fail("missing tensor " + p->name);
    const TensorEntry& e = it->second;
    if (e.rows != p->value.rows() || e.cols != p->value.cols())
      throw fail("tensor " + p->name + " has shape " + std::to_string(e.rows) + "x" +
                 std::to_string(e.cols));
    if (static_cast<std::size_t>(e.offset + e.rows * e.cols) > payload.size())
      throw fail("tensor " + p->name + " lies outside the payload");
    std::memcpy(p->value.data(), payload.data() + e.offset, sizeof(double) * e.rows * e.cols);
    p->zero_grad();
  }
  return bundle;
}

}  // namespace

ModelBundle load_checkpoint(const std::filesystem::path& path) { return load_impl(path, nullptr); }

ModelBundle load_checkpoint(const std::filesystem::path& path, const ForecastConfig& current) {
  return load_impl(path, &current);
}

}  // namespace stag
