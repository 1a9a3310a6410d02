#include "uavtraj/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace uavtraj::config {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(d)) {
    throw Error(ErrorKind::ParseError, key + ": expected a number, got '" + v + "'");
  }
  return d;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const unsigned long long n = std::strtoull(v.c_str(), &end, 10);
  if (v.empty() || v[0] == '-' || end != v.c_str() + v.size()) {
    throw Error(ErrorKind::ParseError, key + ": expected a non-negative integer, got '" + v + "'");
  }
  return n;
}

trajgen::Range to_range(const std::string& key, const std::string& v) {
  const auto parts = split_list(v);
  if (parts.size() != 2) throw Error(ErrorKind::ParseError, key + ": expected 'lo,hi', got '" + v + "'");
  return {to_double(key, parts[0]), to_double(key, parts[1])};
}

Vec3 to_vec3(const std::string& key, const std::string& v) {
  const auto parts = split_list(v);
  if (parts.size() != 3) throw Error(ErrorKind::ParseError, key + ": expected 'x,y,z', got '" + v + "'");
  return {to_double(key, parts[0]), to_double(key, parts[1]), to_double(key, parts[2])};
}

template <class Fn>
auto parse_enum(const std::string& key, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(ErrorKind::ParseError, key + ": " + e.what());
  }
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
std::string range(const trajgen::Range& r) { return num(r.lo) + "," + num(r.hi); }
std::string vec3(const Vec3& v) { return num(v[0]) + "," + num(v[1]) + "," + num(v[2]); }

struct Field {
  const char* key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define UAV_SIZE(KEY, MEMBER)                                                                         \
  Field {                                                                                            \
    KEY, [](ExperimentConfig& c, const std::string& v) { c.MEMBER = to_u64(KEY, v); },              \
        [](const ExperimentConfig& c) { return std::to_string(c.MEMBER); }                           \
  }
#define UAV_REAL(KEY, MEMBER)                                                                         \
  Field {                                                                                            \
    KEY, [](ExperimentConfig& c, const std::string& v) { c.MEMBER = to_double(KEY, v); },           \
        [](const ExperimentConfig& c) { return num(c.MEMBER); }                                      \
  }
#define UAV_RANGE(KEY, MEMBER)                                                                        \
  Field {                                                                                            \
    KEY, [](ExperimentConfig& c, const std::string& v) { c.MEMBER = to_range(KEY, v); },            \
        [](const ExperimentConfig& c) { return range(c.MEMBER); }                                    \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table{
      UAV_SIZE("run.seed", seed),
      Field{"run.out", [](ExperimentConfig& c, const std::string& v) { c.out = v; },
            [](const ExperimentConfig& c) { return c.out.string(); }},
      Field{"run.model_id", [](ExperimentConfig& c, const std::string& v) { c.model_id = v; },
            [](const ExperimentConfig& c) { return c.model_id; }},

      UAV_SIZE("generate.n", n_trajectories),
      UAV_REAL("generate.duration", duration),
      UAV_REAL("generate.ts", ts),
      Field{"generate.kinds",
            [](ExperimentConfig& c, const std::string& v) {
              c.kinds.clear();
              for (const auto& k : split_list(v)) {
                c.kinds.push_back(parse_enum("generate.kinds", [&] { return trajgen::kind_from_string(k); }));
              }
            },
            [](const ExperimentConfig& c) {
              std::string s;
              for (auto k : c.kinds) s += (s.empty() ? "" : ",") + std::string(trajgen::to_string(k));
              return s;
            }},
      UAV_RANGE("generate.center_x", bounds.center[0]),
      UAV_RANGE("generate.center_y", bounds.center[1]),
      UAV_RANGE("generate.center_z", bounds.center[2]),
      UAV_RANGE("generate.normal_x", bounds.normal[0]),
      UAV_RANGE("generate.normal_y", bounds.normal[1]),
      UAV_RANGE("generate.normal_z", bounds.normal[2]),
      UAV_RANGE("generate.radius", bounds.radius),
      UAV_RANGE("generate.omega", bounds.omega),

      Field{"dataset.channel",
            [](ExperimentConfig& c, const std::string& v) {
              c.channel = parse_enum("dataset.channel", [&] { return channel_from_string(v); });
            },
            [](const ExperimentConfig& c) { return std::string(to_string(c.channel)); }},
      UAV_SIZE("dataset.stride", stride),
      UAV_REAL("dataset.train_frac", train_frac),
      UAV_REAL("dataset.val_frac", val_frac),

      Field{"norm.method",
            [](ExperimentConfig& c, const std::string& v) {
              c.norm_method = parse_enum("norm.method", [&] { return normalize::method_from_string(v); });
            },
            [](const ExperimentConfig& c) { return std::string(normalize::to_string(c.norm_method)); }},

      UAV_SIZE("model.hidden", model.hidden_dim),
      UAV_SIZE("model.layers", model.num_layers),
      UAV_REAL("model.dropout", model.dropout_rate),
      UAV_SIZE("model.in_len", model.in_len),
      UAV_SIZE("model.out_len", model.out_len),

      UAV_REAL("train.lr", train.lr0),
      UAV_SIZE("train.max_epochs", train.max_epochs),
      UAV_SIZE("train.patience", train.patience),
      UAV_SIZE("train.step", train.sched_step),
      UAV_REAL("train.gamma", train.sched_gamma),
      UAV_SIZE("train.batch", train.batch_size),

      Field{"stream.kind",
            [](ExperimentConfig& c, const std::string& v) {
              c.stream_source.kind = parse_enum("stream.kind", [&] { return trajgen::kind_from_string(v); });
            },
            [](const ExperimentConfig& c) { return std::string(trajgen::to_string(c.stream_source.kind)); }},
      Field{"stream.center", [](ExperimentConfig& c, const std::string& v) { c.stream_source.center = to_vec3("stream.center", v); },
            [](const ExperimentConfig& c) { return vec3(c.stream_source.center); }},
      Field{"stream.normal", [](ExperimentConfig& c, const std::string& v) { c.stream_source.normal = to_vec3("stream.normal", v); },
            [](const ExperimentConfig& c) { return vec3(c.stream_source.normal); }},
      UAV_REAL("stream.radius", stream_source.radius),
      UAV_REAL("stream.omega", stream_source.omega),
      UAV_REAL("stream.duration", stream_duration),
      UAV_REAL("stream.jitter", jitter),
      UAV_SIZE("stream.rolling_window", rolling_window),
  };
  return table;
}

#undef UAV_SIZE
#undef UAV_REAL
#undef UAV_RANGE

void assign(ExperimentConfig& config, const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (key == f.key) {
      f.set(config, trim(value));
      return;
    }
  }
  throw Error(ErrorKind::ParseError, "unknown configuration key '" + key + "'");
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n_trajectories == 0) throw Error(ErrorKind::InvalidArgument, "generate.n must be >= 1");
  if (!(ts > 0.0)) throw Error(ErrorKind::InvalidDuration, "generate.ts must be positive");
  if (!(duration > 0.0)) throw Error(ErrorKind::InvalidDuration, "generate.duration must be positive");
  if (kinds.empty()) throw Error(ErrorKind::InvalidArgument, "generate.kinds is empty");
  bounds.validate();
  if (stride == 0) throw Error(ErrorKind::InvalidArgument, "dataset.stride must be >= 1");
  if (!(train_frac >= 0.0 && val_frac >= 0.0 && train_frac + val_frac <= 1.0)) {
    throw Error(ErrorKind::InvalidFractions, "dataset fractions must be non-negative and sum to <= 1");
  }
  model.validate();
  train.validate();
  stream_source.validate();
  if (!(stream_duration > 0.0)) throw Error(ErrorKind::InvalidDuration, "stream.duration must be positive");
  if (!(jitter >= 0.0 && jitter < 1.0)) throw Error(ErrorKind::InvalidArgument, "stream.jitter must be in [0, 1)");
  if (rolling_window == 0) throw Error(ErrorKind::InvalidArgument, "stream.rolling_window must be >= 1");
}

void set_value(ExperimentConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw Error(ErrorKind::InvalidArgument, "override '" + assignment + "' is not of the form section.key=value");
  }
  // A bad command-line override is a usage error, not a data error.
  try {
    assign(config, trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::ParseError) throw;
    throw Error(ErrorKind::InvalidArgument, e.what());
  }
}

ExperimentConfig from_text(const std::string& text, const std::vector<std::string>& overrides,
                           const std::string& origin) {
  namespace pt = boost::property_tree;
  ExperimentConfig config;
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorKind::ParseError, origin + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw Error(ErrorKind::ParseError, origin + ": key '" + section + "' is outside any section");
    for (const auto& [name, value] : body) assign(config, section + "." + name, value.data());
  }
  for (const auto& o : overrides) set_value(config, o);
  config.train.seed = derive_seeds(config.seed).train;
  config.validate();
  return config;
}

ExperimentConfig load(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::string text;
  if (!path.empty()) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error(ErrorKind::Io, "cannot open config " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    text = ss.str();
  }
  return from_text(text, overrides, path.empty() ? "<defaults>" : path.string());
}

std::string to_text(const ExperimentConfig& config) {
  std::string out;
  std::string section;
  for (const auto& f : fields()) {
    const std::string key = f.key;
    const auto dot = key.find('.');
    const std::string sec = key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out += '\n';
      out += "[" + sec + "]\n";
      section = sec;
    }
    out += key.substr(dot + 1) + " = " + f.get(config) + "\n";
  }
  return out;
}

Seeds derive_seeds(std::uint64_t seed) {
  return {derive_seed(seed, 0x10), derive_seed(seed, 0x20), derive_seed(seed, 0x30), derive_seed(seed, 0x40)};
}

}  // namespace uavtraj::config
