#include "uavtraj/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace uavtraj {

const char* to_string(Channel channel) noexcept { return channel == Channel::Position ? "position" : "velocity"; }

Channel channel_from_string(const std::string& s) {
  if (s == "position") return Channel::Position;
  if (s == "velocity") return Channel::Velocity;
  throw Error(ErrorKind::InvalidArgument, "unknown channel '" + s + "'");
}

}  // namespace uavtraj

namespace uavtraj::dataset {

namespace {

constexpr char kSegmentMagic[8] = {'U', 'A', 'V', 'S', 'E', 'G', 'S', '\0'};
constexpr std::uint32_t kSegmentVersion = 1;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& text, std::size_t line, const std::filesystem::path& path) {
  if (text.empty()) {
    throw Error(ErrorKind::ParseError, path.string() + ":" + std::to_string(line) + ": empty field");
  }
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size() || !std::isfinite(v)) {
    throw Error(ErrorKind::ParseError,
                path.string() + ":" + std::to_string(line) + ": '" + text + "' is not a finite number");
  }
  return v;
}

void write_f64_le(std::ostream& os, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  os.write(reinterpret_cast<const char*>(bytes), 8);
}

double read_f64_le(std::istream& is) {
  unsigned char bytes[8];
  if (!is.read(reinterpret_cast<char*>(bytes), 8)) throw Error(ErrorKind::ParseError, "segment payload truncated");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

void write_u32_le(std::ostream& os, std::uint32_t v) {
  unsigned char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(bytes), 4);
}

std::uint32_t read_u32_le(std::istream& is) {
  unsigned char bytes[4];
  if (!is.read(reinterpret_cast<char*>(bytes), 4)) throw Error(ErrorKind::ParseError, "segment header truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
  return v;
}

SegmentSet empty_like(const SegmentSet& set) {
  SegmentSet out;
  out.ts = set.ts;
  out.channel = set.channel;
  out.in_len = set.in_len;
  out.out_len = set.out_len;
  return out;
}

}  // namespace

void SampledTrajectory::validate() const {
  if (t.size() != points.size()) throw Error(ErrorKind::DimensionMismatch, "timestamp and point counts differ");
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i]) || !std::isfinite(points[i][0]) || !std::isfinite(points[i][1]) ||
        !std::isfinite(points[i][2])) {
      throw Error(ErrorKind::InvalidArgument, "non-finite sample at index " + std::to_string(i));
    }
    if (i > 0 && !(t[i] > t[i - 1])) {
      throw Error(ErrorKind::NonMonotonicTimestamps, "timestamp " + std::to_string(i) + " does not increase");
    }
  }
}

void SegmentSet::validate() const {
  for (const auto& p : pairs) {
    if (p.channel != channel) throw Error(ErrorKind::WrongChannel, "segment set mixes channels");
    if (p.input.rows() != in_len || p.input.cols() != 3 || p.target.rows() != out_len || p.target.cols() != 3) {
      throw Error(ErrorKind::DimensionMismatch, "segment pair window shape differs from the set");
    }
  }
}

Vec3 interpolate_at(std::span<const double> t, std::span<const Vec3> p, double query) {
  if (t.empty() || t.size() != p.size()) throw Error(ErrorKind::TooFewSamples, "interpolation needs samples");
  if (query <= t.front() + kKnotTolerance) return p.front();
  if (query >= t.back() - kKnotTolerance) return p.back();
  const auto it = std::lower_bound(t.begin(), t.end(), query);
  const auto hi = static_cast<std::size_t>(it - t.begin());
  if (std::abs(t[hi] - query) <= kKnotTolerance) return p[hi];
  const std::size_t lo = hi - 1;
  if (std::abs(query - t[lo]) <= kKnotTolerance) return p[lo];
  const double alpha = (query - t[lo]) / (t[hi] - t[lo]);
  return p[lo] + alpha * (p[hi] - p[lo]);
}

SampledTrajectory resample(const SampledTrajectory& traj, double ts) {
  if (!(ts > 0.0)) throw Error(ErrorKind::InvalidArgument, "sampling interval must be positive");
  if (traj.size() < 2) throw Error(ErrorKind::TooFewSamples, "resample needs at least 2 samples");
  traj.validate();

  SampledTrajectory out;
  out.channel = traj.channel;
  const double t0 = traj.t.front();
  const double t_last = traj.t.back();
  const auto n = static_cast<std::size_t>(std::floor((t_last - t0) / ts + 1e-9)) + 1;
  out.t.reserve(n);
  out.points.reserve(n);

  std::size_t hi = 1;
  for (std::size_t k = 0; k < n; ++k) {
    const double query = t0 + static_cast<double>(k) * ts;
    while (hi + 1 < traj.size() && traj.t[hi] < query - kKnotTolerance) ++hi;
    // Snap onto a knot so on-grid input passes through unchanged.
    if (std::abs(traj.t[hi - 1] - query) <= kKnotTolerance) {
      out.t.push_back(traj.t[hi - 1]);
      out.points.push_back(traj.points[hi - 1]);
    } else if (std::abs(traj.t[hi] - query) <= kKnotTolerance) {
      out.t.push_back(traj.t[hi]);
      out.points.push_back(traj.points[hi]);
    } else {
      const double alpha = (query - traj.t[hi - 1]) / (traj.t[hi] - traj.t[hi - 1]);
      out.t.push_back(query);
      out.points.push_back(traj.points[hi - 1] + alpha * (traj.points[hi] - traj.points[hi - 1]));
    }
  }
  return out;
}

SampledTrajectory derive_velocity(const SampledTrajectory& traj, double ts) {
  if (traj.channel != Channel::Position) throw Error(ErrorKind::WrongChannel, "derive_velocity needs positions");
  if (traj.size() < 2) throw Error(ErrorKind::TooFewSamples, "derive_velocity needs at least 2 samples");
  if (!(ts > 0.0)) throw Error(ErrorKind::InvalidArgument, "sampling interval must be positive");
  traj.validate();
  for (std::size_t i = 1; i < traj.size(); ++i) {
    if (std::abs((traj.t[i] - traj.t[i - 1]) - ts) > kKnotTolerance) {
      throw Error(ErrorKind::NonUniformSpacing, "gap before sample " + std::to_string(i) + " differs from ts");
    }
  }
  SampledTrajectory out;
  out.channel = Channel::Velocity;
  out.t.assign(traj.t.begin(), traj.t.end() - 1);
  out.points.reserve(traj.size() - 1);
  for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
    out.points.push_back(finite_difference(traj.points[i], traj.points[i + 1], ts));
  }
  return out;
}

std::size_t window_count(std::size_t n, std::size_t in_len, std::size_t out_len, std::size_t stride) {
  if (in_len == 0 || out_len == 0 || stride == 0) throw Error(ErrorKind::InvalidArgument, "window sizes must be >= 1");
  if (n < in_len + out_len) return 0;
  return (n - in_len - out_len) / stride + 1;
}

std::vector<SegmentPair> window(const SampledTrajectory& traj, std::size_t in_len, std::size_t out_len,
                                std::size_t stride, std::uint64_t traj_id) {
  const std::size_t count = window_count(traj.size(), in_len, out_len, stride);
  std::vector<SegmentPair> pairs;
  pairs.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t s = k * stride;
    SegmentPair pair;
    pair.input = Matrix(in_len, 3);
    pair.target = Matrix(out_len, 3);
    for (std::size_t i = 0; i < in_len; ++i) pair.input.set_row3(i, traj.points[s + i]);
    for (std::size_t i = 0; i < out_len; ++i) pair.target.set_row3(i, traj.points[s + in_len + i]);
    pair.channel = traj.channel;
    pair.traj_id = traj_id;
    pair.start = s;
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

Split split(const SegmentSet& set, double train_frac, double val_frac, std::uint64_t seed) {
  if (!(train_frac > 0.0) || !(val_frac > 0.0) || !(train_frac + val_frac < 1.0)) {
    throw Error(ErrorKind::InvalidFractions, "need train_frac > 0, val_frac > 0 and train_frac + val_frac < 1");
  }
  std::set<std::uint64_t> unique_ids;
  for (const auto& p : set.pairs) unique_ids.insert(p.traj_id);
  std::vector<std::uint64_t> ids(unique_ids.begin(), unique_ids.end());
  Rng rng(seed);
  rng.shuffle(ids);

  const auto n = static_cast<double>(ids.size());
  const auto n_train = static_cast<std::size_t>(std::floor(train_frac * n + 1e-9));
  const auto n_val = static_cast<std::size_t>(std::floor(val_frac * n + 1e-9));
  std::map<std::uint64_t, int> bucket;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    bucket[ids[i]] = i < n_train ? 0 : (i < n_train + n_val ? 1 : 2);
  }

  Split out{empty_like(set), empty_like(set), empty_like(set)};
  for (const auto& p : set.pairs) {
    switch (bucket[p.traj_id]) {
      case 0: out.train.pairs.push_back(p); break;
      case 1: out.val.pairs.push_back(p); break;
      default: out.test.pairs.push_back(p); break;
    }
  }
  return out;
}

std::vector<Vec3> all_points(const SegmentSet& set) {
  std::vector<Vec3> pts;
  pts.reserve(set.size() * (set.in_len + set.out_len));
  for (const auto& p : set.pairs) {
    for (std::size_t r = 0; r < p.input.rows(); ++r) pts.push_back(p.input.row3(r));
    for (std::size_t r = 0; r < p.target.rows(); ++r) pts.push_back(p.target.row3(r));
  }
  return pts;
}

void write_trajectory_csv(const SampledTrajectory& traj, const std::filesystem::path& path) {
  traj.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  os << "t,x,y,z\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto& p = traj.points[i];
    os << format_double(traj.t[i]) << ',' << format_double(p[0]) << ',' << format_double(p[1]) << ','
       << format_double(p[2]) << '\n';
  }
  if (!os) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

SampledTrajectory read_trajectory_csv(const std::filesystem::path& path, Channel channel) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(is, line)) throw Error(ErrorKind::ParseError, path.string() + ":1: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,x,y,z") throw Error(ErrorKind::ParseError, path.string() + ":1: expected header 't,x,y,z'");

  SampledTrajectory traj;
  traj.channel = channel;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (fields.size() != 4) {
      throw Error(ErrorKind::ParseError, path.string() + ":" + std::to_string(line_no) + ": expected 4 fields, got " +
                                             std::to_string(fields.size()));
    }
    const double t = parse_double(fields[0], line_no, path);
    if (!traj.t.empty() && !(t > traj.t.back())) {
      throw Error(ErrorKind::NonMonotonicTimestamps,
                  path.string() + ":" + std::to_string(line_no) + ": timestamp does not increase");
    }
    traj.t.push_back(t);
    traj.points.emplace_back(parse_double(fields[1], line_no, path), parse_double(fields[2], line_no, path),
                             parse_double(fields[3], line_no, path));
  }
  return traj;
}

// manifest.txt:
//   format_version = 1
//   ts = 0.10000000000000001
//   channel = velocity
//   in_len = 20
//   out_len = 10
//   count = N
//   [pairs]
//   <traj_id> <start>          (one line per pair, payload order)
//
// segments.bin: 8-byte magic "UAVSEGS\0", u32 version, u32 value width (8),
// then per pair in_len*3 input values followed by out_len*3 target values,
// row-major, little-endian IEEE-754 binary64.
void save_segment_set(const SegmentSet& set, const std::filesystem::path& dir) {
  set.validate();
  std::filesystem::create_directories(dir);
  {
    std::ofstream os(dir / "manifest.txt", std::ios::binary);
    if (!os) throw Error(ErrorKind::Io, "cannot write manifest in " + dir.string());
    os << "format_version = " << kSegmentVersion << '\n'
       << "ts = " << format_double(set.ts) << '\n'
       << "channel = " << to_string(set.channel) << '\n'
       << "in_len = " << set.in_len << '\n'
       << "out_len = " << set.out_len << '\n'
       << "count = " << set.size() << '\n'
       << "[pairs]\n";
    for (const auto& p : set.pairs) os << p.traj_id << ' ' << p.start << '\n';
  }
  std::ofstream os(dir / "segments.bin", std::ios::binary);
  if (!os) throw Error(ErrorKind::Io, "cannot write payload in " + dir.string());
  os.write(kSegmentMagic, sizeof kSegmentMagic);
  write_u32_le(os, kSegmentVersion);
  write_u32_le(os, 8);
  for (const auto& p : set.pairs) {
    for (double v : p.input.values()) write_f64_le(os, v);
    for (double v : p.target.values()) write_f64_le(os, v);
  }
  if (!os) throw Error(ErrorKind::Io, "write failed in " + dir.string());
}

SegmentSet load_segment_set(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.txt";
  std::ifstream ms(manifest_path, std::ios::binary);
  if (!ms) throw Error(ErrorKind::Io, "missing segment manifest " + manifest_path.string());

  std::map<std::string, std::string> header;
  std::vector<std::pair<std::uint64_t, std::size_t>> refs;
  std::string line;
  std::size_t line_no = 0;
  bool in_pairs = false;
  while (std::getline(ms, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line == "[pairs]") {
      in_pairs = true;
      continue;
    }
    if (in_pairs) {
      std::istringstream ls(line);
      std::uint64_t id = 0;
      std::size_t start = 0;
      if (!(ls >> id >> start)) {
        throw Error(ErrorKind::ParseError, manifest_path.string() + ":" + std::to_string(line_no) + ": bad pair line");
      }
      refs.emplace_back(id, start);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::ParseError, manifest_path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    }
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    header[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  auto need = [&](const char* key) -> const std::string& {
    const auto it = header.find(key);
    if (it == header.end()) throw Error(ErrorKind::ParseError, manifest_path.string() + ": missing '" + key + "'");
    return it->second;
  };
  if (std::stoul(need("format_version")) != kSegmentVersion) {
    throw Error(ErrorKind::VersionMismatch, "segment manifest version " + need("format_version"));
  }

  SegmentSet set;
  set.ts = parse_double(need("ts"), 0, manifest_path);
  set.channel = channel_from_string(need("channel"));
  set.in_len = std::stoul(need("in_len"));
  set.out_len = std::stoul(need("out_len"));
  const std::size_t count = std::stoul(need("count"));
  if (refs.size() != count) throw Error(ErrorKind::ParseError, "manifest count does not match its pair list");

  std::ifstream ps(dir / "segments.bin", std::ios::binary);
  if (!ps) throw Error(ErrorKind::Io, "missing segment payload in " + dir.string());
  char magic[8];
  if (!ps.read(magic, 8) || std::memcmp(magic, kSegmentMagic, 8) != 0) {
    throw Error(ErrorKind::ParseError, "segment payload has a bad magic");
  }
  if (read_u32_le(ps) != kSegmentVersion) throw Error(ErrorKind::VersionMismatch, "segment payload version");
  if (read_u32_le(ps) != 8) throw Error(ErrorKind::ParseError, "segment payload value width");

  set.pairs.reserve(count);
  for (const auto& [id, start] : refs) {
    SegmentPair p;
    p.input = Matrix(set.in_len, 3);
    p.target = Matrix(set.out_len, 3);
    for (double& v : p.input.values()) v = read_f64_le(ps);
    for (double& v : p.target.values()) v = read_f64_le(ps);
    p.channel = set.channel;
    p.traj_id = id;
    p.start = start;
    set.pairs.push_back(std::move(p));
  }
  if (ps.peek() != std::char_traits<char>::eof()) throw Error(ErrorKind::ParseError, "segment payload has trailing bytes");
  return set;
}

}  // namespace uavtraj::dataset
