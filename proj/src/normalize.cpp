#include "uavtraj/normalize.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace uavtraj::normalize {

namespace {

constexpr int kStatsFormatVersion = 1;

void require(const NormStats& stats, Method method) {
  if (stats.method != method) {
    throw Error(ErrorKind::MethodMismatch,
                std::string("stats were fitted for ") + to_string(stats.method) + ", not " + to_string(method));
  }
}

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(std::span<const double> values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ' ';
    out += fmt17(values[i]);
  }
  return out;
}

std::vector<double> parse_list(const std::string& text, std::size_t expected, const std::string& key,
                               const std::string& origin) {
  std::istringstream is(text);
  std::vector<double> out;
  std::string token;
  while (is >> token) {
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size()) {
      throw Error(ErrorKind::ParseError, origin + ": bad number '" + token + "' in " + key);
    }
    out.push_back(v);
  }
  if (out.size() != expected) {
    throw Error(ErrorKind::ParseError,
                origin + ": " + key + " needs " + std::to_string(expected) + " values, got " + std::to_string(out.size()));
  }
  return out;
}

}  // namespace

const char* to_string(Method method) noexcept { return method == Method::Whitening ? "whitening" : "max_norm"; }

Method method_from_string(const std::string& s) {
  if (s == "whitening") return Method::Whitening;
  if (s == "max_norm" || s == "maxnorm" || s == "max") return Method::MaxNorm;
  throw Error(ErrorKind::InvalidArgument, "unknown normalization method '" + s + "'");
}

std::uint64_t NormStats::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  mix(static_cast<std::uint64_t>(method));
  mix(static_cast<std::uint64_t>(channel));
  for (double v : mean.e) mix(std::bit_cast<std::uint64_t>(v));
  for (double v : cov.values()) mix(std::bit_cast<std::uint64_t>(v));
  for (double v : chol.values()) mix(std::bit_cast<std::uint64_t>(v));
  mix(std::bit_cast<std::uint64_t>(max_norm));
  mix(std::bit_cast<std::uint64_t>(regularization));
  return h;
}

NormStats fit_stats(std::span<const Vec3> points, Method method, Channel channel) {
  NormStats stats;
  stats.method = method;
  stats.channel = channel;
  if (points.empty()) throw Error(ErrorKind::ZeroData, "no points to fit");

  const auto n = static_cast<double>(points.size());
  Vec3 sum;
  for (const auto& p : points) sum = sum + p;
  stats.mean = sum / n;

  if (method == Method::MaxNorm) {
    double best = 0.0;
    for (const auto& p : points) best = std::max(best, norm(p));
    if (!(best > 0.0)) throw Error(ErrorKind::ZeroData, "all points are zero; max norm undefined");
    stats.max_norm = best;
    return stats;
  }

  if (points.size() < 2) throw Error(ErrorKind::TooFewSamples, "whitening needs at least 2 points");
  Matrix cov(3, 3);
  for (const auto& p : points) {
    const Vec3 d = p - stats.mean;
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t c = 0; c <= r; ++c) cov(r, c) += d[r] * d[c];
  }
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c <= r; ++c) {
      cov(r, c) /= n - 1.0;
      cov(c, r) = cov(r, c);
    }

  for (double delta = 0.0;; delta = delta == 0.0 ? 1e-12 : delta * 10.0) {
    if (delta > kMaxRegularization * (1.0 + 1e-9)) {
      throw Error(ErrorKind::DegenerateCovariance, "covariance is singular beyond the 1e-8 regularization cap");
    }
    Matrix reg = cov;
    for (std::size_t i = 0; i < 3; ++i) reg(i, i) += delta;
    try {
      stats.chol = cholesky(reg);
      stats.cov = reg;
      stats.regularization = delta;
      return stats;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NotPositiveDefinite) throw;
    }
  }
}

Vec3 whiten(const Vec3& p, const NormStats& stats) {
  require(stats, Method::Whitening);
  return solve_lower(stats.chol, p - stats.mean);
}

Vec3 dewhiten(const Vec3& pw, const NormStats& stats) {
  require(stats, Method::Whitening);
  return mul3(stats.chol, pw) + stats.mean;
}

Vec3 maxnorm_apply(const Vec3& p, const NormStats& stats) {
  require(stats, Method::MaxNorm);
  return p / stats.max_norm;
}

Vec3 maxnorm_invert(const Vec3& q, const NormStats& stats) {
  require(stats, Method::MaxNorm);
  return q * stats.max_norm;
}

Vec3 apply(const Vec3& p, const NormStats& stats) {
  return stats.method == Method::Whitening ? whiten(p, stats) : maxnorm_apply(p, stats);
}

Vec3 invert(const Vec3& q, const NormStats& stats) {
  return stats.method == Method::Whitening ? dewhiten(q, stats) : maxnorm_invert(q, stats);
}

Matrix apply_rows(const Matrix& m, const NormStats& stats) {
  if (m.cols() != 3) throw Error(ErrorKind::DimensionMismatch, "normalization expects N×3 rows");
  Matrix out(m.rows(), 3);
  for (std::size_t r = 0; r < m.rows(); ++r) out.set_row3(r, apply(m.row3(r), stats));
  return out;
}

Matrix invert_rows(const Matrix& m, const NormStats& stats) {
  if (m.cols() != 3) throw Error(ErrorKind::DimensionMismatch, "normalization expects N×3 rows");
  Matrix out(m.rows(), 3);
  for (std::size_t r = 0; r < m.rows(); ++r) out.set_row3(r, invert(m.row3(r), stats));
  return out;
}

dataset::SegmentSet apply_set(const dataset::SegmentSet& set, const NormStats& stats) {
  if (set.channel != stats.channel) {
    throw Error(ErrorKind::ChannelMismatch, std::string("stats fitted on ") + uavtraj::to_string(stats.channel) +
                                                " applied to a " + uavtraj::to_string(set.channel) + " set");
  }
  dataset::SegmentSet out = set;
  for (auto& p : out.pairs) {
    p.input = apply_rows(p.input, stats);
    p.target = apply_rows(p.target, stats);
  }
  return out;
}

std::string stats_to_text(const NormStats& stats) {
  std::ostringstream os;
  os << "format_version = " << kStatsFormatVersion << '\n'
     << "method = " << to_string(stats.method) << '\n'
     << "channel = " << uavtraj::to_string(stats.channel) << '\n'
     << "mean = " << join(stats.mean.e) << '\n'
     << "cov = " << join(stats.cov.values()) << '\n'
     << "L = " << join(stats.chol.values()) << '\n'
     << "max_norm = " << fmt17(stats.max_norm) << '\n'
     << "regularization = " << fmt17(stats.regularization) << '\n';
  return os.str();
}

NormStats stats_from_text(const std::string& text, const std::string& origin) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::ParseError, origin + ":" + std::to_string(line_no) + ": expected key = value");
    }
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  auto need = [&](const char* key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw Error(ErrorKind::ParseError, origin + ": missing field '" + key + "'");
    return it->second;
  };

  const auto version = parse_list(need("format_version"), 1, "format_version", origin);
  if (version[0] != kStatsFormatVersion) {
    throw Error(ErrorKind::VersionMismatch, origin + ": stats format_version " + need("format_version"));
  }
  NormStats stats;
  stats.method = method_from_string(need("method"));
  stats.channel = channel_from_string(need("channel"));
  const auto mean = parse_list(need("mean"), 3, "mean", origin);
  stats.mean = {mean[0], mean[1], mean[2]};
  stats.cov = Matrix(3, 3, parse_list(need("cov"), 9, "cov", origin));
  stats.chol = Matrix(3, 3, parse_list(need("L"), 9, "L", origin));
  stats.max_norm = parse_list(need("max_norm"), 1, "max_norm", origin)[0];
  stats.regularization = parse_list(need("regularization"), 1, "regularization", origin)[0];
  if (stats.method == Method::MaxNorm && !(stats.max_norm > 0.0)) {
    throw Error(ErrorKind::ParseError, origin + ": max_norm must be positive");
  }
  return stats;
}

void save_stats(const NormStats& stats, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  os << stats_to_text(stats);
  if (!os) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

NormStats load_stats(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return stats_from_text(ss.str(), path.string());
}

}  // namespace uavtraj::normalize
