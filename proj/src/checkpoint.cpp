#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "uavtraj/model.hpp"

namespace uavtraj::model {

// Layout (all integers and reals little-endian):
//   char[8]  magic "UAVTGRU\0"
//   u32      format version
//   u32 × 6  input_dim, output_dim, hidden_dim, num_layers, in_len, out_len
//   f64      dropout_rate
//   u32      channel (0 position, 1 velocity)
//   u32      normalization method (0 whitening, 1 max_norm)
//   u64      stats fingerprint
//   u32      length of the embedded stats text, then that many bytes
//   u64      parameter count, then that many f64 in ModelParams::tensors() order
//   u64      FNV-1a-64 checksum of every preceding byte
namespace {

constexpr char kMagic[8] = {'U', 'A', 'V', 'T', 'G', 'R', 'U', '\0'};
constexpr std::uint32_t kVersion = 1;

std::uint64_t fnv1a(const unsigned char* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  std::vector<unsigned char>& buffer() { return buf_; }

 private:
  std::vector<unsigned char> buf_;
};

class Reader {
 public:
  Reader(const std::vector<unsigned char>& buf, std::size_t end) : buf_(buf), end_(end) {}

  void bytes(void* out, std::size_t n) {
    need(n);
    std::memcpy(out, buf_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf_[pos_++]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::size_t remaining() const { return end_ - pos_; }

 private:
  void need(std::size_t n) const {
    if (end_ - pos_ < n) throw Error(ErrorKind::CorruptCheckpoint, "checkpoint truncated");
  }
  const std::vector<unsigned char>& buf_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const ModelParams& params, const ModelConfig& config, const normalize::NormStats& stats,
                     const std::filesystem::path& path) {
  config.validate();
  if (!params.matches(config)) throw Error(ErrorKind::DimensionMismatch, "parameters do not match the model config");

  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kVersion);
  for (std::size_t v : {config.input_dim, config.output_dim, config.hidden_dim, config.num_layers, config.in_len,
                        config.out_len}) {
    w.u32(static_cast<std::uint32_t>(v));
  }
  w.f64(config.dropout_rate);
  w.u32(stats.channel == Channel::Position ? 0 : 1);
  w.u32(stats.method == normalize::Method::Whitening ? 0 : 1);
  w.u64(stats.fingerprint());
  const std::string text = normalize::stats_to_text(stats);
  w.u32(static_cast<std::uint32_t>(text.size()));
  w.bytes(text.data(), text.size());
  w.u64(params.parameter_count());
  for (const Matrix* m : params.tensors()) {
    for (double v : m->values()) w.f64(v);
  }
  auto& buf = w.buffer();
  const std::uint64_t sum = fnv1a(buf.data(), buf.size());
  w.u64(sum);

  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!os) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::Io, "cannot open checkpoint " + path.string());
  const std::vector<unsigned char> buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (buf.size() < sizeof kMagic + 4 + 8) throw Error(ErrorKind::CorruptCheckpoint, "checkpoint too short");

  const std::size_t body = buf.size() - 8;
  std::uint64_t stored = 0;
  for (int i = 0; i < 8; ++i) stored |= static_cast<std::uint64_t>(buf[body + i]) << (8 * i);
  if (fnv1a(buf.data(), body) != stored) throw Error(ErrorKind::CorruptCheckpoint, "checksum mismatch in " + path.string());

  Reader r(buf, body);
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw Error(ErrorKind::CorruptCheckpoint, "bad checkpoint magic");
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw Error(ErrorKind::VersionMismatch, "checkpoint format version " + std::to_string(version));
  }

  Checkpoint ck;
  ck.config.input_dim = r.u32();
  ck.config.output_dim = r.u32();
  ck.config.hidden_dim = r.u32();
  ck.config.num_layers = r.u32();
  ck.config.in_len = r.u32();
  ck.config.out_len = r.u32();
  ck.config.dropout_rate = r.f64();
  ck.config.validate();
  const std::uint32_t channel = r.u32();
  const std::uint32_t method = r.u32();
  const std::uint64_t fingerprint = r.u64();
  std::string text(r.u32(), '\0');
  r.bytes(text.data(), text.size());
  ck.stats = normalize::stats_from_text(text, path.string());
  if (ck.stats.fingerprint() != fingerprint || (channel == 0) != (ck.stats.channel == Channel::Position) ||
      (method == 0) != (ck.stats.method == normalize::Method::Whitening)) {
    throw Error(ErrorKind::CorruptCheckpoint, "embedded normalization stats do not match the header");
  }

  ck.params = ModelParams::zeros(ck.config);
  if (r.u64() != ck.params.parameter_count()) throw Error(ErrorKind::CorruptCheckpoint, "parameter count mismatch");
  for (Matrix* m : ck.params.tensors()) {
    for (double& v : m->values()) v = r.f64();
  }
  if (r.remaining() != 0) throw Error(ErrorKind::CorruptCheckpoint, "trailing bytes before checksum");
  return ck;
}

}  // namespace uavtraj::model
