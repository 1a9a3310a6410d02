#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "uavtraj/numerics.hpp"

namespace uavtraj {

enum class Channel { Position, Velocity };

const char* to_string(Channel channel) noexcept;
Channel channel_from_string(const std::string& s);

}  // namespace uavtraj

namespace uavtraj::dataset {

/// Timestamps closer than this (seconds) to a sample are treated as landing
/// on it, so on-grid data passes through resampling untouched.
inline constexpr double kKnotTolerance = 1e-9;

struct SampledTrajectory {
  Channel channel = Channel::Position;
  std::vector<double> t;  // s, strictly increasing
  std::vector<Vec3> points;

  std::size_t size() const noexcept { return t.size(); }
  /// Throws on length mismatch, non-finite values or non-increasing time.
  void validate() const;

  friend bool operator==(const SampledTrajectory&, const SampledTrajectory&) = default;
};

/// One training example: in_len input rows and out_len target rows, 3 columns each.
struct SegmentPair {
  Matrix input;
  Matrix target;
  Channel channel = Channel::Position;
  std::uint64_t traj_id = 0;
  std::size_t start = 0;
};

struct SegmentSet {
  std::vector<SegmentPair> pairs;
  double ts = 0.1;
  Channel channel = Channel::Position;
  std::size_t in_len = 20;
  std::size_t out_len = 10;

  std::size_t size() const noexcept { return pairs.size(); }
  bool empty() const noexcept { return pairs.empty(); }
  /// Throws DimensionMismatch / WrongChannel on a heterogeneous set.
  void validate() const;
};

/// Linear interpolation of (t, p) at `query`; queries within kKnotTolerance
/// of a knot return that knot verbatim. Queries outside [t.front(), t.back()]
/// are clamped to the end samples.
Vec3 interpolate_at(std::span<const double> t, std::span<const Vec3> p, double query);

/// Forward difference (b - a) / ts, shared by the offline and streaming paths.
inline Vec3 finite_difference(const Vec3& a, const Vec3& b, double ts) { return (b - a) / ts; }

/// Resamples onto t0, t0+ts, ... <= t_last by linear interpolation.
SampledTrajectory resample(const SampledTrajectory& traj, double ts);

/// v_i = (p_{i+1} - p_i) / ts, i = 0..N-2, stamped at t_i.
SampledTrajectory derive_velocity(const SampledTrajectory& traj, double ts);

/// Sliding windows: pair k covers points [s, s+in_len) -> [s+in_len, s+in_len+out_len), s = k*stride.
std::vector<SegmentPair> window(const SampledTrajectory& traj, std::size_t in_len, std::size_t out_len,
                                std::size_t stride, std::uint64_t traj_id = 0);

/// max(0, floor((N - in_len - out_len) / stride) + 1)
std::size_t window_count(std::size_t n, std::size_t in_len, std::size_t out_len, std::size_t stride);

struct Split {
  SegmentSet train;
  SegmentSet val;
  SegmentSet test;
};

/// Splits by source trajectory: trajectory ids are shuffled with `seed`, the
/// first floor(train_frac*n) go to train, the next floor(val_frac*n) to
/// validation, the rest to test. Pair order inside each set is preserved.
Split split(const SegmentSet& set, double train_frac, double val_frac, std::uint64_t seed);

/// Every input and target row of the set, in pair order.
std::vector<Vec3> all_points(const SegmentSet& set);

// Trajectory CSV: header "t,x,y,z", one sample per line, 17 significant digits.
void write_trajectory_csv(const SampledTrajectory& traj, const std::filesystem::path& path);
SampledTrajectory read_trajectory_csv(const std::filesystem::path& path, Channel channel = Channel::Position);

// Segment set directory: manifest.txt (text) + segments.bin (payload).
void save_segment_set(const SegmentSet& set, const std::filesystem::path& dir);
SegmentSet load_segment_set(const std::filesystem::path& dir);

}  // namespace uavtraj::dataset
