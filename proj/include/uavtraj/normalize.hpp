#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "uavtraj/dataset.hpp"
#include "uavtraj/numerics.hpp"

namespace uavtraj::normalize {

enum class Method { Whitening, MaxNorm };

const char* to_string(Method method) noexcept;
Method method_from_string(const std::string& s);

/// Largest diagonal jitter added before giving up on a singular covariance.
inline constexpr double kMaxRegularization = 1e-8;

/// Fitted normalization statistics for one channel.
///
/// For Whitening, `cov` holds the (possibly regularized) covariance that
/// `chol` factors exactly, and `regularization` records the δ that was
/// added to the sample covariance. MaxNorm stats carry the mean for
/// reference; cov/chol stay zero.
struct NormStats {
  Method method = Method::MaxNorm;
  Channel channel = Channel::Position;
  Vec3 mean;
  Matrix cov = Matrix(3, 3);
  Matrix chol = Matrix(3, 3);
  double max_norm = 1.0;
  double regularization = 0.0;

  friend bool operator==(const NormStats&, const NormStats&) = default;

  /// FNV-1a over the bit patterns of every field; recorded in checkpoints.
  std::uint64_t fingerprint() const;
};

/// Sample mean / covariance (divisor N-1) / Cholesky factor, or the
/// maximum L2 norm, depending on `method`.
NormStats fit_stats(std::span<const Vec3> points, Method method, Channel channel = Channel::Position);

/// L⁻¹ (p − μ) by forward substitution.
Vec3 whiten(const Vec3& p, const NormStats& stats);
/// L · pw + μ
Vec3 dewhiten(const Vec3& pw, const NormStats& stats);
Vec3 maxnorm_apply(const Vec3& p, const NormStats& stats);
Vec3 maxnorm_invert(const Vec3& q, const NormStats& stats);

/// Method-dispatching forward / inverse transforms.
Vec3 apply(const Vec3& p, const NormStats& stats);
Vec3 invert(const Vec3& q, const NormStats& stats);

/// Row-wise transforms of an N×3 matrix.
Matrix apply_rows(const Matrix& m, const NormStats& stats);
Matrix invert_rows(const Matrix& m, const NormStats& stats);

/// Normalizes inputs and targets of every pair. Throws ChannelMismatch if
/// the stats were fitted on the other channel.
dataset::SegmentSet apply_set(const dataset::SegmentSet& set, const NormStats& stats);

void save_stats(const NormStats& stats, const std::filesystem::path& path);
NormStats load_stats(const std::filesystem::path& path);

/// Text form used by save_stats (also embedded in checkpoints).
std::string stats_to_text(const NormStats& stats);
NormStats stats_from_text(const std::string& text, const std::string& origin = "<memory>");

}  // namespace uavtraj::normalize
