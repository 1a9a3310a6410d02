#pragma once

#include <cstdint>
#include <utility>

#include "uavtraj/dataset.hpp"
#include "uavtraj/numerics.hpp"

namespace uavtraj::trajgen {

enum class Kind { Circle, Infinity };

const char* to_string(Kind kind) noexcept;
Kind kind_from_string(const std::string& s);

struct TrajectoryParams {
  Kind kind = Kind::Circle;
  Vec3 center;         // m
  Vec3 normal{0, 0, 1};  // plane normal before normalization, any non-zero length
  double radius = 1.0;   // m
  double omega = 1.0;    // rad/s

  void validate() const;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Per-axis sampling box for trajectory parameters.
struct ParamBounds {
  std::array<Range, 3> center;
  std::array<Range, 3> normal;
  Range radius;
  Range omega;

  void validate() const;

  /// Default bounds: centre/normal x,y in [-40, 40], z in [5, 20];
  /// radius [1, 5] m; speed [0.3, 1.0] rad/s.
  static ParamBounds defaults();
};

/// Orthonormal in-plane basis (v1, v2) for the plane with normal n.
///
/// v1 is the coordinate axis least aligned with n̂ (ties resolved x, then y,
/// then z) with its n̂ component removed; v2 = n̂ × v1, so (v1, v2, n̂) is
/// right-handed. Throws DegenerateNormal when |n| <= 1e-12.
std::pair<Vec3, Vec3> orthonormal_basis(const Vec3& normal);

/// c + r (cos(ωt) v1 + sin(ωt) v2)
Vec3 circle_point(const TrajectoryParams& params, double t);
/// c + r (cos(ωt) v1 + sin(2ωt) v2)
Vec3 infinity_point(const TrajectoryParams& params, double t);
/// Dispatches on params.kind.
Vec3 point_at(const TrajectoryParams& params, double t);

/// Draws every field uniformly inside its bound. Normals shorter than 1e-6
/// are redrawn.
TrajectoryParams sample_params(Rng& rng, const ParamBounds& bounds, Kind kind);

/// Samples the curve at t = 0, ts, 2ts, ... <= duration.
dataset::SampledTrajectory generate_trajectory(const TrajectoryParams& params, double duration, double ts);

/// Lemniscate used for the out-of-distribution streaming experiment.
TrajectoryParams lemniscate_reference();

}  // namespace uavtraj::trajgen
