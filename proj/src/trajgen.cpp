#include "uavtraj/trajgen.hpp"

#include <cmath>

namespace uavtraj::trajgen {

const char* to_string(Kind kind) noexcept { return kind == Kind::Circle ? "circle" : "infinity"; }

Kind kind_from_string(const std::string& s) {
  if (s == "circle") return Kind::Circle;
  if (s == "infinity" || s == "lemniscate") return Kind::Infinity;
  throw Error(ErrorKind::InvalidArgument, "unknown trajectory kind '" + s + "'");
}

void TrajectoryParams::validate() const {
  if (!(norm(normal) > 1e-12)) throw Error(ErrorKind::DegenerateNormal, "trajectory normal has zero length");
  if (!(radius > 0.0)) throw Error(ErrorKind::InvalidArgument, "radius must be positive");
  if (!(omega > 0.0)) throw Error(ErrorKind::InvalidArgument, "omega must be positive");
}

void ParamBounds::validate() const {
  auto check = [](const Range& r, const char* what) {
    if (!(r.lo <= r.hi)) throw Error(ErrorKind::InvalidRange, std::string(what) + " bound has lo > hi");
  };
  for (const auto& r : center) check(r, "center");
  for (const auto& r : normal) check(r, "normal");
  check(radius, "radius");
  check(omega, "omega");
  if (!(radius.lo > 0.0)) throw Error(ErrorKind::InvalidRange, "radius bound must be positive");
  if (!(omega.lo > 0.0)) throw Error(ErrorKind::InvalidRange, "omega bound must be positive");
}

ParamBounds ParamBounds::defaults() {
  ParamBounds b;
  b.center = {Range{-40.0, 40.0}, Range{-40.0, 40.0}, Range{5.0, 20.0}};
  b.normal = b.center;
  b.radius = {1.0, 5.0};
  b.omega = {0.3, 1.0};
  return b;
}

std::pair<Vec3, Vec3> orthonormal_basis(const Vec3& normal) {
  const double len = norm(normal);
  if (!(len > 1e-12)) throw Error(ErrorKind::DegenerateNormal, "normal vector length <= 1e-12");
  const Vec3 n = normal / len;

  std::size_t axis = 0;
  for (std::size_t i = 1; i < 3; ++i) {
    if (std::abs(n[i]) < std::abs(n[axis])) axis = i;
  }
  Vec3 e;
  e[axis] = 1.0;
  const Vec3 projected = e - dot(e, n) * n;
  const Vec3 v1 = projected / norm(projected);
  Vec3 v2 = cross(n, v1);
  v2 = v2 / norm(v2);
  return {v1, v2};
}

Vec3 circle_point(const TrajectoryParams& params, double t) {
  const auto [v1, v2] = orthonormal_basis(params.normal);
  const double a = params.omega * t;
  return params.center + params.radius * (std::cos(a) * v1 + std::sin(a) * v2);
}

Vec3 infinity_point(const TrajectoryParams& params, double t) {
  const auto [v1, v2] = orthonormal_basis(params.normal);
  const double a = params.omega * t;
  return params.center + params.radius * (std::cos(a) * v1 + std::sin(2.0 * a) * v2);
}

Vec3 point_at(const TrajectoryParams& params, double t) {
  return params.kind == Kind::Circle ? circle_point(params, t) : infinity_point(params, t);
}

TrajectoryParams sample_params(Rng& rng, const ParamBounds& bounds, Kind kind) {
  bounds.validate();
  TrajectoryParams p;
  p.kind = kind;
  for (std::size_t i = 0; i < 3; ++i) p.center[i] = uniform_or_fixed(rng, bounds.center[i].lo, bounds.center[i].hi);
  for (int attempt = 0;; ++attempt) {
    for (std::size_t i = 0; i < 3; ++i) p.normal[i] = uniform_or_fixed(rng, bounds.normal[i].lo, bounds.normal[i].hi);
    if (norm(p.normal) >= 1e-6) break;
    if (attempt > 1000) throw Error(ErrorKind::DegenerateNormal, "normal bounds only admit near-zero vectors");
  }
  p.radius = uniform_or_fixed(rng, bounds.radius.lo, bounds.radius.hi);
  p.omega = uniform_or_fixed(rng, bounds.omega.lo, bounds.omega.hi);
  return p;
}

dataset::SampledTrajectory generate_trajectory(const TrajectoryParams& params, double duration, double ts) {
  if (!(duration > 0.0)) throw Error(ErrorKind::InvalidDuration, "duration must be positive");
  if (!(ts > 0.0)) throw Error(ErrorKind::InvalidDuration, "sampling interval must be positive");
  params.validate();

  const auto n = static_cast<std::size_t>(std::floor(duration / ts + 1e-9)) + 1;

  dataset::SampledTrajectory traj;
  traj.channel = Channel::Position;
  traj.t.reserve(n);
  traj.points.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * ts;
    traj.t.push_back(t);
    traj.points.push_back(point_at(params, t));
  }
  return traj;
}

TrajectoryParams lemniscate_reference() {
  TrajectoryParams p;
  p.kind = Kind::Infinity;
  p.center = {-100.0, 0.0, 10.0};
  p.normal = {1.0, 1.0, 1.0};
  p.radius = 3.0;
  p.omega = 0.8;
  return p;
}

}  // namespace uavtraj::trajgen
