#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "uavtraj/normalize.hpp"

using namespace uavtraj;
using namespace uavtraj::normalize;

namespace {

std::vector<Vec3> gaussian_cloud(std::size_t n, std::uint64_t seed) {
  // x = A z + μ with A lower-triangular, so cov = A Aᵀ.
  Rng rng(seed);
  std::vector<Vec3> pts;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 z{rng.normal(), rng.normal(), rng.normal()};
    pts.push_back({3.0 * z[0] + 10.0, 1.0 * z[0] + 0.5 * z[1] - 4.0, -2.0 * z[0] + 0.3 * z[1] + 0.1 * z[2] + 7.0});
  }
  return pts;
}

struct Moments {
  Vec3 mean;
  double cov[3][3];
};

Moments moments(const std::vector<Vec3>& pts) {
  Moments m{};
  for (const auto& p : pts) m.mean = m.mean + p;
  m.mean = m.mean / static_cast<double>(pts.size());
  for (const auto& p : pts)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m.cov[i][j] += (p[i] - m.mean[i]) * (p[j] - m.mean[j]);
  for (auto& row : m.cov)
    for (double& v : row) v /= static_cast<double>(pts.size() - 1);
  return m;
}

}  // namespace

TEST_CASE("whitening: fitted moments match an independent computation") {
  const auto pts = gaussian_cloud(5000, 1);
  const auto s = fit_stats(pts, Method::Whitening);
  const auto m = moments(pts);
  for (int i = 0; i < 3; ++i) {
    CHECK(s.mean[i] == doctest::Approx(m.mean[i]).epsilon(1e-12));
    for (int j = 0; j < 3; ++j) CHECK(s.cov(i, j) == doctest::Approx(m.cov[i][j]).epsilon(1e-10));
  }
  CHECK(s.regularization == 0.0);
}

TEST_CASE("whitening the fit set gives zero mean and identity covariance") {
  const auto pts = gaussian_cloud(3000, 2);
  const auto s = fit_stats(pts, Method::Whitening);
  std::vector<Vec3> w;
  for (const auto& p : pts) w.push_back(whiten(p, s));
  const auto m = moments(w);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(m.mean[i]) < 1e-9);
    for (int j = 0; j < 3; ++j) CHECK(std::abs(m.cov[i][j] - (i == j ? 1.0 : 0.0)) < 1e-6);
  }
}

TEST_CASE("whiten/dewhiten and maxnorm inverses") {
  const auto pts = gaussian_cloud(1000, 3);
  const auto sw = fit_stats(pts, Method::Whitening);
  const auto sm = fit_stats(pts, Method::MaxNorm);
  Rng rng(4);
  for (int i = 0; i < 2000; ++i) {
    const Vec3 p{rng.uniform(-1e3, 1e3), rng.uniform(-1e3, 1e3), rng.uniform(-1e3, 1e3)};
    CHECK(norm(dewhiten(whiten(p, sw), sw) - p) < 1e-9);
    CHECK(norm(maxnorm_invert(maxnorm_apply(p, sm), sm) - p) < 1e-9);
    CHECK(norm(invert(apply(p, sw), sw) - p) < 1e-9);
  }
}

TEST_CASE("maxnorm: hand example and unit bound") {
  const std::vector<Vec3> pts{{3, 4, 0}, {1, 0, 0}, {0, 0, -2}};
  const auto s = fit_stats(pts, Method::MaxNorm, Channel::Velocity);
  CHECK(s.max_norm == 5.0);
  CHECK(s.channel == Channel::Velocity);
  CHECK(maxnorm_apply({3, 4, 0}, s) == Vec3{0.6, 0.8, 0.0});
  for (const auto& p : gaussian_cloud(500, 5)) {
    static const auto big = fit_stats(gaussian_cloud(500, 5), Method::MaxNorm);
    CHECK(norm(maxnorm_apply(p, big)) <= 1.0 + 1e-15);
  }
  const std::vector<Vec3> zeros(4);
  CHECK_THROWS_AS(fit_stats(zeros, Method::MaxNorm), Error);
}

TEST_CASE("method mismatch and channel mismatch are rejected") {
  const auto pts = gaussian_cloud(100, 6);
  const auto sm = fit_stats(pts, Method::MaxNorm);
  const auto sw = fit_stats(pts, Method::Whitening);
  CHECK_THROWS_AS(whiten({1, 2, 3}, sm), Error);
  CHECK_THROWS_AS(maxnorm_apply({1, 2, 3}, sw), Error);

  dataset::SegmentSet set;
  set.channel = Channel::Velocity;
  try {
    apply_set(set, sm);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ChannelMismatch);
  }
}

TEST_CASE("singular covariance is regularized within the cap") {
  // Points on a plane: covariance is singular; the ramp adds at most 1e-8.
  std::vector<Vec3> plane;
  Rng rng(7);
  for (int i = 0; i < 200; ++i) plane.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), 2.0});
  const auto s = fit_stats(plane, Method::Whitening);
  CHECK(s.regularization > 0.0);
  CHECK(s.regularization <= kMaxRegularization);
  const Vec3 q{0.3, -0.2, 2.0};
  CHECK(norm(dewhiten(whiten(q, s), s) - q) < 1e-9);

  // Collinear points: rank-1 covariance, still factorable after the ramp.
  const auto line = fit_stats(std::vector<Vec3>{{1, 0, 0}, {2, 0, 0}, {3, 0, 0}}, Method::Whitening);
  CHECK(line.regularization > 0.0);
  CHECK(line.chol.all_finite());
  const std::vector<Vec3> same(10, Vec3{1, 1, 1});
  CHECK_NOTHROW(fit_stats(same, Method::MaxNorm));
}

TEST_CASE("stats text and file round-trip bitwise") {
  const auto pts = gaussian_cloud(777, 8);
  for (auto method : {Method::Whitening, Method::MaxNorm}) {
    const auto s = fit_stats(pts, method, Channel::Velocity);
    const auto back = stats_from_text(stats_to_text(s));
    CHECK(back == s);
    CHECK(back.fingerprint() == s.fingerprint());
    const auto path = std::filesystem::temp_directory_path() / "uavtraj_stats_test.txt";
    save_stats(s, path);
    CHECK(load_stats(path) == s);
  }
  CHECK_THROWS_AS(stats_from_text("format_version = 99\n"), Error);
  CHECK_THROWS_AS(stats_from_text("garbage"), Error);
}
