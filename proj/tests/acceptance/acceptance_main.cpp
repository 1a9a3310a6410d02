// Acceptance runner: one PASS/FAIL line per criterion.
// Usage: uavtraj_acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <unistd.h>

#include "../support/gradcheck.hpp"
#include "uavtraj/dataset.hpp"
#include "uavtraj/metrics.hpp"
#include "uavtraj/model.hpp"
#include "uavtraj/normalize.hpp"
#include "uavtraj/stream.hpp"
#include "uavtraj/train.hpp"
#include "uavtraj/trajgen.hpp"

namespace fs = std::filesystem;
using namespace uavtraj;

namespace {

// ---- pinned tolerances and budgets ---------------------------------------

constexpr double kInverseTol = 1e-9;          // AC1
constexpr double kWhitenMeanTol = 1e-2;       // AC2
constexpr double kWhitenCovTol = 5e-2;        // AC2
constexpr double kWhitenExactTol = 1e-6;      // AC2
constexpr double kGruTol = 1e-6;              // AC3
constexpr double kGruListedValue = 0.174466;  // AC3, reported only
constexpr double kGradTol = 1e-4;             // AC4
constexpr double kGradEps = 1e-5;             // AC4
constexpr double kValTarget = 1e-3;           // AC5
constexpr std::size_t kMaxEpochs = 300;       // AC5, AC6
constexpr double kOodFraction = 0.10;         // AC6: RMSE <= 10% of the diameter
constexpr double kEquivTol = 1e-9;            // AC7
constexpr double kWitnessMin = 1e-3;          // AC7: position model must miss by more than this
constexpr double kLrTol = 1e-18;              // AC8
constexpr double kMetricTol = 1e-12;          // AC9 (random-case properties)
constexpr double kGeomTol = 1e-9;             // AC10

// Desk-scale corpus shared by AC5 and AC6.
constexpr std::size_t kCorpusTrajectories = 200;
constexpr double kCorpusDuration = 30.0;
constexpr std::size_t kCorpusStride = 10;
constexpr std::uint64_t kCorpusSeed = 2024;
constexpr double kTrainFrac = 0.7;
constexpr double kValFrac = 0.15;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double max_abs_diff(const Vec3& a, const Vec3& b) {
  return std::max({std::abs(a[0] - b[0]), std::abs(a[1] - b[1]), std::abs(a[2] - b[2])});
}

Vec3 random_in_ball(Rng& rng, double radius) {
  while (true) {
    const Vec3 v{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    if (dot(v, v) <= 1.0) return radius * v;
  }
}

// Anisotropic correlated Gaussian: A z + mu.
Vec3 anisotropic_sample(Rng& rng) {
  const Vec3 z{rng.normal(), rng.normal(), rng.normal()};
  return Vec3{5.0 * z[0] + 3.0, 2.0 * z[0] + 1.0 * z[1] - 7.0, -1.0 * z[0] + 0.5 * z[1] + 0.2 * z[2] + 12.0};
}

const Matrix& anisotropic_cov() {
  // A Aᵀ for the mixing matrix above.
  static const Matrix s{{25.0, 10.0, -5.0}, {10.0, 5.0, -1.5}, {-5.0, -1.5, 1.29}};
  return s;
}

// ---- AC1 ------------------------------------------------------------------

Outcome ac1_inverses() {
  Rng rng(101);
  std::vector<Vec3> fit;
  for (int i = 0; i < 2000; ++i) fit.push_back(anisotropic_sample(rng));
  const auto ws = normalize::fit_stats(fit, normalize::Method::Whitening);
  const auto ms = normalize::fit_stats(fit, normalize::Method::MaxNorm);
  double worst_w = 0.0, worst_m = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Vec3 p = random_in_ball(rng, 1e3);
    worst_w = std::max(worst_w, max_abs_diff(normalize::dewhiten(normalize::whiten(p, ws), ws), p));
    worst_m = std::max(worst_m, max_abs_diff(normalize::maxnorm_invert(normalize::maxnorm_apply(p, ms), ms), p));
  }
  return {worst_w <= kInverseTol && worst_m <= kInverseTol,
          fmt("whiten %.2e, maxnorm %.2e (tol %.0e)", worst_w, worst_m, kInverseTol)};
}

// ---- AC2 ------------------------------------------------------------------

Outcome ac2_whitening() {
  Rng rng(202);
  std::vector<Vec3> pts;
  for (int i = 0; i < 10000; ++i) pts.push_back(anisotropic_sample(rng));
  const auto stats = normalize::fit_stats(pts, normalize::Method::Whitening);
  std::vector<Vec3> white;
  for (const auto& p : pts) white.push_back(normalize::whiten(p, stats));
  const auto refit = normalize::fit_stats(white, normalize::Method::Whitening);

  double mean_err = 0.0, cov_err = 0.0;
  for (int i = 0; i < 3; ++i) {
    mean_err = std::max(mean_err, std::abs(refit.mean[i]));
    for (int j = 0; j < 3; ++j) cov_err = std::max(cov_err, std::abs(refit.cov(i, j) - (i == j ? 1.0 : 0.0)));
  }

  // Fitted factor against the population: L⁻¹ Σ L⁻ᵀ should be near I.
  double pop_err = 0.0;
  const Matrix& sigma = anisotropic_cov();
  Matrix left(3, 3);  // L⁻¹ Σ
  for (int j = 0; j < 3; ++j) {
    const Vec3 a = solve_lower(stats.chol, Vec3{sigma(0, j), sigma(1, j), sigma(2, j)});
    for (int i = 0; i < 3; ++i) left(i, j) = a[i];
  }
  for (int i = 0; i < 3; ++i) {
    const Vec3 b = solve_lower(stats.chol, left.row3(i));  // row i of L⁻¹ Σ L⁻ᵀ
    for (int j = 0; j < 3; ++j) pop_err = std::max(pop_err, std::abs(b[j] - (i == j ? 1.0 : 0.0)));
  }

  const bool pass = mean_err <= kWhitenMeanTol && cov_err <= kWhitenCovTol && mean_err <= kWhitenExactTol &&
                    cov_err <= kWhitenExactTol && pop_err <= kWhitenCovTol;
  return {pass, fmt("refit mean %.2e, refit cov %.2e (tol %.0e / %.0e, exact %.0e); population cov %.2e", mean_err,
                    cov_err, kWhitenMeanTol, kWhitenCovTol, kWhitenExactTol, pop_err)};
}

// ---- AC3 ------------------------------------------------------------------

Outcome ac3_gru_example() {
  model::GruLayerWeights w(1, 1);
  for (Matrix* m : {&w.w_ir, &w.w_hr, &w.w_iu, &w.w_hu, &w.w_x1, &w.w_h1}) m->fill(0.5);
  const double x[] = {1.0}, h0[] = {0.0};
  const double h = model::gru_cell_forward(x, h0, w)[0];
  // Independent hand evaluation of the gate equations with h_prev = 0.
  const double sig = 1.0 / (1.0 + std::exp(-0.5));
  const double oracle = std::tanh(0.5) * (1.0 - sig);
  const double err = std::abs(h - oracle);
  return {err <= kGruTol, fmt("h=%.8f oracle=%.8f err %.1e (tol %.0e); listed value %.6f is off by %.1e", h, oracle,
                              err, kGruTol, kGruListedValue, std::abs(oracle - kGruListedValue))};
}

// ---- AC4 ------------------------------------------------------------------

Outcome ac4_gradcheck() {
  model::ModelConfig c;
  c.hidden_dim = 8;
  c.num_layers = 2;
  c.in_len = 5;
  c.out_len = 3;
  c.dropout_rate = 0.5;
  double worst_eval = 0.0, worst_train = 0.0;
  std::size_t checked = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto e = testing::gradient_check(c, seed, 2, model::Mode::Eval, kGradEps);
    const auto t = testing::gradient_check(c, seed, 2, model::Mode::Train, kGradEps);
    worst_eval = std::max(worst_eval, e.max_rel_error);
    worst_train = std::max(worst_train, t.max_rel_error);
    checked += e.checked + t.checked;
  }
  return {worst_eval <= kGradTol && worst_train <= kGradTol,
          fmt("max rel error eval %.2e, train (fixed masks) %.2e over %zu entries (tol %.0e)", worst_eval,
              worst_train, checked, kGradTol)};
}

// ---- shared corpus and training (AC5, AC6) --------------------------------

struct Corpus {
  dataset::Split split;
  normalize::NormStats stats;
};

Corpus build_corpus(Channel channel) {
  const auto bounds = trajgen::ParamBounds::defaults();
  const trajgen::Kind kinds[] = {trajgen::Kind::Circle, trajgen::Kind::Infinity};
  dataset::SegmentSet all;
  all.channel = channel;
  for (std::size_t i = 0; i < kCorpusTrajectories; ++i) {
    Rng rng(derive_seed(kCorpusSeed, i));
    const auto params = trajgen::sample_params(rng, bounds, kinds[i % 2]);
    auto traj = trajgen::generate_trajectory(params, kCorpusDuration, all.ts);
    if (channel == Channel::Velocity) traj = dataset::derive_velocity(traj, all.ts);
    for (auto& p : dataset::window(traj, all.in_len, all.out_len, kCorpusStride, i)) all.pairs.push_back(std::move(p));
  }
  Corpus c;
  c.split = dataset::split(all, kTrainFrac, kValFrac, derive_seed(kCorpusSeed, 0x5));
  c.stats = normalize::fit_stats(dataset::all_points(c.split.train), normalize::Method::MaxNorm, channel);
  c.split.train = normalize::apply_set(c.split.train, c.stats);
  c.split.val = normalize::apply_set(c.split.val, c.stats);
  c.split.test = normalize::apply_set(c.split.test, c.stats);
  return c;
}

model::ModelConfig desk_model() {
  model::ModelConfig m;  // 64 x 2, in 20 / out 10
  m.dropout_rate = 0.5;
  return m;
}

train::TrainConfig desk_training() {
  train::TrainConfig t;
  t.max_epochs = kMaxEpochs;
  t.batch_size = 32;
  t.seed = 7;
  return t;
}

struct Trained {
  model::Checkpoint checkpoint;
  train::TrainHistory history;
  dataset::SegmentSet val;
  double seconds = 0.0;
};

Trained train_desk(Channel channel) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto corpus = build_corpus(channel);
  const auto mc = desk_model();
  const auto result =
      train::train_loop(corpus.split.train, corpus.split.val, mc, desk_training(), nullptr, [&](const train::EpochRecord& r) {
        if (r.epoch % 25 == 0) {
          std::printf("  [%s model] epoch %3zu  train %.3e  val %.3e\n", to_string(channel), r.epoch, r.train_loss,
                      r.val_loss);
          std::fflush(stdout);
        }
      });
  Trained out{{result.best, mc, corpus.stats}, result.history, corpus.split.val, 0.0};
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("  [%s model] %zu train / %zu val pairs, %zu epochs, best epoch %zu, best val %.3e, %.0f s\n",
              to_string(channel), corpus.split.train.size(), corpus.split.val.size(), out.history.epochs.size(),
              out.history.best_epoch, out.history.best_val_loss, out.seconds);
  std::fflush(stdout);
  return out;
}

const Trained& velocity_model() {
  static const Trained t = train_desk(Channel::Velocity);
  return t;
}

// ---- AC5 ------------------------------------------------------------------

Outcome ac5_training() {
  const auto& t = velocity_model();
  const auto& h = t.history;
  double best = std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (const auto& e : h.epochs) {
    if (e.val_loss < best) {
      best = e.val_loss;
      arg = e.epoch;
    }
  }
  // Best-checkpoint property: returned params reproduce the minimum validation loss.
  const double reval = train::evaluate_loss(t.checkpoint.params, t.checkpoint.config, t.val);
  const bool best_ok = h.best_epoch == arg && h.best_val_loss == best && reval == best;
  const bool pass = h.epochs.size() <= kMaxEpochs && best <= kValTarget && best_ok;
  return {pass, fmt("best val MSE %.3e at epoch %zu of %zu (target %.0e), re-evaluated %.3e, best-checkpoint %s", best,
                    arg, h.epochs.size(), kValTarget, reval, best_ok ? "ok" : "VIOLATED")};
}

// ---- AC6 ------------------------------------------------------------------

Outcome ac6_ood_ordering() {
  const auto& vel = velocity_model();
  const auto pos = train_desk(Channel::Position);
  const auto source = trajgen::lemniscate_reference();
  stream::SimOptions opts;  // jitter 0.3, rolling window 100
  opts.seed = 11;
  const stream::GeneratorSource src{source, 60.0};
  const auto rv = stream::run_stream_sim(src, vel.checkpoint, opts);
  const auto rp = stream::run_stream_sim(src, pos.checkpoint, opts);
  const double diameter = 2.0 * source.radius;
  const double limit = kOodFraction * diameter;
  const bool pass = rv.rolling.average_rmse < rp.rolling.average_rmse && rv.rolling.average_rmse <= limit;
  return {pass, fmt("rolling RMSE velocity %.4f m vs position %.4f m over %zu records; limit %.2f m; training %.0f s + %.0f s",
                    rv.rolling.average_rmse, rp.rolling.average_rmse, rv.rolling.count, limit, vel.seconds, pos.seconds)};
}

// ---- AC7 ------------------------------------------------------------------

model::Checkpoint untrained_checkpoint(Channel channel) {
  model::ModelConfig c;
  c.hidden_dim = 16;
  model::Checkpoint ck{model::init_params(c, 77), c, {}};
  Rng rng(78);
  std::vector<Vec3> pts;
  for (int i = 0; i < 500; ++i) pts.push_back(random_in_ball(rng, channel == Channel::Velocity ? 5.0 : 50.0));
  ck.stats = normalize::fit_stats(pts, normalize::Method::MaxNorm, channel);
  return ck;
}

stream::PredictionRecord stream_once(const model::Checkpoint& ck, stream::ModelKind kind, const Vec3& shift,
                                     std::size_t n) {
  stream::StreamPredictor sp(ck, kind);
  auto p = trajgen::lemniscate_reference();
  p.center = Vec3{1.5, -2.0, 8.0} + shift;
  Rng jitter(5);
  double t = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sp.push({t, trajgen::point_at(p, t)});
    t += 0.1 * (1.0 + jitter.uniform(-0.3, 0.3));
  }
  return sp.predict();
}

Outcome ac7_equivariance() {
  const Vec3 delta{-100.0, 0.0, 10.0};
  const auto vck = untrained_checkpoint(Channel::Velocity);
  const auto v0 = stream_once(vck, stream::ModelKind::VelocityModel, {}, 40);
  const auto v1 = stream_once(vck, stream::ModelKind::VelocityModel, delta, 40);
  double worst = 0.0;
  for (std::size_t k = 0; k < v0.predicted.size(); ++k)
    worst = std::max(worst, max_abs_diff(v1.predicted[k] - v0.predicted[k], delta));

  const auto pck = untrained_checkpoint(Channel::Position);
  const auto p0 = stream_once(pck, stream::ModelKind::PositionModel, {}, 40);
  const auto p1 = stream_once(pck, stream::ModelKind::PositionModel, delta, 40);
  double witness = 0.0;
  for (std::size_t k = 0; k < p0.predicted.size(); ++k)
    witness = std::max(witness, max_abs_diff(p1.predicted[k] - p0.predicted[k], delta));
  return {worst <= kEquivTol && witness > kWitnessMin,
          fmt("velocity deviation %.2e (tol %.0e); position witness deviation %.3f m (> %.0e)", worst, kEquivTol,
              witness, kWitnessMin)};
}

// ---- AC8 ------------------------------------------------------------------

Outcome ac8_schedule() {
  const train::TrainConfig tc;
  const double l0 = train::lr_at(0, tc), l50 = train::lr_at(50, tc), l100 = train::lr_at(100, tc);
  const bool lr_ok = std::abs(l0 - 1e-3) <= kLrTol && std::abs(l50 - 1e-4) <= kLrTol && std::abs(l100 - 1e-5) <= kLrTol;

  // Stub: a constant validation curve fed straight to the stopper.
  train::EarlyStopping es(100);
  std::size_t observed = 0;
  while (!es.should_stop() && observed < 10000) {
    es.observe(0.125);
    ++observed;
  }
  const bool stub_ok = observed == 101 && es.since_best() == 100 && es.best_epoch() == 0;

  // Same through the training loop with frozen parameters.
  model::ModelConfig c;
  c.hidden_dim = 4;
  c.num_layers = 1;
  c.in_len = 3;
  c.out_len = 2;
  c.dropout_rate = 0.0;
  dataset::SegmentSet set;
  set.in_len = c.in_len;
  set.out_len = c.out_len;
  Rng rng(8);
  for (std::uint64_t i = 0; i < 4; ++i)
    set.pairs.push_back({testing::random_matrix(3, 3, rng), testing::random_matrix(2, 3, rng), Channel::Position, i, 0});
  train::TrainConfig frozen;
  frozen.lr0 = 1e-300;
  frozen.max_epochs = 1000;
  const auto r = train::train_loop(set, set, c, frozen);
  const bool loop_ok = r.history.stop_reason == train::StopReason::EarlyStopping && r.history.epochs.size() == 101 &&
                       r.history.best_epoch == 0;
  return {lr_ok && stub_ok && loop_ok,
          fmt("lr %.0e/%.0e/%.0e; stub stopped after %zu epochs (%zu non-improving); loop ran %zu epochs (%s)", l0,
              l50, l100, observed, es.since_best(), r.history.epochs.size(), train::to_string(r.history.stop_reason))};
}

// ---- AC9 ------------------------------------------------------------------

Outcome ac9_metrics() {
  const Matrix y{{1}, {2}, {3}}, yhat{{2}, {2}, {2}};
  const auto r = metrics::evaluate(std::vector<Matrix>{yhat}, std::vector<Matrix>{y});
  const bool exact = r.mse == 2.0 / 3.0 && r.rmse == std::sqrt(2.0 / 3.0) && r.mae == 2.0 / 3.0 && r.r2 &&
                     *r.r2 == 0.0 && metrics::adjusted_r2(1.0, 2) == 1.0 / 130.0;
  Rng rng(9);
  std::size_t violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Matrix> p, t;
    const std::size_t n = 1 + rng.below(4);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t rows = 1 + rng.below(10);
      p.push_back(testing::random_matrix(rows, 3, rng, 10.0));
      t.push_back(testing::random_matrix(rows, 3, rng, 10.0));
    }
    const auto m = metrics::evaluate(p, t);
    if (std::abs(m.rmse * m.rmse - m.mse) > kMetricTol * m.mse || m.mae > m.rmse * (1.0 + kMetricTol)) ++violations;
  }
  return {exact && violations == 0,
          fmt("closed form %s; %zu/1000 random cases violate rmse^2=mse or mae<=rmse", exact ? "exact" : "WRONG",
              violations)};
}

// ---- AC10 -----------------------------------------------------------------

Outcome ac10_geometry() {
  Rng rng(10);
  const auto bounds = trajgen::ParamBounds::defaults();
  double radial = 0.0, planar = 0.0;
  for (int c = 0; c < 20; ++c) {
    const auto p = trajgen::sample_params(rng, bounds, trajgen::Kind::Circle);
    const Vec3 n = p.normal / norm(p.normal);
    for (int i = 0; i < 1000; ++i) {
      const double t = rng.uniform(0.0, 100.0);
      const Vec3 d = trajgen::circle_point(p, t) - p.center;
      radial = std::max(radial, std::abs(norm(d) - p.radius));
      planar = std::max(planar, std::abs(dot(d, n)));
    }
  }
  const auto lem = trajgen::lemniscate_reference();
  const double cross =
      max_abs_diff(trajgen::point_at(lem, std::numbers::pi / (2.0 * lem.omega)), lem.center);
  return {radial < kGeomTol && planar < kGeomTol && cross < kGeomTol,
          fmt("radius %.1e, planarity %.1e, lemniscate at pi/(2w) %.1e (tol %.0e)", radial, planar, cross, kGeomTol)};
}

// ---- AC11 -----------------------------------------------------------------

Outcome ac11_pipeline() {
  const double ts = 0.1;
  const auto params = trajgen::lemniscate_reference();
  const auto traj = trajgen::generate_trajectory(params, 12.0, ts);
  std::size_t compared = 0, mismatched = 0;
  for (const auto kind : {stream::ModelKind::VelocityModel, stream::ModelKind::PositionModel}) {
    const Channel channel = kind == stream::ModelKind::VelocityModel ? Channel::Velocity : Channel::Position;
    const auto ck = untrained_checkpoint(channel);
    const auto offline_traj = channel == Channel::Velocity ? dataset::derive_velocity(traj, ts) : traj;
    const auto pairs = dataset::window(offline_traj, ck.config.in_len, ck.config.out_len, 1);
    stream::StreamPredictor sp(ck, kind);
    for (std::size_t k = 0; k < traj.size(); ++k) {
      if (!sp.push({traj.t[k], traj.points[k]})) continue;
      // Offline window whose last input row ends at sample k.
      const std::size_t last = channel == Channel::Velocity ? k - 1 : k;
      const std::size_t start = last + 1 - ck.config.in_len;
      if (start >= pairs.size()) break;
      const Matrix offline = normalize::apply_rows(pairs[start].input, ck.stats);
      const Matrix online = sp.model_input();
      ++compared;
      if (!(online == offline)) ++mismatched;
      const Matrix out = model::model_forward(offline, ck.params, ck.config, model::Mode::Eval).output;
      const auto rec = sp.predict();
      const Matrix phys = normalize::invert_rows(out, ck.stats);
      if (kind == stream::ModelKind::PositionModel) {
        for (std::size_t r = 0; r < phys.rows(); ++r)
          if (!(rec.predicted[r] == phys.row3(r))) ++mismatched;
      }
    }
  }
  return {compared > 0 && mismatched == 0, fmt("%zu windows compared, %zu mismatches", compared, mismatched)};
}

// ---- AC12 -----------------------------------------------------------------

std::vector<unsigned char> read_bytes(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& p, const std::vector<unsigned char>& b) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  os.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

Outcome ac12_persistence() {
  const fs::path dir = fs::temp_directory_path() / ("uavtraj_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  auto ck = untrained_checkpoint(Channel::Velocity);
  ck.config.hidden_dim = 8;
  ck.params = model::init_params(ck.config, 12);
  Rng rng(12);
  std::vector<Vec3> pts;
  for (int i = 0; i < 300; ++i) pts.push_back(anisotropic_sample(rng));
  const auto wstats = normalize::fit_stats(pts, normalize::Method::Whitening);

  model::save_checkpoint(ck.params, ck.config, ck.stats, dir / "a.ckpt");
  const auto back = model::load_checkpoint(dir / "a.ckpt");
  model::save_checkpoint(back.params, back.config, back.stats, dir / "b.ckpt");
  const auto bytes = read_bytes(dir / "a.ckpt");
  const bool ck_ok = back.params.same_values(ck.params) && back.config == ck.config && back.stats == ck.stats &&
                     bytes == read_bytes(dir / "b.ckpt");

  normalize::save_stats(wstats, dir / "a.stats");
  const auto sback = normalize::load_stats(dir / "a.stats");
  normalize::save_stats(sback, dir / "b.stats");
  const bool stats_ok = sback == wstats && read_bytes(dir / "a.stats") == read_bytes(dir / "b.stats");

  // Flip every byte of the checkpoint in turn; each must be rejected.
  std::size_t undetected = 0;
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    auto bad = bytes;
    bad[i] ^= 0x5A;
    write_bytes(dir / "bad.ckpt", bad);
    try {
      model::load_checkpoint(dir / "bad.ckpt");
      ++undetected;
    } catch (const Error&) {
    }
  }
  fs::remove_all(dir);
  return {ck_ok && stats_ok && undetected == 0,
          fmt("checkpoint round-trip %s, stats round-trip %s, %zu/%zu corrupted bytes undetected", ck_ok ? "bitwise" : "DIFFERS",
              stats_ok ? "bitwise" : "DIFFERS", undetected, bytes.size())};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "normalization inverses", ac1_inverses},
      {2, "whitening correctness", ac2_whitening},
      {3, "GRU cell hand example", ac3_gru_example},
      {4, "gradient check", ac4_gradcheck},
      {5, "desk-scale training", ac5_training},
      {6, "out-of-distribution ordering", ac6_ood_ordering},
      {7, "translation equivariance", ac7_equivariance},
      {8, "scheduler and early stopping", ac8_schedule},
      {9, "metrics closed form", ac9_metrics},
      {10, "trajectory geometry", ac10_geometry},
      {11, "stream/offline pipeline equivalence", ac11_pipeline},
      {12, "persistence and corruption detection", ac12_persistence},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : all) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("AC%02d %s  %s: %s [%.2f s]\n", c.id, o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
