// uavtraj: command-line driver for the trajectory forecasting pipeline.
//
// Artifact layout under --out DIR:
//   trajectories/manifest.txt, traj_NNNNN.csv   (generate)
//   segments/<channel>/{train,val,test}/         (segment)
//   norm/<channel>_<method>.txt                  (fit-norm)
//   models/<model_id>.ckpt, <model_id>_history.csv (train)
//   metrics/<model_id>.csv                       (evaluate)
//   stream/<model_id>.csv                        (stream-sim)
//   report.txt, report.csv                       (report)
//   meta/<command>.ini, meta/<command>.meta.txt  (every command)

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "uavtraj/config.hpp"
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

constexpr const char* kVersion = "1.0.0";

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument:
    case ErrorKind::InvalidRange:
    case ErrorKind::InvalidDuration:
    case ErrorKind::InvalidFractions:
      return kUsage;
    case ErrorKind::NotPositiveDefinite:
    case ErrorKind::SingularFactor:
    case ErrorKind::DegenerateCovariance:
    case ErrorKind::NonFiniteGradient:
    case ErrorKind::NonFiniteLoss:
      return kNumerical;
    default:
      return kData;
  }
}

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> overrides;
};

config::ExperimentConfig effective(const Common& c) {
  std::vector<std::string> ov = c.overrides;
  if (c.seed) ov.push_back("run.seed=" + std::to_string(*c.seed));
  if (!c.out.empty()) ov.push_back("run.out=" + c.out);
  return config::load(c.config_path, ov);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void require(const fs::path& path, const char* produced_by) {
  if (!fs::exists(path)) {
    throw Error(ErrorKind::Io, "missing " + path.string() + " (run `uavtraj " + produced_by + "` first)");
  }
}

// Config snapshot is byte-stable; anything time-dependent goes in .meta.txt.
void write_meta(const config::ExperimentConfig& cfg, const std::string& command) {
  const fs::path dir = cfg.out / "meta";
  write_text(dir / (command + ".ini"), config::to_text(cfg));
  const auto seeds = config::derive_seeds(cfg.seed);
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[64];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  std::ostringstream os;
  os << "command = " << command << "\nversion = " << kVersion << "\nfinished_utc = " << stamp
     << "\nseed = " << cfg.seed << "\nseed_generate = " << seeds.generate << "\nseed_split = " << seeds.split
     << "\nseed_train = " << seeds.train << "\nseed_stream = " << seeds.stream << "\n";
  write_text(dir / (command + ".meta.txt"), os.str());
}

fs::path traj_dir(const config::ExperimentConfig& c) { return c.out / "trajectories"; }
fs::path segment_dir(const config::ExperimentConfig& c) { return c.out / "segments" / to_string(c.channel); }
fs::path stats_path(const config::ExperimentConfig& c) {
  return c.out / "norm" / (std::string(to_string(c.channel)) + "_" + normalize::to_string(c.norm_method) + ".txt");
}
fs::path checkpoint_path(const config::ExperimentConfig& c) { return c.out / "models" / (c.model_id + ".ckpt"); }

int cmd_generate(const config::ExperimentConfig& cfg) {
  const auto seeds = config::derive_seeds(cfg.seed);
  const fs::path dir = traj_dir(cfg);
  fs::create_directories(dir);
  std::string manifest = "# id kind cx cy cz nx ny nz radius omega file\n";
  char line[512];
  for (std::size_t i = 0; i < cfg.n_trajectories; ++i) {
    Rng rng(derive_seed(seeds.generate, i));
    const auto kind = cfg.kinds[i % cfg.kinds.size()];
    const auto params = trajgen::sample_params(rng, cfg.bounds, kind);
    const auto traj = trajgen::generate_trajectory(params, cfg.duration, cfg.ts);
    char name[32];
    std::snprintf(name, sizeof name, "traj_%05zu.csv", i);
    dataset::write_trajectory_csv(traj, dir / name);
    std::snprintf(line, sizeof line, "%zu %s %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %s\n", i,
                  trajgen::to_string(kind), params.center[0], params.center[1], params.center[2], params.normal[0],
                  params.normal[1], params.normal[2], params.radius, params.omega, name);
    manifest += line;
  }
  write_text(dir / "manifest.txt", manifest);
  std::printf("generated %zu trajectories in %s\n", cfg.n_trajectories, dir.string().c_str());
  return kOk;
}

int cmd_segment(const config::ExperimentConfig& cfg) {
  const fs::path dir = traj_dir(cfg);
  require(dir / "manifest.txt", "generate");
  std::istringstream manifest(read_text(dir / "manifest.txt"));
  dataset::SegmentSet all;
  all.ts = cfg.ts;
  all.channel = cfg.channel;
  all.in_len = cfg.model.in_len;
  all.out_len = cfg.model.out_len;
  std::string line;
  std::size_t n_traj = 0;
  while (std::getline(manifest, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::uint64_t id = 0;
    std::string kind, file;
    double skip = 0.0;
    ls >> id >> kind;
    for (int k = 0; k < 8; ++k) ls >> skip;
    ls >> file;
    if (!ls) throw Error(ErrorKind::ParseError, "malformed manifest line: " + line);
    auto traj = dataset::read_trajectory_csv(dir / file);
    if (cfg.channel == Channel::Velocity) traj = dataset::derive_velocity(traj, cfg.ts);
    auto pairs = dataset::window(traj, all.in_len, all.out_len, cfg.stride, id);
    for (auto& p : pairs) all.pairs.push_back(std::move(p));
    ++n_traj;
  }
  const auto parts = dataset::split(all, cfg.train_frac, cfg.val_frac, config::derive_seeds(cfg.seed).split);
  const fs::path out = segment_dir(cfg);
  dataset::save_segment_set(parts.train, out / "train");
  dataset::save_segment_set(parts.val, out / "val");
  dataset::save_segment_set(parts.test, out / "test");
  std::printf("%zu trajectories -> %zu %s pairs (train %zu, val %zu, test %zu)\n", n_traj, all.size(),
              to_string(cfg.channel), parts.train.size(), parts.val.size(), parts.test.size());
  return kOk;
}

int cmd_fit_norm(const config::ExperimentConfig& cfg) {
  const fs::path train_dir = segment_dir(cfg) / "train";
  require(train_dir / "manifest.txt", "segment");
  const auto set = dataset::load_segment_set(train_dir);
  const auto points = dataset::all_points(set);
  const auto stats = normalize::fit_stats(points, cfg.norm_method, set.channel);
  fs::create_directories(stats_path(cfg).parent_path());
  normalize::save_stats(stats, stats_path(cfg));
  std::printf("fitted %s stats over %zu points -> %s\n", normalize::to_string(cfg.norm_method), points.size(),
              stats_path(cfg).string().c_str());
  return kOk;
}

int cmd_train(const config::ExperimentConfig& cfg) {
  const fs::path seg = segment_dir(cfg);
  require(seg / "train" / "manifest.txt", "segment");
  require(stats_path(cfg), "fit-norm");
  const auto stats = normalize::load_stats(stats_path(cfg));
  const auto train = normalize::apply_set(dataset::load_segment_set(seg / "train"), stats);
  const auto val = normalize::apply_set(dataset::load_segment_set(seg / "val"), stats);
  const auto result = train::train_loop(train, val, cfg.model, cfg.train, nullptr, [](const train::EpochRecord& r) {
    std::printf("epoch %4zu  lr %.1E  train %.6E  val %.6E%s\n", r.epoch, r.lr, r.train_loss, r.val_loss,
                r.is_best ? "  *" : "");
    std::fflush(stdout);
  });
  const fs::path ckpt = checkpoint_path(cfg);
  fs::create_directories(ckpt.parent_path());
  train::write_history_csv(result.history, cfg.out / "models" / (cfg.model_id + "_history.csv"));
  if (result.history.stop_reason == train::StopReason::NonFiniteLoss) {
    throw Error(ErrorKind::NonFiniteLoss, result.history.diagnostic);
  }
  model::save_checkpoint(result.best, cfg.model, stats, ckpt);
  std::printf("stop=%s best_epoch=%zu best_val=%.6E -> %s\n", train::to_string(result.history.stop_reason),
              result.history.best_epoch, result.history.best_val_loss, ckpt.string().c_str());
  return kOk;
}

int cmd_evaluate(const config::ExperimentConfig& cfg, const std::string& ckpt_flag, const std::string& split) {
  const fs::path ckpt_path = ckpt_flag.empty() ? checkpoint_path(cfg) : fs::path(ckpt_flag);
  require(ckpt_path, "train");
  const auto ck = model::load_checkpoint(ckpt_path);
  const fs::path set_dir = cfg.out / "segments" / to_string(ck.stats.channel) / split;
  require(set_dir / "manifest.txt", "segment");
  const auto set = normalize::apply_set(dataset::load_segment_set(set_dir), ck.stats);
  if (set.empty()) throw Error(ErrorKind::EmptyDataset, "the " + split + " split is empty");
  std::vector<const Matrix*> inputs;
  std::vector<Matrix> targets;
  for (const auto& p : set.pairs) {
    inputs.push_back(&p.input);
    targets.push_back(p.target);
  }
  const auto preds = model::predict_all(ck.params, ck.config, inputs);
  auto report = metrics::evaluate(preds, targets);
  metrics::annotate(report, cfg.model_id, to_string(ck.stats.channel), normalize::to_string(ck.stats.method),
                    ck.config.hidden_dim, ck.config.num_layers);
  const metrics::MetricsReport one[] = {report};
  write_text(cfg.out / "metrics" / (cfg.model_id + ".csv"), metrics::reports_to_csv(one));
  std::printf("%s", metrics::report_table({report}, metrics::Layout::Grid).text.c_str());
  return kOk;
}

int cmd_stream_sim(const config::ExperimentConfig& cfg, const std::string& ckpt_flag) {
  const fs::path ckpt_path = ckpt_flag.empty() ? checkpoint_path(cfg) : fs::path(ckpt_flag);
  require(ckpt_path, "train");
  const auto ck = model::load_checkpoint(ckpt_path);
  stream::SimOptions opts;
  opts.jitter = cfg.jitter;
  opts.seed = config::derive_seeds(cfg.seed).stream;
  opts.rolling_window = cfg.rolling_window;
  opts.predictor.ts = cfg.ts;
  const auto result =
      stream::run_stream_sim(stream::GeneratorSource{cfg.stream_source, cfg.stream_duration}, ck, opts);
  const fs::path out = cfg.out / "stream" / (cfg.model_id + ".csv");
  fs::create_directories(out.parent_path());
  stream::write_records_csv(result, out);
  std::printf("%s: average_rmse=%.6f m over %zu records (rolling %.6f m over %zu%s)\n", stream::to_string(result.kind),
              result.average_rmse, result.complete, result.rolling.average_rmse, result.rolling.count,
              result.rolling.partial ? ", partial" : "");
  return kOk;
}

int cmd_report(const config::ExperimentConfig& cfg, const std::string& layout) {
  const fs::path dir = cfg.out / "metrics";
  require(dir, "evaluate");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<metrics::MetricsReport> reports;
  for (const auto& f : files) {
    for (auto& r : metrics::reports_from_csv(read_text(f), f.string())) reports.push_back(std::move(r));
  }
  const auto table =
      metrics::report_table(reports, layout == "comparison" ? metrics::Layout::Comparison : metrics::Layout::Grid);
  write_text(cfg.out / "report.txt", table.text);
  write_text(cfg.out / "report.csv", table.csv);
  std::printf("%s", table.text.c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UAV 3D trajectory forecasting pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "INI configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "top-level seed (overrides run.seed)");
    sub->add_option("--out", common.out, "output directory (overrides run.out)");
    sub->add_option("--set", common.overrides, "override a field, e.g. --set model.hidden=128")->take_all();
  };

  std::string ckpt;
  std::string split = "test";
  std::string layout = "grid";

  auto* gen = app.add_subcommand("generate", "write synthetic trajectories");
  auto* seg = app.add_subcommand("segment", "window trajectories into train/val/test pairs");
  auto* fit = app.add_subcommand("fit-norm", "fit normalization statistics on the training split");
  auto* trn = app.add_subcommand("train", "train the GRU encoder-decoder");
  auto* evl = app.add_subcommand("evaluate", "score a checkpoint on a split");
  auto* sim = app.add_subcommand("stream-sim", "replay a streaming trajectory through a checkpoint");
  auto* rep = app.add_subcommand("report", "tabulate every metrics file");
  for (auto* s : {gen, seg, fit, trn, evl, sim, rep}) add_common(s);
  evl->add_option("--checkpoint", ckpt, "checkpoint path (default models/<model_id>.ckpt)");
  evl->add_option("--split", split, "split to evaluate")->check(CLI::IsMember({"train", "val", "test"}));
  sim->add_option("--checkpoint", ckpt, "checkpoint path (default models/<model_id>.ckpt)");
  rep->add_option("--layout", layout, "table layout")->check(CLI::IsMember({"grid", "comparison"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    const auto cfg = effective(common);
    int rc = kOk;
    std::string name;
    if (gen->parsed()) {
      name = "generate";
      rc = cmd_generate(cfg);
    } else if (seg->parsed()) {
      name = "segment";
      rc = cmd_segment(cfg);
    } else if (fit->parsed()) {
      name = "fit-norm";
      rc = cmd_fit_norm(cfg);
    } else if (trn->parsed()) {
      name = "train";
      rc = cmd_train(cfg);
    } else if (evl->parsed()) {
      name = "evaluate";
      rc = cmd_evaluate(cfg, ckpt, split);
    } else if (sim->parsed()) {
      name = "stream-sim";
      rc = cmd_stream_sim(cfg, ckpt);
    } else {
      name = "report";
      rc = cmd_report(cfg, layout);
    }
    write_meta(cfg, name);
    return rc;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kData;
  }
}
