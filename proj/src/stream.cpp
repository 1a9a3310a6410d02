#include "uavtraj/stream.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "uavtraj/normalize.hpp"

namespace uavtraj::stream {

const char* to_string(ModelKind kind) noexcept {
  return kind == ModelKind::PositionModel ? "position_model" : "velocity_model";
}

ModelKind kind_for(Channel channel) noexcept {
  return channel == Channel::Position ? ModelKind::PositionModel : ModelKind::VelocityModel;
}

namespace {

std::size_t buffer_capacity(const model::ModelConfig& config, const PredictorOptions& opts) {
  if (!(opts.ts > 0.0) || !(opts.min_sample_gap > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "ts and min_sample_gap must be positive");
  }
  const double span = static_cast<double>(config.in_len) * opts.ts;
  return static_cast<std::size_t>(std::ceil(span / opts.min_sample_gap)) + 2;
}

}  // namespace

StreamPredictor::StreamPredictor(model::Checkpoint checkpoint, ModelKind kind, PredictorOptions options)
    : ck_(std::move(checkpoint)), kind_(kind), opts_(options), buffer_(buffer_capacity(ck_.config, options)) {
  if (kind_for(ck_.stats.channel) != kind_) {
    throw Error(ErrorKind::ChannelMismatch, std::string("checkpoint was trained on the ") +
                                                uavtraj::to_string(ck_.stats.channel) + " channel, predictor is a " +
                                                to_string(kind_));
  }
  if (ck_.config.input_dim != 3 || ck_.config.output_dim != 3) {
    throw Error(ErrorKind::DimensionMismatch, "stream prediction needs a 3-D model");
  }
}

double StreamPredictor::required_span() const noexcept { return static_cast<double>(ck_.config.in_len) * opts_.ts; }

bool StreamPredictor::push(const StreamSample& sample) {
  if (!std::isfinite(sample.t)) throw Error(ErrorKind::NonMonotonicTime, "sample time is not finite");
  if (!buffer_.empty() && !(sample.t > buffer_.back().t)) {
    throw Error(ErrorKind::NonMonotonicTime, "sample at t=" + std::to_string(sample.t) +
                                                 " is not after the previous sample");
  }
  buffer_.push(sample);
  return ready();
}

bool StreamPredictor::ready() const {
  if (buffer_.size() < 2) return false;
  return buffer_.back().t - buffer_.front().t >= required_span() - dataset::kKnotTolerance;
}

Matrix StreamPredictor::make_input() const {
  if (!ready()) throw Error(ErrorKind::NotReady, "buffer does not yet span the input horizon");
  std::vector<double> t(buffer_.size());
  std::vector<Vec3> p(buffer_.size());
  for (std::size_t i = 0; i < buffer_.size(); ++i) {
    t[i] = buffer_[i].t;
    p[i] = buffer_[i].p;
  }
  const std::size_t rows = ck_.config.in_len + (kind_ == ModelKind::VelocityModel ? 1 : 0);
  const double t_last = t.back();
  Matrix window(rows, 3);
  for (std::size_t i = 0; i < rows; ++i) {
    const double back = static_cast<double>(rows - 1 - i);
    window.set_row3(i, dataset::interpolate_at(t, p, t_last - back * opts_.ts));
  }
  return window;
}

Matrix StreamPredictor::model_input() const {
  const Matrix window = make_input();
  if (kind_ == ModelKind::PositionModel) return normalize::apply_rows(window, ck_.stats);
  Matrix velocity(ck_.config.in_len, 3);
  for (std::size_t i = 0; i < velocity.rows(); ++i) {
    velocity.set_row3(i, dataset::finite_difference(window.row3(i), window.row3(i + 1), opts_.ts));
  }
  return normalize::apply_rows(velocity, ck_.stats);
}

PredictionRecord StreamPredictor::predict() const {
  const Matrix input = model_input();
  const auto forward = model::model_forward(input, ck_.params, ck_.config, model::Mode::Eval);
  const Matrix out = normalize::invert_rows(forward.output, ck_.stats);

  PredictionRecord rec;
  rec.issued_at = buffer_.back().t;
  const std::size_t K = ck_.config.out_len;
  rec.t_pred.reserve(K);
  rec.predicted.reserve(K);
  Vec3 pos = buffer_.back().p;  // integration anchor: newest raw sample
  for (std::size_t k = 0; k < K; ++k) {
    rec.t_pred.push_back(rec.issued_at + static_cast<double>(k + 1) * opts_.ts);
    if (kind_ == ModelKind::PositionModel) {
      rec.predicted.push_back(out.row3(k));
    } else {
      pos = pos + opts_.ts * out.row3(k);
      rec.predicted.push_back(pos);
    }
  }
  rec.actual.assign(K, std::nullopt);
  return rec;
}

void match_actuals(std::span<PredictionRecord> records, const dataset::SampledTrajectory& actual) {
  if (actual.size() == 0) return;
  actual.validate();
  const double t_first = actual.t.front();
  const double t_last = actual.t.back();
  for (auto& rec : records) {
    if (rec.complete()) continue;
    bool all = true;
    for (std::size_t k = 0; k < rec.t_pred.size(); ++k) {
      if (rec.actual[k]) continue;
      const double tq = rec.t_pred[k];
      if (tq < t_first - dataset::kKnotTolerance || tq > t_last + dataset::kKnotTolerance) {
        all = false;
        continue;
      }
      rec.actual[k] = dataset::interpolate_at(actual.t, actual.points, tq);
    }
    if (!all || rec.predicted.empty()) continue;
    double sq = 0.0;
    for (std::size_t k = 0; k < rec.predicted.size(); ++k) {
      const Vec3 d = rec.predicted[k] - *rec.actual[k];
      sq += dot(d, d);
    }
    rec.rmse = std::sqrt(sq / static_cast<double>(rec.predicted.size()));
  }
}

RollingReport rolling_report(std::span<const PredictionRecord> records, std::size_t window) {
  if (window == 0) throw Error(ErrorKind::InvalidArgument, "rolling window must be >= 1");
  RollingReport rep;
  double sum = 0.0;
  for (auto it = records.rbegin(); it != records.rend() && rep.count < window; ++it) {
    if (!it->complete()) continue;
    sum += *it->rmse;
    ++rep.count;
  }
  if (rep.count == 0) throw Error(ErrorKind::NoCompleteRecords, "no complete prediction records");
  rep.average_rmse = sum / static_cast<double>(rep.count);
  rep.partial = rep.count < window;
  return rep;
}

SimResult run_stream_sim(const StreamSource& source, const model::Checkpoint& checkpoint, const SimOptions& options) {
  const double ts = options.predictor.ts;
  const double needed = static_cast<double>(checkpoint.config.in_len + checkpoint.config.out_len) * ts;
  if (!(options.jitter >= 0.0 && options.jitter < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "jitter must be in [0, 1)");
  }

  double t_begin = 0.0;
  double t_end = 0.0;
  if (const auto* gen = std::get_if<GeneratorSource>(&source)) {
    gen->params.validate();
    t_end = gen->duration;
  } else {
    const auto& traj = std::get<dataset::SampledTrajectory>(source);
    if (traj.size() < 2) throw Error(ErrorKind::SourceTooShort, "source trajectory has fewer than 2 samples");
    traj.validate();
    if (traj.channel != Channel::Position) throw Error(ErrorKind::WrongChannel, "stream source must be positions");
    t_begin = traj.t.front();
    t_end = traj.t.back();
  }
  if (t_end - t_begin < needed - dataset::kKnotTolerance) {
    throw Error(ErrorKind::SourceTooShort, "source must last at least (in_len + out_len)·ts seconds");
  }
  auto position_at = [&](double t) {
    if (const auto* gen = std::get_if<GeneratorSource>(&source)) return trajgen::point_at(gen->params, t);
    const auto& traj = std::get<dataset::SampledTrajectory>(source);
    return dataset::interpolate_at(traj.t, traj.points, t);
  };

  SimResult result;
  result.kind = kind_for(checkpoint.stats.channel);
  StreamPredictor predictor(checkpoint, result.kind, options.predictor);
  Rng rng(options.seed);

  dataset::SampledTrajectory truth;
  double t = t_begin;
  for (std::size_t i = 0; t <= t_end + dataset::kKnotTolerance; ++i) {
    const StreamSample s{t, position_at(std::min(t, t_end))};
    result.samples.push_back(s);
    truth.t.push_back(s.t);
    truth.points.push_back(s.p);
    if (predictor.push(s)) result.records.push_back(predictor.predict());
    if (options.jitter == 0.0) {
      t = t_begin + static_cast<double>(i + 1) * ts;
    } else {
      t += ts * (1.0 + rng.uniform(-options.jitter, options.jitter));
    }
  }

  match_actuals(result.records, truth);
  double sum = 0.0;
  for (const auto& r : result.records) {
    if (!r.complete()) continue;
    sum += *r.rmse;
    ++result.complete;
  }
  if (result.complete == 0) throw Error(ErrorKind::NoCompleteRecords, "simulation produced no complete records");
  result.average_rmse = sum / static_cast<double>(result.complete);
  result.rolling = rolling_report(result.records, options.rolling_window);
  return result;
}

std::string records_to_csv(const SimResult& result) {
  std::string out = "issued_at,k,t_pred,px,py,pz,ax,ay,az,record_rmse\n";
  char buf[512];
  for (const auto& r : result.records) {
    for (std::size_t k = 0; k < r.predicted.size(); ++k) {
      const Vec3& p = r.predicted[k];
      std::snprintf(buf, sizeof buf, "%.17g,%zu,%.17g,%.17g,%.17g,%.17g", r.issued_at, k + 1, r.t_pred[k], p[0], p[1],
                    p[2]);
      out += buf;
      if (r.actual[k]) {
        const Vec3& a = *r.actual[k];
        std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g", a[0], a[1], a[2]);
        out += buf;
      } else {
        out += ",,,";
      }
      if (r.rmse) {
        std::snprintf(buf, sizeof buf, ",%.17g\n", *r.rmse);
        out += buf;
      } else {
        out += ",\n";
      }
    }
  }
  std::snprintf(buf, sizeof buf,
                "# model=%s records=%zu complete=%zu average_rmse=%.17g rolling_rmse=%.17g rolling_count=%zu%s\n",
                to_string(result.kind), result.records.size(), result.complete, result.average_rmse,
                result.rolling.average_rmse, result.rolling.count, result.rolling.partial ? " partial" : "");
  out += buf;
  return out;
}

void write_records_csv(const SimResult& result, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  os << records_to_csv(result);
  if (!os) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace uavtraj::stream
