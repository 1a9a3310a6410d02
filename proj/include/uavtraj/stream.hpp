#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "uavtraj/dataset.hpp"
#include "uavtraj/model.hpp"
#include "uavtraj/trajgen.hpp"

namespace uavtraj::stream {

enum class ModelKind { PositionModel, VelocityModel };

const char* to_string(ModelKind kind) noexcept;
ModelKind kind_for(Channel channel) noexcept;

struct StreamSample {
  double t = 0.0;  // s
  Vec3 p;          // m
};

/// Fixed-capacity FIFO; pushing into a full buffer drops the oldest entry.
template <class T>
class RingBuffer {
 public:
  explicit RingBuffer(std::size_t capacity) : slots_(capacity) {
    if (capacity == 0) throw Error(ErrorKind::InvalidArgument, "ring buffer capacity must be >= 1");
  }

  void push(const T& v) {
    slots_[(head_ + size_) % slots_.size()] = v;
    if (size_ < slots_.size()) {
      ++size_;
    } else {
      head_ = (head_ + 1) % slots_.size();
    }
  }

  /// i = 0 is the oldest retained element.
  const T& operator[](std::size_t i) const { return slots_[(head_ + i) % slots_.size()]; }
  const T& front() const { return (*this)[0]; }
  const T& back() const { return (*this)[size_ - 1]; }
  std::size_t size() const noexcept { return size_; }
  std::size_t capacity() const noexcept { return slots_.size(); }
  bool empty() const noexcept { return size_ == 0; }

 private:
  std::vector<T> slots_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
};

struct PredictionRecord {
  double issued_at = 0.0;
  std::vector<double> t_pred;                 // issued_at + k·ts, k = 1..out_len
  std::vector<Vec3> predicted;                // positions
  std::vector<std::optional<Vec3>> actual;    // filled by match_actuals
  std::optional<double> rmse;                 // set once every actual is known

  bool complete() const noexcept { return rmse.has_value(); }
};

struct PredictorOptions {
  double ts = 0.1;
  /// Smallest expected gap between pushed samples; sizes the ring buffer so
  /// it always spans the input horizon.
  double min_sample_gap = 0.01;
};

/// Streaming front end of a trained model: buffers raw timestamped
/// positions, resamples the newest in_len·ts seconds onto the training grid,
/// runs inference and returns predicted positions.
///
/// Velocity models read in_len+1 grid positions (in_len differences) and
/// integrate the predicted velocities forward from the newest raw sample.
class StreamPredictor {
 public:
  StreamPredictor(model::Checkpoint checkpoint, ModelKind kind, PredictorOptions options = {});

  /// Appends a sample; returns whether enough history is buffered.
  bool push(const StreamSample& sample);
  bool ready() const;

  /// Grid positions ending at the newest sample: in_len rows for position
  /// models, in_len+1 for velocity models.
  Matrix make_input() const;
  /// The normalized in_len×3 window fed to the network.
  Matrix model_input() const;
  PredictionRecord predict() const;

  ModelKind kind() const noexcept { return kind_; }
  const model::Checkpoint& checkpoint() const noexcept { return ck_; }
  std::size_t buffered() const noexcept { return buffer_.size(); }
  std::size_t capacity() const noexcept { return buffer_.capacity(); }
  double required_span() const noexcept;

 private:
  model::Checkpoint ck_;
  ModelKind kind_;
  PredictorOptions opts_;
  RingBuffer<StreamSample> buffer_;
};

/// Matches every pending predicted point against `actual` (linear
/// interpolation at t_pred) and computes the record RMSE
/// sqrt(mean_k |p̂_k − a_k|²) once all points are covered.
void match_actuals(std::span<PredictionRecord> records, const dataset::SampledTrajectory& actual);

struct RollingReport {
  double average_rmse = 0.0;
  std::size_t count = 0;
  bool partial = false;  // fewer complete records than the window
};

/// Mean RMSE of the most recent `window` complete records.
RollingReport rolling_report(std::span<const PredictionRecord> records, std::size_t window = 100);

struct GeneratorSource {
  trajgen::TrajectoryParams params;
  double duration = 60.0;  // s
};

using StreamSource = std::variant<GeneratorSource, dataset::SampledTrajectory>;

struct SimOptions {
  double jitter = 0.3;  // per-sample gap = ts·(1+u), u ~ U[−jitter, jitter]
  std::uint64_t seed = 1;
  std::size_t rolling_window = 100;
  PredictorOptions predictor;
};

struct SimResult {
  ModelKind kind = ModelKind::VelocityModel;
  std::vector<StreamSample> samples;  // the replayed (truth) stream
  std::vector<PredictionRecord> records;
  std::size_t complete = 0;
  double average_rmse = 0.0;  // over every complete record
  RollingReport rolling;
};

/// Replays a source through push/predict/match in timestamp order.
SimResult run_stream_sim(const StreamSource& source, const model::Checkpoint& checkpoint, const SimOptions& options);

/// issued_at,k,t_pred,px,py,pz,ax,ay,az,record_rmse plus a summary footer.
std::string records_to_csv(const SimResult& result);
void write_records_csv(const SimResult& result, const std::filesystem::path& path);

}  // namespace uavtraj::stream
