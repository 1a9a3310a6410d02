#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "uavtraj/dataset.hpp"
#include "uavtraj/model.hpp"

namespace uavtraj::train {

struct TrainConfig {
  double lr0 = 0.001;
  std::size_t max_epochs = 1000;
  std::size_t patience = 100;
  std::size_t sched_step = 50;
  double sched_gamma = 0.1;
  std::size_t batch_size = 256;
  std::uint64_t seed = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

struct Loss {
  double value = 0.0;
  Matrix d_pred;  // ∂loss/∂pred
};

/// Mean of (target - pred)² over every scalar; d_pred = 2 (pred - target) / n.
Loss mse_loss(const Matrix& pred, const Matrix& target);

struct AdamState {
  model::ModelParams m;
  model::ModelParams v;
  std::uint64_t step = 0;

  static AdamState zeros_like(const model::ModelParams& params);
};

/// One bias-corrected Adam update. Throws NonFiniteGradient (leaving
/// params and state untouched) if any gradient entry is NaN/Inf.
void adam_step(model::ModelParams& params, const model::ModelParams& grads, AdamState& state, double lr,
               const TrainConfig& config);

/// lr0 · gamma^floor(epoch / sched_step)
double lr_at(std::size_t epoch, const TrainConfig& config);

/// Patience bookkeeping: an epoch improves only if its validation loss is
/// strictly below the best so far.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience);

  /// Records one epoch's validation loss; returns true if it is a new best.
  bool observe(double val_loss);
  bool should_stop() const noexcept { return since_best_ >= patience_; }
  std::size_t best_epoch() const noexcept { return best_epoch_; }
  double best_loss() const noexcept { return best_loss_; }
  std::size_t epochs_seen() const noexcept { return seen_; }
  std::size_t since_best() const noexcept { return since_best_; }

 private:
  std::size_t patience_;
  std::size_t seen_ = 0;
  std::size_t best_epoch_ = 0;
  std::size_t since_best_ = 0;
  double best_loss_;
};

enum class StopReason { MaxEpochs, EarlyStopping, NonFiniteLoss };
const char* to_string(StopReason reason) noexcept;

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
  bool is_best = false;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  std::size_t stop_epoch = 0;  // last epoch that ran
  StopReason stop_reason = StopReason::MaxEpochs;
  std::string diagnostic;
};

struct TrainResult {
  model::ModelParams best;
  TrainHistory history;
};

/// Eval-mode mean MSE over a set (every pair weighted equally).
double evaluate_loss(const model::ModelParams& params, const model::ModelConfig& config,
                     const dataset::SegmentSet& set, std::size_t chunk = 256);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Adam + step decay + early stopping; returns the best-validation params.
/// `initial` overrides init_params(config, derived seed) when non-null.
TrainResult train_loop(const dataset::SegmentSet& train, const dataset::SegmentSet& val,
                       const model::ModelConfig& mconfig, const TrainConfig& tconfig,
                       const model::ModelParams* initial = nullptr, const EpochCallback& on_epoch = {});

/// CSV with columns epoch,train_loss,val_loss,lr,is_best and a footer
/// comment carrying the stop reason, best epoch and stop epoch.
void write_history_csv(const TrainHistory& history, const std::filesystem::path& path);

}  // namespace uavtraj::train
