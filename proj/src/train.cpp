#include "uavtraj/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

namespace uavtraj::train {

namespace {

// Child-seed streams derived from TrainConfig::seed.
constexpr std::uint64_t kInitStream = 0x1001;
constexpr std::uint64_t kShuffleStream = 0x2002;
constexpr std::uint64_t kDropoutStream = 0x3003;

void check_sets(const dataset::SegmentSet& train, const dataset::SegmentSet& val, const model::ModelConfig& config) {
  if (train.empty()) throw Error(ErrorKind::EmptyDataset, "training set is empty");
  if (val.empty()) throw Error(ErrorKind::EmptyDataset, "validation set is empty");
  train.validate();
  val.validate();
  if (train.channel != val.channel) throw Error(ErrorKind::ChannelMismatch, "train and validation channels differ");
  for (const auto* s : {&train, &val}) {
    if (s->in_len != config.in_len || s->out_len != config.out_len) {
      throw Error(ErrorKind::DimensionMismatch, "segment windows do not match the model's in_len/out_len");
    }
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr0 > 0.0)) throw Error(ErrorKind::InvalidArgument, "lr0 must be positive");
  if (!(sched_gamma > 0.0 && sched_gamma <= 1.0)) throw Error(ErrorKind::InvalidArgument, "sched_gamma must be in (0, 1]");
  if (patience == 0) throw Error(ErrorKind::InvalidArgument, "patience must be >= 1");
  if (sched_step == 0) throw Error(ErrorKind::InvalidArgument, "sched_step must be >= 1");
  if (batch_size == 0) throw Error(ErrorKind::InvalidArgument, "batch_size must be >= 1");
  if (max_epochs == 0) throw Error(ErrorKind::InvalidArgument, "max_epochs must be >= 1");
}

Loss mse_loss(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "prediction and target shapes differ");
  }
  if (pred.empty()) throw Error(ErrorKind::EmptyInput, "mse of an empty matrix");
  const auto n = static_cast<double>(pred.size());
  Loss out{0.0, Matrix(pred.rows(), pred.cols())};
  const auto p = pred.values();
  const auto t = target.values();
  auto d = out.d_pred.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double diff = p[i] - t[i];
    out.value += diff * diff;
    d[i] = 2.0 * diff / n;
  }
  out.value /= n;
  return out;
}

AdamState AdamState::zeros_like(const model::ModelParams& params) {
  AdamState s;
  s.m = params;
  s.v = params;
  for (Matrix* t : s.m.tensors()) t->fill(0.0);
  for (Matrix* t : s.v.tensors()) t->fill(0.0);
  s.m.version = s.v.version = 0;
  return s;
}

void adam_step(model::ModelParams& params, const model::ModelParams& grads, AdamState& state, double lr,
               const TrainConfig& config) {
  auto p = params.tensors();
  const auto g = grads.tensors();
  auto m = state.m.tensors();
  auto v = state.v.tensors();
  if (g.size() != p.size() || m.size() != p.size() || v.size() != p.size()) {
    throw Error(ErrorKind::DimensionMismatch, "adam: gradient/state layout differs from params");
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (g[i]->rows() != p[i]->rows() || g[i]->cols() != p[i]->cols() || m[i]->size() != p[i]->size() ||
        v[i]->size() != p[i]->size()) {
      throw Error(ErrorKind::DimensionMismatch, "adam: tensor " + std::to_string(i) + " shape differs");
    }
    if (!g[i]->all_finite()) {
      throw Error(ErrorKind::NonFiniteGradient, "gradient tensor " + std::to_string(i) + " has NaN/Inf entries");
    }
  }

  state.step += 1;
  const auto t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto pv = p[i]->values();
    const auto gv = g[i]->values();
    auto mv = m[i]->values();
    auto vv = v[i]->values();
    for (std::size_t j = 0; j < pv.size(); ++j) {
      mv[j] = config.beta1 * mv[j] + (1.0 - config.beta1) * gv[j];
      vv[j] = config.beta2 * vv[j] + (1.0 - config.beta2) * gv[j] * gv[j];
      const double m_hat = mv[j] / c1;
      const double v_hat = vv[j] / c2;
      pv[j] -= lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
  params.version += 1;
}

double lr_at(std::size_t epoch, const TrainConfig& config) {
  const auto k = static_cast<double>(epoch / config.sched_step);
  return config.lr0 * std::pow(config.sched_gamma, k);
}

EarlyStopping::EarlyStopping(std::size_t patience)
    : patience_(patience), best_loss_(std::numeric_limits<double>::infinity()) {
  if (patience == 0) throw Error(ErrorKind::InvalidArgument, "patience must be >= 1");
}

bool EarlyStopping::observe(double val_loss) {
  const std::size_t epoch = seen_++;
  if (val_loss < best_loss_) {
    best_loss_ = val_loss;
    best_epoch_ = epoch;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

const char* to_string(StopReason reason) noexcept {
  switch (reason) {
    case StopReason::MaxEpochs: return "max_epochs";
    case StopReason::EarlyStopping: return "early_stopping";
    case StopReason::NonFiniteLoss: return "non_finite_loss";
  }
  return "unknown";
}

double evaluate_loss(const model::ModelParams& params, const model::ModelConfig& config,
                     const dataset::SegmentSet& set, std::size_t chunk) {
  if (set.empty()) throw Error(ErrorKind::EmptyDataset, "cannot evaluate on an empty set");
  std::vector<const Matrix*> inputs;
  inputs.reserve(set.size());
  for (const auto& p : set.pairs) inputs.push_back(&p.input);
  const auto preds = model::predict_all(params, config, inputs, chunk);
  double total = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) total += mse_loss(preds[i], set.pairs[i].target).value;
  return total / static_cast<double>(preds.size());
}

TrainResult train_loop(const dataset::SegmentSet& train, const dataset::SegmentSet& val,
                       const model::ModelConfig& mconfig, const TrainConfig& tconfig,
                       const model::ModelParams* initial, const EpochCallback& on_epoch) {
  mconfig.validate();
  tconfig.validate();
  check_sets(train, val, mconfig);

  model::ModelParams params =
      initial != nullptr ? *initial : model::init_params(mconfig, derive_seed(tconfig.seed, kInitStream));
  if (!params.matches(mconfig)) throw Error(ErrorKind::DimensionMismatch, "initial params do not match the config");
  AdamState adam = AdamState::zeros_like(params);
  Rng shuffle_rng(derive_seed(tconfig.seed, kShuffleStream));
  Rng dropout_rng(derive_seed(tconfig.seed, kDropoutStream));
  EarlyStopping stopper(tconfig.patience);

  TrainResult result;
  result.best = params;
  TrainHistory& hist = result.history;

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<const Matrix*> inputs;
  std::vector<Matrix> d_out;
  std::vector<const Matrix*> d_ptrs;

  for (std::size_t epoch = 0; epoch < tconfig.max_epochs; ++epoch) {
    const double lr = lr_at(epoch, tconfig);
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    bool non_finite = false;
    for (std::size_t begin = 0; begin < order.size() && !non_finite; begin += tconfig.batch_size) {
      const std::size_t end = std::min(order.size(), begin + tconfig.batch_size);
      const std::size_t B = end - begin;
      inputs.clear();
      for (std::size_t i = begin; i < end; ++i) inputs.push_back(&train.pairs[order[i]].input);

      const auto tape = model::forward_batch(params, mconfig, inputs, model::Mode::Train, &dropout_rng);
      d_out.clear();
      d_ptrs.clear();
      for (std::size_t b = 0; b < B; ++b) {
        Loss l = mse_loss(tape.output(b), train.pairs[order[begin + b]].target);
        loss_sum += l.value;
        for (double& g : l.d_pred.values()) g /= static_cast<double>(B);
        d_out.push_back(std::move(l.d_pred));
      }
      for (const auto& d : d_out) d_ptrs.push_back(&d);
      if (!std::isfinite(loss_sum)) {
        non_finite = true;
        hist.diagnostic = "training loss became non-finite in epoch " + std::to_string(epoch);
        break;
      }
      const auto grads = model::backward_batch(tape, d_ptrs);
      try {
        adam_step(params, grads, adam, lr, tconfig);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::NonFiniteGradient) throw;
        non_finite = true;
        hist.diagnostic = std::string(e.what()) + " (epoch " + std::to_string(epoch) + ")";
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.train_loss = loss_sum / static_cast<double>(train.size());
    rec.val_loss = non_finite ? std::numeric_limits<double>::quiet_NaN() : evaluate_loss(params, mconfig, val);
    if (!std::isfinite(rec.val_loss) || !std::isfinite(rec.train_loss)) {
      if (hist.diagnostic.empty()) hist.diagnostic = "validation loss became non-finite in epoch " + std::to_string(epoch);
      hist.epochs.push_back(rec);
      hist.stop_epoch = epoch;
      hist.stop_reason = StopReason::NonFiniteLoss;
      if (on_epoch) on_epoch(rec);
      break;
    }
    rec.is_best = stopper.observe(rec.val_loss);
    if (rec.is_best) result.best = params;
    hist.epochs.push_back(rec);
    hist.stop_epoch = epoch;
    if (on_epoch) on_epoch(rec);
    if (stopper.should_stop()) {
      hist.stop_reason = StopReason::EarlyStopping;
      break;
    }
    hist.stop_reason = StopReason::MaxEpochs;
  }
  hist.best_epoch = stopper.best_epoch();
  hist.best_val_loss = stopper.best_loss();
  result.best.version = 0;
  return result;
}

void write_history_csv(const TrainHistory& history, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  char buf[160];
  os << "epoch,train_loss,val_loss,lr,is_best\n";
  for (const auto& e : history.epochs) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%d\n", e.epoch, e.train_loss, e.val_loss, e.lr,
                  e.is_best ? 1 : 0);
    os << buf;
  }
  os << "# stop_reason=" << to_string(history.stop_reason) << " best_epoch=" << history.best_epoch
     << " stop_epoch=" << history.stop_epoch;
  if (!history.diagnostic.empty()) os << " diagnostic=\"" << history.diagnostic << '"';
  os << '\n';
  if (!os) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace uavtraj::train
