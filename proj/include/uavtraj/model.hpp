#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "uavtraj/dataset.hpp"
#include "uavtraj/normalize.hpp"
#include "uavtraj/numerics.hpp"

namespace uavtraj::model {

struct ModelConfig {
  std::size_t input_dim = 3;
  std::size_t output_dim = 3;
  std::size_t hidden_dim = 64;
  std::size_t num_layers = 2;
  double dropout_rate = 0.5;
  std::size_t in_len = 20;
  std::size_t out_len = 10;

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Weights of one GRU layer. No bias terms:
///   g_r = σ(W_ir x + W_hr h)
///   r   = tanh(g_r ⊙ (W_h1 h) + W_x1 x)
///   g_u = σ(W_iu x + W_hu h)
///   h'  = r ⊙ (1 − g_u) + g_u ⊙ h
/// Input matrices are hidden×in, hidden matrices hidden×hidden.
struct GruLayerWeights {
  Matrix w_ir, w_hr, w_iu, w_hu, w_x1, w_h1;

  GruLayerWeights() = default;
  GruLayerWeights(std::size_t input_width, std::size_t hidden);

  std::size_t hidden() const noexcept { return w_hr.rows(); }
  std::size_t input_width() const noexcept { return w_ir.cols(); }
};

/// Encoder and decoder GRU stacks plus the fully connected output head.
///
/// tensors() fixes the canonical order used by the optimizer and the
/// checkpoint payload: encoder layers 0..L-1, then decoder layers 0..L-1,
/// each as [W_ir, W_hr, W_iu, W_hu, W_x1, W_h1], then out_w, then out_b.
struct ModelParams {
  std::vector<GruLayerWeights> encoder;
  std::vector<GruLayerWeights> decoder;
  Matrix out_w;  // output_dim × hidden
  Matrix out_b;  // 1 × output_dim

  // Bumped by every in-place update so tapes can detect staleness.
  std::uint64_t version = 0;

  static ModelParams zeros(const ModelConfig& config);

  std::vector<Matrix*> tensors();
  std::vector<const Matrix*> tensors() const;
  std::size_t parameter_count() const;
  bool matches(const ModelConfig& config) const;

  /// Value equality of every tensor (ignores `version`).
  bool same_values(const ModelParams& other) const;
};

/// Uniform(−1/√hidden, 1/√hidden) for every entry, deterministic per seed.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

/// Single GRU step for one sample.
std::vector<double> gru_cell_forward(std::span<const double> x, std::span<const double> h_prev,
                                     const GruLayerWeights& w);

/// Activations of one cell over a batch (rows = samples).
struct CellCache {
  Matrix x, h_prev, g_r, c, r, g_u;
};

/// Everything the backward pass needs from a forward pass.
struct TapeCache {
  const ModelParams* params = nullptr;
  std::uint64_t params_version = 0;
  std::size_t batch = 0;
  bool train = false;
  std::vector<std::vector<CellCache>> encoder;      // [t][layer]
  std::vector<std::vector<Matrix>> dropout_masks;   // [t][layer-1], scaled by 1/(1-rate); empty in eval
  std::vector<std::vector<CellCache>> decoder;      // [k][layer]
  std::vector<Matrix> decoder_top;                  // [k] batch×hidden
  std::vector<Matrix> outputs;                      // [k] batch×output_dim

  /// out_len×output_dim prediction of sample b.
  Matrix output(std::size_t b) const;
};

enum class Mode { Eval, Train };

/// Batched encoder–decoder forward pass. `inputs` are in_len×input_dim
/// matrices; `dropout_rng` is required in Train mode and ignored in Eval.
TapeCache forward_batch(const ModelParams& params, const ModelConfig& config, std::span<const Matrix* const> inputs,
                        Mode mode, Rng* dropout_rng = nullptr);

/// Reverse-mode gradients. `d_outputs[b]` is ∂L/∂output(b), out_len×output_dim.
/// Throws StaleTape if the parameters changed since the forward pass.
ModelParams backward_batch(const TapeCache& tape, std::span<const Matrix* const> d_outputs);

struct ForwardResult {
  Matrix output;  // out_len × output_dim
  TapeCache tape;
};

ForwardResult model_forward(const Matrix& input, const ModelParams& params, const ModelConfig& config, Mode mode,
                            Rng* dropout_rng = nullptr);
ModelParams model_backward(const TapeCache& tape, const Matrix& d_output);

/// Eval-mode predictions for many inputs, processed in chunks of `chunk`.
std::vector<Matrix> predict_all(const ModelParams& params, const ModelConfig& config,
                                std::span<const Matrix* const> inputs, std::size_t chunk = 256);

struct Checkpoint {
  ModelParams params;
  ModelConfig config;
  normalize::NormStats stats;
};

/// Binary checkpoint: header (magic, version, config, channel, method,
/// stats fingerprint, embedded stats text), little-endian binary64 weights
/// in tensors() order, trailing FNV-1a-64 checksum of all preceding bytes.
void save_checkpoint(const ModelParams& params, const ModelConfig& config, const normalize::NormStats& stats,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace uavtraj::model
