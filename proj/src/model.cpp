#include "uavtraj/model.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

namespace uavtraj::model {

namespace {

// Activations via Eigen's vectorized exp in fixed 8-wide blocks, tail zero-padded.
// σ(a) = 1/(1+e^(−a)), tanh(t) = 1 − 2/(e^(2t)+1).
using Block = Eigen::Array<double, 8, 1>;

template <class F>
void blockwise(std::size_t n, F&& f) {
  for (std::size_t i = 0; i < n; i += 8) f(i, std::min<std::size_t>(8, n - i));
}

void sigmoid_inplace(Matrix& m) {
  double* p = m.data();
  blockwise(m.size(), [&](std::size_t i, std::size_t len) {
    Block a = Block::Zero();
    std::copy_n(p + i, len, a.data());
    a = 1.0 / (1.0 + (-a).exp());
    std::copy_n(a.data(), len, p + i);
  });
}

// r ← tanh(g_r ⊙ c + r)
void candidate_inplace(const Matrix& g_r, const Matrix& c, Matrix& r) {
  const double* gr = g_r.data();
  const double* cc = c.data();
  double* rr = r.data();
  blockwise(r.size(), [&](std::size_t i, std::size_t len) {
    Block t = Block::Zero();
    for (std::size_t j = 0; j < len; ++j) t[j] = gr[i + j] * cc[i + j] + rr[i + j];
    t = 1.0 - 2.0 / ((2.0 * t).exp() + 1.0);
    std::copy_n(t.data(), len, rr + i);
  });
}

Matrix batch_rows(std::span<const Matrix* const> inputs, std::size_t row) {
  const std::size_t width = inputs.front()->cols();
  Matrix m(inputs.size(), width);
  for (std::size_t b = 0; b < inputs.size(); ++b) {
    const auto src = inputs[b]->row(row);
    std::copy(src.begin(), src.end(), m.row(b).begin());
  }
  return m;
}

void cell_forward(const GruLayerWeights& w, const Matrix& x, const Matrix& h_prev, CellCache& cache, Matrix& h_out) {
  cache.x = x;
  cache.h_prev = h_prev;

  gemm_nt(x, w.w_ir, cache.g_r);
  gemm_nt(h_prev, w.w_hr, cache.g_r, true);
  sigmoid_inplace(cache.g_r);

  gemm_nt(h_prev, w.w_h1, cache.c);
  gemm_nt(x, w.w_x1, cache.r);
  candidate_inplace(cache.g_r, cache.c, cache.r);

  gemm_nt(x, w.w_iu, cache.g_u);
  gemm_nt(h_prev, w.w_hu, cache.g_u, true);
  sigmoid_inplace(cache.g_u);

  h_out = Matrix(h_prev.rows(), h_prev.cols());
  const auto r = cache.r.values();
  const auto gu = cache.g_u.values();
  const auto hp = h_prev.values();
  auto h = h_out.values();
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = r[i] * (1.0 - gu[i]) + gu[i] * hp[i];
}

// dh: ∂L/∂h_t. Accumulates weight gradients into `grad`, writes ∂L/∂x and ∂L/∂h_{t-1}.
void cell_backward(const GruLayerWeights& w, const CellCache& cache, const Matrix& dh, GruLayerWeights& grad,
                   Matrix& dx, Matrix& dh_prev) {
  const std::size_t n = dh.size();
  Matrix da_r(dh.rows(), dh.cols());
  Matrix da_c(dh.rows(), dh.cols());
  Matrix da_u(dh.rows(), dh.cols());
  Matrix dc(dh.rows(), dh.cols());
  dh_prev = Matrix(dh.rows(), dh.cols());
  {
    const double* g = dh.data();
    const double* gr = cache.g_r.data();
    const double* c = cache.c.data();
    const double* r = cache.r.data();
    const double* gu = cache.g_u.data();
    const double* hp = cache.h_prev.data();
    double* o_r = da_r.data();
    double* o_c = da_c.data();
    double* o_u = da_u.data();
    double* o_dc = dc.data();
    double* o_hp = dh_prev.data();
    for (std::size_t i = 0; i < n; ++i) {
      const double d_r = g[i] * (1.0 - gu[i]);
      const double d_gu = g[i] * (hp[i] - r[i]);
      o_hp[i] = g[i] * gu[i];
      const double d_ac = d_r * (1.0 - r[i] * r[i]);
      o_c[i] = d_ac;
      o_dc[i] = d_ac * gr[i];
      o_r[i] = d_ac * c[i] * gr[i] * (1.0 - gr[i]);
      o_u[i] = d_gu * gu[i] * (1.0 - gu[i]);
    }
  }

  gemm_tn(da_r, cache.x, grad.w_ir, true);
  gemm_tn(da_r, cache.h_prev, grad.w_hr, true);
  gemm_tn(da_u, cache.x, grad.w_iu, true);
  gemm_tn(da_u, cache.h_prev, grad.w_hu, true);
  gemm_tn(da_c, cache.x, grad.w_x1, true);
  gemm_tn(dc, cache.h_prev, grad.w_h1, true);

  gemm_nn(da_r, w.w_ir, dx);
  gemm_nn(da_u, w.w_iu, dx, true);
  gemm_nn(da_c, w.w_x1, dx, true);

  gemm_nn(da_r, w.w_hr, dh_prev, true);
  gemm_nn(da_u, w.w_hu, dh_prev, true);
  gemm_nn(dc, w.w_h1, dh_prev, true);
}

void add_into(Matrix& acc, const Matrix& v) {
  auto a = acc.values();
  const auto b = v.values();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

}  // namespace

void ModelConfig::validate() const {
  if (input_dim == 0 || output_dim == 0) throw Error(ErrorKind::InvalidArgument, "input/output dims must be >= 1");
  if (input_dim != output_dim) {
    throw Error(ErrorKind::InvalidArgument, "the autoregressive decoder needs input_dim == output_dim");
  }
  if (hidden_dim == 0) throw Error(ErrorKind::InvalidArgument, "hidden_dim must be >= 1");
  if (num_layers == 0) throw Error(ErrorKind::InvalidArgument, "num_layers must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw Error(ErrorKind::InvalidArgument, "dropout_rate must be in [0, 1)");
  if (in_len == 0 || out_len == 0) throw Error(ErrorKind::InvalidArgument, "in_len/out_len must be >= 1");
}

GruLayerWeights::GruLayerWeights(std::size_t input_width, std::size_t hidden)
    : w_ir(hidden, input_width),
      w_hr(hidden, hidden),
      w_iu(hidden, input_width),
      w_hu(hidden, hidden),
      w_x1(hidden, input_width),
      w_h1(hidden, hidden) {}

ModelParams ModelParams::zeros(const ModelConfig& config) {
  config.validate();
  ModelParams p;
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    const std::size_t in_w = l == 0 ? config.input_dim : config.hidden_dim;
    p.encoder.emplace_back(in_w, config.hidden_dim);
    p.decoder.emplace_back(l == 0 ? config.output_dim : config.hidden_dim, config.hidden_dim);
  }
  p.out_w = Matrix(config.output_dim, config.hidden_dim);
  p.out_b = Matrix(1, config.output_dim);
  return p;
}

std::vector<Matrix*> ModelParams::tensors() {
  std::vector<Matrix*> out;
  for (auto* stack : {&encoder, &decoder}) {
    for (auto& l : *stack) {
      for (Matrix* m : {&l.w_ir, &l.w_hr, &l.w_iu, &l.w_hu, &l.w_x1, &l.w_h1}) out.push_back(m);
    }
  }
  out.push_back(&out_w);
  out.push_back(&out_b);
  return out;
}

std::vector<const Matrix*> ModelParams::tensors() const {
  auto mut = const_cast<ModelParams*>(this)->tensors();
  return {mut.begin(), mut.end()};
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const Matrix* m : tensors()) n += m->size();
  return n;
}

bool ModelParams::matches(const ModelConfig& config) const {
  const ModelParams ref = zeros(config);
  const auto a = tensors();
  const auto b = ref.tensors();
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i]->rows() != b[i]->rows() || a[i]->cols() != b[i]->cols()) return false;
  }
  return true;
}

bool ModelParams::same_values(const ModelParams& other) const {
  const auto a = tensors();
  const auto b = other.tensors();
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(*a[i] == *b[i])) return false;
  }
  return true;
}

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  ModelParams p = ModelParams::zeros(config);
  const double bound = 1.0 / std::sqrt(static_cast<double>(config.hidden_dim));
  Rng rng(seed);
  for (Matrix* m : p.tensors()) {
    for (double& v : m->values()) v = -bound + 2.0 * bound * rng.unit();
  }
  return p;
}

std::vector<double> gru_cell_forward(std::span<const double> x, std::span<const double> h_prev,
                                     const GruLayerWeights& w) {
  if (x.size() != w.input_width() || h_prev.size() != w.hidden()) {
    throw Error(ErrorKind::DimensionMismatch, "gru_cell_forward input/hidden widths do not match the weights");
  }
  const Matrix xm(1, x.size(), std::vector<double>(x.begin(), x.end()));
  const Matrix hm(1, h_prev.size(), std::vector<double>(h_prev.begin(), h_prev.end()));
  CellCache cache;
  Matrix h;
  cell_forward(w, xm, hm, cache, h);
  return {h.values().begin(), h.values().end()};
}

Matrix TapeCache::output(std::size_t b) const {
  const std::size_t dim = outputs.front().cols();
  Matrix out(outputs.size(), dim);
  for (std::size_t k = 0; k < outputs.size(); ++k) {
    for (std::size_t c = 0; c < dim; ++c) out(k, c) = outputs[k](b, c);
  }
  return out;
}

TapeCache forward_batch(const ModelParams& params, const ModelConfig& config, std::span<const Matrix* const> inputs,
                        Mode mode, Rng* dropout_rng) {
  config.validate();
  if (!params.matches(config)) throw Error(ErrorKind::DimensionMismatch, "parameters do not match the model config");
  if (inputs.empty()) throw Error(ErrorKind::EmptyInput, "forward needs at least one input");
  for (const Matrix* in : inputs) {
    if (in->rows() != config.in_len || in->cols() != config.input_dim) {
      throw Error(ErrorKind::DimensionMismatch, "input window must be in_len × input_dim");
    }
  }
  const bool train = mode == Mode::Train && config.dropout_rate > 0.0;
  if (train && dropout_rng == nullptr) throw Error(ErrorKind::InvalidArgument, "train mode needs a dropout rng");

  const std::size_t B = inputs.size();
  const std::size_t H = config.hidden_dim;
  const std::size_t L = config.num_layers;

  TapeCache tape;
  tape.params = &params;
  tape.params_version = params.version;
  tape.batch = B;
  tape.train = train;
  tape.encoder.resize(config.in_len, std::vector<CellCache>(L));
  if (train) tape.dropout_masks.resize(config.in_len, std::vector<Matrix>(L - 1));
  tape.decoder.resize(config.out_len, std::vector<CellCache>(L));
  tape.decoder_top.resize(config.out_len);
  tape.outputs.resize(config.out_len);

  const double keep_scale = train ? 1.0 / (1.0 - config.dropout_rate) : 1.0;
  std::vector<Matrix> h(L, Matrix(B, H));
  Matrix h_new;
  for (std::size_t t = 0; t < config.in_len; ++t) {
    Matrix x = batch_rows(inputs, t);
    for (std::size_t l = 0; l < L; ++l) {
      if (l > 0) {
        x = h[l - 1];
        if (train) {
          Matrix& mask = tape.dropout_masks[t][l - 1];
          mask = Matrix(B, H);
          for (double& m : mask.values()) m = dropout_rng->unit() < config.dropout_rate ? 0.0 : keep_scale;
          auto xv = x.values();
          const auto mv = mask.values();
          for (std::size_t i = 0; i < xv.size(); ++i) xv[i] *= mv[i];
        }
      }
      cell_forward(params.encoder[l], x, h[l], tape.encoder[t][l], h_new);
      h[l] = std::move(h_new);
    }
  }

  // Decoder starts from the encoder's final states; its first input is the
  // last observed sample, later inputs are its own previous predictions.
  Matrix y = batch_rows(inputs, config.in_len - 1);
  for (std::size_t k = 0; k < config.out_len; ++k) {
    Matrix x = y;
    for (std::size_t l = 0; l < L; ++l) {
      if (l > 0) x = h[l - 1];
      cell_forward(params.decoder[l], x, h[l], tape.decoder[k][l], h_new);
      h[l] = std::move(h_new);
    }
    tape.decoder_top[k] = h[L - 1];
    gemm_nt(h[L - 1], params.out_w, y);
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t c = 0; c < config.output_dim; ++c) y(b, c) += params.out_b(0, c);
    }
    tape.outputs[k] = y;
  }
  return tape;
}

ModelParams backward_batch(const TapeCache& tape, std::span<const Matrix* const> d_outputs) {
  if (tape.params == nullptr || tape.params->version != tape.params_version) {
    throw Error(ErrorKind::StaleTape, "parameters changed after the forward pass");
  }
  const ModelParams& params = *tape.params;
  const std::size_t B = tape.batch;
  const std::size_t K = tape.outputs.size();
  const std::size_t L = params.encoder.size();
  const std::size_t H = params.out_w.cols();
  const std::size_t D = params.out_w.rows();
  if (d_outputs.size() != B) throw Error(ErrorKind::DimensionMismatch, "one output gradient per batch sample");
  for (const Matrix* d : d_outputs) {
    if (d->rows() != K || d->cols() != D) throw Error(ErrorKind::DimensionMismatch, "output gradient shape");
  }

  ModelParams grad;
  for (const auto& l : params.encoder) grad.encoder.emplace_back(l.input_width(), l.hidden());
  for (const auto& l : params.decoder) grad.decoder.emplace_back(l.input_width(), l.hidden());
  grad.out_w = Matrix(D, H);
  grad.out_b = Matrix(1, D);

  std::vector<Matrix> dh_rec(L, Matrix(B, H));
  Matrix feedback(B, D);  // ∂L/∂(decoder input at k+1) = ∂L/∂y_k
  Matrix dx, dh_prev, dh_above, dh;
  for (std::size_t k = K; k-- > 0;) {
    Matrix dy = feedback;
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t c = 0; c < D; ++c) dy(b, c) += (*d_outputs[b])(k, c);
    }
    gemm_tn(dy, tape.decoder_top[k], grad.out_w, true);
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t c = 0; c < D; ++c) grad.out_b(0, c) += dy(b, c);
    }
    gemm_nn(dy, params.out_w, dh_above);
    for (std::size_t l = L; l-- > 0;) {
      dh = dh_rec[l];
      add_into(dh, dh_above);
      cell_backward(params.decoder[l], tape.decoder[k][l], dh, grad.decoder[l], dx, dh_prev);
      dh_rec[l] = std::move(dh_prev);
      dh_above = std::move(dx);
    }
    // Step 0 consumed the last observed input; nothing upstream to feed.
    feedback = k > 0 ? dh_above : Matrix(B, D);
  }

  const std::size_t T = tape.encoder.size();
  for (std::size_t t = T; t-- > 0;) {
    for (std::size_t l = L; l-- > 0;) {
      dh = dh_rec[l];
      if (l + 1 < L) add_into(dh, dh_above);
      cell_backward(params.encoder[l], tape.encoder[t][l], dh, grad.encoder[l], dx, dh_prev);
      dh_rec[l] = std::move(dh_prev);
      if (l > 0) {
        dh_above = std::move(dx);
        if (tape.train) {
          auto g = dh_above.values();
          const auto m = tape.dropout_masks[t][l - 1].values();
          for (std::size_t i = 0; i < g.size(); ++i) g[i] *= m[i];
        }
      }
    }
  }
  return grad;
}

ForwardResult model_forward(const Matrix& input, const ModelParams& params, const ModelConfig& config, Mode mode,
                            Rng* dropout_rng) {
  const Matrix* inputs[] = {&input};
  ForwardResult result;
  result.tape = forward_batch(params, config, inputs, mode, dropout_rng);
  result.output = result.tape.output(0);
  return result;
}

ModelParams model_backward(const TapeCache& tape, const Matrix& d_output) {
  const Matrix* grads[] = {&d_output};
  return backward_batch(tape, grads);
}

std::vector<Matrix> predict_all(const ModelParams& params, const ModelConfig& config,
                                std::span<const Matrix* const> inputs, std::size_t chunk) {
  std::vector<Matrix> out;
  out.reserve(inputs.size());
  chunk = std::max<std::size_t>(chunk, 1);
  for (std::size_t begin = 0; begin < inputs.size(); begin += chunk) {
    const std::size_t end = std::min(inputs.size(), begin + chunk);
    const TapeCache tape = forward_batch(params, config, inputs.subspan(begin, end - begin), Mode::Eval);
    for (std::size_t b = 0; b < end - begin; ++b) out.push_back(tape.output(b));
  }
  return out;
}

}  // namespace uavtraj::model
