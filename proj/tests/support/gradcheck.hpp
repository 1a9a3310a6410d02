#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "uavtraj/model.hpp"

namespace uavtraj::testing {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = scale * rng.uniform(-1.0, 1.0);
  return m;
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_tensor = 0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

// Loss L = Σ_b Σ d_b ⊙ output_b with fixed random d_b, so ∂L/∂output_b = d_b.
// Relative error |a − n| / max(|a|, |n|, floor); the floor keeps entries whose
// true gradient is ~0 from dividing rounding noise by nothing.
inline GradCheckResult gradient_check(const model::ModelConfig& config, std::uint64_t seed, std::size_t batch = 2,
                                      model::Mode mode = model::Mode::Eval, double eps = 1e-5,
                                      double floor = 1e-6) {
  Rng rng(seed);
  model::ModelParams params = model::init_params(config, derive_seed(seed, 1));
  std::vector<Matrix> inputs, d_out;
  for (std::size_t b = 0; b < batch; ++b) {
    inputs.push_back(random_matrix(config.in_len, config.input_dim, rng));
    d_out.push_back(random_matrix(config.out_len, config.output_dim, rng));
  }
  std::vector<const Matrix*> in_ptr, d_ptr;
  for (auto& m : inputs) in_ptr.push_back(&m);
  for (auto& m : d_out) d_ptr.push_back(&m);

  const std::uint64_t mask_seed = derive_seed(seed, 2);
  auto loss = [&](const model::ModelParams& p) {
    Rng mask_rng(mask_seed);
    const auto tape = model::forward_batch(p, config, in_ptr, mode, &mask_rng);
    double l = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      const Matrix out = tape.output(b);
      for (std::size_t i = 0; i < out.size(); ++i) l += out.values()[i] * d_out[b].values()[i];
    }
    return l;
  };

  Rng mask_rng(mask_seed);
  const auto tape = model::forward_batch(params, config, in_ptr, mode, &mask_rng);
  const model::ModelParams grads = model::backward_batch(tape, d_ptr);

  GradCheckResult res;
  auto ptensors = params.tensors();
  const auto gtensors = grads.tensors();
  for (std::size_t ti = 0; ti < ptensors.size(); ++ti) {
    auto vals = ptensors[ti]->values();
    const auto gvals = gtensors[ti]->values();
    for (std::size_t j = 0; j < vals.size(); ++j) {
      const double saved = vals[j];
      vals[j] = saved + eps;
      const double lp = loss(params);
      vals[j] = saved - eps;
      const double lm = loss(params);
      vals[j] = saved;
      const double numeric = (lp - lm) / (2.0 * eps);
      const double analytic = gvals[j];
      const double rel =
          std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
      ++res.checked;
      if (rel > res.max_rel_error) {
        res.max_rel_error = rel;
        res.worst_tensor = ti;
        res.worst_index = j;
      }
    }
  }
  return res;
}

}  // namespace uavtraj::testing
