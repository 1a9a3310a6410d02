#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "uavtraj/model.hpp"
#include "uavtraj/normalize.hpp"
#include "uavtraj/stream.hpp"
#include "uavtraj/train.hpp"
#include "uavtraj/trajgen.hpp"

namespace uavtraj::config {

// INI-style file with sections [run] [generate] [dataset] [norm] [model]
// [train] [stream]. Ranges are written "lo,hi" and vectors "x,y,z".
struct ExperimentConfig {
  // [run]
  std::uint64_t seed = 1;
  std::filesystem::path out = "runs/default";
  std::string model_id = "GRU_64x2";

  // [generate]
  std::size_t n_trajectories = 5000;
  double duration = 30.0;  // s per trajectory
  double ts = 0.1;
  std::vector<trajgen::Kind> kinds{trajgen::Kind::Circle, trajgen::Kind::Infinity};
  trajgen::ParamBounds bounds = trajgen::ParamBounds::defaults();

  // [dataset]
  Channel channel = Channel::Velocity;
  std::size_t stride = 1;
  double train_frac = 0.7;
  double val_frac = 0.15;

  // [norm]
  normalize::Method norm_method = normalize::Method::MaxNorm;

  // [model] (in_len / out_len also define the segment windows)
  model::ModelConfig model;

  // [train] (seed is derived from [run] seed)
  train::TrainConfig train;

  // [stream]
  trajgen::TrajectoryParams stream_source = trajgen::lemniscate_reference();
  double stream_duration = 60.0;
  double jitter = 0.3;
  std::size_t rolling_window = 100;

  void validate() const;
};

/// Defaults, then the file (if given), then `key=value` overrides where key is
/// "section.name". Unknown keys are rejected.
ExperimentConfig load(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});
ExperimentConfig from_text(const std::string& text, const std::vector<std::string>& overrides = {},
                           const std::string& origin = "<memory>");

/// Applies one "section.name=value" assignment.
void set_value(ExperimentConfig& config, const std::string& assignment);

/// Complete effective configuration, re-loadable with from_text.
std::string to_text(const ExperimentConfig& config);

/// Child seeds per pipeline stage, all derived from the [run] seed.
struct Seeds {
  std::uint64_t generate;
  std::uint64_t split;
  std::uint64_t train;
  std::uint64_t stream;
};
Seeds derive_seeds(std::uint64_t seed);

}  // namespace uavtraj::config
