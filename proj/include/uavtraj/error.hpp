#pragma once

#include <stdexcept>
#include <string>

namespace uavtraj {

// Every failure the library reports carries one of these kinds so callers
// (the CLI in particular) can map it to a stable exit code.
enum class ErrorKind {
  // usage / configuration
  InvalidArgument,
  InvalidRange,
  InvalidDuration,
  InvalidFractions,
  // data / validation
  DimensionMismatch,
  DegenerateNormal,
  NonMonotonicTimestamps,
  NonUniformSpacing,
  TooFewSamples,
  WrongChannel,
  MethodMismatch,
  ChannelMismatch,
  ZeroData,
  EmptyDataset,
  EmptyInput,
  ParseError,
  VersionMismatch,
  CorruptCheckpoint,
  StaleTape,
  NotReady,
  NonMonotonicTime,
  NoCompleteRecords,
  SourceTooShort,
  Io,
  // numerical
  NotPositiveDefinite,
  SingularFactor,
  DegenerateCovariance,
  NonFiniteGradient,
  NonFiniteLoss,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace uavtraj
