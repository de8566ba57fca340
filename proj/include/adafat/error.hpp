#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace adafat {

enum class ErrorCode {
  NonFinite,
  RankDeficient,
  TooFewRows,
  DimensionMismatch,
  SingularProjection,
  DegenerateProjection,
  EigenFailure,
  SubsetTooSmall,
  SingularGram,
  SingularD,
  ZeroVariance,
  MissingOracle,
  MissingTruth,
  BadSpec,
  Io,
};

std::string_view to_string(ErrorCode code);

/// True for errors caused by bad input rather than numerical breakdown.
bool is_validation_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace adafat
