#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cine {

enum class ErrorCode {
  Io,
  UnsupportedDatatype,
  CorruptHeader,
  Dimension,
  Spec,
  Range,
  EmptyFrame,
  Parameter,
  Shape,
  NegativeMagnitude,
  Divergence,
  TooSmall,
  DegenerateLabels,
  EmptyMask,
  NonFiniteImage,
  SingularTransform,
  EmptyAtlas,
  MissingModel,
  LengthMismatch,
  ZeroVariance,
  Config,
  MissingMask,
  IntensityModelMismatch,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers (and the CLI exit-status mapping) can branch on the kind.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  // Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace cine
