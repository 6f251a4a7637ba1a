#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace csbayes {

enum class ErrorCode {
  NotPositiveDefinite,
  DimensionMismatch,
  EmptyInput,
  NonFiniteGradient,
  NoScalarOutput,
  LevelTooDeep,
  BadDimensions,
  BadMagic,
  TruncatedFile,
  RankDeficient,
  ZeroCoordinate,
  EmptyComponent,
  ShapeMismatch,
  NonFiniteLoss,
  LengthMismatch,
  VersionMismatch,
  Corrupt,
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (and tests) can branch on the kind rather than on message text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace csbayes
