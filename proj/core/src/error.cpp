#include "csbayes/error.hpp"

namespace csbayes {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::NoScalarOutput: return "NoScalarOutput";
    case ErrorCode::LevelTooDeep: return "LevelTooDeep";
    case ErrorCode::BadDimensions: return "BadDimensions";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::ZeroCoordinate: return "ZeroCoordinate";
    case ErrorCode::EmptyComponent: return "EmptyComponent";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::Corrupt: return "Corrupt";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace csbayes
