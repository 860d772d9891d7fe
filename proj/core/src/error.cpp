#include "cine/error.hpp"

namespace cine {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io: return "IoError";
    case ErrorCode::UnsupportedDatatype: return "UnsupportedDatatype";
    case ErrorCode::CorruptHeader: return "CorruptHeader";
    case ErrorCode::Dimension: return "DimensionError";
    case ErrorCode::Spec: return "SpecError";
    case ErrorCode::Range: return "RangeError";
    case ErrorCode::EmptyFrame: return "EmptyFrame";
    case ErrorCode::Parameter: return "ParameterError";
    case ErrorCode::Shape: return "ShapeError";
    case ErrorCode::NegativeMagnitude: return "NegativeMagnitude";
    case ErrorCode::Divergence: return "DivergenceError";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::DegenerateLabels: return "DegenerateLabels";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::NonFiniteImage: return "NonFiniteImage";
    case ErrorCode::SingularTransform: return "SingularTransform";
    case ErrorCode::EmptyAtlas: return "EmptyAtlas";
    case ErrorCode::MissingModel: return "MissingModel";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::Config: return "ConfigError";
    case ErrorCode::MissingMask: return "MissingMask";
    case ErrorCode::IntensityModelMismatch: return "IntensityModelMismatch";
  }
  return "Error";
}

}  // namespace cine
