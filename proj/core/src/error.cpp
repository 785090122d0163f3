#include "eradate/error.hpp"

namespace eradate {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingFile: return "MissingFile";
    case ErrorCode::kBadLabel: return "BadLabel";
    case ErrorCode::kBadSplit: return "BadSplit";
    case ErrorCode::kBadFormat: return "BadFormat";
    case ErrorCode::kDecodeError: return "DecodeError";
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kCropTooLarge: return "CropTooLarge";
    case ErrorCode::kTooFewBins: return "TooFewBins";
    case ErrorCode::kInsufficientPixels: return "InsufficientPixels";
    case ErrorCode::kTooFewPoints: return "TooFewPoints";
    case ErrorCode::kDegenerateData: return "DegenerateData";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kEmptySet: return "EmptySet";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kNegativeFeature: return "NegativeFeature";
    case ErrorCode::kSingleClass: return "SingleClass";
    case ErrorCode::kEmptyPredictions: return "EmptyPredictions";
    case ErrorCode::kMissingModel: return "MissingModel";
    case ErrorCode::kMissingSplit: return "MissingSplit";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kEmptyPair: return "EmptyPair";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kNumerical: return "Numerical";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what),
      code_(code) {}

}  // namespace eradate
