#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace eradate {

enum class ErrorCode {
  kMissingFile,
  kBadLabel,
  kBadSplit,
  kBadFormat,
  kDecodeError,
  kUnsupportedFormat,
  kCropTooLarge,
  kTooFewBins,
  kInsufficientPixels,
  kTooFewPoints,
  kDegenerateData,
  kDimMismatch,
  kEmptySet,
  kShapeMismatch,
  kNonFiniteLoss,
  kNegativeFeature,
  kSingleClass,
  kEmptyPredictions,
  kMissingModel,
  kMissingSplit,
  kDuplicateId,
  kEmptyPair,
  kIoError,
  kInvalidArgument,
  kNumerical,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers (and tests) can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace eradate
