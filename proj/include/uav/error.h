#ifndef UAV_ERROR_H_
#define UAV_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace uav {

enum class ErrorCode {
  kMissingFile,
  kDimensionMismatch,
  kEmptySequence,
  kIoFailure,
  kBadMagic,
  kTruncatedFile,
  kNonFiniteValue,
  kInvalidParameter,
  kShapeMismatch,
  kDivisionByZeroStep,
  kNoiseLevelOutOfRange,
  kMissingFlow,
  kFlowCountMismatch,
  kDimensionNotDivisible,
  kTooSmall,
  kAllMasksEmpty,
  kRowOutOfRange,
  kUsageError,
};

// Stable machine-readable name, e.g. "ShapeMismatch".
std::string_view ErrorCodeName(ErrorCode code);

// All library failures are reported through this exception type. `context`
// carries the offending path, index or parameter name when one exists.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string context = {})
      : std::runtime_error(message), code_(code), context_(std::move(context)) {}

  ErrorCode code() const { return code_; }
  const std::string& context() const { return context_; }

 private:
  ErrorCode code_;
  std::string context_;
};

}  // namespace uav

#endif  // UAV_ERROR_H_
