#include "uav/tensor.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "uav/error.h"

namespace uav {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingFile: return "MissingFile";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kEmptySequence: return "EmptySequence";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
    case ErrorCode::kInvalidParameter: return "InvalidParameter";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kDivisionByZeroStep: return "DivisionByZeroStep";
    case ErrorCode::kNoiseLevelOutOfRange: return "NoiseLevelOutOfRange";
    case ErrorCode::kMissingFlow: return "MissingFlow";
    case ErrorCode::kFlowCountMismatch: return "FlowCountMismatch";
    case ErrorCode::kDimensionNotDivisible: return "DimensionNotDivisible";
    case ErrorCode::kTooSmall: return "TooSmall";
    case ErrorCode::kAllMasksEmpty: return "AllMasksEmpty";
    case ErrorCode::kRowOutOfRange: return "RowOutOfRange";
    case ErrorCode::kUsageError: return "UsageError";
  }
  return "Unknown";
}

std::string ToString(const Shape4& s) {
  std::ostringstream os;
  os << s.frames << "x" << s.channels << "x" << s.height << "x" << s.width;
  return os.str();
}

Image Tensor4::Frame(int t) const {
  Image img(shape_.channels, shape_.height, shape_.width);
  auto src = FrameSpan(t);
  std::copy(src.begin(), src.end(), img.data.begin());
  return img;
}

void Tensor4::SetFrame(int t, const Image& frame) {
  if (frame.channels != shape_.channels || frame.height != shape_.height ||
      frame.width != shape_.width) {
    throw Error(ErrorCode::kShapeMismatch, "frame does not match tensor",
                "frame " + std::to_string(t));
  }
  std::copy(frame.data.begin(), frame.data.end(), FrameSpan(t).begin());
}

bool Tensor4::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

void ValidateVideo(const Video& video) {
  const Shape4& s = video.frames.shape();
  if (s.frames < 1 || s.height < 1 || s.width < 1) {
    throw Error(ErrorCode::kEmptySequence, "video has no samples");
  }
  if (s.channels != 3) {
    throw Error(ErrorCode::kInvalidParameter, "video must have 3 channels",
                ToString(s));
  }
  for (double v : video.frames.data()) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw Error(ErrorCode::kInvalidParameter,
                  "video samples must be finite and in [0,1]");
    }
  }
}

void RequireSameShape(const Shape4& a, const Shape4& b, const char* what) {
  if (!(a == b)) {
    throw Error(ErrorCode::kShapeMismatch,
                std::string(what) + ": " + ToString(a) + " vs " + ToString(b));
  }
}

}  // namespace uav
