#include "uav/degrade.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "uav/error.h"
#include "uav/parallel.h"
#include "uav/resample.h"
#include "uav/rng.h"

namespace uav {

Video Degrade(const Video& hr, const DegradeParams& params) {
  if (params.scale < 1) {
    throw Error(ErrorCode::kInvalidParameter, "scale must be >= 1",
                "scale=" + std::to_string(params.scale));
  }
  if (!(params.blur_sigma >= 0.0) || !(params.noise_sigma >= 0.0) ||
      !std::isfinite(params.blur_sigma) || !std::isfinite(params.noise_sigma)) {
    throw Error(ErrorCode::kInvalidParameter, "sigmas must be finite and >= 0");
  }
  if (hr.height() % params.scale != 0 || hr.width() % params.scale != 0) {
    throw Error(ErrorCode::kDimensionNotDivisible,
                "frame size not divisible by scale",
                std::to_string(hr.width()) + "x" + std::to_string(hr.height()) +
                    " / " + std::to_string(params.scale));
  }
  const int oh = hr.height() / params.scale;
  const int ow = hr.width() / params.scale;
  Video out;
  out.frame_rate = hr.frame_rate;
  out.frames = Tensor4(hr.num_frames(), hr.frames.channels(), oh, ow);
  ParallelFor(hr.num_frames(), [&](int t) {
    Image frame = GaussianBlur(hr.frames.Frame(t), params.blur_sigma);
    frame = ResizeBicubic(frame, oh, ow);
    if (params.noise_sigma > 0.0) {
      const uint64_t key = HashCombine(params.seed, static_cast<uint64_t>(t));
      for (size_t i = 0; i < frame.data.size(); ++i) {
        frame.data[i] += params.noise_sigma * GaussianAt(key, i);
      }
    }
    for (double& v : frame.data) v = std::clamp(v, 0.0, 1.0);
    out.frames.SetFrame(t, frame);
  });
  return out;
}

}  // namespace uav
