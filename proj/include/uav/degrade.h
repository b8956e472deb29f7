#ifndef UAV_DEGRADE_H_
#define UAV_DEGRADE_H_

#include <cstdint>

#include "uav/tensor.h"

namespace uav {

struct DegradeParams {
  double blur_sigma = 1.0;
  int scale = 4;
  double noise_sigma = 0.02;
  uint64_t seed = 0;
};

// Gaussian blur -> bicubic downscale by `scale` -> additive Gaussian noise,
// clamped to [0,1]. Noise is addressed by (seed, frame, channel, pixel).
Video Degrade(const Video& hr, const DegradeParams& params);

}  // namespace uav

#endif  // UAV_DEGRADE_H_
