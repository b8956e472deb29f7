#ifndef UAV_RESAMPLE_H_
#define UAV_RESAMPLE_H_

#include "uav/tensor.h"

namespace uav {

// Separable bicubic resize (Keys, a = -0.5) with edge replication. When
// shrinking, the kernel is widened by the scale factor to antialias.
// Weights are normalized per output sample, so constant planes stay
// exactly constant.
Image ResizeBicubic(const Image& image, int out_height, int out_width);

// Separable Gaussian blur truncated at ceil(3 sigma), normalized kernel,
// edge replication. sigma = 0 is the identity.
Image GaussianBlur(const Image& image, double sigma);

}  // namespace uav

#endif  // UAV_RESAMPLE_H_
