#ifndef UAV_COLOR_H_
#define UAV_COLOR_H_

#include "uav/tensor.h"

namespace uav {

inline constexpr int kDefaultColorLevels = 5;

struct WaveletBands {
  Image low;
  Image high;
};

// `levels` rounds of 2x2 Haar averaging, re-expanded to full size by nearest
// duplication; high = image - low. Partial blocks at odd edges average the
// samples they contain.
WaveletBands WaveletSplit(const Image& image, int levels);

// Per frame: low band of the reference (bicubic-resized to the output size
// when needed) plus the high band of the output, clamped to [0,1].
Video ColorCorrect(const Video& output, const Video& reference,
                   int levels = kDefaultColorLevels);

}  // namespace uav

#endif  // UAV_COLOR_H_
