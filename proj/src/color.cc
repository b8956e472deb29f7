#include "uav/color.h"

#include <algorithm>
#include <string>

#include "uav/error.h"
#include "uav/parallel.h"
#include "uav/resample.h"

namespace uav {
namespace {

Image HaarLow(const Image& image, int levels) {
  const int block = 1 << levels;
  Image low(image.channels, image.height, image.width);
  for (int c = 0; c < image.channels; ++c) {
    for (int by = 0; by < image.height; by += block) {
      for (int bx = 0; bx < image.width; bx += block) {
        const int ey = std::min(by + block, image.height);
        const int ex = std::min(bx + block, image.width);
        // Repeated 2x2 averaging equals the block mean for full blocks.
        // Offsets from the first sample keep flat blocks exact.
        const double ref = image.at(c, by, bx);
        double sum = 0.0;
        for (int y = by; y < ey; ++y)
          for (int x = bx; x < ex; ++x) sum += image.at(c, y, x) - ref;
        const double mean = ref + sum / ((ey - by) * (ex - bx));
        for (int y = by; y < ey; ++y)
          for (int x = bx; x < ex; ++x) low.at(c, y, x) = mean;
      }
    }
  }
  return low;
}

}  // namespace

WaveletBands WaveletSplit(const Image& image, int levels) {
  if (levels < 1 || levels > 30) {
    throw Error(ErrorCode::kInvalidParameter, "wavelet levels must be >= 1",
                "levels=" + std::to_string(levels));
  }
  const int need = 1 << levels;
  if (image.height < need || image.width < need) {
    throw Error(ErrorCode::kInvalidParameter,
                "image smaller than 2^levels",
                std::to_string(image.width) + "x" + std::to_string(image.height) +
                    " at levels=" + std::to_string(levels));
  }
  WaveletBands bands;
  bands.low = HaarLow(image, levels);
  bands.high = image;
  for (size_t i = 0; i < image.data.size(); ++i) {
    bands.high.data[i] = image.data[i] - bands.low.data[i];
  }
  return bands;
}

Video ColorCorrect(const Video& output, const Video& reference, int levels) {
  if (output.num_frames() != reference.num_frames() ||
      output.frames.channels() != reference.frames.channels()) {
    throw Error(ErrorCode::kShapeMismatch, "color_correct: frame counts differ",
                ToString(output.frames.shape()) + " vs " +
                    ToString(reference.frames.shape()));
  }
  Video out = output;
  ParallelFor(output.num_frames(), [&](int t) {
    Image ref = reference.frames.Frame(t);
    if (ref.height != output.height() || ref.width != output.width()) {
      ref = ResizeBicubic(ref, output.height(), output.width());
    }
    const Image low = WaveletSplit(ref, levels).low;
    const Image high = WaveletSplit(output.frames.Frame(t), levels).high;
    auto dst = out.frames.FrameSpan(t);
    for (size_t i = 0; i < dst.size(); ++i) {
      dst[i] = std::clamp(low.data[i] + high.data[i], 0.0, 1.0);
    }
  });
  return out;
}

}  // namespace uav
