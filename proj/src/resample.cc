#include "uav/resample.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "uav/error.h"

namespace uav {
namespace {

double Cubic(double x) {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

// Contributors of one output sample. `anchor` is the input index whose value
// the weighted differences are taken against.
struct Taps {
  int anchor = 0;
  std::vector<int> index;
  std::vector<double> weight;
};

std::vector<Taps> BuildTaps(int in_size, const std::vector<double>& centers,
                            double support, double kernel_scale,
                            double (*kernel)(double, double)) {
  std::vector<Taps> taps(centers.size());
  for (size_t o = 0; o < centers.size(); ++o) {
    const double u = centers[o];
    const int lo = static_cast<int>(std::floor(u - support));
    const int hi = static_cast<int>(std::ceil(u + support));
    Taps& t = taps[o];
    double sum = 0.0;
    for (int k = lo; k <= hi; ++k) {
      const double w = kernel(u - k, kernel_scale);
      if (w == 0.0) continue;
      t.index.push_back(std::clamp(k, 0, in_size - 1));
      t.weight.push_back(w);
      sum += w;
    }
    for (double& w : t.weight) w /= sum;
    t.anchor = std::clamp(static_cast<int>(std::floor(u + 0.5)), 0, in_size - 1);
  }
  return taps;
}

double ApplyTaps(const Taps& t, const double* line, size_t stride) {
  const double ref = line[t.anchor * stride];
  double acc = 0.0;
  for (size_t k = 0; k < t.index.size(); ++k) {
    acc += t.weight[k] * (line[t.index[k] * stride] - ref);
  }
  return ref + acc;
}

Image FilterRows(const Image& in, const std::vector<Taps>& taps) {
  Image out(in.channels, in.height, static_cast<int>(taps.size()));
  for (int c = 0; c < in.channels; ++c) {
    for (int y = 0; y < in.height; ++y) {
      const double* line = &in.data[in.Index(c, y, 0)];
      for (int x = 0; x < out.width; ++x) out.at(c, y, x) = ApplyTaps(taps[x], line, 1);
    }
  }
  return out;
}

Image FilterCols(const Image& in, const std::vector<Taps>& taps) {
  Image out(in.channels, static_cast<int>(taps.size()), in.width);
  for (int c = 0; c < in.channels; ++c) {
    for (int x = 0; x < in.width; ++x) {
      const double* line = &in.data[in.Index(c, 0, x)];
      for (int y = 0; y < out.height; ++y) {
        out.at(c, y, x) = ApplyTaps(taps[y], line, in.width);
      }
    }
  }
  return out;
}

std::vector<Taps> ResizeTaps(int in_size, int out_size) {
  const double scale = static_cast<double>(out_size) / in_size;
  const double kscale = std::min(1.0, scale);
  std::vector<double> centers(out_size);
  for (int o = 0; o < out_size; ++o) centers[o] = (o + 0.5) / scale - 0.5;
  return BuildTaps(in_size, centers, 2.0 / kscale, kscale,
                   [](double d, double s) { return Cubic(d * s); });
}

double GaussianKernel(double d, double sigma) {
  return std::exp(-0.5 * d * d / (sigma * sigma));
}

}  // namespace

Image ResizeBicubic(const Image& image, int out_height, int out_width) {
  if (out_height < 1 || out_width < 1 || image.height < 1 || image.width < 1) {
    throw Error(ErrorCode::kInvalidParameter, "resize dimensions must be positive");
  }
  if (out_height == image.height && out_width == image.width) return image;
  Image tmp = out_width == image.width ? image
                                       : FilterRows(image, ResizeTaps(image.width, out_width));
  if (out_height == image.height) return tmp;
  return FilterCols(tmp, ResizeTaps(image.height, out_height));
}

Image GaussianBlur(const Image& image, double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::kInvalidParameter, "blur sigma must be >= 0",
                "sigma=" + std::to_string(sigma));
  }
  if (sigma == 0.0) return image;
  const double radius = std::ceil(3.0 * sigma);
  auto taps_for = [&](int n) {
    std::vector<double> centers(n);
    for (int i = 0; i < n; ++i) centers[i] = i;
    return BuildTaps(n, centers, radius, sigma, GaussianKernel);
  };
  return FilterCols(FilterRows(image, taps_for(image.width)), taps_for(image.height));
}

}  // namespace uav
