#include "uav/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "uav/error.h"
#include "uav/parallel.h"

namespace uav {
namespace {

double PsnrFromMse(double mse) {
  if (mse <= 0.0) return kPsnrCeiling;
  return std::min(kPsnrCeiling, 10.0 * std::log10(1.0 / mse));
}

double SquaredError(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::vector<double> Luma(const Tensor4& frames, int t) {
  const size_t plane = static_cast<size_t>(frames.height()) * frames.width();
  auto f = frames.FrameSpan(t);
  std::vector<double> y(plane);
  for (size_t p = 0; p < plane; ++p) {
    y[p] = 0.299 * f[p] + 0.587 * f[plane + p] + 0.114 * f[2 * plane + p];
  }
  return y;
}

// 2-D "valid" filtering with the separable normalized Gaussian window.
std::vector<double> FilterValid(const std::vector<double>& in, int h, int w,
                                const std::vector<double>& k) {
  const int n = static_cast<int>(k.size());
  const int ow = w - n + 1;
  const int oh = h - n + 1;
  std::vector<double> rows(static_cast<size_t>(h) * ow);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += k[j] * in[static_cast<size_t>(y) * w + x + j];
      rows[static_cast<size_t>(y) * ow + x] = s;
    }
  }
  std::vector<double> out(static_cast<size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += k[j] * rows[static_cast<size_t>(y + j) * ow + x];
      out[static_cast<size_t>(y) * ow + x] = s;
    }
  }
  return out;
}

std::vector<double> SsimWindow() {
  std::vector<double> k(kSsimWindow);
  const int r = kSsimWindow / 2;
  for (int i = 0; i < kSsimWindow; ++i) {
    k[i] = std::exp(-0.5 * (i - r) * (i - r) / (kSsimSigma * kSsimSigma));
  }
  const double sum = std::accumulate(k.begin(), k.end(), 0.0);
  for (double& v : k) v /= sum;
  return k;
}

double SsimFrame(const Tensor4& a, const Tensor4& b, int t,
                 const std::vector<double>& k) {
  const int h = a.height(), w = a.width();
  const std::vector<double> x = Luma(a, t);
  const std::vector<double> y = Luma(b, t);
  std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mx = FilterValid(x, h, w, k);
  const auto my = FilterValid(y, h, w, k);
  const auto sxx = FilterValid(xx, h, w, k);
  const auto syy = FilterValid(yy, h, w, k);
  const auto sxy = FilterValid(xy, h, w, k);
  double total = 0.0;
  for (size_t i = 0; i < mx.size(); ++i) {
    const double vx = sxx[i] - mx[i] * mx[i];
    const double vy = syy[i] - my[i] * my[i];
    const double cov = sxy[i] - mx[i] * my[i];
    const double num = (2.0 * mx[i] * my[i] + kC1) * (2.0 * cov + kC2);
    const double den = (mx[i] * mx[i] + my[i] * my[i] + kC1) * (vx + vy + kC2);
    total += num / den;
  }
  return total / static_cast<double>(mx.size());
}

}  // namespace

std::vector<double> PsnrPerFrame(const Video& a, const Video& b) {
  RequireSameShape(a.frames.shape(), b.frames.shape(), "psnr");
  std::vector<double> out(a.num_frames());
  for (int t = 0; t < a.num_frames(); ++t) {
    const auto fa = a.frames.FrameSpan(t);
    out[t] = PsnrFromMse(SquaredError(fa, b.frames.FrameSpan(t)) / fa.size());
  }
  return out;
}

double Psnr(const Video& a, const Video& b) {
  RequireSameShape(a.frames.shape(), b.frames.shape(), "psnr");
  const auto& da = a.frames.data();
  const auto& db = b.frames.data();
  if (da.empty()) throw Error(ErrorCode::kEmptySequence, "psnr of empty video");
  return PsnrFromMse(SquaredError(da, db) / da.size());
}

std::vector<double> SsimPerFrame(const Video& a, const Video& b) {
  RequireSameShape(a.frames.shape(), b.frames.shape(), "ssim");
  if (a.frames.channels() != 3) {
    throw Error(ErrorCode::kShapeMismatch, "ssim expects RGB frames");
  }
  if (a.height() < kSsimWindow || a.width() < kSsimWindow) {
    throw Error(ErrorCode::kTooSmall, "ssim needs frames of at least 11x11",
                std::to_string(a.width()) + "x" + std::to_string(a.height()));
  }
  const auto k = SsimWindow();
  std::vector<double> out(a.num_frames());
  ParallelFor(a.num_frames(), [&](int t) { out[t] = SsimFrame(a.frames, b.frames, t, k); });
  return out;
}

double Ssim(const Video& a, const Video& b) {
  const auto per = SsimPerFrame(a, b);
  if (per.empty()) throw Error(ErrorCode::kEmptySequence, "ssim of empty video");
  return std::accumulate(per.begin(), per.end(), 0.0) / per.size();
}

WarpErrorResult WarpingErrorDetailed(const Video& video,
                                     const std::vector<FlowPair>& flows,
                                     double delta) {
  const int num_frames = video.num_frames();
  CheckFlows(flows, num_frames, video.height(), video.width());
  WarpErrorResult result;
  result.per_pair.resize(flows.size());
  const int channels = video.frames.channels();
  const size_t plane = static_cast<size_t>(video.height()) * video.width();
  ParallelFor(static_cast<int>(flows.size()), [&](int k) {
    const FlowPair& pair = flows[k];
    const ValidityMask mask = TransferMask(pair, TransferDirection::kForward, delta);
    const size_t valid = mask.CountValid();
    if (valid == 0) return;
    const Image warped = WarpNearest(video.frames.Frame(k), pair.backward);
    const auto cur = video.frames.FrameSpan(k + 1);
    double sum = 0.0;
    for (int c = 0; c < channels; ++c) {
      for (size_t p = 0; p < plane; ++p) {
        if (mask.mask[p]) sum += std::abs(cur[c * plane + p] - warped.data[c * plane + p]);
      }
    }
    result.per_pair[k] = sum / (static_cast<double>(valid) * channels) * kWarpErrorScale;
  });
  double total = 0.0;
  int scored = 0;
  for (const auto& v : result.per_pair) {
    if (v) {
      total += *v;
      ++scored;
    }
  }
  if (!flows.empty() && scored == 0) {
    throw Error(ErrorCode::kAllMasksEmpty, "every frame pair has an empty validity mask");
  }
  result.value = scored > 0 ? total / scored : 0.0;
  return result;
}

double WarpingError(const Video& video, const std::vector<FlowPair>& flows,
                    double delta) {
  return WarpingErrorDetailed(video, flows, delta).value;
}

Image TemporalProfile(const Video& video, int row) {
  if (row < 0 || row >= video.height()) {
    throw Error(ErrorCode::kRowOutOfRange, "profile row outside the frame",
                "row=" + std::to_string(row));
  }
  const int channels = video.frames.channels();
  Image out(channels, video.num_frames(), video.width());
  for (int t = 0; t < video.num_frames(); ++t) {
    for (int c = 0; c < channels; ++c) {
      for (int x = 0; x < video.width(); ++x) {
        out.at(c, t, x) = video.frames.at(t, c, row, x);
      }
    }
  }
  return out;
}

MetricReport Evaluate(const Video& reference, const Video& test,
                      const std::vector<FlowPair>& flows, double delta) {
  MetricReport r;
  r.psnr = Psnr(reference, test);
  r.psnr_per_frame = PsnrPerFrame(reference, test);
  r.ssim_per_frame = SsimPerFrame(reference, test);
  r.ssim = std::accumulate(r.ssim_per_frame.begin(), r.ssim_per_frame.end(), 0.0) /
           r.ssim_per_frame.size();
  const WarpErrorResult w = WarpingErrorDetailed(test, flows, delta);
  r.e_warp = w.value;
  r.e_warp_per_pair = w.per_pair;
  return r;
}

}  // namespace uav
