#ifndef UAV_METRICS_H_
#define UAV_METRICS_H_

#include <optional>
#include <vector>

#include "uav/flow.h"
#include "uav/tensor.h"

namespace uav {

// Returned for identical inputs instead of +inf.
inline constexpr double kPsnrCeiling = 100.0;
// Warping error is reported in units of 1e-3.
inline constexpr double kWarpErrorScale = 1e3;

// 10 log10(1 / MSE) over every sample, data range 1.
double Psnr(const Video& a, const Video& b);
std::vector<double> PsnrPerFrame(const Video& a, const Video& b);

// Single-scale SSIM on BT.601 luma: 11-tap Gaussian window (sigma 1.5),
// C1 = 0.01^2, C2 = 0.03^2, averaged over the valid window positions of each
// frame and then over frames. Requires H, W >= 11.
double Ssim(const Video& a, const Video& b);
std::vector<double> SsimPerFrame(const Video& a, const Video& b);

struct WarpErrorResult {
  double value = 0.0;                    // mean over scored pairs, x1e3
  std::vector<std::optional<double>> per_pair;  // nullopt where mask empty
};

// For each adjacent pair, mean |frame_i - W(frame_{i-1}, f_{i->i-1})| over
// masked positions and all channels; the mask is the forward transfer mask
// used by latent propagation. Pairs with empty masks are skipped.
WarpErrorResult WarpingErrorDetailed(const Video& video,
                                     const std::vector<FlowPair>& flows,
                                     double delta = kDefaultDelta);
double WarpingError(const Video& video, const std::vector<FlowPair>& flows,
                    double delta = kDefaultDelta);

// Row `row` of every frame stacked top to bottom: a 3 x T x W image.
Image TemporalProfile(const Video& video, int row);

struct MetricReport {
  double psnr = 0.0;
  double ssim = 0.0;
  double e_warp = 0.0;
  std::vector<double> psnr_per_frame;
  std::vector<double> ssim_per_frame;
  std::vector<std::optional<double>> e_warp_per_pair;
};

// PSNR/SSIM of `test` against `reference`; E_warp of `test` with `flows`.
MetricReport Evaluate(const Video& reference, const Video& test,
                      const std::vector<FlowPair>& flows,
                      double delta = kDefaultDelta);

}  // namespace uav

#endif  // UAV_METRICS_H_
