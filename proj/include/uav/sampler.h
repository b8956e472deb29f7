#ifndef UAV_SAMPLER_H_
#define UAV_SAMPLER_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "uav/flow.h"
#include "uav/propagate.h"
#include "uav/schedule.h"
#include "uav/tensor.h"

namespace uav {

// ---------------------------------------------------------------------------
// Spatial tiling and temporal segmentation.

struct Tile {
  int y0 = 0;
  int x0 = 0;
  int h = 0;
  int w = 0;
  // Normalized blend weights, h * w row-major. Over every pixel the weights
  // of the covering tiles sum to 1.
  std::vector<double> weights;

  double weight(int y, int x) const { return weights[static_cast<size_t>(y) * w + x]; }
};

struct Segment {
  int start = 0;
  int end = 0;  // exclusive
  int length() const { return end - start; }
};

// Grid with stride tile_size - overlap per axis; the last tile on each axis
// is shifted to end flush with the border. Tiles larger than the frame are
// cropped to it. Blend weights ramp linearly over `overlap` pixels on
// interior edges before normalization.
std::vector<Tile> PlanTiles(int height, int width, int tile_size, int overlap);

// Weighted sum of per-tile outputs (each frames x C x tile.h x tile.w).
// Pixels whose covering tiles agree get that value exactly.
LatentVideo BlendTiles(const std::vector<LatentVideo>& tile_outputs,
                       const std::vector<Tile>& tiles, int height, int width);

// Segments with stride segment_len - overlap, last one flush with the end.
std::vector<Segment> PlanSegments(int num_frames, int segment_len, int overlap);

// Arithmetic mean over all segments covering each frame.
LatentVideo MergeSegments(const std::vector<LatentVideo>& segment_latents,
                          const std::vector<Segment>& segments, int num_frames);

struct SamplePlan {
  std::vector<Tile> tiles;
  std::vector<Segment> segments;
  int tile_size = 80;
  int tile_overlap = 16;
  int segment_len = 8;
  int segment_overlap = 2;
};

SamplePlan MakeSamplePlan(int num_frames, int height, int width, int tile_size,
                          int tile_overlap, int segment_len, int segment_overlap);

// ---------------------------------------------------------------------------
// Denoisers.

// Where a block handed to a denoiser sits inside the full latent video.
struct DenoiseWindow {
  int frame_offset = 0;
  int y0 = 0;
  int x0 = 0;
  int full_frames = 0;
  int full_height = 0;
  int full_width = 0;

  static DenoiseWindow Full(const Shape4& s) {
    return {0, 0, 0, s.frames, s.height, s.width};
  }
};

// v-prediction network contract: (z_t, x_tau, c, t) -> v with the shape of
// z_t. Implementations must be deterministic and must not depend on how the
// video is cut into windows beyond the window's own content and position.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual LatentVideo Evaluate(const LatentVideo& z_t, const LatentVideo& x_tau,
                               const Condition& condition, int t,
                               const DenoiseWindow& window) const = 0;
  virtual std::string name() const = 0;
};

// Returns v = (alpha_t z_t - target) / sigma_t so that PredictZ0 yields the
// target. DivisionByZeroStep at sigma_t = 0.
class OracleDenoiser : public Denoiser {
 public:
  OracleDenoiser(NoiseSchedule schedule, LatentVideo target);
  LatentVideo Evaluate(const LatentVideo& z_t, const LatentVideo& x_tau,
                       const Condition& condition, int t,
                       const DenoiseWindow& window) const override;
  std::string name() const override { return "oracle"; }

 private:
  NoiseSchedule schedule_;
  LatentVideo target_;
};

struct ProceduralParams {
  double detail_gain = 0.1;
  // Prior spread relative to the detail amplitude; sets how quickly the
  // prediction starts trusting z_t as the noise level drops.
  double spread = 1.0;
  // Correlation length of the detail field in latent pixels; also the width
  // of the smoother that separates structure from noise in z_t.
  double smoothness = 1.5;
  uint64_t seed = 0;
};

// Toy restoration prior. With D = detail_gain * g(tau), g(tau) = 1 + sigma_tau
// (strictly increasing in tau), n a smooth unit-variance Gaussian field keyed
// by (seed, prompt, frame index) and addressed by global pixel position, and
// S a Gaussian smoother of width `smoothness`:
//   prior mode  m = x_tau + D n
//   z0_hat      = m + w S(z_t / alpha_t - m)
//   w           = snr' / (snr' + 1 / (spread D)^2)
// where snr' is the signal-to-noise ratio of z_t after smoothing. The
// smoother keeps structured deviations from the prior (e.g. propagated
// content) and suppresses the white noise carried by z_t. D = 0 gives
// z0_hat = x_tau exactly. v follows from z0_hat by inverting PredictZ0.
class ProceduralDenoiser : public Denoiser {
 public:
  ProceduralDenoiser(NoiseSchedule schedule, ProceduralParams params);
  LatentVideo Evaluate(const LatentVideo& z_t, const LatentVideo& x_tau,
                       const Condition& condition, int t,
                       const DenoiseWindow& window) const override;
  std::string name() const override { return "procedural"; }

  // z0_hat before conversion to v; exposed for tests and diagnostics.
  LatentVideo PredictClean(const LatentVideo& z_t, const LatentVideo& x_tau,
                           const Condition& condition, int t,
                           const DenoiseWindow& window) const;
  double DetailAmplitude(int noise_level) const;

 private:
  Image DetailField(uint64_t frame_key, int channels, const DenoiseWindow& window,
                    int height, int width) const;

  NoiseSchedule schedule_;
  ProceduralParams params_;
};

// Seed derived from a prompt embedding; the null prompt has its own value.
uint64_t PromptKey(const PromptEmbedding& prompt);

// ---------------------------------------------------------------------------
// Toy latent codec standing in for the VAE (x4 spatial factor).

inline constexpr int kLatentScale = 4;

// Frames copied into latent channels 0-2, remaining channels zero.
LatentVideo LatentFromFrames(const Video& video, int channels = kDefaultLatentChannels);
// Bicubic /4 downsample, then LatentFromFrames. DimensionNotDivisible unless
// both frame dimensions are multiples of 4.
LatentVideo ToyEncode(const Video& video);
// Bicubic x4 upsample of channels 0-2, clamped to [0,1].
Video ToyDecode(const LatentVideo& latent);

// ---------------------------------------------------------------------------
// Sampling loop.

struct SamplerConfig {
  NoiseSchedule schedule = MakeSchedule(BetaSchedule::kScaledLinear, 1000);
  Condition condition;
  PropagationConfig propagation;
  int tile_size = 80;
  int tile_overlap = 16;
  int segment_len = 8;
  int segment_overlap = 2;
  uint64_t seed = 0;
  std::optional<int> color_levels;  // wavelet color fix when set
};

// State of one sampling step, after the (optionally propagated) clean
// prediction.
struct StepRecord {
  int position;
  int t;
  const LatentVideo& v;       // denoiser output after tile blend and segment merge
  const LatentVideo& z0_hat;
};
using StepObserver = std::function<void(const StepRecord&)>;

// Runs the deterministic sampling loop on latents shaped like `condition`
// and returns the final clean prediction. Per inference step t: denoise every
// (segment, tile) block with x_tau and the condition (classifier-free
// guidance when a prompt is present and the scale differs from 1), blend
// tiles, average segment overlaps, predict z0, propagate when the step
// position is in the schedule's propagation set, then step to the next t.
LatentVideo SampleLatents(const LatentVideo& condition, const Denoiser& denoiser,
                          const SamplerConfig& cfg,
                          const std::vector<FlowPair>& flows,
                          const StepObserver& observer = {});

struct SampleResult {
  Video video;         // decoded, x4 the input size
  LatentVideo latent;  // final clean latent
};

// Full pipeline on a low-resolution RGB video: latent conditioning from the
// frames, SampleLatents, toy decode, optional color correction against the
// input. Flows live on the input (= latent) grid.
SampleResult Sample(const Video& input, const Denoiser& denoiser,
                    const SamplerConfig& cfg, const std::vector<FlowPair>& flows);

}  // namespace uav

#endif  // UAV_SAMPLER_H_
