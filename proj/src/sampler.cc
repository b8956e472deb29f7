#include "uav/sampler.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "uav/color.h"
#include "uav/error.h"
#include "uav/parallel.h"
#include "uav/resample.h"
#include "uav/rng.h"

namespace uav {
namespace {

struct AxisSpan {
  int start;
  int size;
};

std::vector<AxisSpan> PlanAxis(int extent, int tile, int overlap) {
  if (tile >= extent) return {{0, extent}};
  const int stride = tile - overlap;
  std::vector<AxisSpan> spans;
  int start = 0;
  while (start + tile < extent) {
    spans.push_back({start, tile});
    start += stride;
  }
  spans.push_back({extent - tile, tile});
  return spans;
}

// Unnormalized linear ramp: 1 inside, falling to 1/(overlap+1) at an
// interior edge.
double Ramp(int i, const AxisSpan& span, int extent, int overlap) {
  double r = 1.0;
  if (overlap > 0 && span.start > 0) {
    r = std::min(r, (i + 1.0) / (overlap + 1.0));
  }
  if (overlap > 0 && span.start + span.size < extent) {
    r = std::min(r, (span.size - i) / (overlap + 1.0));
  }
  return r;
}

// Index of the largest entry; ties resolved to the first.
template <typename Get>
size_t ArgMax(size_t n, Get get) {
  size_t best = 0;
  for (size_t k = 1; k < n; ++k) {
    if (get(k) > get(best)) best = k;
  }
  return best;
}

LatentVideo Crop(const LatentVideo& src, const Segment& seg, const Tile& tile) {
  LatentVideo out(seg.length(), src.channels(), tile.h, tile.w);
  for (int t = 0; t < seg.length(); ++t)
    for (int c = 0; c < src.channels(); ++c)
      for (int y = 0; y < tile.h; ++y)
        for (int x = 0; x < tile.w; ++x)
          out.at(t, c, y, x) = src.at(seg.start + t, c, tile.y0 + y, tile.x0 + x);
  return out;
}

// Gaussian field addressed by (seed, stream, element index).
LatentVideo GaussianField(const Shape4& shape, uint64_t seed, uint64_t stream) {
  LatentVideo out(shape);
  const uint64_t key = HashCombine(seed, stream);
  auto& d = out.data();
  for (size_t i = 0; i < d.size(); ++i) d[i] = GaussianAt(key, i);
  return out;
}

// Sum of squared taps of the 2-D Gaussian smoother: the variance left of
// unit white noise after smoothing.
double WhiteNoiseGain(double sigma) {
  if (sigma == 0.0) return 1.0;
  Image impulse(1, 1, 2 * static_cast<int>(std::ceil(3.0 * sigma)) + 1);
  impulse.at(0, 0, impulse.width / 2) = 1.0;
  double g1 = 0.0;
  for (double k : GaussianBlur(impulse, sigma).data) g1 += k * k;
  return g1 * g1;
}

constexpr uint64_t kInitNoiseStream = 0x1A17;
constexpr uint64_t kInputNoiseStream = 0x2B28;
constexpr uint64_t kNullPromptKey = 0x6E756C6C50524D54ull;

}  // namespace

std::vector<Tile> PlanTiles(int height, int width, int tile_size, int overlap) {
  if (height < 1 || width < 1) {
    throw Error(ErrorCode::kInvalidParameter, "tile plan needs a non-empty grid");
  }
  if (tile_size < 1 || overlap < 0 || overlap >= tile_size) {
    throw Error(ErrorCode::kInvalidParameter,
                "need 0 <= overlap < tile_size and tile_size >= 1",
                "tile_size=" + std::to_string(tile_size) +
                    " overlap=" + std::to_string(overlap));
  }
  const auto ys = PlanAxis(height, tile_size, overlap);
  const auto xs = PlanAxis(width, tile_size, overlap);
  std::vector<Tile> tiles;
  for (const auto& sy : ys) {
    for (const auto& sx : xs) {
      Tile t{sy.start, sx.start, sy.size, sx.size, {}};
      t.weights.resize(static_cast<size_t>(t.h) * t.w);
      for (int y = 0; y < t.h; ++y)
        for (int x = 0; x < t.w; ++x)
          t.weights[static_cast<size_t>(y) * t.w + x] =
              Ramp(y, sy, height, overlap) * Ramp(x, sx, width, overlap);
      tiles.push_back(std::move(t));
    }
  }
  std::vector<double> total(static_cast<size_t>(height) * width, 0.0);
  for (const Tile& t : tiles)
    for (int y = 0; y < t.h; ++y)
      for (int x = 0; x < t.w; ++x)
        total[static_cast<size_t>(t.y0 + y) * width + t.x0 + x] += t.weight(y, x);
  for (Tile& t : tiles)
    for (int y = 0; y < t.h; ++y)
      for (int x = 0; x < t.w; ++x)
        t.weights[static_cast<size_t>(y) * t.w + x] /=
            total[static_cast<size_t>(t.y0 + y) * width + t.x0 + x];
  return tiles;
}

LatentVideo BlendTiles(const std::vector<LatentVideo>& tile_outputs,
                       const std::vector<Tile>& tiles, int height, int width) {
  if (tile_outputs.size() != tiles.size() || tiles.empty()) {
    throw Error(ErrorCode::kShapeMismatch,
                "expected one output per tile: " + std::to_string(tiles.size()) +
                    " tiles, " + std::to_string(tile_outputs.size()) + " outputs");
  }
  const int frames = tile_outputs[0].frames();
  const int channels = tile_outputs[0].channels();
  for (size_t k = 0; k < tiles.size(); ++k) {
    const Shape4 want{frames, channels, tiles[k].h, tiles[k].w};
    RequireSameShape(tile_outputs[k].shape(), want, "blend_tiles");
  }
  // Covering tiles per pixel, as (tile, local y, local x).
  struct Cover {
    int tile, y, x;
  };
  std::vector<std::vector<Cover>> covers(static_cast<size_t>(height) * width);
  for (size_t k = 0; k < tiles.size(); ++k) {
    const Tile& t = tiles[k];
    for (int y = 0; y < t.h; ++y)
      for (int x = 0; x < t.w; ++x)
        covers[static_cast<size_t>(t.y0 + y) * width + t.x0 + x].push_back(
            {static_cast<int>(k), y, x});
  }
  LatentVideo out(frames, channels, height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const auto& cv = covers[static_cast<size_t>(y) * width + x];
      if (cv.empty()) {
        throw Error(ErrorCode::kShapeMismatch, "tile plan leaves a pixel uncovered",
                    std::to_string(x) + "," + std::to_string(y));
      }
      const size_t ref = ArgMax(cv.size(), [&](size_t k) {
        return tiles[cv[k].tile].weight(cv[k].y, cv[k].x);
      });
      for (int f = 0; f < frames; ++f) {
        for (int c = 0; c < channels; ++c) {
          const double base = tile_outputs[cv[ref].tile].at(f, c, cv[ref].y, cv[ref].x);
          double acc = 0.0;
          for (const Cover& k : cv) {
            acc += tiles[k.tile].weight(k.y, k.x) *
                   (tile_outputs[k.tile].at(f, c, k.y, k.x) - base);
          }
          out.at(f, c, y, x) = base + acc;
        }
      }
    }
  }
  return out;
}

std::vector<Segment> PlanSegments(int num_frames, int segment_len, int overlap) {
  if (num_frames < 1) {
    throw Error(ErrorCode::kInvalidParameter, "segment plan needs >= 1 frame");
  }
  if (segment_len < 1 || overlap < 0 || overlap >= segment_len) {
    throw Error(ErrorCode::kInvalidParameter,
                "need 0 <= overlap < segment_len",
                "segment_len=" + std::to_string(segment_len) +
                    " overlap=" + std::to_string(overlap));
  }
  std::vector<Segment> out;
  for (const AxisSpan& s : PlanAxis(num_frames, segment_len, overlap)) {
    out.push_back({s.start, s.start + s.size});
  }
  return out;
}

LatentVideo MergeSegments(const std::vector<LatentVideo>& segment_latents,
                          const std::vector<Segment>& segments, int num_frames) {
  if (segment_latents.size() != segments.size() || segments.empty()) {
    throw Error(ErrorCode::kShapeMismatch, "expected one latent per segment");
  }
  const Shape4 base = segment_latents[0].shape();
  std::vector<std::vector<std::pair<int, int>>> covers(num_frames);
  for (size_t k = 0; k < segments.size(); ++k) {
    const Segment& s = segments[k];
    const Shape4 want{s.length(), base.channels, base.height, base.width};
    RequireSameShape(segment_latents[k].shape(), want, "merge_segments");
    if (s.start < 0 || s.end > num_frames) {
      throw Error(ErrorCode::kInvalidParameter, "segment outside the video");
    }
    for (int f = s.start; f < s.end; ++f) covers[f].push_back({static_cast<int>(k), f - s.start});
  }
  LatentVideo out(num_frames, base.channels, base.height, base.width);
  for (int f = 0; f < num_frames; ++f) {
    const auto& cv = covers[f];
    if (cv.empty()) {
      throw Error(ErrorCode::kInvalidParameter, "segments leave a frame uncovered",
                  "frame " + std::to_string(f));
    }
    auto dst = out.FrameSpan(f);
    const auto first = segment_latents[cv[0].first].FrameSpan(cv[0].second);
    for (size_t i = 0; i < dst.size(); ++i) {
      double acc = 0.0;
      for (const auto& [seg, local] : cv) {
        acc += segment_latents[seg].FrameSpan(local)[i] - first[i];
      }
      dst[i] = first[i] + acc / static_cast<double>(cv.size());
    }
  }
  return out;
}

SamplePlan MakeSamplePlan(int num_frames, int height, int width, int tile_size,
                          int tile_overlap, int segment_len, int segment_overlap) {
  SamplePlan plan;
  plan.tile_size = tile_size;
  plan.tile_overlap = tile_overlap;
  plan.segment_len = segment_len;
  plan.segment_overlap = segment_overlap;
  plan.tiles = PlanTiles(height, width, tile_size, tile_overlap);
  plan.segments = PlanSegments(num_frames, segment_len, segment_overlap);
  return plan;
}

// ---------------------------------------------------------------------------

OracleDenoiser::OracleDenoiser(NoiseSchedule schedule, LatentVideo target)
    : schedule_(std::move(schedule)), target_(std::move(target)) {}

LatentVideo OracleDenoiser::Evaluate(const LatentVideo& z_t, const LatentVideo&,
                                     const Condition&, int t,
                                     const DenoiseWindow& window) const {
  const double alpha = schedule_.alpha(t);
  const double sigma = schedule_.sigma(t);
  if (sigma == 0.0) {
    throw Error(ErrorCode::kDivisionByZeroStep, "oracle denoiser at sigma = 0",
                "t=" + std::to_string(t));
  }
  const Shape4& s = z_t.shape();
  if (target_.channels() != s.channels ||
      window.frame_offset + s.frames > target_.frames() ||
      window.y0 + s.height > target_.height() || window.x0 + s.width > target_.width()) {
    throw Error(ErrorCode::kShapeMismatch, "window outside the oracle target",
                ToString(s) + " vs " + ToString(target_.shape()));
  }
  LatentVideo v(s);
  for (int f = 0; f < s.frames; ++f)
    for (int c = 0; c < s.channels; ++c)
      for (int y = 0; y < s.height; ++y)
        for (int x = 0; x < s.width; ++x) {
          const double target =
              target_.at(window.frame_offset + f, c, window.y0 + y, window.x0 + x);
          v.at(f, c, y, x) = (alpha * z_t.at(f, c, y, x) - target) / sigma;
        }
  return v;
}

uint64_t PromptKey(const PromptEmbedding& prompt) {
  if (!prompt) return kNullPromptKey;
  uint64_t h = Mix64(prompt->size());
  for (double v : *prompt) h = HashCombine(h, std::bit_cast<uint64_t>(v));
  return h;
}

ProceduralDenoiser::ProceduralDenoiser(NoiseSchedule schedule, ProceduralParams params)
    : schedule_(std::move(schedule)), params_(params) {
  if (!(params_.detail_gain >= 0.0) || !std::isfinite(params_.detail_gain) ||
      !(params_.spread > 0.0) || !std::isfinite(params_.spread) ||
      !(params_.smoothness >= 0.0) || !std::isfinite(params_.smoothness)) {
    throw Error(ErrorCode::kInvalidParameter,
                "procedural denoiser needs detail_gain >= 0, spread > 0, smoothness >= 0");
  }
}

double ProceduralDenoiser::DetailAmplitude(int noise_level) const {
  return params_.detail_gain * (1.0 + schedule_.sigma(noise_level));
}

Image ProceduralDenoiser::DetailField(uint64_t frame_key, int channels,
                                      const DenoiseWindow& window, int height,
                                      int width) const {
  const double sigma = params_.smoothness;
  const int pad = static_cast<int>(std::ceil(3.0 * sigma));
  Image white(channels, height + 2 * pad, width + 2 * pad);
  for (int c = 0; c < channels; ++c)
    for (int y = 0; y < white.height; ++y)
      for (int x = 0; x < white.width; ++x) {
        const int64_t gy = int64_t{window.y0} + y - pad;
        const int64_t gx = int64_t{window.x0} + x - pad;
        const uint64_t addr = HashCombine(HashCombine(static_cast<uint64_t>(c),
                                                      static_cast<uint64_t>(gy)),
                                          static_cast<uint64_t>(gx));
        white.at(c, y, x) = GaussianAt(frame_key, addr);
      }
  const Image smooth = GaussianBlur(white, sigma);
  const double gain = 1.0 / std::sqrt(WhiteNoiseGain(sigma));
  Image out(channels, height, width);
  for (int c = 0; c < channels; ++c)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) out.at(c, y, x) = gain * smooth.at(c, y + pad, x + pad);
  return out;
}

LatentVideo ProceduralDenoiser::PredictClean(const LatentVideo& z_t,
                                             const LatentVideo& x_tau,
                                             const Condition& condition, int t,
                                             const DenoiseWindow& window) const {
  RequireSameShape(z_t.shape(), x_tau.shape(), "procedural denoiser");
  const double amp = DetailAmplitude(condition.noise_level);
  if (amp == 0.0) return x_tau;
  const double alpha = schedule_.alpha(t);
  const double sigma = schedule_.sigma(t);
  if (sigma == 0.0) {
    throw Error(ErrorCode::kDivisionByZeroStep, "procedural denoiser at sigma = 0",
                "t=" + std::to_string(t));
  }
  // Smoothing the residual divides the variance of white noise by 1 / gain.
  const double snr = (alpha * alpha) / (sigma * sigma) / WhiteNoiseGain(params_.smoothness);
  const double prior_var = (params_.spread * amp) * (params_.spread * amp);
  const double trust = snr / (snr + 1.0 / prior_var);
  const uint64_t key = HashCombine(params_.seed, PromptKey(condition.prompt));
  const Shape4& s = z_t.shape();
  LatentVideo out(s);
  for (int f = 0; f < s.frames; ++f) {
    const uint64_t frame_key =
        HashCombine(key, static_cast<uint64_t>(window.frame_offset + f));
    const Image detail = DetailField(frame_key, s.channels, window, s.height, s.width);
    Image mode(s.channels, s.height, s.width);
    Image residual(s.channels, s.height, s.width);
    for (int c = 0; c < s.channels; ++c)
      for (int y = 0; y < s.height; ++y)
        for (int x = 0; x < s.width; ++x) {
          const double m = x_tau.at(f, c, y, x) + amp * detail.at(c, y, x);
          mode.at(c, y, x) = m;
          residual.at(c, y, x) = z_t.at(f, c, y, x) / alpha - m;
        }
    const Image smooth = GaussianBlur(residual, params_.smoothness);
    for (size_t i = 0; i < mode.data.size(); ++i) mode.data[i] += trust * smooth.data[i];
    out.SetFrame(f, mode);
  }
  return out;
}

LatentVideo ProceduralDenoiser::Evaluate(const LatentVideo& z_t, const LatentVideo& x_tau,
                                         const Condition& condition, int t,
                                         const DenoiseWindow& window) const {
  const LatentVideo z0 = PredictClean(z_t, x_tau, condition, t, window);
  const double alpha = schedule_.alpha(t);
  const double sigma = schedule_.sigma(t);
  if (sigma == 0.0) {
    throw Error(ErrorCode::kDivisionByZeroStep, "procedural denoiser at sigma = 0",
                "t=" + std::to_string(t));
  }
  LatentVideo v(z_t.shape());
  for (size_t i = 0; i < v.size(); ++i) {
    v.data()[i] = (alpha * z_t.data()[i] - z0.data()[i]) / sigma;
  }
  return v;
}

// ---------------------------------------------------------------------------

LatentVideo LatentFromFrames(const Video& video, int channels) {
  if (channels < 3) {
    throw Error(ErrorCode::kInvalidParameter, "latent needs at least 3 channels");
  }
  LatentVideo out(video.num_frames(), channels, video.height(), video.width());
  const size_t plane = static_cast<size_t>(video.height()) * video.width();
  for (int t = 0; t < video.num_frames(); ++t) {
    auto src = video.frames.FrameSpan(t);
    auto dst = out.FrameSpan(t);
    std::copy(src.begin(), src.begin() + 3 * plane, dst.begin());
  }
  return out;
}

LatentVideo ToyEncode(const Video& video) {
  if (video.height() % kLatentScale != 0 || video.width() % kLatentScale != 0) {
    throw Error(ErrorCode::kDimensionNotDivisible,
                "frame size must be divisible by 4",
                std::to_string(video.width()) + "x" + std::to_string(video.height()));
  }
  Video small;
  small.frames = Tensor4(video.num_frames(), 3, video.height() / kLatentScale,
                         video.width() / kLatentScale);
  ParallelFor(video.num_frames(), [&](int t) {
    small.frames.SetFrame(t, ResizeBicubic(video.frames.Frame(t), small.height(),
                                           small.width()));
  });
  return LatentFromFrames(small);
}

Video ToyDecode(const LatentVideo& latent) {
  if (latent.channels() < 3) {
    throw Error(ErrorCode::kShapeMismatch, "decode needs at least 3 latent channels");
  }
  Video out;
  out.frames = Tensor4(latent.frames(), 3, latent.height() * kLatentScale,
                       latent.width() * kLatentScale);
  const size_t plane = static_cast<size_t>(latent.height()) * latent.width();
  ParallelFor(latent.frames(), [&](int t) {
    Image rgb(3, latent.height(), latent.width());
    auto src = latent.FrameSpan(t);
    std::copy(src.begin(), src.begin() + 3 * plane, rgb.data.begin());
    Image big = ResizeBicubic(rgb, out.height(), out.width());
    for (double& v : big.data) v = std::clamp(v, 0.0, 1.0);
    out.frames.SetFrame(t, big);
  });
  return out;
}

// ---------------------------------------------------------------------------

LatentVideo SampleLatents(const LatentVideo& condition, const Denoiser& denoiser,
                          const SamplerConfig& cfg,
                          const std::vector<FlowPair>& flows,
                          const StepObserver& observer) {
  const NoiseSchedule& sched = cfg.schedule;
  ValidateSchedule(sched);
  ValidatePropagationConfig(cfg.propagation);
  if (sched.inference_steps.empty()) {
    throw Error(ErrorCode::kInvalidParameter, "schedule has no inference steps");
  }
  const Shape4 shape = condition.shape();
  if (shape.frames < 1 || shape.height < 1 || shape.width < 1) {
    throw Error(ErrorCode::kEmptySequence, "conditioning latent is empty");
  }
  CheckFlows(flows, shape.frames, shape.height, shape.width);
  const SamplePlan plan =
      MakeSamplePlan(shape.frames, shape.height, shape.width, cfg.tile_size,
                     cfg.tile_overlap, cfg.segment_len, cfg.segment_overlap);

  const bool propagate = !sched.propagation_steps.empty() && shape.frames > 1;
  PropagationMasks masks;
  if (propagate) masks = ComputePropagationMasks(flows, cfg.propagation.delta);

  const Condition& cond = cfg.condition;
  const LatentVideo x_tau =
      NoiseInput(sched, condition, cond.noise_level,
                 GaussianField(shape, cfg.seed, kInputNoiseStream), cond.max_noise_level);
  const bool guided = cond.prompt.has_value() && cond.guidance_scale != 1.0;
  Condition uncond = cond;
  uncond.prompt.reset();

  LatentVideo z = GaussianField(shape, cfg.seed, kInitNoiseStream);
  LatentVideo z0;
  const int num_tiles = static_cast<int>(plan.tiles.size());
  const int num_jobs = static_cast<int>(plan.segments.size()) * num_tiles;

  for (int pos = 0; pos < sched.num_inference_steps(); ++pos) {
    const int t = sched.inference_steps[pos];
    z.step_tag = t;
    std::vector<LatentVideo> block_v(num_jobs);
    ParallelFor(num_jobs, [&](int job) {
      const Segment& seg = plan.segments[job / num_tiles];
      const Tile& tile = plan.tiles[job % num_tiles];
      const LatentVideo zb = Crop(z, seg, tile);
      const LatentVideo xb = Crop(x_tau, seg, tile);
      const DenoiseWindow window{seg.start, tile.y0, tile.x0,
                                 shape.frames, shape.height, shape.width};
      LatentVideo v = denoiser.Evaluate(zb, xb, cond, t, window);
      RequireSameShape(v.shape(), zb.shape(), "denoiser output");
      if (guided) {
        v = CfgCombine(denoiser.Evaluate(zb, xb, uncond, t, window), v,
                       cond.guidance_scale);
      }
      block_v[job] = std::move(v);
    });
    std::vector<LatentVideo> segment_v;
    segment_v.reserve(plan.segments.size());
    for (size_t s = 0; s < plan.segments.size(); ++s) {
      std::vector<LatentVideo> tiles_v(
          std::make_move_iterator(block_v.begin() + s * num_tiles),
          std::make_move_iterator(block_v.begin() + (s + 1) * num_tiles));
      segment_v.push_back(BlendTiles(tiles_v, plan.tiles, shape.height, shape.width));
    }
    const LatentVideo v = MergeSegments(segment_v, plan.segments, shape.frames);
    z0 = PredictZ0(sched, z, v, t);
    if (propagate && sched.propagation_steps.count(pos)) {
      z0 = PropagateBidirectional(z0, flows, masks, cfg.propagation);
    }
    z0.step_tag = t;
    if (observer) observer({pos, t, v, z0});
    z = DdimStep(sched, z, z0, t, sched.PrevStep(pos));
  }
  z0.step_tag = 0;
  return z0;
}

SampleResult Sample(const Video& input, const Denoiser& denoiser,
                    const SamplerConfig& cfg, const std::vector<FlowPair>& flows) {
  ValidateVideo(input);
  SampleResult result;
  result.latent = SampleLatents(LatentFromFrames(input), denoiser, cfg, flows);
  result.video = ToyDecode(result.latent);
  result.video.frame_rate = input.frame_rate;
  if (cfg.color_levels) {
    result.video = ColorCorrect(result.video, input, *cfg.color_levels);
  }
  return result;
}

}  // namespace uav
