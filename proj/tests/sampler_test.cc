#include "uav/sampler.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "testutil.h"
#include "uav/error.h"
#include "uav/metrics.h"
#include "uav/parallel.h"

namespace uav {
namespace {

using testing::BitwiseEqual;
using testing::MaxAbsDiff;

double CoverSum(const std::vector<Tile>& tiles, int y, int x) {
  double s = 0.0;
  for (const Tile& t : tiles) {
    if (y >= t.y0 && y < t.y0 + t.h && x >= t.x0 && x < t.x0 + t.w) {
      s += t.weight(y - t.y0, x - t.x0);
    }
  }
  return s;
}

LatentVideo TileOutput(const Tile& t, int frames, int channels, double value) {
  return LatentVideo(frames, channels, t.h, t.w, value);
}

// v depends only on the noised input, so a constant input gives a constant v.
class InputOnlyDenoiser : public Denoiser {
 public:
  LatentVideo Evaluate(const LatentVideo&, const LatentVideo& x_tau, const Condition&, int,
                       const DenoiseWindow&) const override {
    LatentVideo v(x_tau.shape());
    for (size_t i = 0; i < v.size(); ++i) v.data()[i] = std::tanh(x_tau.data()[i]) - 0.25;
    return v;
  }
  std::string name() const override { return "input_only"; }
};

TEST(PlanTilesTest, SingleFullTile) {
  const auto tiles = PlanTiles(80, 80, 80, 16);
  ASSERT_EQ(tiles.size(), 1u);
  EXPECT_EQ(tiles[0].h, 80);
  for (double w : tiles[0].weights) EXPECT_EQ(w, 1.0);
}

TEST(PlanTilesTest, HandEnumeratedRamp) {
  const auto tiles = PlanTiles(6, 10, 6, 2);
  ASSERT_EQ(tiles.size(), 2u);
  EXPECT_EQ(tiles[0].x0, 0);
  EXPECT_EQ(tiles[1].x0, 4);
  // Ramps (i+1)/3 entering and (w-i)/3 leaving already sum to one.
  EXPECT_NEAR(tiles[0].weight(0, 4), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(tiles[0].weight(0, 5), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(tiles[1].weight(0, 0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(tiles[1].weight(0, 1), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(tiles[0].weight(3, 2), 1.0);
  EXPECT_EQ(tiles[1].weight(3, 5), 1.0);
}

TEST(PlanTilesTest, CoverageSumsToOne) {
  for (auto [h, w, size, ov] : std::vector<std::array<int, 4>>{
           {17, 23, 8, 3}, {80, 80, 80, 16}, {5, 100, 7, 6}, {33, 33, 40, 16}, {9, 9, 1, 0}}) {
    const auto tiles = PlanTiles(h, w, size, ov);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) EXPECT_NEAR(CoverSum(tiles, y, x), 1.0, 1e-12);
    for (const Tile& t : tiles) {
      EXPECT_LE(t.y0 + t.h, h);
      EXPECT_LE(t.x0 + t.w, w);
    }
  }
}

TEST(PlanTilesTest, Errors) {
  EXPECT_THROW(PlanTiles(10, 10, 4, 4), Error);
  EXPECT_THROW(PlanTiles(10, 10, 0, 0), Error);
  EXPECT_THROW(PlanTiles(10, 10, 4, -1), Error);
}

TEST(BlendTilesTest, ConstantsStayExact) {
  const auto tiles = PlanTiles(13, 19, 6, 2);
  std::vector<LatentVideo> outs;
  for (const Tile& t : tiles) outs.push_back(TileOutput(t, 2, 3, 0.7));
  const LatentVideo out = BlendTiles(outs, tiles, 13, 19);
  for (double v : out.data()) EXPECT_EQ(v, 0.7);
}

TEST(BlendTilesTest, TwoTileRamp) {
  const auto tiles = PlanTiles(6, 10, 6, 2);
  const LatentVideo out =
      BlendTiles({TileOutput(tiles[0], 1, 1, 0.0), TileOutput(tiles[1], 1, 1, 1.0)}, tiles, 6, 10);
  EXPECT_EQ(out.at(0, 0, 2, 3), 0.0);
  EXPECT_NEAR(out.at(0, 0, 2, 4), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(out.at(0, 0, 2, 5), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(out.at(0, 0, 2, 6), 1.0);
}

TEST(BlendTilesTest, SingleTileBitwise) {
  std::mt19937_64 rng(1);
  const LatentVideo v = testing::RandomLatent({2, 4, 9, 11}, rng);
  const auto tiles = PlanTiles(9, 11, 80, 16);
  EXPECT_TRUE(BitwiseEqual(BlendTiles({v}, tiles, 9, 11), v));
  EXPECT_THROW(BlendTiles({v, v}, tiles, 9, 11), Error);
  EXPECT_THROW(BlendTiles({LatentVideo(2, 4, 9, 10)}, tiles, 9, 11), Error);
}

TEST(SegmentsTest, HandEnumeratedPlans) {
  const auto one = PlanSegments(8, 8, 2);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].start, 0);
  EXPECT_EQ(one[0].end, 8);
  const auto two = PlanSegments(14, 8, 2);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two[0].start, 0);
  EXPECT_EQ(two[0].end, 8);
  EXPECT_EQ(two[1].start, 6);
  EXPECT_EQ(two[1].end, 14);
  EXPECT_THROW(PlanSegments(14, 8, 8), Error);
}

TEST(SegmentsTest, MergeAveragesOverlaps) {
  const auto segs = PlanSegments(14, 8, 2);
  const LatentVideo a(8, 1, 2, 2, 1.0), b(8, 1, 2, 2, 3.0);
  const LatentVideo m = MergeSegments({a, b}, segs, 14);
  for (int t = 0; t < 14; ++t) {
    const double expect = t < 6 ? 1.0 : (t < 8 ? 2.0 : 3.0);
    EXPECT_EQ(m.at(t, 0, 1, 1), expect) << t;
  }
}

TEST(SegmentsTest, MergeIdentityAndConstants) {
  std::mt19937_64 rng(2);
  const LatentVideo v = testing::RandomLatent({8, 2, 3, 3}, rng);
  EXPECT_TRUE(BitwiseEqual(MergeSegments({v}, PlanSegments(8, 8, 2), 8), v));
  const auto segs = PlanSegments(20, 6, 3);
  std::vector<LatentVideo> parts;
  for (const Segment& s : segs) parts.push_back(LatentVideo(s.length(), 2, 3, 3, -0.3));
  const LatentVideo merged = MergeSegments(parts, segs, 20);
  for (double x : merged.data()) EXPECT_EQ(x, -0.3);
}

TEST(SegmentsTest, ConstantInTimeUnchanged) {
  std::mt19937_64 rng(3);
  const LatentVideo frame = testing::RandomLatent({1, 2, 4, 4}, rng);
  LatentVideo full(11, 2, 4, 4);
  for (int t = 0; t < 11; ++t) full.SetFrame(t, frame.Frame(0));
  const auto segs = PlanSegments(11, 4, 1);
  std::vector<LatentVideo> parts;
  for (const Segment& s : segs) {
    LatentVideo p(s.length(), 2, 4, 4);
    for (int t = 0; t < s.length(); ++t) p.SetFrame(t, full.Frame(s.start + t));
    parts.push_back(p);
  }
  EXPECT_TRUE(BitwiseEqual(MergeSegments(parts, segs, 11), full));
}

TEST(OracleDenoiserTest, PredictsTargetAndRejectsCleanStep) {
  const NoiseSchedule s = MakeSchedule(BetaSchedule::kScaledLinear, 1000);
  std::mt19937_64 rng(4);
  const LatentVideo target = testing::RandomLatent({2, 4, 5, 5}, rng);
  const OracleDenoiser oracle(s, target);
  for (int t : {1, 300, 1000}) {
    const LatentVideo zt = testing::RandomLatent(target.shape(), rng, -3, 3);
    const LatentVideo v =
        oracle.Evaluate(zt, zt, Condition{}, t, DenoiseWindow::Full(target.shape()));
    EXPECT_LE(MaxAbsDiff(PredictZ0(s, zt, v, t), target), 1e-9);
  }
  try {
    oracle.Evaluate(target, target, Condition{}, 0, DenoiseWindow::Full(target.shape()));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDivisionByZeroStep);
  }
}

TEST(SampleLatentsTest, OracleConverges) {
  std::mt19937_64 rng(5);
  const LatentVideo target = testing::RandomLatent({8, 3, 16, 16}, rng);
  SamplerConfig cfg;
  cfg.schedule.propagation_steps.clear();
  const OracleDenoiser oracle(cfg.schedule, target);
  const LatentVideo out =
      SampleLatents(LatentVideo(target.shape()), oracle, cfg, ZeroFlows(16, 16, 8));
  EXPECT_LE(MaxAbsDiff(out, target), 1e-4);
}

TEST(SampleLatentsTest, PropagationFixedPointOnConsistentTarget) {
  std::mt19937_64 rng(6);
  const LatentVideo frame = testing::RandomLatent({1, 4, 12, 12}, rng);
  LatentVideo target(6, 4, 12, 12);
  for (int t = 0; t < 6; ++t) target.SetFrame(t, frame.Frame(0));
  SamplerConfig none;
  none.schedule.propagation_steps.clear();
  SamplerConfig mid;
  const OracleDenoiser oracle(none.schedule, target);
  const auto flows = ZeroFlows(12, 12, 6);
  const LatentVideo a = SampleLatents(target, oracle, none, flows);
  const LatentVideo b = SampleLatents(target, oracle, mid, flows);
  EXPECT_LE(MaxAbsDiff(a, b), 1e-6);
}

TEST(SampleLatentsTest, TiledEqualsUntiledForPointwiseDenoiser) {
  std::mt19937_64 rng(7);
  const LatentVideo cond = testing::RandomLatent({9, 4, 21, 18}, rng);
  SamplerConfig whole;
  whole.schedule.inference_steps = EvenInferenceSteps(1000, 10);
  whole.schedule.propagation_steps = {4, 5};
  whole.condition.noise_level = 40;
  whole.tile_size = 64;
  whole.segment_len = 16;
  SamplerConfig tiled = whole;
  tiled.tile_size = 7;
  tiled.tile_overlap = 3;
  tiled.segment_len = 4;
  tiled.segment_overlap = 2;
  const testing::PointwiseDenoiser den(whole.schedule);
  const auto flows = SynthFlowSequence(Translate{1, 0}, 21, 18, 9);
  EXPECT_TRUE(BitwiseEqual(SampleLatents(cond, den, whole, flows),
                           SampleLatents(cond, den, tiled, flows)));
}

TEST(SampleLatentsTest, ConstantInputGivesSeamFreeConstantOutputs) {
  const LatentVideo cond(10, 4, 20, 20, 0.4);
  SamplerConfig cfg;
  cfg.schedule.inference_steps = EvenInferenceSteps(1000, 8);
  cfg.schedule.propagation_steps.clear();
  cfg.tile_size = 6;
  cfg.tile_overlap = 2;
  cfg.segment_len = 4;
  cfg.segment_overlap = 1;
  const InputOnlyDenoiser den;
  int steps = 0;
  SampleLatents(cond, den, cfg, ZeroFlows(20, 20, 10), [&](const StepRecord& r) {
    const auto [lo, hi] = std::minmax_element(r.v.data().begin(), r.v.data().end());
    EXPECT_EQ(*hi - *lo, 0.0) << "step " << r.position;
    ++steps;
  });
  EXPECT_EQ(steps, 8);
}

TEST(SampleLatentsTest, DeterministicAcrossThreadCounts) {
  std::mt19937_64 rng(8);
  const LatentVideo cond = testing::RandomLatent({10, 4, 24, 24}, rng, 0, 1);
  SamplerConfig cfg;
  cfg.schedule.inference_steps = EvenInferenceSteps(1000, 12);
  cfg.schedule.propagation_steps = {5, 6};
  cfg.tile_size = 12;
  cfg.tile_overlap = 4;
  cfg.segment_len = 4;
  cfg.segment_overlap = 1;
  cfg.condition.prompt = PromptEmbeddingFromSeed(3);
  cfg.condition.guidance_scale = 2.0;
  const ProceduralDenoiser den(cfg.schedule, {});
  const auto flows = SynthFlowSequence(Translate{1, 0}, 24, 24, 10);
  SetThreadCount(1);
  const LatentVideo a = SampleLatents(cond, den, cfg, flows);
  SetThreadCount(8);
  const LatentVideo b = SampleLatents(cond, den, cfg, flows);
  SetThreadCount(0);
  EXPECT_TRUE(BitwiseEqual(a, b));
  EXPECT_TRUE(BitwiseEqual(a, SampleLatents(cond, den, cfg, flows)));
  cfg.seed = 1;
  EXPECT_FALSE(BitwiseEqual(a, SampleLatents(cond, den, cfg, flows)));
}

TEST(SampleLatentsTest, GuidanceScaleOneSkipsUnconditionedCall) {
  std::mt19937_64 rng(9);
  const LatentVideo cond = testing::RandomLatent({3, 4, 8, 8}, rng, 0, 1);
  SamplerConfig cfg;
  cfg.schedule.inference_steps = EvenInferenceSteps(1000, 5);
  cfg.schedule.propagation_steps.clear();
  cfg.condition.prompt = PromptEmbeddingFromSeed(1);
  const ProceduralDenoiser den(cfg.schedule, {});
  const LatentVideo guided1 = SampleLatents(cond, den, cfg, ZeroFlows(8, 8, 3));
  cfg.condition.guidance_scale = 3.0;
  const LatentVideo guided3 = SampleLatents(cond, den, cfg, ZeroFlows(8, 8, 3));
  EXPECT_FALSE(BitwiseEqual(guided1, guided3));
}

TEST(SampleLatentsTest, FlowCountMismatch) {
  const LatentVideo cond(4, 4, 8, 8, 0.5);
  SamplerConfig cfg;
  cfg.schedule.inference_steps = EvenInferenceSteps(1000, 3);
  cfg.schedule.propagation_steps.clear();
  const ProceduralDenoiser den(cfg.schedule, {});
  try {
    SampleLatents(cond, den, cfg, ZeroFlows(8, 8, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFlowCountMismatch);
  }
}

TEST(ProceduralDenoiserTest, ZeroGainReturnsInput) {
  const NoiseSchedule s = MakeSchedule(BetaSchedule::kScaledLinear, 1000);
  std::mt19937_64 rng(10);
  const LatentVideo x = testing::RandomLatent({2, 4, 6, 6}, rng);
  const LatentVideo zt = testing::RandomLatent(x.shape(), rng);
  const ProceduralDenoiser den(s, {0.0, 1.0, 1.5, 3});
  EXPECT_TRUE(BitwiseEqual(
      den.PredictClean(zt, x, Condition{}, 500, DenoiseWindow::Full(x.shape())), x));
}

TEST(ProceduralDenoiserTest, DeviationGrowsWithNoiseLevel) {
  const NoiseSchedule s = MakeSchedule(BetaSchedule::kScaledLinear, 1000);
  const LatentVideo x(2, 4, 16, 16, 0.5);
  const ProceduralDenoiser den(s, {});
  const LatentVideo zt(x.shape(), 0.0);
  double prev = -1.0;
  for (int tau : {0, 50, 150, 350}) {
    if (tau > 0) EXPECT_GT(den.DetailAmplitude(tau), den.DetailAmplitude(0));
    Condition c;
    c.noise_level = tau;
    const LatentVideo z0 = den.PredictClean(zt, x, c, 1000, DenoiseWindow::Full(x.shape()));
    double dev = 0.0;
    for (size_t i = 0; i < x.size(); ++i) dev += std::abs(z0.data()[i] - x.data()[i]);
    EXPECT_GT(dev, prev) << tau;
    prev = dev;
  }
}

TEST(ProceduralDenoiserTest, PromptsChangeTheDetailField) {
  const NoiseSchedule s = MakeSchedule(BetaSchedule::kScaledLinear, 1000);
  const LatentVideo x(1, 4, 8, 8, 0.5);
  const ProceduralDenoiser den(s, {});
  Condition a, b, none;
  a.prompt = PromptEmbeddingFromSeed(1);
  b.prompt = PromptEmbeddingFromSeed(2);
  const auto w = DenoiseWindow::Full(x.shape());
  const LatentVideo za = den.PredictClean(x, x, a, 900, w);
  const LatentVideo zb = den.PredictClean(x, x, b, 900, w);
  const LatentVideo zn = den.PredictClean(x, x, none, 900, w);
  EXPECT_FALSE(BitwiseEqual(za, zb));
  EXPECT_FALSE(BitwiseEqual(za, zn));
  EXPECT_TRUE(BitwiseEqual(za, den.PredictClean(x, x, a, 900, w)));
}

TEST(ProceduralDenoiserTest, DetailFieldIsAddressedByGlobalPosition) {
  const NoiseSchedule s = MakeSchedule(BetaSchedule::kScaledLinear, 1000);
  const ProceduralDenoiser den(s, {});
  const LatentVideo x(3, 4, 12, 12, 0.5);
  const LatentVideo full = den.PredictClean(x, x, Condition{}, 1000, DenoiseWindow::Full(x.shape()));
  // Far from the window edge the smoother sees the same data.
  const LatentVideo part(1, 4, 12, 12, 0.5);
  const LatentVideo p = den.PredictClean(part, part, Condition{}, 1000,
                                         DenoiseWindow{2, 0, 0, 3, 12, 12});
  for (int c = 0; c < 4; ++c)
    for (int y = 0; y < 12; ++y)
      for (int xx = 0; xx < 12; ++xx) EXPECT_EQ(p.at(0, c, y, xx), full.at(2, c, y, xx));
}

TEST(ToyCodecTest, ConstantRoundTripExact) {
  const Video v = testing::ConstantVideo(2, 16, 16, 0.35);
  const LatentVideo z = ToyEncode(v);
  EXPECT_EQ(z.height(), 4);
  EXPECT_EQ(z.channels(), kDefaultLatentChannels);
  const Video back = ToyDecode(z);
  EXPECT_EQ(back.height(), 16);
  for (double s : back.frames.data()) EXPECT_EQ(s, 0.35);
}

TEST(ToyCodecTest, SmoothRampReconstructs) {
  Video v;
  v.frames = Tensor4(1, 3, 64, 64);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) v.frames.at(0, c, y, x) = (x + y) / 126.0;
  EXPECT_GT(Psnr(v, ToyDecode(ToyEncode(v))), 35.0);
}

TEST(ToyCodecTest, ChannelThreeIsZeroAndDivisibility) {
  std::mt19937_64 rng(11);
  const LatentVideo z = ToyEncode(testing::RandomVideo(2, 8, 12, rng));
  for (int t = 0; t < 2; ++t)
    for (int y = 0; y < 2; ++y)
      for (int x = 0; x < 3; ++x) EXPECT_EQ(z.at(t, 3, y, x), 0.0);
  try {
    ToyEncode(testing::ConstantVideo(1, 10, 12, 0.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionNotDivisible);
  }
}

TEST(SampleTest, OracleOnFramesDecodesToFourTimesSize) {
  std::mt19937_64 rng(12);
  const Video in = testing::RandomVideo(3, 8, 10, rng);
  SamplerConfig cfg;
  cfg.schedule.inference_steps = EvenInferenceSteps(1000, 6);
  cfg.schedule.propagation_steps.clear();
  const OracleDenoiser oracle(cfg.schedule, LatentFromFrames(in));
  const SampleResult r = Sample(in, oracle, cfg, ZeroFlows(8, 10, 3));
  EXPECT_EQ(r.video.num_frames(), 3);
  EXPECT_EQ(r.video.height(), 32);
  EXPECT_EQ(r.video.width(), 40);
  EXPECT_LE(MaxAbsDiff(r.latent, LatentFromFrames(in)), 1e-4);
}

TEST(SampleTest, PropagationLowersWarpingErrorOnTranslatingScene) {
  const int frames = 10, h = 20, w = 20;
  const Video in = testing::TranslatingScene(frames, h, w, 1);
  const auto flows = SynthFlowSequence(Translate{1, 0}, h, w, frames);
  SamplerConfig none;
  none.schedule.propagation_steps.clear();
  SamplerConfig mid;
  const ProceduralDenoiser den(none.schedule, {0.1, 1.0, 1.5, 7});
  auto measure = [&](const SamplerConfig& cfg) {
    Video lat;
    lat.frames = Sample(in, den, cfg, flows).latent;
    return WarpingError(lat, flows);
  };
  EXPECT_LT(measure(mid), measure(none));
}

}  // namespace
}  // namespace uav
