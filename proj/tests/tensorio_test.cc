#include "uav/tensorio.h"

#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <random>

#include "testutil.h"
#include "uav/error.h"

namespace uav {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

std::vector<unsigned char> ReadBytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void WriteBytes(const fs::path& p, const std::vector<unsigned char>& b) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

void AppendF32(std::vector<unsigned char>& b, float v) {
  const auto u = std::bit_cast<uint32_t>(v);
  for (int k = 0; k < 4; ++k) b.push_back(static_cast<unsigned char>(u >> (8 * k)));
}

void AppendI32(std::vector<unsigned char>& b, uint32_t u) {
  for (int k = 0; k < 4; ++k) b.push_back(static_cast<unsigned char>(u >> (8 * k)));
}

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kUsageError;
}

void WriteManifest(const fs::path& path, const std::vector<std::string>& frames) {
  std::ofstream(path) << nlohmann::json{{"frames", frames}}.dump();
}

TEST(FrameSequenceTest, WhiteFramesReadAsOne) {
  const auto dir = TempDir("white");
  Image white(3, 8, 8, 1.0);
  std::vector<std::string> names;
  for (int i = 0; i < 3; ++i) {
    names.push_back("w" + std::to_string(i) + ".png");
    WritePng(white, dir / names.back());
  }
  WriteManifest(dir / "m.json", names);
  const Video v = ReadFrameSequence(dir / "m.json");
  EXPECT_EQ(v.num_frames(), 3);
  for (double s : v.frames.data()) EXPECT_EQ(s, 1.0);
  EXPECT_EQ(v.source_paths.size(), 3u);
}

TEST(FrameSequenceTest, RoundTripIsBitwise) {
  const auto dir = TempDir("roundtrip");
  std::mt19937_64 rng(3);
  Video v = testing::RandomVideo(3, 5, 7, rng);
  v.frame_rate = 24.0;
  const fs::path m1 = WriteFrameSequence(v, dir / "a");
  const Video r1 = ReadFrameSequence(m1);
  const fs::path m2 = WriteFrameSequence(r1, dir / "b");
  const Video r2 = ReadFrameSequence(m2);
  EXPECT_TRUE(testing::BitwiseEqual(r1.frames, r2.frames));
  ASSERT_TRUE(r2.frame_rate.has_value());
  EXPECT_EQ(*r2.frame_rate, 24.0);
  // Quantized values are exact multiples of 1/255.
  for (double s : r1.frames.data()) EXPECT_EQ(s * 255.0, std::round(s * 255.0));
}

TEST(FrameSequenceTest, BareArrayManifestAccepted) {
  const auto dir = TempDir("bare");
  WritePng(Image(3, 2, 2, 0.0), dir / "f.png");
  std::ofstream(dir / "m.json") << R"(["f.png", "f.png"])";
  EXPECT_EQ(ReadFrameSequence(dir / "m.json").num_frames(), 2);
}

TEST(FrameSequenceTest, Errors) {
  const auto dir = TempDir("seqerr");
  WritePng(Image(3, 8, 8, 0.0), dir / "small.png");
  WritePng(Image(3, 16, 16, 0.0), dir / "big.png");
  WriteManifest(dir / "mixed.json", {"small.png", "small.png", "big.png"});
  try {
    ReadFrameSequence(dir / "mixed.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
  }
  WriteManifest(dir / "empty.json", {});
  EXPECT_EQ(CodeOf([&] { ReadFrameSequence(dir / "empty.json"); }), ErrorCode::kEmptySequence);
  WriteManifest(dir / "missing.json", {"nope.png"});
  EXPECT_EQ(CodeOf([&] { ReadFrameSequence(dir / "missing.json"); }), ErrorCode::kMissingFile);
  EXPECT_EQ(CodeOf([&] { ReadFrameSequence(dir / "absent.json"); }), ErrorCode::kMissingFile);
}

TEST(FrameSequenceTest, ZerosWriteBlack) {
  const auto dir = TempDir("black");
  Video v = testing::ConstantVideo(2, 4, 4, 0.0);
  const Video r = ReadFrameSequence(WriteFrameSequence(v, dir));
  for (double s : r.frames.data()) EXPECT_EQ(s, 0.0);
}

TEST(QuantizeTest, HandEvaluatedBytes) {
  EXPECT_EQ(QuantizeSample(0.5), 128);  // round(127.5) = 128
  EXPECT_EQ(QuantizeSample(1.2), 255);
  EXPECT_EQ(QuantizeSample(-0.3), 0);
  EXPECT_EQ(QuantizeSample(1.0), 255);
  EXPECT_EQ(QuantizeSample(0.0), 0);
  EXPECT_EQ(QuantizeSample(1.0 / 255.0), 1);
}

TEST(QuantizeTest, StoredByteIs128ForHalf) {
  const auto dir = TempDir("half");
  WritePng(Image(3, 1, 1, 0.5), dir / "h.png");
  EXPECT_EQ(ReadPng(dir / "h.png").at(0, 0, 0), 128.0 / 255.0);
}

TEST(FlowIoTest, HandBuiltFileParses) {
  const auto dir = TempDir("flowhand");
  std::vector<unsigned char> b;
  AppendF32(b, 202021.25f);
  AppendI32(b, 2);  // width
  AppendI32(b, 1);  // height
  AppendF32(b, 1.0f);
  AppendF32(b, 0.0f);
  AppendF32(b, 0.0f);
  AppendF32(b, -1.0f);
  WriteBytes(dir / "f.flo", b);
  const FlowField f = ReadFlow(dir / "f.flo");
  EXPECT_EQ(f.width, 2);
  EXPECT_EQ(f.height, 1);
  EXPECT_EQ(f.dx(0, 0), 1.0f);
  EXPECT_EQ(f.dy(0, 0), 0.0f);
  EXPECT_EQ(f.dx(0, 1), 0.0f);
  EXPECT_EQ(f.dy(0, 1), -1.0f);
  WriteFlow(f, dir / "g.flo");
  EXPECT_EQ(ReadBytes(dir / "g.flo"), b);
}

TEST(FlowIoTest, RandomRoundTrip) {
  const auto dir = TempDir("flowrt");
  std::mt19937_64 rng(11);
  std::normal_distribution<float> d(0.0f, 5.0f);
  FlowField f(7, 9);
  for (float& v : f.vectors) v = d(rng);
  WriteFlow(f, dir / "r.flo");
  EXPECT_EQ(ReadFlow(dir / "r.flo").vectors, f.vectors);
}

TEST(FlowIoTest, Errors) {
  const auto dir = TempDir("flowerr");
  std::vector<unsigned char> b;
  AppendF32(b, 1.0f);
  AppendI32(b, 1);
  AppendI32(b, 1);
  AppendF32(b, 0.0f);
  AppendF32(b, 0.0f);
  WriteBytes(dir / "magic.flo", b);
  EXPECT_EQ(CodeOf([&] { ReadFlow(dir / "magic.flo"); }), ErrorCode::kBadMagic);

  std::vector<unsigned char> t;
  AppendF32(t, kFlowMagic);
  AppendI32(t, 4);
  AppendI32(t, 4);
  AppendF32(t, 0.0f);
  WriteBytes(dir / "short.flo", t);
  EXPECT_EQ(CodeOf([&] { ReadFlow(dir / "short.flo"); }), ErrorCode::kTruncatedFile);

  std::vector<unsigned char> n;
  AppendF32(n, kFlowMagic);
  AppendI32(n, 1);
  AppendI32(n, 1);
  AppendF32(n, std::numeric_limits<float>::infinity());
  AppendF32(n, 0.0f);
  WriteBytes(dir / "inf.flo", n);
  EXPECT_EQ(CodeOf([&] { ReadFlow(dir / "inf.flo"); }), ErrorCode::kNonFiniteValue);
}

TEST(FlowIoTest, DirectoryRoundTripAndMissing) {
  const auto dir = TempDir("flowdir");
  const auto flows = SynthFlowSequence(Translate{1.5, -0.5}, 4, 5, 3);
  WriteFlowDirectory(flows, dir);
  const auto back = ReadFlowDirectory(dir, 3);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].forward.vectors, flows[1].forward.vectors);
  EXPECT_EQ(back[1].backward.vectors, flows[1].backward.vectors);
  EXPECT_EQ(CodeOf([&] { ReadFlowDirectory(dir, 4); }), ErrorCode::kMissingFlow);
}

TEST(LatentIoTest, SingleZeroIs25Bytes) {
  const auto dir = TempDir("lat1");
  WriteLatent(LatentVideo(1, 1, 1, 1, 0.0), dir / "z.lat");
  const auto b = ReadBytes(dir / "z.lat");
  ASSERT_EQ(b.size(), 8u + 16u + 4u);
  EXPECT_EQ(std::memcmp(b.data(), "UAVLAT01", 8), 0);
  for (int k = 0; k < 4; ++k) {
    EXPECT_EQ(b[8 + 4 * k], 1);
    EXPECT_EQ(b[9 + 4 * k], 0);
  }
  for (size_t i = 24; i < b.size(); ++i) EXPECT_EQ(b[i], 0);
}

TEST(LatentIoTest, RandomRoundTrip) {
  const auto dir = TempDir("latrt");
  std::mt19937_64 rng(5);
  LatentVideo z = testing::RandomLatent({2, 4, 3, 5}, rng);
  // The format stores 32-bit floats; start from float-representable values.
  for (double& v : z.data()) v = static_cast<float>(v);
  WriteLatent(z, dir / "z.lat");
  const LatentVideo r = ReadLatent(dir / "z.lat");
  EXPECT_TRUE(testing::BitwiseEqual(z, r));
  WriteLatent(r, dir / "z2.lat");
  EXPECT_EQ(ReadBytes(dir / "z.lat"), ReadBytes(dir / "z2.lat"));
}

TEST(LatentIoTest, Errors) {
  const auto dir = TempDir("laterr");
  WriteLatent(LatentVideo(1, 1, 2, 2, 0.25), dir / "ok.lat");
  auto b = ReadBytes(dir / "ok.lat");
  b.resize(b.size() - 1);
  WriteBytes(dir / "trunc.lat", b);
  EXPECT_EQ(CodeOf([&] { ReadLatent(dir / "trunc.lat"); }), ErrorCode::kTruncatedFile);

  auto big = ReadBytes(dir / "ok.lat");
  big[8] = 9;  // T = 9 with the payload of T = 1
  WriteBytes(dir / "big.lat", big);
  EXPECT_EQ(CodeOf([&] { ReadLatent(dir / "big.lat"); }), ErrorCode::kTruncatedFile);

  auto magic = ReadBytes(dir / "ok.lat");
  magic[0] = 'X';
  WriteBytes(dir / "magic.lat", magic);
  EXPECT_EQ(CodeOf([&] { ReadLatent(dir / "magic.lat"); }), ErrorCode::kBadMagic);

  auto nan = ReadBytes(dir / "ok.lat");
  const auto q = std::bit_cast<uint32_t>(std::numeric_limits<float>::quiet_NaN());
  for (int k = 0; k < 4; ++k) nan[24 + k] = static_cast<unsigned char>(q >> (8 * k));
  WriteBytes(dir / "nan.lat", nan);
  EXPECT_EQ(CodeOf([&] { ReadLatent(dir / "nan.lat"); }), ErrorCode::kNonFiniteValue);

  LatentVideo bad(1, 1, 1, 1, std::numeric_limits<double>::infinity());
  EXPECT_EQ(CodeOf([&] { WriteLatent(bad, dir / "inf.lat"); }), ErrorCode::kNonFiniteValue);
}

}  // namespace
}  // namespace uav
