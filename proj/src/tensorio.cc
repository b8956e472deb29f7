#include "uav/tensorio.h"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>

#include "uav/error.h"

namespace uav {
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::vector<unsigned char> ReadAllBytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kMissingFile, "cannot open file", path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void WriteAllBytes(const std::vector<unsigned char>& bytes, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::kIoFailure, "cannot open file for writing",
                path.string());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoFailure, "write failed", path.string());
}

void PutU32(std::vector<unsigned char>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void PutF32(std::vector<unsigned char>& out, float f) {
  PutU32(out, std::bit_cast<uint32_t>(f));
}

uint32_t GetU32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

float GetF32(const unsigned char* p) { return std::bit_cast<float>(GetU32(p)); }

}  // namespace

unsigned char QuantizeSample(double v) {
  if (!(v > 0.0)) return 0;  // also maps NaN to 0
  if (v >= 1.0) return 255;
  return static_cast<unsigned char>(std::floor(v * 255.0 + 0.5));
}

Image ReadPng(const fs::path& path) {
  if (!fs::exists(path)) {
    throw Error(ErrorCode::kMissingFile, "frame file not found", path.string());
  }
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw Error(ErrorCode::kIoFailure,
                std::string("cannot decode PNG: ") + image.message,
                path.string());
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error(ErrorCode::kIoFailure,
                std::string("cannot decode PNG: ") + image.message,
                path.string());
  }
  const int h = static_cast<int>(image.height);
  const int w = static_cast<int>(image.width);
  Image out(3, h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        out.at(c, y, x) = buffer[(static_cast<size_t>(y) * w + x) * 3 + c] / 255.0;
      }
    }
  }
  return out;
}

void WritePng(const Image& rgb, const fs::path& path) {
  if (rgb.channels != 3) {
    throw Error(ErrorCode::kInvalidParameter, "PNG writer expects 3 channels");
  }
  std::vector<unsigned char> buffer(static_cast<size_t>(rgb.height) * rgb.width * 3);
  for (int y = 0; y < rgb.height; ++y) {
    for (int x = 0; x < rgb.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        buffer[(static_cast<size_t>(y) * rgb.width + x) * 3 + c] =
            QuantizeSample(rgb.at(c, y, x));
      }
    }
  }
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(rgb.width);
  image.height = static_cast<png_uint_32>(rgb.height);
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, buffer.data(),
                               0, nullptr)) {
    throw Error(ErrorCode::kIoFailure,
                std::string("cannot write PNG: ") + image.message,
                path.string());
  }
}

Video ReadFrameSequence(const fs::path& manifest_path) {
  const auto bytes = ReadAllBytes(manifest_path);
  json doc;
  try {
    doc = json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kIoFailure, std::string("bad manifest: ") + e.what(),
                manifest_path.string());
  }
  Video video;
  json frames;
  if (doc.is_array()) {
    frames = doc;
  } else if (doc.is_object() && doc.contains("frames")) {
    frames = doc["frames"];
    if (doc.contains("frame_rate") && !doc["frame_rate"].is_null()) {
      video.frame_rate = doc["frame_rate"].get<double>();
    }
  } else {
    throw Error(ErrorCode::kIoFailure, "manifest must list frames",
                manifest_path.string());
  }
  if (!frames.is_array() || frames.empty()) {
    throw Error(ErrorCode::kEmptySequence, "manifest lists no frames",
                manifest_path.string());
  }
  const fs::path base = manifest_path.parent_path();
  std::vector<Image> images;
  for (const auto& entry : frames) {
    const fs::path p = base / entry.get<std::string>();
    Image img = ReadPng(p);
    if (!images.empty() && !img.SameShape(images.front())) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "frame " + std::to_string(images.size()) + " is " +
                      std::to_string(img.width) + "x" + std::to_string(img.height) +
                      ", expected " + std::to_string(images.front().width) + "x" +
                      std::to_string(images.front().height),
                  p.string());
    }
    video.source_paths.push_back(p.string());
    images.push_back(std::move(img));
  }
  const Image& first = images.front();
  video.frames = Tensor4(static_cast<int>(images.size()), 3, first.height,
                         first.width);
  for (size_t t = 0; t < images.size(); ++t) {
    video.frames.SetFrame(static_cast<int>(t), images[t]);
  }
  return video;
}

fs::path WriteFrameSequence(const Video& video, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorCode::kIoFailure, "cannot create output directory",
                dir.string());
  }
  json names = json::array();
  for (int t = 0; t < video.num_frames(); ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%04d.png", t);
    WritePng(video.frames.Frame(t), dir / name);
    names.push_back(name);
  }
  json doc = {{"frames", names}};
  if (video.frame_rate) doc["frame_rate"] = *video.frame_rate;
  const fs::path manifest = dir / "manifest.json";
  const std::string text = doc.dump(2) + "\n";
  WriteAllBytes({text.begin(), text.end()}, manifest);
  return manifest;
}

FlowField ReadFlow(const fs::path& path) {
  const auto bytes = ReadAllBytes(path);
  if (bytes.size() < 4) {
    throw Error(ErrorCode::kTruncatedFile, "flow file too short", path.string());
  }
  if (GetF32(bytes.data()) != kFlowMagic) {
    throw Error(ErrorCode::kBadMagic, "not a Middlebury flow file", path.string());
  }
  if (bytes.size() < 12) {
    throw Error(ErrorCode::kTruncatedFile, "flow header truncated", path.string());
  }
  const auto w = static_cast<int32_t>(GetU32(bytes.data() + 4));
  const auto h = static_cast<int32_t>(GetU32(bytes.data() + 8));
  if (w <= 0 || h <= 0) {
    throw Error(ErrorCode::kInvalidParameter, "flow dimensions must be positive",
                path.string());
  }
  const size_t count = static_cast<size_t>(w) * h * 2;
  if (bytes.size() < 12 + count * 4) {
    throw Error(ErrorCode::kTruncatedFile, "flow payload truncated", path.string());
  }
  FlowField flow(h, w);
  for (size_t i = 0; i < count; ++i) {
    const float v = GetF32(bytes.data() + 12 + 4 * i);
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kNonFiniteValue, "flow contains non-finite value",
                  path.string());
    }
    flow.vectors[i] = v;
  }
  return flow;
}

void WriteFlow(const FlowField& flow, const fs::path& path) {
  std::vector<unsigned char> out;
  out.reserve(12 + flow.vectors.size() * 4);
  PutF32(out, kFlowMagic);
  PutU32(out, static_cast<uint32_t>(flow.width));
  PutU32(out, static_cast<uint32_t>(flow.height));
  for (float v : flow.vectors) PutF32(out, v);
  WriteAllBytes(out, path);
}

namespace {

fs::path FlowName(const fs::path& dir, const char* prefix, int i) {
  char name[40];
  std::snprintf(name, sizeof(name), "%s_%04d.flo", prefix, i);
  return dir / name;
}

}  // namespace

std::vector<FlowPair> ReadFlowDirectory(const fs::path& dir, int num_frames) {
  std::vector<FlowPair> flows;
  for (int i = 1; i < num_frames; ++i) {
    const fs::path fwd = FlowName(dir, "forward", i);
    const fs::path bwd = FlowName(dir, "backward", i);
    if (!fs::exists(fwd) || !fs::exists(bwd)) {
      throw Error(ErrorCode::kMissingFlow,
                  "missing flow for frame pair " + std::to_string(i),
                  fs::exists(fwd) ? bwd.string() : fwd.string());
    }
    FlowPair pair{ReadFlow(fwd), ReadFlow(bwd)};
    pair.forward.direction = FlowDirection::kForward;
    pair.forward.from_index = i - 1;
    pair.forward.to_index = i;
    pair.backward.direction = FlowDirection::kBackward;
    pair.backward.from_index = i;
    pair.backward.to_index = i - 1;
    flows.push_back(std::move(pair));
  }
  return flows;
}

void WriteFlowDirectory(const std::vector<FlowPair>& flows, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorCode::kIoFailure, "cannot create flow directory", dir.string());
  }
  for (size_t k = 0; k < flows.size(); ++k) {
    const int i = static_cast<int>(k) + 1;
    WriteFlow(flows[k].forward, FlowName(dir, "forward", i));
    WriteFlow(flows[k].backward, FlowName(dir, "backward", i));
  }
}

LatentVideo ReadLatent(const fs::path& path) {
  const auto bytes = ReadAllBytes(path);
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kLatentMagic, 8) != 0) {
    throw Error(ErrorCode::kBadMagic, "not a latent file", path.string());
  }
  if (bytes.size() < 24) {
    throw Error(ErrorCode::kTruncatedFile, "latent header truncated", path.string());
  }
  uint32_t dims[4];
  for (int i = 0; i < 4; ++i) dims[i] = GetU32(bytes.data() + 8 + 4 * i);
  const uint64_t count = static_cast<uint64_t>(dims[0]) * dims[1] * dims[2] * dims[3];
  if (bytes.size() - 24 < count * 4) {
    throw Error(ErrorCode::kTruncatedFile,
                "latent header claims " + std::to_string(count) + " elements",
                path.string());
  }
  LatentVideo latent(static_cast<int>(dims[0]), static_cast<int>(dims[1]),
                     static_cast<int>(dims[2]), static_cast<int>(dims[3]));
  auto& data = latent.data();
  for (uint64_t i = 0; i < count; ++i) {
    const float v = GetF32(bytes.data() + 24 + 4 * i);
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kNonFiniteValue, "latent contains non-finite value",
                  path.string());
    }
    data[i] = v;
  }
  return latent;
}

void WriteLatent(const LatentVideo& latent, const fs::path& path) {
  if (!latent.AllFinite()) {
    throw Error(ErrorCode::kNonFiniteValue, "latent contains non-finite value",
                path.string());
  }
  std::vector<unsigned char> out;
  out.reserve(24 + latent.size() * 4);
  out.insert(out.end(), kLatentMagic, kLatentMagic + 8);
  PutU32(out, static_cast<uint32_t>(latent.frames()));
  PutU32(out, static_cast<uint32_t>(latent.channels()));
  PutU32(out, static_cast<uint32_t>(latent.height()));
  PutU32(out, static_cast<uint32_t>(latent.width()));
  for (double v : latent.data()) PutF32(out, static_cast<float>(v));
  WriteAllBytes(out, path);
}

}  // namespace uav
