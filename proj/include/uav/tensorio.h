#ifndef UAV_TENSORIO_H_
#define UAV_TENSORIO_H_

#include <filesystem>
#include <string>
#include <vector>

#include "uav/flow_field.h"
#include "uav/tensor.h"

namespace uav {

// Frame sequences are PNG files listed by a JSON manifest:
//   {"frames": ["frame_0000.png", ...], "frame_rate": 24.0}
// Paths are relative to the manifest's directory. A bare JSON array of paths
// is also accepted. 8-bit samples map to [0,1] by value / 255.
Video ReadFrameSequence(const std::filesystem::path& manifest_path);

// Writes frame_NNNN.png files plus manifest.json into `dir` (created if
// needed) and returns the manifest path. Samples are clamped to [0,1] and
// quantized with round-to-nearest.
std::filesystem::path WriteFrameSequence(const Video& video,
                                         const std::filesystem::path& dir);

// Single-image helpers used by the frame sequence and profile writers.
Image ReadPng(const std::filesystem::path& path);
void WritePng(const Image& rgb, const std::filesystem::path& path);
unsigned char QuantizeSample(double v);

// Middlebury .flo: float magic 202021.25, int32 width, int32 height, then
// interleaved float32 (x, y) row-major. Little-endian.
inline constexpr float kFlowMagic = 202021.25f;
FlowField ReadFlow(const std::filesystem::path& path);
void WriteFlow(const FlowField& flow, const std::filesystem::path& path);

// Flow directory layout for a T-frame video: for i in 1..T-1,
//   forward_NNNN.flo  = f_{i-1 -> i}
//   backward_NNNN.flo = f_{i -> i-1}
// where NNNN is i zero-padded to four digits.
std::vector<FlowPair> ReadFlowDirectory(const std::filesystem::path& dir,
                                        int num_frames);
void WriteFlowDirectory(const std::vector<FlowPair>& flows,
                        const std::filesystem::path& dir);

// Latent tensor file: 8-byte magic "UAVLAT01", uint32 T, C, H, W, then
// T*C*H*W float32, all little-endian. The step tag is not persisted.
inline constexpr char kLatentMagic[8] = {'U', 'A', 'V', 'L', 'A', 'T', '0', '1'};
LatentVideo ReadLatent(const std::filesystem::path& path);
void WriteLatent(const LatentVideo& latent, const std::filesystem::path& path);

}  // namespace uav

#endif  // UAV_TENSORIO_H_
