#ifndef UAV_FLOW_H_
#define UAV_FLOW_H_

#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "uav/flow_field.h"
#include "uav/tensor.h"

namespace uav {

inline constexpr double kDefaultDelta = 1.0;

// Nearest-integer rounding with ties toward +infinity.
inline int RoundNearest(double v) { return static_cast<int>(std::floor(v + 0.5)); }

// Forward-backward consistency error on the grid of the source frame, plus
// a flag for positions whose displaced lookup left the grid and was clamped.
struct ConsistencyMap {
  int height = 0;
  int width = 0;
  std::vector<double> error;
  std::vector<uint8_t> out_of_bounds;

  double at(int y, int x) const { return error[static_cast<size_t>(y) * width + x]; }
};

struct ValidityMask {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> mask;
  double threshold_used = 0.0;

  bool at(int y, int x) const { return mask[static_cast<size_t>(y) * width + x] != 0; }
  size_t CountValid() const;
};

// E(p) = |f_fwd(p) + f_bwd(round_clamp(p + f_fwd(p)))|^2
ConsistencyMap ConsistencyError(const FlowField& forward, const FlowField& backward);

// mask(p) = error(p) < delta and the lookup at p stayed on the grid.
ValidityMask MakeValidityMask(const ConsistencyMap& error, double delta);

// Backward warp: out[c][p] = in[c][round_clamp(p + flow(p))]. When
// `out_of_bounds` is given it receives 1 where the source was clamped.
Image WarpNearest(const Image& frame, const FlowField& flow,
                  std::vector<uint8_t>* out_of_bounds = nullptr);

// Which way information travels along a flow pair.
enum class TransferDirection {
  kForward,   // frame i-1 -> frame i
  kBackward,  // frame i -> frame i-1
};

// Mask gating a transfer across `pair`: the consistency check in the travel
// direction, and the warp source of each destination pixel lying on the grid.
ValidityMask TransferMask(const FlowPair& pair, TransferDirection direction,
                          double delta);

// Flow sampled when warping the source frame onto the destination grid.
inline const FlowField& WarpFlow(const FlowPair& pair, TransferDirection d) {
  return d == TransferDirection::kForward ? pair.backward : pair.forward;
}

struct Translate {
  double dx = 0.0;
  double dy = 0.0;
};
struct Rotate {
  double angle = 0.0;  // radians, x right / y down
  double cx = 0.0;
  double cy = 0.0;
};
struct Zoom {
  double scale = 1.0;
  double cx = 0.0;
  double cy = 0.0;
};
using Motion = std::variant<Translate, Rotate, Zoom>;

// "translate:dx,dy" | "rotate:angle,cx,cy" | "zoom:s,cx,cy"
Motion ParseMotion(const std::string& text);

// Analytic forward field of the motion and its inverse as the backward field.
FlowPair SynthFlow(const Motion& motion, int height, int width);
// T-1 copies of SynthFlow with frame indices filled in.
std::vector<FlowPair> SynthFlowSequence(const Motion& motion, int height,
                                        int width, int num_frames);

// Zero-motion flows for a T-frame video.
std::vector<FlowPair> ZeroFlows(int height, int width, int num_frames);

// Throws FlowCountMismatch / ShapeMismatch unless flows fit the video grid.
void CheckFlows(const std::vector<FlowPair>& flows, int num_frames, int height,
                int width);

}  // namespace uav

#endif  // UAV_FLOW_H_
