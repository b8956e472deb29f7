#include "uav/propagate.h"

#include <cmath>
#include <string>

#include "uav/error.h"

namespace uav {
namespace {

void RequireFlows(const std::vector<FlowPair>& flows, const LatentVideo& z) {
  if (static_cast<int>(flows.size()) < z.frames() - 1) {
    throw Error(ErrorCode::kMissingFlow,
                "need " + std::to_string(z.frames() - 1) + " flow pairs, got " +
                    std::to_string(flows.size()));
  }
  CheckFlows(flows, z.frames(), z.height(), z.width());
}

}  // namespace

void ValidatePropagationConfig(const PropagationConfig& cfg) {
  if (!(cfg.beta >= 0.0 && cfg.beta <= 1.0)) {
    throw Error(ErrorCode::kInvalidParameter, "beta must be in [0,1]",
                "beta=" + std::to_string(cfg.beta));
  }
  if (!(cfg.delta > 0.0)) {
    throw Error(ErrorCode::kInvalidParameter, "delta must be > 0",
                "delta=" + std::to_string(cfg.delta));
  }
}

PropagationMasks ComputePropagationMasks(const std::vector<FlowPair>& flows,
                                         double delta) {
  PropagationMasks masks;
  masks.forward.reserve(flows.size());
  masks.backward.reserve(flows.size());
  for (const FlowPair& pair : flows) {
    masks.forward.push_back(TransferMask(pair, TransferDirection::kForward, delta));
    masks.backward.push_back(TransferMask(pair, TransferDirection::kBackward, delta));
  }
  return masks;
}

LatentVideo PropagateDirection(const LatentVideo& z0_hat,
                               const std::vector<FlowPair>& flows,
                               const PropagationMasks& masks,
                               const PropagationConfig& cfg,
                               TransferDirection direction) {
  ValidatePropagationConfig(cfg);
  const int num_frames = z0_hat.frames();
  RequireFlows(flows, z0_hat);
  if (masks.forward.size() != flows.size() || masks.backward.size() != flows.size()) {
    throw Error(ErrorCode::kMissingFlow, "masks do not match the flow pairs");
  }

  LatentVideo out = z0_hat;
  if (cfg.beta == 0.0 || num_frames < 2) return out;

  const bool fwd = direction == TransferDirection::kForward;
  const int channels = z0_hat.channels();
  const size_t plane = static_cast<size_t>(z0_hat.height()) * z0_hat.width();
  for (int step = 1; step < num_frames; ++step) {
    const int dst = fwd ? step : num_frames - 1 - step;
    const int src = fwd ? dst - 1 : dst + 1;
    const int pair = fwd ? dst - 1 : dst;
    const ValidityMask& mask = fwd ? masks.forward[pair] : masks.backward[pair];
    const Image warped = WarpNearest(out.Frame(src), WarpFlow(flows[pair], direction));
    auto dst_span = out.FrameSpan(dst);
    auto cur = z0_hat.FrameSpan(dst);
    for (int c = 0; c < channels; ++c) {
      for (size_t p = 0; p < plane; ++p) {
        if (!mask.mask[p]) continue;
        const size_t i = c * plane + p;
        dst_span[i] = std::lerp(cur[i], warped.data[i], cfg.beta);
      }
    }
  }
  return out;
}

LatentVideo PropagateDirection(const LatentVideo& z0_hat,
                               const std::vector<FlowPair>& flows,
                               const PropagationConfig& cfg,
                               TransferDirection direction) {
  ValidatePropagationConfig(cfg);
  RequireFlows(flows, z0_hat);
  return PropagateDirection(z0_hat, flows, ComputePropagationMasks(flows, cfg.delta),
                            cfg, direction);
}

LatentVideo PropagateBidirectional(const LatentVideo& z0_hat,
                                   const std::vector<FlowPair>& flows,
                                   const PropagationMasks& masks,
                                   const PropagationConfig& cfg) {
  switch (cfg.directions) {
    case PropagationDirections::kForwardOnly:
      return PropagateDirection(z0_hat, flows, masks, cfg, TransferDirection::kForward);
    case PropagationDirections::kBackwardOnly:
      return PropagateDirection(z0_hat, flows, masks, cfg, TransferDirection::kBackward);
    case PropagationDirections::kForwardThenBackward:
      break;
  }
  const LatentVideo forward =
      PropagateDirection(z0_hat, flows, masks, cfg, TransferDirection::kForward);
  return PropagateDirection(forward, flows, masks, cfg, TransferDirection::kBackward);
}

LatentVideo PropagateBidirectional(const LatentVideo& z0_hat,
                                   const std::vector<FlowPair>& flows,
                                   const PropagationConfig& cfg) {
  ValidatePropagationConfig(cfg);
  RequireFlows(flows, z0_hat);
  return PropagateBidirectional(z0_hat, flows, ComputePropagationMasks(flows, cfg.delta),
                                cfg);
}

}  // namespace uav
