#ifndef UAV_PROPAGATE_H_
#define UAV_PROPAGATE_H_

#include <vector>

#include "uav/flow.h"
#include "uav/tensor.h"

namespace uav {

enum class PropagationDirections { kForwardThenBackward, kForwardOnly, kBackwardOnly };

struct PropagationConfig {
  double beta = 0.5;  // weight of the warped neighbour
  double delta = kDefaultDelta;
  PropagationDirections directions = PropagationDirections::kForwardThenBackward;
};

void ValidatePropagationConfig(const PropagationConfig& cfg);

// Transfer masks for every adjacent pair, in both travel directions. Flows
// come from the input video only, so these are computed once per run and
// reused at every propagation step.
struct PropagationMasks {
  std::vector<ValidityMask> forward;   // [i-1] gates frame i-1 -> i
  std::vector<ValidityMask> backward;  // [i] gates frame i+1 -> i
};

PropagationMasks ComputePropagationMasks(const std::vector<FlowPair>& flows,
                                         double delta);

// One recurrent sweep over the predicted clean latents. Going forward, frame
// 0 is kept and each later frame fuses the warped, already-updated previous
// frame with weight beta wherever the mask admits it:
//   out_i = M * lerp(z_i, W(out_{i-1}, f_{i->i-1}), beta) + (1 - M) * z_i
// The backward sweep mirrors indices and the flows of each pair.
LatentVideo PropagateDirection(const LatentVideo& z0_hat,
                               const std::vector<FlowPair>& flows,
                               const PropagationMasks& masks,
                               const PropagationConfig& cfg,
                               TransferDirection direction);
LatentVideo PropagateDirection(const LatentVideo& z0_hat,
                               const std::vector<FlowPair>& flows,
                               const PropagationConfig& cfg,
                               TransferDirection direction);

// Applies the sweeps selected by cfg.directions in sequence (forward output
// feeds the backward sweep).
LatentVideo PropagateBidirectional(const LatentVideo& z0_hat,
                                   const std::vector<FlowPair>& flows,
                                   const PropagationMasks& masks,
                                   const PropagationConfig& cfg);
LatentVideo PropagateBidirectional(const LatentVideo& z0_hat,
                                   const std::vector<FlowPair>& flows,
                                   const PropagationConfig& cfg);

}  // namespace uav

#endif  // UAV_PROPAGATE_H_
