#ifndef UAV_FLOW_FIELD_H_
#define UAV_FLOW_FIELD_H_

#include <cstddef>
#include <vector>

namespace uav {

enum class FlowDirection { kForward, kBackward };

// Dense per-pixel displacement in pixels. Vectors are stored interleaved
// (x, y) row-major, the same order as the Middlebury .flo payload.
struct FlowField {
  int height = 0;
  int width = 0;
  std::vector<float> vectors;
  FlowDirection direction = FlowDirection::kForward;
  int from_index = 0;
  int to_index = 1;

  FlowField() = default;
  FlowField(int h, int w)
      : height(h), width(w), vectors(static_cast<size_t>(h) * w * 2, 0.0f) {}

  float& dx(int y, int x) { return vectors[2 * (static_cast<size_t>(y) * width + x)]; }
  float& dy(int y, int x) { return vectors[2 * (static_cast<size_t>(y) * width + x) + 1]; }
  float dx(int y, int x) const { return vectors[2 * (static_cast<size_t>(y) * width + x)]; }
  float dy(int y, int x) const { return vectors[2 * (static_cast<size_t>(y) * width + x) + 1]; }
};

// Flows between frames i-1 and i: forward is f_{i-1->i}, backward f_{i->i-1}.
struct FlowPair {
  FlowField forward;
  FlowField backward;
};

}  // namespace uav

#endif  // UAV_FLOW_FIELD_H_
