#include "uav/flow.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "uav/error.h"

namespace uav {
namespace {

void RequireSameGrid(const FlowField& a, const FlowField& b, const char* what) {
  if (a.height != b.height || a.width != b.width) {
    throw Error(ErrorCode::kShapeMismatch,
                std::string(what) + ": flow grids differ",
                std::to_string(a.width) + "x" + std::to_string(a.height) + " vs " +
                    std::to_string(b.width) + "x" + std::to_string(b.height));
  }
}

// Rounded, clamped sample position for p + flow(p); returns true if clamped.
bool Displace(const FlowField& flow, int y, int x, int* sy, int* sx) {
  const int ty = RoundNearest(y + static_cast<double>(flow.dy(y, x)));
  const int tx = RoundNearest(x + static_cast<double>(flow.dx(y, x)));
  *sy = std::clamp(ty, 0, flow.height - 1);
  *sx = std::clamp(tx, 0, flow.width - 1);
  return *sy != ty || *sx != tx;
}

void RequireFinite(double v, const char* name) {
  if (!std::isfinite(v)) {
    throw Error(ErrorCode::kInvalidParameter, "motion parameter is not finite", name);
  }
}

}  // namespace

size_t ValidityMask::CountValid() const {
  return static_cast<size_t>(std::count(mask.begin(), mask.end(), uint8_t{1}));
}

ConsistencyMap ConsistencyError(const FlowField& forward, const FlowField& backward) {
  RequireSameGrid(forward, backward, "consistency_error");
  ConsistencyMap out;
  out.height = forward.height;
  out.width = forward.width;
  out.error.resize(static_cast<size_t>(out.height) * out.width);
  out.out_of_bounds.resize(out.error.size());
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      int sy, sx;
      const bool clamped = Displace(forward, y, x, &sy, &sx);
      const double ex = static_cast<double>(forward.dx(y, x)) + backward.dx(sy, sx);
      const double ey = static_cast<double>(forward.dy(y, x)) + backward.dy(sy, sx);
      const size_t i = static_cast<size_t>(y) * out.width + x;
      out.error[i] = ex * ex + ey * ey;
      out.out_of_bounds[i] = clamped ? 1 : 0;
    }
  }
  return out;
}

ValidityMask MakeValidityMask(const ConsistencyMap& error, double delta) {
  if (!(delta > 0.0)) {
    throw Error(ErrorCode::kInvalidParameter, "delta must be > 0",
                "delta=" + std::to_string(delta));
  }
  ValidityMask out;
  out.height = error.height;
  out.width = error.width;
  out.threshold_used = delta;
  out.mask.resize(error.error.size());
  for (size_t i = 0; i < out.mask.size(); ++i) {
    out.mask[i] = (error.error[i] < delta && !error.out_of_bounds[i]) ? 1 : 0;
  }
  return out;
}

Image WarpNearest(const Image& frame, const FlowField& flow,
                  std::vector<uint8_t>* out_of_bounds) {
  if (frame.height != flow.height || frame.width != flow.width) {
    throw Error(ErrorCode::kShapeMismatch, "warp: flow grid differs from frame",
                std::to_string(frame.width) + "x" + std::to_string(frame.height) +
                    " vs " + std::to_string(flow.width) + "x" +
                    std::to_string(flow.height));
  }
  Image out(frame.channels, frame.height, frame.width);
  if (out_of_bounds) out_of_bounds->assign(frame.plane_size(), 0);
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      int sy, sx;
      const bool clamped = Displace(flow, y, x, &sy, &sx);
      if (out_of_bounds && clamped) {
        (*out_of_bounds)[static_cast<size_t>(y) * frame.width + x] = 1;
      }
      for (int c = 0; c < frame.channels; ++c) out.at(c, y, x) = frame.at(c, sy, sx);
    }
  }
  return out;
}

ValidityMask TransferMask(const FlowPair& pair, TransferDirection direction,
                          double delta) {
  const bool fwd = direction == TransferDirection::kForward;
  const FlowField& travel = fwd ? pair.forward : pair.backward;
  const FlowField& back = fwd ? pair.backward : pair.forward;
  ValidityMask mask = MakeValidityMask(ConsistencyError(travel, back), delta);
  const FlowField& warp = WarpFlow(pair, direction);
  for (int y = 0; y < warp.height; ++y) {
    for (int x = 0; x < warp.width; ++x) {
      int sy, sx;
      if (Displace(warp, y, x, &sy, &sx)) {
        mask.mask[static_cast<size_t>(y) * warp.width + x] = 0;
      }
    }
  }
  return mask;
}

Motion ParseMotion(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  std::vector<double> args;
  if (colon != std::string::npos) {
    std::stringstream ss(text.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        size_t used = 0;
        args.push_back(std::stod(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw Error(ErrorCode::kInvalidParameter, "bad motion argument", text);
      }
    }
  }
  auto need = [&](size_t n) {
    if (args.size() != n) {
      throw Error(ErrorCode::kInvalidParameter,
                  kind + " expects " + std::to_string(n) + " arguments", text);
    }
  };
  if (kind == "translate") {
    need(2);
    return Translate{args[0], args[1]};
  }
  if (kind == "rotate") {
    need(3);
    return Rotate{args[0], args[1], args[2]};
  }
  if (kind == "zoom") {
    need(3);
    return Zoom{args[0], args[1], args[2]};
  }
  throw Error(ErrorCode::kInvalidParameter, "unknown motion kind", text);
}

FlowPair SynthFlow(const Motion& motion, int height, int width) {
  if (height < 1 || width < 1) {
    throw Error(ErrorCode::kInvalidParameter, "flow grid must be non-empty");
  }
  FlowPair pair{FlowField(height, width), FlowField(height, width)};
  pair.backward.direction = FlowDirection::kBackward;
  pair.backward.from_index = 1;
  pair.backward.to_index = 0;

  // Maps a point through the motion (forward) or its inverse (backward).
  std::function<void(double, double, double*, double*)> fwd, bwd;
  if (const auto* t = std::get_if<Translate>(&motion)) {
    RequireFinite(t->dx, "dx");
    RequireFinite(t->dy, "dy");
    fwd = [t](double x, double y, double* ox, double* oy) { *ox = x + t->dx; *oy = y + t->dy; };
    bwd = [t](double x, double y, double* ox, double* oy) { *ox = x - t->dx; *oy = y - t->dy; };
  } else if (const auto* r = std::get_if<Rotate>(&motion)) {
    RequireFinite(r->angle, "angle");
    RequireFinite(r->cx, "cx");
    RequireFinite(r->cy, "cy");
    const double c = std::cos(r->angle), s = std::sin(r->angle);
    const double cx = r->cx, cy = r->cy;
    fwd = [=](double x, double y, double* ox, double* oy) {
      *ox = cx + c * (x - cx) - s * (y - cy);
      *oy = cy + s * (x - cx) + c * (y - cy);
    };
    bwd = [=](double x, double y, double* ox, double* oy) {
      *ox = cx + c * (x - cx) + s * (y - cy);
      *oy = cy - s * (x - cx) + c * (y - cy);
    };
  } else {
    const auto& z = std::get<Zoom>(motion);
    RequireFinite(z.scale, "scale");
    RequireFinite(z.cx, "cx");
    RequireFinite(z.cy, "cy");
    if (!(z.scale > 0.0)) {
      throw Error(ErrorCode::kInvalidParameter, "zoom scale must be > 0", "scale");
    }
    const double k = z.scale, cx = z.cx, cy = z.cy;
    fwd = [=](double x, double y, double* ox, double* oy) {
      *ox = cx + k * (x - cx);
      *oy = cy + k * (y - cy);
    };
    bwd = [=](double x, double y, double* ox, double* oy) {
      *ox = cx + (x - cx) / k;
      *oy = cy + (y - cy) / k;
    };
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double ox, oy;
      fwd(x, y, &ox, &oy);
      pair.forward.dx(y, x) = static_cast<float>(ox - x);
      pair.forward.dy(y, x) = static_cast<float>(oy - y);
      bwd(x, y, &ox, &oy);
      pair.backward.dx(y, x) = static_cast<float>(ox - x);
      pair.backward.dy(y, x) = static_cast<float>(oy - y);
    }
  }
  return pair;
}

std::vector<FlowPair> SynthFlowSequence(const Motion& motion, int height,
                                        int width, int num_frames) {
  const FlowPair base = SynthFlow(motion, height, width);
  std::vector<FlowPair> flows;
  for (int i = 1; i < num_frames; ++i) {
    FlowPair p = base;
    p.forward.from_index = i - 1;
    p.forward.to_index = i;
    p.backward.from_index = i;
    p.backward.to_index = i - 1;
    flows.push_back(std::move(p));
  }
  return flows;
}

std::vector<FlowPair> ZeroFlows(int height, int width, int num_frames) {
  return SynthFlowSequence(Translate{0.0, 0.0}, height, width, num_frames);
}

void CheckFlows(const std::vector<FlowPair>& flows, int num_frames, int height,
                int width) {
  if (static_cast<int>(flows.size()) != std::max(0, num_frames - 1)) {
    throw Error(ErrorCode::kFlowCountMismatch,
                "expected " + std::to_string(std::max(0, num_frames - 1)) +
                    " flow pairs, got " + std::to_string(flows.size()));
  }
  for (size_t k = 0; k < flows.size(); ++k) {
    for (const FlowField* f : {&flows[k].forward, &flows[k].backward}) {
      if (f->height != height || f->width != width) {
        throw Error(ErrorCode::kShapeMismatch,
                    "flow grid " + std::to_string(f->width) + "x" +
                        std::to_string(f->height) + " does not match " +
                        std::to_string(width) + "x" + std::to_string(height),
                    "pair " + std::to_string(k + 1));
      }
    }
  }
}

}  // namespace uav
