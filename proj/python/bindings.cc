#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "uav/color.h"
#include "uav/degrade.h"
#include "uav/error.h"
#include "uav/flow.h"
#include "uav/metrics.h"
#include "uav/parallel.h"
#include "uav/propagate.h"
#include "uav/sampler.h"
#include "uav/schedule.h"
#include "uav/tensorio.h"

namespace py = pybind11;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using FlowArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

uav::Tensor4 ToTensor(const Array& a) {
  if (a.ndim() != 4) throw py::value_error("expected a 4-d array (T, C, H, W)");
  uav::Tensor4 t(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)),
                 static_cast<int>(a.shape(2)), static_cast<int>(a.shape(3)));
  std::memcpy(t.data().data(), a.data(), t.size() * sizeof(double));
  return t;
}

Array FromTensor(const uav::Tensor4& t) {
  Array a({t.frames(), t.channels(), t.height(), t.width()});
  std::memcpy(a.mutable_data(), t.data().data(), t.size() * sizeof(double));
  return a;
}

uav::LatentVideo ToLatent(const Array& a) { return uav::LatentVideo(ToTensor(a)); }

uav::Video ToVideo(const Array& a) {
  uav::Video v;
  v.frames = ToTensor(a);
  return v;
}

Array FromImage(const uav::Image& img) {
  Array a({img.channels, img.height, img.width});
  std::memcpy(a.mutable_data(), img.data.data(), img.data.size() * sizeof(double));
  return a;
}

uav::FlowField ToFlow(const FlowArray& a) {
  if (a.ndim() != 3 || a.shape(2) != 2) throw py::value_error("expected a flow array (H, W, 2)");
  uav::FlowField f(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
  std::memcpy(f.vectors.data(), a.data(), f.vectors.size() * sizeof(float));
  return f;
}

FlowArray FromFlow(const uav::FlowField& f) {
  FlowArray a({f.height, f.width, 2});
  std::memcpy(a.mutable_data(), f.vectors.data(), f.vectors.size() * sizeof(float));
  return a;
}

using PyFlows = std::vector<std::pair<FlowArray, FlowArray>>;

std::vector<uav::FlowPair> ToFlows(const PyFlows& flows) {
  std::vector<uav::FlowPair> out;
  for (const auto& [fwd, bwd] : flows) out.push_back({ToFlow(fwd), ToFlow(bwd)});
  return out;
}

PyFlows FromFlows(const std::vector<uav::FlowPair>& flows) {
  PyFlows out;
  for (const auto& p : flows) out.emplace_back(FromFlow(p.forward), FromFlow(p.backward));
  return out;
}

py::array_t<bool> MaskArray(const uav::ValidityMask& m) {
  py::array_t<bool> a({m.height, m.width});
  bool* d = a.mutable_data();
  for (size_t i = 0; i < m.mask.size(); ++i) d[i] = m.mask[i] != 0;
  return a;
}

uav::PropagationDirections ParseDirections(const std::string& s) {
  if (s == "forward_then_backward") return uav::PropagationDirections::kForwardThenBackward;
  if (s == "forward") return uav::PropagationDirections::kForwardOnly;
  if (s == "backward") return uav::PropagationDirections::kBackwardOnly;
  throw uav::Error(uav::ErrorCode::kInvalidParameter, "unknown directions", s);
}

uav::PropagationPlacement ParsePlacement(const std::string& s) {
  if (s == "none") return uav::PropagationPlacement::kNone;
  if (s == "early") return uav::PropagationPlacement::kEarly;
  if (s == "middle") return uav::PropagationPlacement::kMiddle;
  if (s == "late") return uav::PropagationPlacement::kLate;
  throw uav::Error(uav::ErrorCode::kInvalidParameter, "unknown placement", s);
}

uav::NoiseSchedule Schedule(const std::string& kind, int train_steps, int steps) {
  uav::ScheduleParams p;
  if (kind == "linear") {
    p.kind = uav::BetaSchedule::kLinear;
  } else if (kind != "scaled_linear") {
    throw uav::Error(uav::ErrorCode::kInvalidParameter, "unknown schedule", kind);
  }
  p.train_steps = train_steps;
  uav::NoiseSchedule s = uav::MakeSchedule(p);
  s.inference_steps = uav::EvenInferenceSteps(train_steps, steps);
  return s;
}

py::dict Upscale(const Array& frames, const PyFlows& flows, const std::string& denoiser,
                 const std::optional<Array>& target, int steps, const std::string& tstar,
                 double beta, double delta, int noise_level, std::optional<uint64_t> prompt_seed,
                 double guidance_scale, double detail_gain, double spread, double smoothness,
                 int tile, int tile_overlap, int segment, int segment_overlap,
                 std::optional<int> color_fix, uint64_t seed) {
  const uav::Video input = ToVideo(frames);
  uav::SamplerConfig cfg;
  cfg.schedule = Schedule("scaled_linear", 1000, steps);
  cfg.schedule.propagation_steps = uav::PropagationPositions(ParsePlacement(tstar), steps);
  cfg.propagation.beta = beta;
  cfg.propagation.delta = delta;
  cfg.condition.noise_level = noise_level;
  cfg.condition.guidance_scale = guidance_scale;
  if (prompt_seed) cfg.condition.prompt = uav::PromptEmbeddingFromSeed(*prompt_seed);
  cfg.tile_size = tile;
  cfg.tile_overlap = tile_overlap;
  cfg.segment_len = segment;
  cfg.segment_overlap = segment_overlap;
  cfg.seed = seed;
  cfg.color_levels = color_fix;
  const auto fl = flows.empty() ? uav::ZeroFlows(input.height(), input.width(), input.num_frames())
                                : ToFlows(flows);
  uav::SampleResult r;
  {
    py::gil_scoped_release release;
    if (denoiser == "oracle") {
      const uav::LatentVideo t = target ? ToLatent(*target) : uav::LatentFromFrames(input);
      r = uav::Sample(input, uav::OracleDenoiser(cfg.schedule, t), cfg, fl);
    } else if (denoiser == "procedural") {
      r = uav::Sample(input,
                      uav::ProceduralDenoiser(cfg.schedule,
                                              {detail_gain, spread, smoothness, seed}),
                      cfg, fl);
    } else {
      throw uav::Error(uav::ErrorCode::kInvalidParameter, "unknown denoiser", denoiser);
    }
  }
  py::dict out;
  out["video"] = FromTensor(r.video.frames);
  out["latent"] = FromTensor(r.latent);
  return out;
}

}  // namespace

PYBIND11_MODULE(_uav, m) {
  m.doc() = "Latent video upscaling toolkit";

  static py::exception<uav::Error> error(m, "UavError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const uav::Error& e) {
      PyObject* type = error.ptr();
      py::object inst = py::reinterpret_borrow<py::object>(type)(e.what());
      inst.attr("code") = std::string(uav::ErrorCodeName(e.code()));
      inst.attr("context") = e.context();
      PyErr_SetObject(type, inst.ptr());
    }
  });

  m.def("set_threads", &uav::SetThreadCount, py::arg("threads"));
  m.def("thread_count", &uav::ThreadCount);

  // I/O
  m.def("read_frames", [](const std::string& manifest) {
    return FromTensor(uav::ReadFrameSequence(manifest).frames);
  }, py::arg("manifest"));
  m.def("write_frames", [](const Array& frames, const std::string& dir) {
    return uav::WriteFrameSequence(ToVideo(frames), dir).string();
  }, py::arg("frames"), py::arg("dir"));
  m.def("read_flow", [](const std::string& p) { return FromFlow(uav::ReadFlow(p)); });
  m.def("write_flow", [](const FlowArray& f, const std::string& p) { uav::WriteFlow(ToFlow(f), p); });
  m.def("read_latent", [](const std::string& p) { return FromTensor(uav::ReadLatent(p)); });
  m.def("write_latent", [](const Array& a, const std::string& p) { uav::WriteLatent(ToLatent(a), p); });

  // Schedule
  m.def("schedule", [](const std::string& kind, int train_steps) {
    const uav::NoiseSchedule s = Schedule(kind, train_steps, 1);
    return py::make_tuple(s.alphas, s.sigmas);
  }, py::arg("kind") = "scaled_linear", py::arg("train_steps") = 1000,
     "(alphas, sigmas) indexed by training step; index 0 is the clean state.");
  m.def("inference_steps", &uav::EvenInferenceSteps, py::arg("train_steps"), py::arg("count"));
  m.def("propagation_positions", [](const std::string& placement, int steps) {
    const auto s = uav::PropagationPositions(ParsePlacement(placement), steps);
    return std::vector<int>(s.begin(), s.end());
  }, py::arg("placement"), py::arg("steps"));
  m.def("diffuse", [](const Array& z, int t, const Array& eps) {
    return FromTensor(uav::Diffuse(Schedule("scaled_linear", 1000, 1), ToLatent(z), t, ToLatent(eps)));
  }, py::arg("z"), py::arg("t"), py::arg("eps"));
  m.def("v_target", [](const Array& z, const Array& eps, int t) {
    return FromTensor(uav::VTarget(Schedule("scaled_linear", 1000, 1), ToLatent(z), ToLatent(eps), t));
  }, py::arg("z"), py::arg("eps"), py::arg("t"));
  m.def("predict_z0", [](const Array& zt, const Array& v, int t) {
    return FromTensor(uav::PredictZ0(Schedule("scaled_linear", 1000, 1), ToLatent(zt), ToLatent(v), t));
  }, py::arg("z_t"), py::arg("v"), py::arg("t"));
  m.def("predict_eps", [](const Array& zt, const Array& z0, int t) {
    return FromTensor(uav::PredictEps(Schedule("scaled_linear", 1000, 1), ToLatent(zt), ToLatent(z0), t));
  }, py::arg("z_t"), py::arg("z0_hat"), py::arg("t"));
  m.def("cfg_combine", [](const Array& vu, const Array& vc, double scale) {
    return FromTensor(uav::CfgCombine(ToLatent(vu), ToLatent(vc), scale));
  }, py::arg("v_uncond"), py::arg("v_cond"), py::arg("scale"));

  // Flow
  m.def("consistency_error", [](const FlowArray& fwd, const FlowArray& bwd) {
    const auto ce = uav::ConsistencyError(ToFlow(fwd), ToFlow(bwd));
    py::array_t<double> a({ce.height, ce.width});
    std::memcpy(a.mutable_data(), ce.error.data(), ce.error.size() * sizeof(double));
    return a;
  }, py::arg("forward"), py::arg("backward"));
  m.def("validity_mask", [](const FlowArray& fwd, const FlowArray& bwd, double delta) {
    return MaskArray(uav::MakeValidityMask(uav::ConsistencyError(ToFlow(fwd), ToFlow(bwd)), delta));
  }, py::arg("forward"), py::arg("backward"), py::arg("delta") = uav::kDefaultDelta);
  m.def("warp", [](const Array& frame, const FlowArray& flow) {
    if (frame.ndim() != 3) throw py::value_error("expected a frame (C, H, W)");
    uav::Image img(static_cast<int>(frame.shape(0)), static_cast<int>(frame.shape(1)),
                   static_cast<int>(frame.shape(2)));
    std::memcpy(img.data.data(), frame.data(), img.data.size() * sizeof(double));
    return FromImage(uav::WarpNearest(img, ToFlow(flow)));
  }, py::arg("frame"), py::arg("flow"));
  m.def("synth_flows", [](const std::string& motion, int height, int width, int frames) {
    return FromFlows(uav::SynthFlowSequence(uav::ParseMotion(motion), height, width, frames));
  }, py::arg("motion"), py::arg("height"), py::arg("width"), py::arg("frames"));

  m.def("propagate", [](const Array& z0, const PyFlows& flows, double beta, double delta,
                        const std::string& directions) {
    uav::PropagationConfig cfg{beta, delta, ParseDirections(directions)};
    return FromTensor(uav::PropagateBidirectional(ToLatent(z0), ToFlows(flows), cfg));
  }, py::arg("z0_hat"), py::arg("flows"), py::arg("beta") = 0.5,
     py::arg("delta") = uav::kDefaultDelta, py::arg("directions") = "forward_then_backward");

  // Pipeline
  m.def("upscale", &Upscale, py::arg("frames"), py::arg("flows") = PyFlows{},
        py::arg("denoiser") = "procedural", py::arg("target") = py::none(),
        py::arg("steps") = 30, py::arg("tstar") = "middle", py::arg("beta") = 0.5,
        py::arg("delta") = uav::kDefaultDelta, py::arg("noise_level") = 0,
        py::arg("prompt_seed") = py::none(), py::arg("guidance_scale") = 1.0,
        py::arg("detail_gain") = 0.1, py::arg("spread") = 1.0, py::arg("smoothness") = 1.5,
        py::arg("tile") = 80, py::arg("tile_overlap") = 16, py::arg("segment") = 8,
        py::arg("segment_overlap") = 2, py::arg("color_fix") = py::none(),
        py::arg("seed") = 0, "x4 toy upscale; returns {'video', 'latent'}.");
  m.def("color_correct", [](const Array& out, const Array& ref, int levels) {
    return FromTensor(uav::ColorCorrect(ToVideo(out), ToVideo(ref), levels).frames);
  }, py::arg("output"), py::arg("reference"), py::arg("levels") = uav::kDefaultColorLevels);
  m.def("degrade", [](const Array& hr, double blur_sigma, int scale, double noise_sigma,
                      uint64_t seed) {
    return FromTensor(uav::Degrade(ToVideo(hr), {blur_sigma, scale, noise_sigma, seed}).frames);
  }, py::arg("frames"), py::arg("blur_sigma") = 1.0, py::arg("scale") = 4,
     py::arg("noise_sigma") = 0.02, py::arg("seed") = 0);

  // Metrics
  m.def("psnr", [](const Array& a, const Array& b) { return uav::Psnr(ToVideo(a), ToVideo(b)); });
  m.def("ssim", [](const Array& a, const Array& b) { return uav::Ssim(ToVideo(a), ToVideo(b)); });
  m.def("warping_error", [](const Array& v, const PyFlows& flows, double delta) {
    return uav::WarpingError(ToVideo(v), ToFlows(flows), delta);
  }, py::arg("frames"), py::arg("flows"), py::arg("delta") = uav::kDefaultDelta);
  m.def("temporal_profile", [](const Array& v, int row) {
    return FromImage(uav::TemporalProfile(ToVideo(v), row));
  }, py::arg("frames"), py::arg("row"));
}
