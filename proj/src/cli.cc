#include "uav/cli.h"

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>

#include "uav/color.h"
#include "uav/degrade.h"
#include "uav/error.h"
#include "uav/flow.h"
#include "uav/metrics.h"
#include "uav/parallel.h"
#include "uav/sampler.h"
#include "uav/schedule.h"
#include "uav/tensorio.h"

namespace uav {
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct UpscaleArgs {
  std::string input;
  std::string output;
  std::string flows;
  std::string motion;
  std::string denoiser = "procedural";
  std::string target;
  std::string schedule = "scaled_linear";
  int train_steps = 1000;
  std::optional<double> beta_start;
  std::optional<double> beta_end;
  int steps = 30;
  std::string tstar = "middle";
  double beta = 0.5;
  double delta = kDefaultDelta;
  std::string directions = "forward_then_backward";
  int noise_level = 0;
  int max_noise_level = kDefaultMaxNoiseLevel;
  std::optional<uint64_t> prompt_seed;
  double guidance_scale = 1.0;
  double detail_gain = 0.1;
  double spread = 1.0;
  double smoothness = 1.5;
  int tile = 80;
  int tile_overlap = 16;
  int segment = 8;
  int segment_overlap = 2;
  std::vector<int> color_fix;
  uint64_t seed = 0;
  std::string save_latent;
};

struct MetricsArgs {
  std::string ref;
  std::string test;
  std::string flows;
  std::string motion;
  double delta = kDefaultDelta;
  std::optional<int> profile_row;
  std::string profile_out;
};

struct DegradeArgs {
  std::string input;
  std::string output;
  DegradeParams params;
};

struct ProfileArgs {
  std::string input;
  int row = 0;
  std::string output;
};

struct FlowCheckArgs {
  std::string forward;
  std::string backward;
  std::string motion;
  int width = 0;
  int height = 0;
  double delta = kDefaultDelta;
  std::string mask_out;
};

struct SynthFlowArgs {
  std::string motion;
  int width = 0;
  int height = 0;
  int frames = 2;
  std::string output;
};

Error Usage(const std::string& message, std::string context = {}) {
  return Error(ErrorCode::kUsageError, message, std::move(context));
}

std::set<int> ParsePositions(const std::string& text, int num_steps) {
  if (text == "none" || text.empty()) return {};
  if (text == "early") return PropagationPositions(PropagationPlacement::kEarly, num_steps);
  if (text == "middle") return PropagationPositions(PropagationPlacement::kMiddle, num_steps);
  if (text == "late") return PropagationPositions(PropagationPlacement::kLate, num_steps);
  std::set<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      const int p = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.insert(p);
    } catch (const std::exception&) {
      throw Usage("bad --tstar entry", item);
    }
  }
  return out;
}

std::vector<FlowPair> LoadFlows(const std::string& dir, const std::string& motion,
                                int frames, int height, int width) {
  if (!dir.empty() && !motion.empty()) {
    throw Usage("pass either --flows or --motion, not both");
  }
  if (!dir.empty()) {
    auto flows = ReadFlowDirectory(dir, frames);
    CheckFlows(flows, frames, height, width);
    return flows;
  }
  if (!motion.empty()) return SynthFlowSequence(ParseMotion(motion), height, width, frames);
  return ZeroFlows(height, width, frames);
}

json ShapeJson(const Video& v) {
  return {{"frames", v.num_frames()}, {"height", v.height()}, {"width", v.width()}};
}

json RunUpscale(const UpscaleArgs& a) {
  const Video input = ReadFrameSequence(a.input);
  ValidateVideo(input);

  SamplerConfig cfg;
  ScheduleParams sp;
  if (a.schedule == "linear") {
    sp.kind = BetaSchedule::kLinear;
  } else if (a.schedule != "scaled_linear") {
    throw Usage("unknown --schedule", a.schedule);
  }
  sp.train_steps = a.train_steps;
  sp.beta_start = a.beta_start;
  sp.beta_end = a.beta_end;
  cfg.schedule = MakeSchedule(sp);
  cfg.schedule.inference_steps = EvenInferenceSteps(a.train_steps, a.steps);
  cfg.schedule.propagation_steps = ParsePositions(a.tstar, a.steps);

  cfg.condition.noise_level = a.noise_level;
  cfg.condition.max_noise_level = a.max_noise_level;
  cfg.condition.guidance_scale = a.guidance_scale;
  if (a.prompt_seed) cfg.condition.prompt = PromptEmbeddingFromSeed(*a.prompt_seed);

  cfg.propagation.beta = a.beta;
  cfg.propagation.delta = a.delta;
  if (a.directions == "forward") {
    cfg.propagation.directions = PropagationDirections::kForwardOnly;
  } else if (a.directions == "backward") {
    cfg.propagation.directions = PropagationDirections::kBackwardOnly;
  } else if (a.directions != "forward_then_backward") {
    throw Usage("unknown --directions", a.directions);
  }
  cfg.tile_size = a.tile;
  cfg.tile_overlap = a.tile_overlap;
  cfg.segment_len = a.segment;
  cfg.segment_overlap = a.segment_overlap;
  cfg.seed = a.seed;

  const auto flows = LoadFlows(a.flows, a.motion, input.num_frames(), input.height(),
                               input.width());

  std::unique_ptr<Denoiser> denoiser;
  if (a.denoiser == "oracle") {
    LatentVideo target = a.target.empty() ? LatentFromFrames(input) : ReadLatent(a.target);
    denoiser = std::make_unique<OracleDenoiser>(cfg.schedule, std::move(target));
  } else if (a.denoiser == "procedural") {
    denoiser = std::make_unique<ProceduralDenoiser>(
        cfg.schedule, ProceduralParams{a.detail_gain, a.spread, a.smoothness, a.seed});
  } else {
    throw Usage("unknown --denoiser (oracle | procedural)", a.denoiser);
  }

  SampleResult result = Sample(input, *denoiser, cfg, flows);
  if (!a.color_fix.empty()) {
    result.video = ColorCorrect(result.video, input, a.color_fix.front());
  }
  const fs::path manifest = WriteFrameSequence(result.video, a.output);
  if (!a.save_latent.empty()) WriteLatent(result.latent, a.save_latent);

  json report = {{"command", "upscale"},
                 {"manifest", manifest.string()},
                 {"denoiser", denoiser->name()},
                 {"steps", a.steps},
                 {"propagation_positions", cfg.schedule.propagation_steps},
                 {"color_fix", a.color_fix.empty() ? json(nullptr) : json(a.color_fix.front())}};
  report.update(ShapeJson(result.video));
  return report;
}

json OptionalArray(const std::vector<std::optional<double>>& values) {
  json arr = json::array();
  for (const auto& v : values) arr.push_back(v ? json(*v) : json(nullptr));
  return arr;
}

json RunMetrics(const MetricsArgs& a) {
  const Video ref = ReadFrameSequence(a.ref);
  const Video test = ReadFrameSequence(a.test);
  const auto flows = LoadFlows(a.flows, a.motion, test.num_frames(), test.height(),
                               test.width());
  const MetricReport r = Evaluate(ref, test, flows, a.delta);
  json report = {{"command", "metrics"},
                 {"psnr", r.psnr},
                 {"ssim", r.ssim},
                 {"e_warp", r.e_warp},
                 {"per_frame",
                  {{"psnr", r.psnr_per_frame},
                   {"ssim", r.ssim_per_frame},
                   {"e_warp", OptionalArray(r.e_warp_per_pair)}}}};
  if (a.profile_row) {
    if (a.profile_out.empty()) throw Usage("--profile-row needs --profile-out");
    WritePng(TemporalProfile(test, *a.profile_row), a.profile_out);
    report["profile"] = a.profile_out;
  }
  return report;
}

json RunDegrade(const DegradeArgs& a) {
  const Video hr = ReadFrameSequence(a.input);
  const Video lq = Degrade(hr, a.params);
  json report = {{"command", "degrade"},
                 {"manifest", WriteFrameSequence(lq, a.output).string()}};
  report.update(ShapeJson(lq));
  return report;
}

json RunProfile(const ProfileArgs& a) {
  const Video v = ReadFrameSequence(a.input);
  const Image profile = TemporalProfile(v, a.row);
  WritePng(profile, a.output);
  return {{"command", "profile"}, {"path", a.output}, {"rows", profile.height},
          {"width", profile.width}};
}

json RunFlowCheck(const FlowCheckArgs& a) {
  FlowPair pair;
  if (!a.motion.empty()) {
    if (!a.forward.empty() || !a.backward.empty()) {
      throw Usage("pass either --motion or --forward/--backward");
    }
    if (a.width < 1 || a.height < 1) throw Usage("--motion needs --width and --height");
    pair = SynthFlow(ParseMotion(a.motion), a.height, a.width);
  } else {
    if (a.forward.empty() || a.backward.empty()) {
      throw Usage("flow-check needs --forward and --backward, or --motion");
    }
    pair = {ReadFlow(a.forward), ReadFlow(a.backward)};
  }
  const ConsistencyMap err = ConsistencyError(pair.forward, pair.backward);
  const ValidityMask mask = MakeValidityMask(err, a.delta);
  const double max_err = *std::max_element(err.error.begin(), err.error.end());
  double sum = 0.0;
  for (double e : err.error) sum += e;
  if (!a.mask_out.empty()) {
    Image img(3, mask.height, mask.width);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) img.at(c, y, x) = mask.at(y, x) ? 1.0 : 0.0;
    WritePng(img, a.mask_out);
  }
  return {{"command", "flow-check"},
          {"height", err.height},
          {"width", err.width},
          {"delta", a.delta},
          {"max_error", max_err},
          {"mean_error", sum / err.error.size()},
          {"valid_fraction", static_cast<double>(mask.CountValid()) / mask.mask.size()}};
}

json RunSynthFlow(const SynthFlowArgs& a) {
  if (a.width < 1 || a.height < 1 || a.frames < 2) {
    throw Usage("synth-flow needs --width, --height >= 1 and --frames >= 2");
  }
  const auto flows = SynthFlowSequence(ParseMotion(a.motion), a.height, a.width, a.frames);
  WriteFlowDirectory(flows, a.output);
  return {{"command", "synth-flow"}, {"dir", a.output}, {"pairs", flows.size()}};
}

void EmitError(std::ostream& err, std::string_view code, const std::string& message,
               const std::string& context) {
  err << json{{"code", code}, {"message", message}, {"context", context}}.dump() << "\n";
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Latent video upscaling toolkit: sampling, propagation, metrics", "uav"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = all cores; env UAV_THREADS)")
      ->check(CLI::NonNegativeNumber);
  app.set_config("--config", "", "TOML/INI file with one [subcommand] section; flags override it");

  UpscaleArgs up;
  auto* upscale = app.add_subcommand("upscale", "x4 toy upscaling through the latent sampler");
  upscale->add_option("--input", up.input, "Input frame manifest")->required();
  upscale->add_option("--output", up.output, "Output directory")->required();
  upscale->add_option("--flows", up.flows, "Flow directory at input resolution");
  upscale->add_option("--motion", up.motion, "Synthesize flows: translate:dx,dy | rotate:a,cx,cy | zoom:s,cx,cy");
  upscale->add_option("--denoiser", up.denoiser, "oracle | procedural")->capture_default_str();
  upscale->add_option("--target", up.target, "Oracle target latent (.lat); default: input frames");
  upscale->add_option("--schedule", up.schedule, "scaled_linear | linear")->capture_default_str();
  upscale->add_option("--train-steps", up.train_steps)->capture_default_str();
  upscale->add_option("--beta-start", up.beta_start);
  upscale->add_option("--beta-end", up.beta_end);
  upscale->add_option("--steps", up.steps, "Inference steps")->capture_default_str();
  upscale->add_option("--tstar", up.tstar,
                      "Propagation positions: none | early | middle | late | comma list")
      ->capture_default_str();
  upscale->add_option("--beta", up.beta, "Propagation fusion weight")->capture_default_str();
  upscale->add_option("--delta", up.delta, "Consistency threshold (squared px)")->capture_default_str();
  upscale->add_option("--directions", up.directions,
                      "forward_then_backward | forward | backward")->capture_default_str();
  upscale->add_option("--noise-level", up.noise_level, "Input noise level tau")->capture_default_str();
  upscale->add_option("--max-noise-level", up.max_noise_level)->capture_default_str();
  upscale->add_option("--prompt-seed", up.prompt_seed, "Seed of the toy prompt embedding (default: null prompt)");
  upscale->add_option("--guidance-scale", up.guidance_scale)->capture_default_str();
  upscale->add_option("--detail-gain", up.detail_gain, "Procedural denoiser detail gain")->capture_default_str();
  upscale->add_option("--spread", up.spread, "Procedural denoiser prior spread")->capture_default_str();
  upscale->add_option("--smoothness", up.smoothness, "Procedural denoiser detail correlation length")->capture_default_str();
  upscale->add_option("--tile", up.tile, "Latent tile size")->capture_default_str();
  upscale->add_option("--tile-overlap", up.tile_overlap)->capture_default_str();
  upscale->add_option("--segment", up.segment, "Frames per segment")->capture_default_str();
  upscale->add_option("--segment-overlap", up.segment_overlap)->capture_default_str();
  upscale->add_option("--color-fix", up.color_fix, "Wavelet color correction [levels=5]")
      ->expected(0, 1)
      ->default_str("5");
  upscale->add_option("--seed", up.seed)->capture_default_str();
  upscale->add_option("--save-latent", up.save_latent, "Write the final latent (.lat)");

  MetricsArgs me;
  auto* metrics = app.add_subcommand("metrics", "PSNR, SSIM and flow warping error");
  metrics->add_option("--ref", me.ref, "Reference manifest")->required();
  metrics->add_option("--test", me.test, "Test manifest")->required();
  metrics->add_option("--flows", me.flows, "Flow directory for E_warp (default: zero flows)");
  metrics->add_option("--motion", me.motion, "Synthesize flows for E_warp");
  metrics->add_option("--delta", me.delta)->capture_default_str();
  metrics->add_option("--profile-row", me.profile_row, "Also write a temporal profile of this row");
  metrics->add_option("--profile-out", me.profile_out, "PNG path for the profile");

  DegradeArgs de;
  auto* degrade = app.add_subcommand("degrade", "Blur, downscale and add noise");
  degrade->add_option("--input", de.input)->required();
  degrade->add_option("--output", de.output)->required();
  degrade->add_option("--blur-sigma", de.params.blur_sigma)->capture_default_str();
  degrade->add_option("--scale", de.params.scale)->capture_default_str();
  degrade->add_option("--noise-sigma", de.params.noise_sigma)->capture_default_str();
  degrade->add_option("--seed", de.params.seed)->capture_default_str();

  ProfileArgs pr;
  auto* profile = app.add_subcommand("profile", "Temporal profile of one pixel row");
  profile->add_option("--input", pr.input)->required();
  profile->add_option("--row", pr.row)->required();
  profile->add_option("--output", pr.output, "PNG path")->required();

  FlowCheckArgs fc;
  auto* flow_check = app.add_subcommand("flow-check", "Forward-backward consistency of a flow pair");
  flow_check->add_option("--forward", fc.forward, "f_{i-1 -> i} (.flo)");
  flow_check->add_option("--backward", fc.backward, "f_{i -> i-1} (.flo)");
  flow_check->add_option("--motion", fc.motion, "Synthesize the pair instead");
  flow_check->add_option("--width", fc.width);
  flow_check->add_option("--height", fc.height);
  flow_check->add_option("--delta", fc.delta)->capture_default_str();
  flow_check->add_option("--mask-out", fc.mask_out, "PNG path for the validity mask");

  SynthFlowArgs sf;
  auto* synth = app.add_subcommand("synth-flow", "Write analytic flow pairs for a T-frame video");
  synth->add_option("--motion", sf.motion)->required();
  synth->add_option("--width", sf.width)->required();
  synth->add_option("--height", sf.height)->required();
  synth->add_option("--frames", sf.frames)->required();
  synth->add_option("--output", sf.output)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    EmitError(err, ErrorCodeName(ErrorCode::kUsageError), e.what(), e.get_name());
    return kExitUsageError;
  }

  try {
    if (threads > 0) SetThreadCount(threads);
    json report;
    if (*upscale) {
      report = RunUpscale(up);
    } else if (*metrics) {
      report = RunMetrics(me);
    } else if (*degrade) {
      report = RunDegrade(de);
    } else if (*profile) {
      report = RunProfile(pr);
    } else if (*flow_check) {
      report = RunFlowCheck(fc);
    } else {
      report = RunSynthFlow(sf);
    }
    out << report.dump(2) << "\n";
    return kExitOk;
  } catch (const Error& e) {
    EmitError(err, ErrorCodeName(e.code()), e.what(), e.context());
    return e.code() == ErrorCode::kUsageError ? kExitUsageError : kExitPipelineError;
  } catch (const std::exception& e) {
    EmitError(err, "InternalError", e.what(), "");
    return kExitPipelineError;
  }
}

}  // namespace uav
