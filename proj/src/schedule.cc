#include "uav/schedule.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "uav/error.h"
#include "uav/rng.h"

namespace uav {
namespace {

void CheckStep(const NoiseSchedule& s, int t) {
  if (t < 0 || t > s.train_steps) {
    throw Error(ErrorCode::kInvalidParameter,
                "step out of range [0, " + std::to_string(s.train_steps) + "]",
                "t=" + std::to_string(t));
  }
}

// out[i] = a * x[i] + b * y[i]
LatentVideo Axpby(double a, const LatentVideo& x, double b, const LatentVideo& y,
                  const char* what) {
  RequireSameShape(x.shape(), y.shape(), what);
  LatentVideo out(x.shape());
  const auto& xd = x.data();
  const auto& yd = y.data();
  auto& od = out.data();
  for (size_t i = 0; i < od.size(); ++i) od[i] = a * xd[i] + b * yd[i];
  return out;
}

}  // namespace

double NoiseSchedule::alpha(int t) const {
  CheckStep(*this, t);
  return alphas[t];
}

double NoiseSchedule::sigma(int t) const {
  CheckStep(*this, t);
  return sigmas[t];
}

int NoiseSchedule::PrevStep(int pos) const {
  if (pos < 0 || pos >= num_inference_steps()) {
    throw Error(ErrorCode::kInvalidParameter, "inference position out of range",
                "pos=" + std::to_string(pos));
  }
  return pos + 1 < num_inference_steps() ? inference_steps[pos + 1] : 0;
}

NoiseSchedule MakeSchedule(const ScheduleParams& params) {
  if (params.train_steps < 2) {
    throw Error(ErrorCode::kInvalidParameter, "train_steps must be >= 2",
                "train_steps=" + std::to_string(params.train_steps));
  }
  const bool scaled = params.kind == BetaSchedule::kScaledLinear;
  const double b0 = params.beta_start.value_or(scaled ? 0.00085 : 0.0001);
  const double b1 = params.beta_end.value_or(scaled ? 0.012 : 0.02);
  auto in_unit = [](double b) { return std::isfinite(b) && b > 0.0 && b < 1.0; };
  if (!in_unit(b0) || !in_unit(b1)) {
    throw Error(ErrorCode::kInvalidParameter,
                "beta endpoints must lie in (0,1)",
                "beta_start=" + std::to_string(b0) + " beta_end=" + std::to_string(b1));
  }

  const int n = params.train_steps;
  NoiseSchedule s;
  s.kind = params.kind;
  s.train_steps = n;
  s.alphas.resize(n + 1);
  s.sigmas.resize(n + 1);
  s.alphas[0] = 1.0;
  s.sigmas[0] = 0.0;
  double cumprod = 1.0;
  for (int i = 0; i < n; ++i) {
    const double frac = static_cast<double>(i) / (n - 1);
    double beta;
    if (scaled) {
      const double r = std::sqrt(b0) + frac * (std::sqrt(b1) - std::sqrt(b0));
      beta = r * r;
    } else {
      beta = b0 + frac * (b1 - b0);
    }
    cumprod *= 1.0 - beta;
    s.alphas[i + 1] = std::sqrt(cumprod);
    s.sigmas[i + 1] = std::sqrt(1.0 - cumprod);
  }
  s.inference_steps = EvenInferenceSteps(n, std::min(30, n));
  s.propagation_steps =
      PropagationPositions(PropagationPlacement::kMiddle, s.num_inference_steps());
  return s;
}

std::vector<int> EvenInferenceSteps(int train_steps, int count) {
  if (count < 1 || count > train_steps) {
    throw Error(ErrorCode::kInvalidParameter,
                "inference step count must be in [1, train_steps]",
                "steps=" + std::to_string(count));
  }
  std::vector<int> steps(count);
  for (int k = 0; k < count; ++k) {
    steps[k] = train_steps - static_cast<int>(
                                 static_cast<int64_t>(k) * train_steps / count);
  }
  return steps;
}

std::set<int> PropagationPositions(PropagationPlacement placement, int num_steps) {
  int first = 0;
  switch (placement) {
    case PropagationPlacement::kNone: return {};
    case PropagationPlacement::kEarly: first = 4; break;
    case PropagationPlacement::kMiddle: first = 14; break;
    case PropagationPlacement::kLate: first = 24; break;
  }
  std::set<int> out;
  for (int p = first; p < first + 4; ++p) {
    const int scaled = static_cast<int>(std::lround(p * num_steps / 30.0));
    out.insert(std::clamp(scaled, 0, num_steps - 1));
  }
  return out;
}

void ValidateSchedule(const NoiseSchedule& s) {
  const int n = s.train_steps;
  if (n < 2 || static_cast<int>(s.alphas.size()) != n + 1 ||
      static_cast<int>(s.sigmas.size()) != n + 1) {
    throw Error(ErrorCode::kInvalidParameter, "schedule arrays have wrong size");
  }
  for (int t = 0; t <= n; ++t) {
    const double a = s.alphas[t];
    const double g = s.sigmas[t];
    if (std::abs(a * a + g * g - 1.0) > 1e-6) {
      throw Error(ErrorCode::kInvalidParameter, "alpha^2 + sigma^2 != 1",
                  "t=" + std::to_string(t));
    }
    if (t > 0 && (a > s.alphas[t - 1] || g < s.sigmas[t - 1])) {
      throw Error(ErrorCode::kInvalidParameter, "schedule is not monotone",
                  "t=" + std::to_string(t));
    }
  }
  for (size_t k = 0; k < s.inference_steps.size(); ++k) {
    const int t = s.inference_steps[k];
    if (t < 1 || t > n || (k > 0 && t >= s.inference_steps[k - 1])) {
      throw Error(ErrorCode::kInvalidParameter,
                  "inference steps must be strictly descending within [1, T]",
                  "position " + std::to_string(k));
    }
  }
  for (int p : s.propagation_steps) {
    if (p < 0 || p >= s.num_inference_steps()) {
      throw Error(ErrorCode::kInvalidParameter,
                  "propagation position outside the inference run",
                  "position " + std::to_string(p));
    }
  }
}

std::vector<double> PromptEmbeddingFromSeed(uint64_t seed) {
  std::vector<double> out(kPromptEmbeddingSize);
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = UnitUniform(HashCombine(seed, i)) * 2.0 - 1.0;
  }
  return out;
}

LatentVideo Diffuse(const NoiseSchedule& s, const LatentVideo& z, int t,
                    const LatentVideo& eps) {
  return Axpby(s.alpha(t), z, s.sigma(t), eps, "diffuse");
}

LatentVideo VTarget(const NoiseSchedule& s, const LatentVideo& z,
                    const LatentVideo& eps, int t) {
  return Axpby(s.alpha(t), eps, -s.sigma(t), z, "v_target");
}

LatentVideo PredictZ0(const NoiseSchedule& s, const LatentVideo& z_t,
                      const LatentVideo& v, int t) {
  return Axpby(s.alpha(t), z_t, -s.sigma(t), v, "predict_z0");
}

LatentVideo PredictEps(const NoiseSchedule& s, const LatentVideo& z_t,
                       const LatentVideo& z0_hat, int t) {
  const double sigma = s.sigma(t);
  if (sigma == 0.0) {
    throw Error(ErrorCode::kDivisionByZeroStep,
                "cannot recover noise at a step with sigma = 0",
                "t=" + std::to_string(t));
  }
  RequireSameShape(z_t.shape(), z0_hat.shape(), "predict_eps");
  const double alpha = s.alpha(t);
  LatentVideo out(z_t.shape());
  const auto& zd = z_t.data();
  const auto& hd = z0_hat.data();
  auto& od = out.data();
  for (size_t i = 0; i < od.size(); ++i) od[i] = (zd[i] - alpha * hd[i]) / sigma;
  return out;
}

LatentVideo DdimStep(const NoiseSchedule& s, const LatentVideo& z_t,
                     const LatentVideo& z0_hat, int t, int t_prev) {
  if (t_prev >= t) {
    throw Error(ErrorCode::kInvalidParameter, "t_prev must precede t",
                "t=" + std::to_string(t) + " t_prev=" + std::to_string(t_prev));
  }
  const LatentVideo eps = PredictEps(s, z_t, z0_hat, t);
  LatentVideo out = Axpby(s.alpha(t_prev), z0_hat, s.sigma(t_prev), eps, "ddim_step");
  out.step_tag = t_prev;
  return out;
}

LatentVideo CfgCombine(const LatentVideo& v_uncond, const LatentVideo& v_cond,
                       double scale) {
  if (!(scale >= 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorCode::kInvalidParameter, "guidance scale must be >= 0",
                "scale=" + std::to_string(scale));
  }
  RequireSameShape(v_uncond.shape(), v_cond.shape(), "cfg_combine");
  // Endpoints return the inputs themselves so signed zeros survive.
  if (scale == 0.0) return v_uncond;
  if (scale == 1.0) return v_cond;
  return Axpby(1.0 - scale, v_uncond, scale, v_cond, "cfg_combine");
}

LatentVideo NoiseInput(const NoiseSchedule& s, const LatentVideo& x, int tau,
                       const LatentVideo& eps, int max_noise_level) {
  if (tau < 0 || tau > max_noise_level || tau > s.train_steps) {
    throw Error(ErrorCode::kNoiseLevelOutOfRange,
                "noise level must be in [0, " + std::to_string(max_noise_level) + "]",
                "tau=" + std::to_string(tau));
  }
  return Axpby(s.alpha(tau), x, s.sigma(tau), eps, "noise_input");
}

}  // namespace uav
