#ifndef UAV_SCHEDULE_H_
#define UAV_SCHEDULE_H_

#include <cstdint>
#include <optional>
#include <set>
#include <vector>

#include "uav/tensor.h"

namespace uav {

enum class BetaSchedule { kLinear, kScaledLinear };

struct ScheduleParams {
  BetaSchedule kind = BetaSchedule::kScaledLinear;
  int train_steps = 1000;
  // Defaults per kind are applied when these are unset.
  std::optional<double> beta_start;
  std::optional<double> beta_end;
};

// Variance-preserving schedule. Index 0 is the clean state (alpha = 1,
// sigma = 0); indices 1..train_steps follow the beta sequence.
struct NoiseSchedule {
  BetaSchedule kind = BetaSchedule::kScaledLinear;
  int train_steps = 0;
  std::vector<double> alphas;  // size train_steps + 1
  std::vector<double> sigmas;  // size train_steps + 1
  // Descending training-step indices visited during sampling; after the last
  // one the sampler steps to index 0.
  std::vector<int> inference_steps;
  // Positions into inference_steps where latent propagation runs.
  std::set<int> propagation_steps;

  double alpha(int t) const;
  double sigma(int t) const;
  int num_inference_steps() const { return static_cast<int>(inference_steps.size()); }
  // Step index following position `pos` of inference_steps (0 after the last).
  int PrevStep(int pos) const;
};

NoiseSchedule MakeSchedule(const ScheduleParams& params);
inline NoiseSchedule MakeSchedule(BetaSchedule kind, int train_steps) {
  return MakeSchedule(ScheduleParams{kind, train_steps, {}, {}});
}

// Evenly spaced descending steps, starting at train_steps.
std::vector<int> EvenInferenceSteps(int train_steps, int count);

// Named propagation placements defined on a 30-step run and rescaled to
// `num_steps` positions.
enum class PropagationPlacement { kNone, kEarly, kMiddle, kLate };
std::set<int> PropagationPositions(PropagationPlacement placement, int num_steps);

// Checks the NoiseSchedule invariants; throws InvalidParameter.
void ValidateSchedule(const NoiseSchedule& schedule);

// Prompt embedding of fixed length; nullopt is the null prompt, distinct from
// a zero vector.
using PromptEmbedding = std::optional<std::vector<double>>;

inline constexpr int kPromptEmbeddingSize = 8;
inline constexpr int kDefaultMaxNoiseLevel = 350;

// Deterministic embedding for toy denoisers: splitmix64 stream seeded by
// `seed`, mapped to [-1, 1).
std::vector<double> PromptEmbeddingFromSeed(uint64_t seed);

struct Condition {
  PromptEmbedding prompt;
  int noise_level = 0;
  double guidance_scale = 1.0;
  int max_noise_level = kDefaultMaxNoiseLevel;
};

// z_t = alpha_t z + sigma_t eps
LatentVideo Diffuse(const NoiseSchedule& s, const LatentVideo& z, int t,
                    const LatentVideo& eps);
// v = alpha_t eps - sigma_t z
LatentVideo VTarget(const NoiseSchedule& s, const LatentVideo& z,
                    const LatentVideo& eps, int t);
// z0 = alpha_t z_t - sigma_t v
LatentVideo PredictZ0(const NoiseSchedule& s, const LatentVideo& z_t,
                      const LatentVideo& v, int t);
// eps = (z_t - alpha_t z0) / sigma_t; DivisionByZeroStep when sigma_t = 0.
LatentVideo PredictEps(const NoiseSchedule& s, const LatentVideo& z_t,
                       const LatentVideo& z0_hat, int t);
// Deterministic (eta = 0) update from t to t_prev < t.
LatentVideo DdimStep(const NoiseSchedule& s, const LatentVideo& z_t,
                     const LatentVideo& z0_hat, int t, int t_prev);
// (1 - scale) v_uncond + scale v_cond. Exact at scale 0 and 1.
LatentVideo CfgCombine(const LatentVideo& v_uncond, const LatentVideo& v_cond,
                       double scale);
// x_tau = alpha_tau x + sigma_tau eps, with 0 <= tau <= max_noise_level.
LatentVideo NoiseInput(const NoiseSchedule& s, const LatentVideo& x, int tau,
                       const LatentVideo& eps,
                       int max_noise_level = kDefaultMaxNoiseLevel);

}  // namespace uav

#endif  // UAV_SCHEDULE_H_
