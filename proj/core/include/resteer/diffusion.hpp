#pragma once

#include <functional>
#include <vector>

#include "resteer/tensor.hpp"
#include "resteer/text.hpp"

namespace resteer {

// Linear beta schedule with running products alpha_bar[t] = prod(1 - beta[s]).
struct NoiseSchedule {
  int64_t T = 0;
  std::vector<double> beta;
  std::vector<double> alpha_bar;
};

NoiseSchedule make_schedule(int64_t T, double beta_start, double beta_end);

struct SamplerConfig {
  int64_t steps = 0;  // <= T and T % steps == 0
  uint64_t seed = 0;
};

// Closed-form forward corruption x_t = sqrt(abar_t) x0 + sqrt(1-abar_t) eps.
Tensor q_sample(const Tensor& x0, int64_t t, const Tensor& eps, const NoiseSchedule& sched);

using EpsFn = std::function<Tensor(const Tensor& x_t, int64_t t, const ContextEmbedding& ctx)>;

// Simplified eps-prediction objective: MSE between injected and predicted
// noise at a uniformly drawn timestep, averaged over the batch.
Tensor ddpm_loss(const EpsFn& model, const std::vector<Tensor>& x0_batch,
                 const std::vector<ContextEmbedding>& ctx_batch, const NoiseSchedule& sched, Rng& rng);

// Ancestral sampling from x ~ N(0, I) with fixed per-jump variance
// 1 - alpha_bar[t]/alpha_bar[s]; the output image is clamped to [-1, 1].
Tensor p_sample(const EpsFn& model, const ContextEmbedding& ctx, const Shape& image_shape,
                const NoiseSchedule& sched, const SamplerConfig& cfg);

// Descending timestep subsequence visited by p_sample for a config.
std::vector<int64_t> sampler_timesteps(const NoiseSchedule& sched, const SamplerConfig& cfg);

}  // namespace resteer
