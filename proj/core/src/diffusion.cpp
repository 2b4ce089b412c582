#include "resteer/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "resteer/ops.hpp"

namespace resteer {

NoiseSchedule make_schedule(int64_t T, double beta_start, double beta_end) {
  if (T < 2) throw std::invalid_argument("make_schedule: T must be >= 2");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw std::invalid_argument("make_schedule: need 0 < beta_start <= beta_end < 1");
  }
  NoiseSchedule s;
  s.T = T;
  s.beta.resize(static_cast<size_t>(T));
  s.alpha_bar.resize(static_cast<size_t>(T));
  double prod = 1.0;
  for (int64_t t = 0; t < T; ++t) {
    const double frac = static_cast<double>(t) / static_cast<double>(T - 1);
    const double b = beta_start + (beta_end - beta_start) * frac;
    s.beta[static_cast<size_t>(t)] = b;
    prod *= 1.0 - b;
    s.alpha_bar[static_cast<size_t>(t)] = prod;
  }
  return s;
}

Tensor q_sample(const Tensor& x0, int64_t t, const Tensor& eps, const NoiseSchedule& sched) {
  if (t < 0 || t >= sched.T) throw std::invalid_argument("q_sample: t out of range");
  if (eps.shape() != x0.shape()) throw std::invalid_argument("q_sample: eps shape mismatch");
  const double abar = sched.alpha_bar[static_cast<size_t>(t)];
  return add(scale(x0, std::sqrt(abar)), scale(eps, std::sqrt(1.0 - abar)));
}

Tensor ddpm_loss(const EpsFn& model, const std::vector<Tensor>& x0_batch,
                 const std::vector<ContextEmbedding>& ctx_batch, const NoiseSchedule& sched, Rng& rng) {
  if (x0_batch.empty() || x0_batch.size() != ctx_batch.size()) {
    throw std::invalid_argument("ddpm_loss: batch sizes must match and be nonempty");
  }
  Tensor total;
  for (size_t i = 0; i < x0_batch.size(); ++i) {
    const int64_t t = rng.uniform_index(sched.T);
    Tensor eps = Tensor::randn(x0_batch[i].shape(), rng);
    Tensor x_t = q_sample(x0_batch[i], t, eps, sched);
    Tensor eps_hat = model(x_t, t, ctx_batch[i]);
    if (eps_hat.shape() != eps.shape()) throw std::invalid_argument("ddpm_loss: model output shape mismatch");
    Tensor d = sub(eps_hat, eps);
    Tensor l = mean(mul(d, d));
    total = total.defined() ? add(total, l) : l;
  }
  return scale(total, 1.0 / static_cast<double>(x0_batch.size()));
}

std::vector<int64_t> sampler_timesteps(const NoiseSchedule& sched, const SamplerConfig& cfg) {
  if (cfg.steps < 1 || cfg.steps > sched.T || sched.T % cfg.steps != 0) {
    throw std::invalid_argument("sampler: steps must divide T");
  }
  const int64_t stride = sched.T / cfg.steps;
  std::vector<int64_t> ts;
  ts.reserve(static_cast<size_t>(cfg.steps));
  for (int64_t t = sched.T - 1; t >= 0; t -= stride) ts.push_back(t);
  return ts;
}

Tensor p_sample(const EpsFn& model, const ContextEmbedding& ctx, const Shape& image_shape,
                const NoiseSchedule& sched, const SamplerConfig& cfg) {
  const std::vector<int64_t> ts = sampler_timesteps(sched, cfg);
  Rng rng(cfg.seed, streams::kSampling);
  Tensor x = Tensor::randn(image_shape, rng);
  for (size_t k = 0; k < ts.size(); ++k) {
    const int64_t t = ts[k];
    const double abar_t = sched.alpha_bar[static_cast<size_t>(t)];
    const double abar_s = (k + 1 < ts.size()) ? sched.alpha_bar[static_cast<size_t>(ts[k + 1])] : 1.0;
    const double alpha_eff = abar_t / abar_s;
    const double beta_eff = 1.0 - alpha_eff;

    Tensor eps_hat = model(x, t, ctx);
    // mu = (x - beta_eff / sqrt(1 - abar_t) * eps_hat) / sqrt(alpha_eff)
    Tensor mu = scale(sub(x, scale(eps_hat, beta_eff / std::sqrt(1.0 - abar_t))),
                      1.0 / std::sqrt(alpha_eff));
    if (k + 1 < ts.size()) {
      Tensor z = Tensor::randn(image_shape, rng);
      x = add(mu, scale(z, std::sqrt(beta_eff)));
    } else {
      x = mu;
    }
  }
  Tensor out = x.clone();
  for (double& v : out.values()) v = std::clamp(v, -1.0, 1.0);
  return out;
}

}  // namespace resteer
