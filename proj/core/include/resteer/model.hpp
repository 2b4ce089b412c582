#pragma once

#include <string>
#include <utility>
#include <vector>

#include "resteer/denoiser.hpp"
#include "resteer/diffusion.hpp"
#include "resteer/text.hpp"

namespace resteer {

// Full generator: vocabulary, text encoder and denoiser. Scope selection is
// over denoiser weights only; the text side is reached exclusively by base
// training and token blacklisting.
struct Model {
  DenoiserConfig cfg;
  TextEncoder text;
  Denoiser denoiser;

  static Model init(const DenoiserConfig& cfg, Vocabulary vocab, uint64_t seed);

  std::vector<std::pair<std::string, Tensor>> all_params() const;
  std::vector<std::pair<std::string, Tensor>> scoped_params(ParamScope scope) const;
  Tensor param(const std::string& name) const;

  EpsFn eps_fn() const;

  Tensor sample(const ContextEmbedding& ctx, const NoiseSchedule& sched, const SamplerConfig& scfg) const;
  Tensor sample_prompt(const std::string& prompt, const NoiseSchedule& sched, const SamplerConfig& scfg,
                       const std::vector<Tensor>& extra = {}) const;

  // Ancestral sampling that also returns the per-step attention records.
  std::pair<Tensor, std::vector<AttentionRecord>> sample_recorded(const ContextEmbedding& ctx,
                                                                  const NoiseSchedule& sched,
                                                                  const SamplerConfig& scfg) const;

  Model clone() const;
};

void set_params_requires_grad(const std::vector<std::pair<std::string, Tensor>>& params, bool on);

}  // namespace resteer
