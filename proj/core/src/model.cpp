#include "resteer/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace resteer {

Model Model::init(const DenoiserConfig& cfg, Vocabulary vocab, uint64_t seed) {
  cfg.validate();
  Model m;
  m.cfg = cfg;
  Rng text_rng = Rng(seed, streams::kInit).child(0x7E);
  m.text = TextEncoder::init(std::move(vocab), cfg.l_max, cfg.d_ctx, text_rng);
  m.denoiser = Denoiser::init(cfg, seed);
  return m;
}

std::vector<std::pair<std::string, Tensor>> Model::all_params() const {
  std::vector<std::pair<std::string, Tensor>> out = text.named_params();
  const auto& dn = denoiser.named_params();
  out.insert(out.end(), dn.begin(), dn.end());
  return out;
}

std::vector<std::pair<std::string, Tensor>> Model::scoped_params(ParamScope scope) const {
  std::vector<std::pair<std::string, Tensor>> out;
  for (const std::string& name : denoiser.select_params(scope)) {
    out.emplace_back(name, denoiser.param(name));
  }
  return out;
}

Tensor Model::param(const std::string& name) const {
  if (name.rfind("text.", 0) == 0) {
    for (const auto& [n, t] : text.named_params()) {
      if (n == name) return t;
    }
    throw std::invalid_argument("model: no parameter named '" + name + "'");
  }
  return denoiser.param(name);
}

EpsFn Model::eps_fn() const {
  const Denoiser* d = &denoiser;
  return [d](const Tensor& x_t, int64_t t, const ContextEmbedding& ctx) {
    return d->forward(x_t, t, ctx, false).first;
  };
}

Tensor Model::sample(const ContextEmbedding& ctx, const NoiseSchedule& sched, const SamplerConfig& scfg) const {
  return p_sample(eps_fn(), ctx, {cfg.image_size, cfg.image_size, cfg.channels}, sched, scfg);
}

Tensor Model::sample_prompt(const std::string& prompt, const NoiseSchedule& sched, const SamplerConfig& scfg,
                            const std::vector<Tensor>& extra) const {
  return sample(text.encode_prompt(prompt, extra), sched, scfg);
}

std::pair<Tensor, std::vector<AttentionRecord>> Model::sample_recorded(const ContextEmbedding& ctx,
                                                                       const NoiseSchedule& sched,
                                                                       const SamplerConfig& scfg) const {
  std::vector<AttentionRecord> records;
  const Denoiser* d = &denoiser;
  EpsFn fn = [d, &records](const Tensor& x_t, int64_t t, const ContextEmbedding& c) {
    auto [eps_hat, rec] = d->forward(x_t, t, c, true);
    records.push_back(std::move(*rec));
    return eps_hat;
  };
  Tensor img = p_sample(fn, ctx, {cfg.image_size, cfg.image_size, cfg.channels}, sched, scfg);
  return {img, std::move(records)};
}

Model Model::clone() const {
  Model m;
  m.cfg = cfg;
  m.text.vocab = text.vocab;
  m.text.l_max = text.l_max;
  m.text.d_ctx = text.d_ctx;
  m.text.token_embedding = text.token_embedding.clone();
  m.text.positional = text.positional.clone();
  m.text.pooler_weight = text.pooler_weight.clone();
  m.text.pooler_bias = text.pooler_bias.clone();
  m.denoiser = denoiser.clone();
  return m;
}

void set_params_requires_grad(const std::vector<std::pair<std::string, Tensor>>& params, bool on) {
  for (const auto& [name, t] : params) {
    Tensor handle = t;
    handle.set_requires_grad(on);
  }
}

}  // namespace resteer
