#include "resteer/inversion.hpp"

#include <cmath>
#include <stdexcept>

#include "resteer/concepts.hpp"
#include "resteer/hashing.hpp"
#include "resteer/ops.hpp"

namespace resteer {

void InversionConfig::validate() const {
  if (n_tokens < 1) throw std::invalid_argument("inversion config: n_tokens must be >= 1");
  if (steps < 0) throw std::invalid_argument("inversion config: steps must be >= 0");
  if (steps > 0 && lr <= 0.0) throw std::invalid_argument("inversion config: lr must be positive");
}

std::string init_name(InversionConfig::Init init) {
  return init == InversionConfig::Init::kMeanEmbedding ? "mean-embedding" : "random";
}

InversionConfig::Init init_from_name(const std::string& name) {
  if (name == "mean-embedding") return InversionConfig::Init::kMeanEmbedding;
  if (name == "random") return InversionConfig::Init::kRandom;
  throw std::invalid_argument("inversion: unknown init '" + name + "'");
}

InversionResult invert(const Model& model, const std::vector<Tensor>& images, const std::string& tmpl,
                       const InversionConfig& cfg, const NoiseSchedule& sched) {
  cfg.validate();
  if (images.empty()) throw std::invalid_argument("invert: empty image set");

  std::vector<std::string> slot_words;
  for (int64_t i = 0; i < cfg.n_tokens; ++i) {
    const std::string w = "*" + std::to_string(i);
    if (model.text.vocab.id_of(w) < 0) {
      throw std::invalid_argument("invert: vocabulary has no placeholder token '" + w + "'");
    }
    slot_words.push_back(w);
  }
  const std::string prompt = instantiate_template(tmpl, slot_words);
  const std::vector<int64_t> ids = tokenize(prompt, model.text.vocab, model.text.l_max);
  const std::vector<int64_t> slots = placeholder_positions(ids, model.text.vocab);
  if (static_cast<int64_t>(slots.size()) != cfg.n_tokens) {
    throw std::invalid_argument("invert: template resolves to " + std::to_string(slots.size()) +
                                " placeholder slots, expected " + std::to_string(cfg.n_tokens));
  }

  const std::vector<std::pair<std::string, Tensor>> params = model.all_params();
  const Digest before = fingerprint_params(params);

  Rng rng(cfg.seed, streams::kInversion);
  std::vector<Tensor> vecs;
  for (int64_t i = 0; i < cfg.n_tokens; ++i) {
    Tensor v;
    if (cfg.init == InversionConfig::Init::kMeanEmbedding) {
      v = model.text.mean_embedding().clone();
    } else {
      v = Tensor::randn({model.text.d_ctx}, rng);
      for (double& x : v.values()) x *= 0.3;
    }
    v.set_requires_grad(true);
    vecs.push_back(v);
  }

  InversionResult result;
  {
    // Model weights stay frozen: only the placeholder vectors require grad.
    struct Guard {
      explicit Guard(const std::vector<std::pair<std::string, Tensor>>& ps) {
        for (const auto& [n, t] : ps) saved.emplace_back(t, t.requires_grad());
        for (auto& [t, f] : saved) t.set_requires_grad(false);
      }
      ~Guard() {
        for (auto& [t, f] : saved) t.set_requires_grad(f);
      }
      std::vector<std::pair<Tensor, bool>> saved;
    } guard(params);

    for (int64_t step = 0; step < cfg.steps; ++step) {
      Graph graph;
      GraphScope scope(graph);
      const size_t img_ix = static_cast<size_t>(rng.uniform_index(static_cast<int64_t>(images.size())));
      ContextEmbedding ctx = model.text.encode(ids, vecs);
      Tensor loss = ddpm_loss(model.eps_fn(), {images[img_ix]}, {ctx}, sched, rng);
      const double loss_value = loss.item();
      if (!std::isfinite(loss_value)) throw std::runtime_error("invert: loss diverged to non-finite value");
      backward(graph, loss);
      for (Tensor& v : vecs) {
        auto& w = v.values();
        if (!v.has_grad()) continue;
        const auto& g = v.grad();
        for (size_t j = 0; j < w.size(); ++j) w[j] -= cfg.lr * g[j];
      }
      result.loss_trace.push_back(loss_value);
    }
  }

  if (fingerprint_params(params) != before) {
    throw std::logic_error("invert: frozen model weights changed during inversion");
  }

  for (Tensor& v : vecs) {
    Tensor out = v.clone();
    out.set_requires_grad(false);
    result.embeddings.push_back(out);
  }
  return result;
}

Tensor invert_for_score(const Model& model, const std::vector<Tensor>& images, const std::string& tmpl,
                        const InversionConfig& cfg, const NoiseSchedule& sched) {
  InversionResult r = invert(model, images, tmpl, cfg, sched);
  std::vector<std::string> slot_words;
  for (int64_t i = 0; i < cfg.n_tokens; ++i) slot_words.push_back("*" + std::to_string(i));
  const std::string prompt = instantiate_template(tmpl, slot_words);
  ContextEmbedding ctx = model.text.encode_prompt(prompt, r.embeddings);
  return ctx.pooled.clone();
}

}  // namespace resteer
