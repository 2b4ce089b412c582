#include "resteer/forgetting.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "resteer/errors.hpp"
#include "resteer/hashing.hpp"
#include "resteer/ops.hpp"

namespace resteer {

namespace {

struct RequiresGradGuard {
  explicit RequiresGradGuard(const Model& model) {
    for (const auto& [name, t] : model.all_params()) saved_.emplace_back(t, t.requires_grad());
  }
  ~RequiresGradGuard() {
    for (auto& [t, flag] : saved_) t.set_requires_grad(flag);
  }
  std::vector<std::pair<Tensor, bool>> saved_;
};

void sgd_step(const std::vector<std::pair<std::string, Tensor>>& params, double lr) {
  for (const auto& [name, t] : params) {
    Tensor p = t;
    if (!p.has_grad()) continue;
    auto& w = p.values();
    const auto& g = p.grad();
    for (size_t i = 0; i < w.size(); ++i) w[i] -= lr * g[i];
  }
}

void assert_zero_grad_outside_scope(const Model& model, const std::vector<std::string>& scope_names) {
  for (const auto& [name, t] : model.all_params()) {
    bool in_scope = false;
    for (const std::string& s : scope_names) {
      if (s == name) {
        in_scope = true;
        break;
      }
    }
    if (in_scope) continue;
    if (!t.has_grad()) continue;
    Tensor p = t;
    for (double g : p.grad()) {
      if (g != 0.0) throw std::logic_error("forget: gradient leaked outside scope into '" + name + "'");
    }
  }
}

}  // namespace

void ForgetConfig::validate() const {
  if (steps < 0) throw std::invalid_argument("forget config: steps must be >= 0");
  if (steps > 0 && lr <= 0.0) throw std::invalid_argument("forget config: lr must be positive");
  if (batch < 1) throw std::invalid_argument("forget config: batch must be >= 1");
  if (concepts.empty()) throw std::invalid_argument("forget config: needs at least one concept");
  if (!concept_weights.empty() && concept_weights.size() != concepts.size()) {
    throw std::invalid_argument("forget config: concept_weights length mismatch");
  }
  for (const ConceptSpec& c : concepts) c.validate();
}

Tensor resteer_loss(const AttentionRecord& record, const std::vector<int64_t>& positions, bool l1) {
  if (positions.empty()) throw std::invalid_argument("resteer_loss: empty target positions");
  if (record.per_block.empty()) throw std::invalid_argument("resteer_loss: record has no attention maps");
  Tensor total;
  int64_t denom = 0;
  for (const Tensor& attn : record.per_block) {
    const int64_t heads = attn.shape()[0];
    const int64_t m = attn.shape()[1];
    const int64_t L = attn.shape()[2];
    for (int64_t p : positions) {
      if (p < 0 || p >= L) throw std::invalid_argument("resteer_loss: position out of range");
    }
    Tensor sel = index_select(attn, 2, positions);  // [H, m, P]
    Tensor contrib = l1 ? sum(sel) : sum(mul(sel, sel));
    total = total.defined() ? add(total, contrib) : contrib;
    denom += heads * m;
  }
  return scale(total, 1.0 / static_cast<double>(denom));
}

double attention_mass(const AttentionRecord& record, const std::vector<int64_t>& positions) {
  if (positions.empty()) throw std::invalid_argument("attention_mass: empty target positions");
  double total = 0.0;
  int64_t denom = 0;
  for (const Tensor& attn : record.per_block) {
    const int64_t heads = attn.shape()[0];
    const int64_t m = attn.shape()[1];
    const int64_t L = attn.shape()[2];
    const auto& v = attn.values();
    for (int64_t h = 0; h < heads; ++h) {
      for (int64_t q = 0; q < m; ++q) {
        const size_t base = static_cast<size_t>((h * m + q) * L);
        for (int64_t p : positions) total += v[base + static_cast<size_t>(p)];
      }
    }
    denom += heads * m;
  }
  return total / static_cast<double>(denom);
}

double measure_target_mass(const Model& model, const ConceptSpec& concept, const NoiseSchedule& sched,
                           uint64_t seed, int64_t probes) {
  concept.validate();
  if (concept.reference_images.empty()) throw std::invalid_argument("measure_target_mass: no reference images");
  Rng rng = Rng(seed, streams::kMetrics).child(name_key(concept.name));
  double mass = 0.0;
  for (int64_t i = 0; i < probes; ++i) {
    const size_t img_ix = static_cast<size_t>(i) % concept.reference_images.size();
    const size_t tpl_ix = static_cast<size_t>(i) % concept.templates.size();
    const int64_t t = (sched.T * i) / probes + sched.T / (2 * probes);
    const std::string prompt = concept.prompt_for_template(tpl_ix, model.text.vocab);
    const std::vector<int64_t> ids = tokenize(prompt, model.text.vocab, model.text.l_max);
    const std::vector<int64_t> pos = target_positions(ids, concept, model.text.vocab);
    Tensor eps = Tensor::randn(concept.reference_images[img_ix].shape(), rng);
    Tensor x_t = q_sample(concept.reference_images[img_ix], t, eps, sched);
    ContextEmbedding ctx = model.text.encode(ids, concept.extra_embeddings());
    auto [eps_hat, rec] = model.denoiser.forward(x_t, t, ctx, true);
    mass += attention_mass(*rec, pos);
  }
  return mass / static_cast<double>(probes);
}

std::pair<ModelPatch, TrainLog> forget(Model& model, const ForgetConfig& cfg, const NoiseSchedule& sched,
                                       Rng& rng) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();

  // Pre-resolve every (concept, template) pair; unresolvable concepts fail here.
  struct Resolved {
    std::vector<std::vector<int64_t>> ids_per_template;
    std::vector<std::vector<int64_t>> positions_per_template;
  };
  std::vector<Resolved> resolved(cfg.concepts.size());
  for (size_t c = 0; c < cfg.concepts.size(); ++c) {
    const ConceptSpec& spec = cfg.concepts[c];
    if (spec.reference_images.empty()) {
      throw std::invalid_argument("forget: concept '" + spec.name + "' has no reference images");
    }
    for (size_t ti = 0; ti < spec.templates.size(); ++ti) {
      const std::string prompt = spec.prompt_for_template(ti, model.text.vocab);
      std::vector<int64_t> ids = tokenize(prompt, model.text.vocab, model.text.l_max);
      resolved[c].positions_per_template.push_back(target_positions(ids, spec, model.text.vocab));
      resolved[c].ids_per_template.push_back(std::move(ids));
    }
  }

  const std::vector<std::string> scope_names = model.denoiser.select_params(cfg.scope);
  std::vector<std::pair<std::string, Tensor>> scoped = model.scoped_params(cfg.scope);
  std::vector<std::pair<std::string, Tensor>> before;
  before.reserve(scoped.size());
  for (const auto& [name, t] : scoped) before.emplace_back(name, t.clone());

  TrainLog log;
  {
    RequiresGradGuard guard(model);
    set_params_requires_grad(model.all_params(), false);
    set_params_requires_grad(scoped, true);

    for (int64_t step = 0; step < cfg.steps; ++step) {
      Graph graph;
      GraphScope scope(graph);
      Tensor loss;
      double mass = 0.0;
      int64_t mass_count = 0;
      for (size_t c = 0; c < cfg.concepts.size(); ++c) {
        const ConceptSpec& spec = cfg.concepts[c];
        const double w = cfg.concept_weights.empty() ? 1.0 : cfg.concept_weights[c];
        Tensor concept_loss;
        for (int64_t b = 0; b < cfg.batch; ++b) {
          const size_t img_ix = static_cast<size_t>(rng.uniform_index(static_cast<int64_t>(spec.reference_images.size())));
          const size_t tpl_ix = static_cast<size_t>(rng.uniform_index(static_cast<int64_t>(spec.templates.size())));
          const int64_t t = rng.uniform_index(sched.T);
          Tensor eps = Tensor::randn(spec.reference_images[img_ix].shape(), rng);
          Tensor x_t = q_sample(spec.reference_images[img_ix], t, eps, sched);
          ContextEmbedding ctx = model.text.encode(resolved[c].ids_per_template[tpl_ix], spec.extra_embeddings());
          auto [eps_hat, rec] = model.denoiser.forward(x_t, t, ctx, true);
          Tensor l = resteer_loss(*rec, resolved[c].positions_per_template[tpl_ix], cfg.l1_loss);
          concept_loss = concept_loss.defined() ? add(concept_loss, l) : l;
          mass += attention_mass(*rec, resolved[c].positions_per_template[tpl_ix]);
          ++mass_count;
        }
        Tensor weighted = scale(concept_loss, w / static_cast<double>(cfg.batch));
        loss = loss.defined() ? add(loss, weighted) : weighted;
      }
      const double loss_value = loss.item();
      if (!std::isfinite(loss_value)) throw std::runtime_error("forget: loss diverged to non-finite value");
      backward(graph, loss);
      assert_zero_grad_outside_scope(model, scope_names);
      sgd_step(scoped, cfg.lr);
      log.loss.push_back(loss_value);
      log.target_mass.push_back(mass / static_cast<double>(mass_count));
    }
  }

  std::vector<std::pair<std::string, Tensor>> after = model.scoped_params(cfg.scope);
  std::string meta = "{\"scope\":\"" + scope_name(cfg.scope) + "\",\"steps\":" + std::to_string(cfg.steps) +
                     ",\"concepts\":[";
  for (size_t c = 0; c < cfg.concepts.size(); ++c) {
    meta += std::string(c ? "," : "") + "\"" + cfg.concepts[c].name + "\"";
  }
  meta += "]}";
  ModelPatch patch = make_patch(before, after, scope_names, meta);

  log.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return {std::move(patch), std::move(log)};
}

void baseline_blacklist(Model& model, const ConceptSpec& concept) {
  concept.validate();
  if (concept.inverted_route()) {
    throw std::invalid_argument("blacklist: concept uses inverted embeddings, nothing to blacklist");
  }
  Tensor table = model.text.token_embedding;
  const int64_t d = table.shape()[1];
  for (const std::string& w : concept.prompt_words) {
    const int64_t id = model.text.vocab.id_of(w);
    if (id < 0) throw std::invalid_argument("blacklist: word '" + w + "' not in vocabulary");
    auto& v = table.values();
    for (int64_t j = 0; j < d; ++j) v[static_cast<size_t>(id * d + j)] = 0.0;
  }
}

TrainLog baseline_naive_finetune(Model& model, const ConceptSpec& concept,
                                 const std::vector<Tensor>& decoy_images, const NaiveFinetuneConfig& cfg,
                                 const NoiseSchedule& sched, Rng& rng) {
  concept.validate();
  if (decoy_images.empty()) throw std::invalid_argument("naive_finetune: empty decoy set");
  if (cfg.steps > 0 && cfg.lr <= 0.0) throw std::invalid_argument("naive_finetune: lr must be positive");
  const auto t_start = std::chrono::steady_clock::now();

  std::vector<std::pair<std::string, Tensor>> scoped = model.scoped_params(ParamScope::kFull);
  TrainLog log;
  RequiresGradGuard guard(model);
  set_params_requires_grad(model.all_params(), false);
  set_params_requires_grad(scoped, true);

  for (int64_t step = 0; step < cfg.steps; ++step) {
    Graph graph;
    GraphScope scope(graph);
    std::vector<Tensor> x0s;
    std::vector<ContextEmbedding> ctxs;
    for (int64_t b = 0; b < cfg.batch; ++b) {
      const size_t img_ix = static_cast<size_t>(rng.uniform_index(static_cast<int64_t>(decoy_images.size())));
      const size_t tpl_ix = static_cast<size_t>(rng.uniform_index(static_cast<int64_t>(concept.templates.size())));
      x0s.push_back(decoy_images[img_ix]);
      ctxs.push_back(model.text.encode_prompt(concept.prompt_for_template(tpl_ix, model.text.vocab),
                                              concept.extra_embeddings()));
    }
    Tensor loss = ddpm_loss(model.eps_fn(), x0s, ctxs, sched, rng);
    const double loss_value = loss.item();
    if (!std::isfinite(loss_value)) throw std::runtime_error("naive_finetune: loss diverged");
    backward(graph, loss);
    sgd_step(scoped, cfg.lr);
    log.loss.push_back(loss_value);
    log.target_mass.push_back(0.0);
  }
  log.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return log;
}

ModelPatch make_patch(const std::vector<std::pair<std::string, Tensor>>& before,
                      const std::vector<std::pair<std::string, Tensor>>& after,
                      const std::vector<std::string>& scope_names, std::string metadata_json) {
  if (before.size() != after.size() || before.size() != scope_names.size()) {
    throw std::invalid_argument("make_patch: before/after/scope lengths differ");
  }
  ModelPatch patch;
  patch.metadata_json = std::move(metadata_json);
  patch.base_fingerprint = fingerprint_params(before);
  patch.deltas.reserve(before.size());
  for (size_t i = 0; i < before.size(); ++i) {
    if (before[i].first != scope_names[i] || after[i].first != scope_names[i]) {
      throw std::invalid_argument("make_patch: name mismatch at '" + scope_names[i] + "'");
    }
    const auto& bv = before[i].second.values();
    const auto& av = after[i].second.values();
    if (before[i].second.shape() != after[i].second.shape()) {
      throw std::invalid_argument("make_patch: shape mismatch at '" + scope_names[i] + "'");
    }
    Tensor delta = Tensor::zeros(before[i].second.shape());
    auto& dv = delta.values();
    for (size_t j = 0; j < bv.size(); ++j) {
      dv[j] = av[j] - bv[j];
      const double rebuilt = bv[j] + dv[j];
      if (std::memcmp(&rebuilt, &av[j], sizeof(double)) != 0) {
        throw std::invalid_argument("make_patch: '" + scope_names[i] +
                                    "' delta is not bit-exactly recoverable; weights are outside the "
                                    "finetune regime patches support");
      }
    }
    patch.deltas.emplace_back(scope_names[i], std::move(delta));
  }
  return patch;
}

void apply_patch(Model& model, const ModelPatch& patch) {
  std::vector<std::pair<std::string, Tensor>> current;
  current.reserve(patch.deltas.size());
  for (const auto& [name, delta] : patch.deltas) {
    if (!model.denoiser.has_param(name)) {
      throw std::invalid_argument("apply_patch: model has no parameter '" + name + "'");
    }
    current.emplace_back(name, model.denoiser.param(name));
  }
  const Digest fp = fingerprint_params(current);
  if (fp != patch.base_fingerprint) {
    throw fingerprint_error("apply_patch: base fingerprint mismatch (expected " +
                            hex_digest(patch.base_fingerprint) + ", model has " + hex_digest(fp) + ")");
  }
  for (size_t i = 0; i < patch.deltas.size(); ++i) {
    Tensor target = current[i].second;
    const auto& dv = patch.deltas[i].second.values();
    if (patch.deltas[i].second.shape() != target.shape()) {
      throw std::invalid_argument("apply_patch: shape mismatch at '" + patch.deltas[i].first + "'");
    }
    auto& w = target.values();
    for (size_t j = 0; j < w.size(); ++j) w[j] += dv[j];
  }
}

}  // namespace resteer
