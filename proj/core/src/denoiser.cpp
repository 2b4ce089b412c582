#include "resteer/denoiser.hpp"

#include <cmath>
#include <stdexcept>

namespace resteer {

void DenoiserConfig::validate() const {
  if (image_size <= 0 || channels <= 0 || patch <= 0 || d_model <= 0 || heads <= 0 || blocks <= 0 ||
      d_ctx <= 0 || d_cross <= 0 || d_ff <= 0 || time_dim <= 0 || l_max <= 0) {
    throw std::invalid_argument("denoiser config: all extents must be positive");
  }
  if (image_size % patch != 0) throw std::invalid_argument("denoiser config: patch must divide image side");
  if (d_model % heads != 0) throw std::invalid_argument("denoiser config: d_model not divisible by heads");
  if (d_cross % heads != 0) throw std::invalid_argument("denoiser config: d_cross not divisible by heads");
  if (time_dim % 2 != 0) throw std::invalid_argument("denoiser config: time_dim must be even");
}

std::string scope_name(ParamScope scope) {
  return scope == ParamScope::kCaOnly ? "ca" : "full";
}

ParamScope scope_from_name(const std::string& name) {
  if (name == "ca") return ParamScope::kCaOnly;
  if (name == "full") return ParamScope::kFull;
  throw std::invalid_argument("scope: unknown name '" + name + "' (expected ca|full)");
}

std::pair<Tensor, Tensor> cross_attention(const Tensor& q_tokens, const Tensor& ctx_tokens,
                                          const CrossAttentionWeights& w, int64_t heads) {
  const int64_t m = q_tokens.shape()[0];
  const int64_t L = ctx_tokens.shape()[0];
  const int64_t d_attn = w.wq.shape()[1];
  if (d_attn % heads != 0) throw std::invalid_argument("cross_attention: width not divisible by heads");
  const int64_t dh = d_attn / heads;

  Tensor q = add_rows(matmul(q_tokens, w.wq), w.bq);  // [m, d_attn]
  Tensor k = add_rows(matmul(ctx_tokens, w.wk), w.bk);
  Tensor v = add_rows(matmul(ctx_tokens, w.wv), w.bv);

  Tensor qh = permute(reshape(q, {m, heads, dh}), {1, 0, 2});  // [H, m, dh]
  Tensor kh = permute(reshape(k, {L, heads, dh}), {1, 2, 0});  // [H, dh, L]
  Tensor vh = permute(reshape(v, {L, heads, dh}), {1, 0, 2});  // [H, L, dh]

  Tensor scores = scale(bmm(qh, kh), 1.0 / std::sqrt(static_cast<double>(dh)));
  Tensor attn = softmax(scores, 2);  // [H, m, L]

  Tensor out = bmm(attn, vh);                                   // [H, m, dh]
  Tensor merged = reshape(permute(out, {1, 0, 2}), {m, d_attn});
  return {add_rows(matmul(merged, w.wo), w.bo), attn};
}

Tensor sinusoidal_time_embedding(int64_t t, int64_t dim) {
  const int64_t half = dim / 2;
  std::vector<double> v(static_cast<size_t>(dim));
  const double log_base = std::log(10000.0) / static_cast<double>(half);
  for (int64_t i = 0; i < half; ++i) {
    const double angle = static_cast<double>(t) * std::exp(-static_cast<double>(i) * log_base);
    v[static_cast<size_t>(i)] = std::cos(angle);
    v[static_cast<size_t>(i + half)] = std::sin(angle);
  }
  return Tensor::from_data({1, dim}, std::move(v));
}

Tensor Denoiser::add_param(const std::string& name, Tensor t) {
  index_.emplace(name, params_.size());
  params_.emplace_back(name, t);
  return t;
}

Denoiser Denoiser::init(const DenoiserConfig& cfg, uint64_t seed) {
  cfg.validate();
  Denoiser d;
  d.cfg_ = cfg;
  Rng rng = Rng(seed, streams::kInit).child(0xD0);

  auto weight = [&rng](Shape shape) {
    const double fan_in = static_cast<double>(shape[0]);
    Tensor t = Tensor::randn(std::move(shape), rng);
    const double s = 1.0 / std::sqrt(fan_in);
    for (double& v : t.values()) v *= s;
    return t;
  };
  auto small = [&rng](Shape shape, double s) {
    Tensor t = Tensor::randn(std::move(shape), rng);
    for (double& v : t.values()) v *= s;
    return t;
  };

  const int64_t pd = cfg.patch_dim();
  d.add_param("patch.embed.weight", weight({pd, cfg.d_model}));
  d.add_param("patch.embed.bias", Tensor::zeros({cfg.d_model}));
  d.add_param("patch.pos", small({cfg.num_patches(), cfg.d_model}, 0.1));
  d.add_param("time.mlp.w1", weight({cfg.time_dim, cfg.d_model}));
  d.add_param("time.mlp.b1", Tensor::zeros({cfg.d_model}));
  d.add_param("time.mlp.w2", weight({cfg.d_model, cfg.d_model}));
  d.add_param("time.mlp.b2", Tensor::zeros({cfg.d_model}));
  for (int64_t b = 0; b < cfg.blocks; ++b) {
    const std::string p = "block" + std::to_string(b) + ".";
    d.add_param(p + "ln1.gamma", Tensor::full({cfg.d_model}, 1.0));
    d.add_param(p + "ln1.beta", Tensor::zeros({cfg.d_model}));
    d.add_param(p + "self.wq", weight({cfg.d_model, cfg.d_model}));
    d.add_param(p + "self.bq", Tensor::zeros({cfg.d_model}));
    d.add_param(p + "self.wk", weight({cfg.d_model, cfg.d_model}));
    d.add_param(p + "self.bk", Tensor::zeros({cfg.d_model}));
    d.add_param(p + "self.wv", weight({cfg.d_model, cfg.d_model}));
    d.add_param(p + "self.bv", Tensor::zeros({cfg.d_model}));
    d.add_param(p + "self.wo", weight({cfg.d_model, cfg.d_model}));
    d.add_param(p + "self.bo", Tensor::zeros({cfg.d_model}));
    d.add_param(p + "ln2.gamma", Tensor::full({cfg.d_model}, 1.0));
    d.add_param(p + "ln2.beta", Tensor::zeros({cfg.d_model}));
    d.add_param(p + "cross.wq", weight({cfg.d_model, cfg.d_cross}));
    d.add_param(p + "cross.bq", Tensor::zeros({cfg.d_cross}));
    d.add_param(p + "cross.wk", weight({cfg.d_ctx, cfg.d_cross}));
    d.add_param(p + "cross.bk", Tensor::zeros({cfg.d_cross}));
    d.add_param(p + "cross.wv", weight({cfg.d_ctx, cfg.d_cross}));
    d.add_param(p + "cross.bv", Tensor::zeros({cfg.d_cross}));
    d.add_param(p + "cross.wo", weight({cfg.d_cross, cfg.d_model}));
    d.add_param(p + "cross.bo", Tensor::zeros({cfg.d_model}));
    d.add_param(p + "ln3.gamma", Tensor::full({cfg.d_model}, 1.0));
    d.add_param(p + "ln3.beta", Tensor::zeros({cfg.d_model}));
    d.add_param(p + "mlp.w1", weight({cfg.d_model, cfg.d_ff}));
    d.add_param(p + "mlp.b1", Tensor::zeros({cfg.d_ff}));
    d.add_param(p + "mlp.w2", weight({cfg.d_ff, cfg.d_model}));
    d.add_param(p + "mlp.b2", Tensor::zeros({cfg.d_model}));
  }
  d.add_param("final.ln.gamma", Tensor::full({cfg.d_model}, 1.0));
  d.add_param("final.ln.beta", Tensor::zeros({cfg.d_model}));
  d.add_param("patch.unembed.weight", weight({cfg.d_model, pd}));
  d.add_param("patch.unembed.bias", Tensor::zeros({pd}));
  return d;
}

const Tensor& Denoiser::param(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::invalid_argument("denoiser: no parameter named '" + name + "'");
  return params_[it->second].second;
}

bool Denoiser::has_param(const std::string& name) const { return index_.count(name) > 0; }

std::vector<std::string> Denoiser::select_params(ParamScope scope) const {
  std::vector<std::string> names;
  for (const auto& [name, t] : params_) {
    if (scope == ParamScope::kFull || name.find(".cross.") != std::string::npos) {
      names.push_back(name);
    }
  }
  return names;
}

int64_t Denoiser::param_count() const {
  int64_t n = 0;
  for (const auto& [name, t] : params_) n += t.size();
  return n;
}

Denoiser Denoiser::clone() const {
  Denoiser d;
  d.cfg_ = cfg_;
  d.index_ = index_;
  d.params_.reserve(params_.size());
  for (const auto& [name, t] : params_) d.params_.emplace_back(name, t.clone());
  return d;
}

std::pair<Tensor, std::optional<AttentionRecord>> Denoiser::forward(const Tensor& x_t, int64_t t,
                                                                    const ContextEmbedding& ctx,
                                                                    bool record) const {
  const DenoiserConfig& c = cfg_;
  if (x_t.shape() != Shape{c.image_size, c.image_size, c.channels}) {
    throw std::invalid_argument("denoiser: input shape " + shape_str(x_t.shape()) + " does not match config");
  }
  if (ctx.per_token.shape() != Shape{c.l_max, c.d_ctx}) {
    throw std::invalid_argument("denoiser: context shape mismatch");
  }
  if (t < 0) throw std::invalid_argument("denoiser: negative timestep");
  const int64_t g = c.grid();
  const int64_t m = c.num_patches();

  // patchify: [S,S,C] -> [g,p,g,p,C] -> [g,g,p,p,C] -> [m, patch_dim]
  Tensor patches = reshape(
      permute(reshape(x_t, {g, c.patch, g, c.patch, c.channels}), {0, 2, 1, 3, 4}),
      {m, c.patch_dim()});

  Tensor tok = add_rows(matmul(patches, param("patch.embed.weight")), param("patch.embed.bias"));
  tok = add(tok, param("patch.pos"));

  Tensor temb = sinusoidal_time_embedding(t, c.time_dim);
  Tensor th = gelu(add_rows(matmul(temb, param("time.mlp.w1")), param("time.mlp.b1")));
  Tensor tvec = reshape(add_rows(matmul(th, param("time.mlp.w2")), param("time.mlp.b2")), {c.d_model});
  tok = add_rows(tok, tvec);

  std::optional<AttentionRecord> rec;
  if (record) {
    rec.emplace();
    rec->t = t;
    rec->token_ids = ctx.token_ids;
  }

  for (int64_t b = 0; b < c.blocks; ++b) {
    const std::string p = "block" + std::to_string(b) + ".";

    Tensor h1 = layer_norm(tok, param(p + "ln1.gamma"), param(p + "ln1.beta"));
    CrossAttentionWeights self_w{param(p + "self.wq"), param(p + "self.bq"), param(p + "self.wk"),
                                 param(p + "self.bk"), param(p + "self.wv"), param(p + "self.bv"),
                                 param(p + "self.wo"), param(p + "self.bo")};
    tok = add(tok, cross_attention(h1, h1, self_w, c.heads).first);

    Tensor h2 = layer_norm(tok, param(p + "ln2.gamma"), param(p + "ln2.beta"));
    CrossAttentionWeights cross_w{param(p + "cross.wq"), param(p + "cross.bq"), param(p + "cross.wk"),
                                  param(p + "cross.bk"), param(p + "cross.wv"), param(p + "cross.bv"),
                                  param(p + "cross.wo"), param(p + "cross.bo")};
    auto [cout, attn] = cross_attention(h2, ctx.per_token, cross_w, c.heads);
    tok = add(tok, cout);
    if (rec) rec->per_block.push_back(attn);

    Tensor h3 = layer_norm(tok, param(p + "ln3.gamma"), param(p + "ln3.beta"));
    Tensor mid = gelu(add_rows(matmul(h3, param(p + "mlp.w1")), param(p + "mlp.b1")));
    tok = add(tok, add_rows(matmul(mid, param(p + "mlp.w2")), param(p + "mlp.b2")));
  }

  Tensor out_tok = layer_norm(tok, param("final.ln.gamma"), param("final.ln.beta"));
  Tensor flat = add_rows(matmul(out_tok, param("patch.unembed.weight")), param("patch.unembed.bias"));
  Tensor eps_hat = reshape(
      permute(reshape(flat, {g, g, c.patch, c.patch, c.channels}), {0, 2, 1, 3, 4}),
      {c.image_size, c.image_size, c.channels});
  return {eps_hat, std::move(rec)};
}

}  // namespace resteer
