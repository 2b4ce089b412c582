#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "resteer/ops.hpp"
#include "resteer/tensor.hpp"
#include "resteer/text.hpp"

namespace resteer {

struct DenoiserConfig {
  int64_t image_size = 16;
  int64_t channels = 3;
  int64_t patch = 2;
  int64_t d_model = 64;
  int64_t heads = 4;
  int64_t blocks = 2;
  int64_t d_ctx = 32;
  int64_t d_cross = 32;  // cross-attention width; keeps CA patches small
  int64_t d_ff = 256;
  int64_t time_dim = 64;
  int64_t l_max = 8;

  void validate() const;
  int64_t grid() const { return image_size / patch; }
  int64_t num_patches() const { return grid() * grid(); }
  int64_t patch_dim() const { return patch * patch * channels; }
};

// Post-softmax cross-attention probabilities for one forward pass,
// one [heads, m, L] tensor per block, still attached to the live graph.
struct AttentionRecord {
  std::vector<Tensor> per_block;
  int64_t t = 0;
  std::vector<int64_t> token_ids;
};

enum class ParamScope { kCaOnly, kFull };

std::string scope_name(ParamScope scope);
ParamScope scope_from_name(const std::string& name);

struct CrossAttentionWeights {
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;
};

// Multi-head scaled dot-product attention with queries from q_tokens and
// keys/values projected from ctx_tokens; returns (output, per-head map).
std::pair<Tensor, Tensor> cross_attention(const Tensor& q_tokens, const Tensor& ctx_tokens,
                                          const CrossAttentionWeights& w, int64_t heads);

Tensor sinusoidal_time_embedding(int64_t t, int64_t dim);

// Conditional eps-predictor: patch tokens with a learned positional table,
// sinusoidal time embedding through a 2-layer MLP, then pre-LN blocks of
// self-attention, cross-attention over the prompt context, and an MLP.
class Denoiser {
 public:
  Denoiser() = default;
  static Denoiser init(const DenoiserConfig& cfg, uint64_t seed);

  const DenoiserConfig& config() const { return cfg_; }

  std::pair<Tensor, std::optional<AttentionRecord>> forward(const Tensor& x_t, int64_t t,
                                                            const ContextEmbedding& ctx,
                                                            bool record = false) const;

  const std::vector<std::pair<std::string, Tensor>>& named_params() const { return params_; }
  const Tensor& param(const std::string& name) const;
  bool has_param(const std::string& name) const;
  std::vector<std::string> select_params(ParamScope scope) const;
  int64_t param_count() const;

  Denoiser clone() const;

 private:
  Tensor add_param(const std::string& name, Tensor t);

  DenoiserConfig cfg_;
  std::vector<std::pair<std::string, Tensor>> params_;
  std::unordered_map<std::string, size_t> index_;
};

}  // namespace resteer
