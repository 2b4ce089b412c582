#pragma once

#include <string>
#include <utility>
#include <vector>

#include "resteer/ops.hpp"
#include "resteer/tensor.hpp"

namespace resteer {

// Ordered token list; index 0 is the padding token. Tokens starting with '*'
// are placeholder slots whose vectors come from outside the embedding table.
struct Vocabulary {
  std::vector<std::string> tokens;

  static Vocabulary from_tokens(std::vector<std::string> tokens);
  static Vocabulary parse_text(const std::string& newline_delimited);

  int64_t size() const { return static_cast<int64_t>(tokens.size()); }
  int64_t id_of(const std::string& word) const;  // -1 when absent
  const std::string& word(int64_t id) const;
  bool is_placeholder(int64_t id) const;
  std::string to_text() const;  // newline-delimited serialization
};

// Whitespace tokenizer; pads/truncates to l_max. Unknown words are an error
// in checked mode and map to padding otherwise.
std::vector<int64_t> tokenize(const std::string& prompt, const Vocabulary& vocab, int64_t l_max);

struct ContextEmbedding {
  Tensor per_token;                // [L, d_ctx]
  Tensor pooled;                   // [d_ctx]
  std::vector<int64_t> token_ids;  // length L
};

// Token embeddings + learned positionals + linear pooler over the mean of
// non-pad positions. Placeholder positions take their vectors verbatim from
// the caller, bypassing both the table and the positionals.
struct TextEncoder {
  Vocabulary vocab;
  int64_t l_max = 0;
  int64_t d_ctx = 0;
  Tensor token_embedding;  // [V, d_ctx]
  Tensor positional;       // [l_max, d_ctx]
  Tensor pooler_weight;    // [d_ctx, d_ctx]
  Tensor pooler_bias;      // [d_ctx]

  static TextEncoder init(Vocabulary vocab, int64_t l_max, int64_t d_ctx, Rng& rng);

  ContextEmbedding encode(const std::vector<int64_t>& ids, const std::vector<Tensor>& extra = {}) const;
  ContextEmbedding encode_prompt(const std::string& prompt, const std::vector<Tensor>& extra = {}) const;

  // Mean of all non-pad vocabulary embeddings; the neutral inversion init.
  Tensor mean_embedding() const;

  std::vector<std::pair<std::string, Tensor>> named_params() const;
};

// All positions (0-based) where `pattern` occurs contiguously in `ids`.
std::vector<int64_t> find_token_positions(const std::vector<int64_t>& ids,
                                          const std::vector<int64_t>& pattern);

std::vector<int64_t> placeholder_positions(const std::vector<int64_t>& ids, const Vocabulary& vocab);

}  // namespace resteer
