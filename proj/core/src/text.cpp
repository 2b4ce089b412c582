#include "resteer/text.hpp"

#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace resteer {

namespace {

std::vector<std::string> split_words(const std::string& text) {
  std::istringstream is(text);
  std::vector<std::string> words;
  std::string w;
  while (is >> w) words.push_back(w);
  return words;
}

}  // namespace

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.empty()) throw std::invalid_argument("vocabulary: empty token list");
  if (tokens.size() > 256) throw std::invalid_argument("vocabulary: more than 256 tokens");
  std::unordered_map<std::string, int64_t> seen;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].empty()) throw std::invalid_argument("vocabulary: empty token string");
    if (!seen.emplace(tokens[i], static_cast<int64_t>(i)).second) {
      throw std::invalid_argument("vocabulary: duplicate token '" + tokens[i] + "'");
    }
  }
  Vocabulary v;
  v.tokens = std::move(tokens);
  return v;
}

Vocabulary Vocabulary::parse_text(const std::string& newline_delimited) {
  std::vector<std::string> tokens;
  std::istringstream is(newline_delimited);
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty()) tokens.push_back(line);
  }
  return from_tokens(std::move(tokens));
}

int64_t Vocabulary::id_of(const std::string& word) const {
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == word) return static_cast<int64_t>(i);
  }
  return -1;
}

const std::string& Vocabulary::word(int64_t id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("vocabulary: id out of range");
  return tokens[static_cast<size_t>(id)];
}

bool Vocabulary::is_placeholder(int64_t id) const {
  if (id < 0 || id >= size()) return false;
  return tokens[static_cast<size_t>(id)][0] == '*';
}

std::string Vocabulary::to_text() const {
  std::string out;
  for (const std::string& t : tokens) {
    out += t;
    out += '\n';
  }
  return out;
}

std::vector<int64_t> tokenize(const std::string& prompt, const Vocabulary& vocab, int64_t l_max) {
  std::vector<int64_t> ids;
  for (const std::string& w : split_words(prompt)) {
    const int64_t id = vocab.id_of(w);
    if (id < 0) {
      if (checked_mode()) throw std::invalid_argument("tokenize: unknown word '" + w + "'");
      ids.push_back(0);
      continue;
    }
    ids.push_back(id);
  }
  if (static_cast<int64_t>(ids.size()) > l_max) ids.resize(static_cast<size_t>(l_max));
  while (static_cast<int64_t>(ids.size()) < l_max) ids.push_back(0);
  return ids;
}

TextEncoder TextEncoder::init(Vocabulary vocab, int64_t l_max, int64_t d_ctx, Rng& rng) {
  TextEncoder enc;
  enc.l_max = l_max;
  enc.d_ctx = d_ctx;
  enc.token_embedding = Tensor::randn({vocab.size(), d_ctx}, rng);
  for (double& v : enc.token_embedding.values()) v *= 0.3;
  enc.positional = Tensor::randn({l_max, d_ctx}, rng);
  for (double& v : enc.positional.values()) v *= 0.1;
  enc.pooler_weight = Tensor::randn({d_ctx, d_ctx}, rng);
  const double pool_scale = 1.0 / std::sqrt(static_cast<double>(d_ctx));
  for (double& v : enc.pooler_weight.values()) v *= pool_scale;
  enc.pooler_bias = Tensor::zeros({d_ctx});
  enc.vocab = std::move(vocab);
  return enc;
}

ContextEmbedding TextEncoder::encode(const std::vector<int64_t>& ids, const std::vector<Tensor>& extra) const {
  if (static_cast<int64_t>(ids.size()) != l_max) {
    throw std::invalid_argument("encode: ids must have length l_max=" + std::to_string(l_max));
  }
  size_t n_placeholder = 0;
  for (int64_t id : ids) {
    if (id < 0 || id >= vocab.size()) throw std::invalid_argument("encode: token id out of range");
    if (vocab.is_placeholder(id)) ++n_placeholder;
  }
  if (n_placeholder > 0 && extra.empty()) {
    throw std::invalid_argument("encode: prompt has placeholder slots but no extra embeddings given");
  }
  if (n_placeholder > extra.size() && n_placeholder > 0) {
    throw std::invalid_argument("encode: prompt needs " + std::to_string(n_placeholder) +
                                " placeholder vectors, got " + std::to_string(extra.size()));
  }

  ContextEmbedding ctx;
  ctx.token_ids = ids;
  if (n_placeholder == 0) {
    ctx.per_token = add(index_select(token_embedding, 0, ids), positional);
  } else {
    std::vector<Tensor> rows;
    rows.reserve(ids.size());
    size_t next_extra = 0;
    for (size_t i = 0; i < ids.size(); ++i) {
      if (vocab.is_placeholder(ids[i])) {
        const Tensor& v = extra[next_extra++];
        if (v.rank() != 1 || v.shape()[0] != d_ctx) {
          throw std::invalid_argument("encode: placeholder vector must have shape [d_ctx]");
        }
        rows.push_back(reshape(v, {1, d_ctx}));
      } else {
        Tensor row = add(index_select(token_embedding, 0, {ids[static_cast<size_t>(i)]}),
                         index_select(positional, 0, {static_cast<int64_t>(i)}));
        rows.push_back(row);
      }
    }
    ctx.per_token = concat(rows, 0);
  }

  std::vector<int64_t> non_pad;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] != 0) non_pad.push_back(static_cast<int64_t>(i));
  }
  Tensor mean_vec;
  if (non_pad.empty()) {
    mean_vec = Tensor::zeros({1, d_ctx});
  } else {
    mean_vec = reshape(mean_axis(index_select(ctx.per_token, 0, non_pad), 0), {1, d_ctx});
  }
  ctx.pooled = reshape(add_rows(matmul(mean_vec, pooler_weight), pooler_bias), {d_ctx});
  return ctx;
}

ContextEmbedding TextEncoder::encode_prompt(const std::string& prompt, const std::vector<Tensor>& extra) const {
  return encode(tokenize(prompt, vocab, l_max), extra);
}

Tensor TextEncoder::mean_embedding() const {
  std::vector<int64_t> non_pad;
  for (int64_t i = 1; i < vocab.size(); ++i) non_pad.push_back(i);
  return mean_axis(index_select(token_embedding, 0, non_pad), 0);
}

std::vector<std::pair<std::string, Tensor>> TextEncoder::named_params() const {
  return {{"text.token_embedding", token_embedding},
          {"text.positional", positional},
          {"text.pooler.weight", pooler_weight},
          {"text.pooler.bias", pooler_bias}};
}

std::vector<int64_t> find_token_positions(const std::vector<int64_t>& ids,
                                          const std::vector<int64_t>& pattern) {
  std::vector<int64_t> positions;
  if (pattern.empty() || pattern.size() > ids.size()) return positions;
  for (size_t i = 0; i + pattern.size() <= ids.size(); ++i) {
    bool match = true;
    for (size_t j = 0; j < pattern.size(); ++j) {
      if (ids[i + j] != pattern[j]) {
        match = false;
        break;
      }
    }
    if (match) {
      for (size_t j = 0; j < pattern.size(); ++j) positions.push_back(static_cast<int64_t>(i + j));
      i += pattern.size() - 1;
    }
  }
  return positions;
}

std::vector<int64_t> placeholder_positions(const std::vector<int64_t>& ids, const Vocabulary& vocab) {
  std::vector<int64_t> positions;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (vocab.is_placeholder(ids[i])) positions.push_back(static_cast<int64_t>(i));
  }
  return positions;
}

}  // namespace resteer
