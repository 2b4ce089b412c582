#include "resteer/concepts.hpp"

#include <algorithm>
#include <stdexcept>

namespace resteer {

std::string category_name(ConceptCategory c) {
  switch (c) {
    case ConceptCategory::kIdentity: return "identity";
    case ConceptCategory::kObject: return "object";
    case ConceptCategory::kStyle: return "style";
  }
  return "object";
}

ConceptCategory category_from_name(const std::string& name) {
  if (name == "identity") return ConceptCategory::kIdentity;
  if (name == "object") return ConceptCategory::kObject;
  if (name == "style") return ConceptCategory::kStyle;
  throw std::invalid_argument("concept: unknown category '" + name + "'");
}

bool ConceptSpec::inverted_route() const {
  if (!inverted_embeddings.empty() && prompt_words.empty()) return true;
  if (ablation_compare) return use_inverted;
  return false;
}

void ConceptSpec::validate() const {
  if (name.empty()) throw std::invalid_argument("concept: empty name");
  const bool has_prompt = !prompt_words.empty();
  const bool has_inverted = !inverted_embeddings.empty();
  if (!has_prompt && !has_inverted) {
    throw std::invalid_argument("concept '" + name + "': needs prompt words or inverted embeddings");
  }
  if (has_prompt && has_inverted && !ablation_compare) {
    throw std::invalid_argument("concept '" + name +
                                "': both prompt words and inverted embeddings present without ablation mode");
  }
  if (templates.empty()) throw std::invalid_argument("concept '" + name + "': needs at least one template");
  for (const std::string& t : templates) {
    if (t.find("{}") == std::string::npos) {
      throw std::invalid_argument("concept '" + name + "': template '" + t + "' has no {} slot");
    }
  }
}

std::vector<std::string> ConceptSpec::slot_words(const Vocabulary& vocab) const {
  if (!inverted_route()) return prompt_words;
  std::vector<std::string> words;
  for (size_t i = 0; i < inverted_embeddings.size(); ++i) {
    const std::string w = "*" + std::to_string(i);
    if (vocab.id_of(w) < 0) {
      throw std::invalid_argument("concept '" + name + "': vocabulary has no placeholder token '" + w + "'");
    }
    words.push_back(w);
  }
  return words;
}

std::vector<Tensor> ConceptSpec::extra_embeddings() const {
  return inverted_route() ? inverted_embeddings : std::vector<Tensor>{};
}

std::string ConceptSpec::prompt_for_template(size_t template_index, const Vocabulary& vocab) const {
  if (template_index >= templates.size()) throw std::out_of_range("concept: template index out of range");
  return instantiate_template(templates[template_index], slot_words(vocab));
}

std::string instantiate_template(const std::string& tmpl, const std::vector<std::string>& words) {
  const size_t slot = tmpl.find("{}");
  if (slot == std::string::npos) throw std::invalid_argument("template '" + tmpl + "' has no {} slot");
  std::string joined;
  for (size_t i = 0; i < words.size(); ++i) {
    if (i) joined += ' ';
    joined += words[i];
  }
  std::string out = tmpl;
  out.replace(slot, 2, joined);
  return out;
}

std::vector<int64_t> target_positions(const std::vector<int64_t>& ids, const ConceptSpec& concept,
                                      const Vocabulary& vocab) {
  concept.validate();
  std::vector<int64_t> positions;
  if (concept.inverted_route()) {
    positions = placeholder_positions(ids, vocab);
  } else {
    std::vector<int64_t> pattern;
    for (const std::string& w : concept.prompt_words) {
      const int64_t id = vocab.id_of(w);
      if (id < 0) throw std::invalid_argument("concept '" + concept.name + "': word '" + w + "' not in vocabulary");
      pattern.push_back(id);
    }
    positions = find_token_positions(ids, pattern);
  }
  if (positions.empty()) {
    throw std::invalid_argument("concept '" + concept.name + "' does not occur in the prompt");
  }
  return positions;
}

std::vector<int64_t> target_positions(const std::vector<int64_t>& ids,
                                      const std::vector<ConceptSpec>& concepts, const Vocabulary& vocab) {
  std::vector<int64_t> all;
  for (const ConceptSpec& c : concepts) {
    std::vector<int64_t> p = target_positions(ids, c, vocab);
    all.insert(all.end(), p.begin(), p.end());
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return all;
}

}  // namespace resteer
