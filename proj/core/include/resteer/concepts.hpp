#pragma once

#include <string>
#include <vector>

#include "resteer/tensor.hpp"
#include "resteer/text.hpp"

namespace resteer {

enum class ConceptCategory { kIdentity, kObject, kStyle };

std::string category_name(ConceptCategory c);
ConceptCategory category_from_name(const std::string& name);

// A named concept to forget: either prompt words or inverted placeholder
// embeddings locate it in the context; both only in ablation mode.
struct ConceptSpec {
  std::string name;
  ConceptCategory category = ConceptCategory::kObject;
  std::vector<std::string> prompt_words;
  std::vector<Tensor> inverted_embeddings;  // d_ctx vectors
  std::vector<Tensor> reference_images;     // >= 1, real or generated
  std::vector<std::string> templates;       // each contains the "{}" slot
  bool ablation_compare = false;            // both routes present intentionally
  bool use_inverted = false;                // route choice when both present

  bool inverted_route() const;
  void validate() const;

  // Words that fill the template slot: prompt words, or registered
  // placeholder tokens when the inverted route is active.
  std::vector<std::string> slot_words(const Vocabulary& vocab) const;
  std::string prompt_for_template(size_t template_index, const Vocabulary& vocab) const;
  std::vector<Tensor> extra_embeddings() const;  // inversion vectors for encode()
};

std::string instantiate_template(const std::string& tmpl, const std::vector<std::string>& words);

// 0-based positions of the concept's tokens (or placeholders) in `ids`.
// Throws when the concept does not occur.
std::vector<int64_t> target_positions(const std::vector<int64_t>& ids, const ConceptSpec& concept,
                                      const Vocabulary& vocab);

// Union over several concepts.
std::vector<int64_t> target_positions(const std::vector<int64_t>& ids,
                                      const std::vector<ConceptSpec>& concepts, const Vocabulary& vocab);

}  // namespace resteer
