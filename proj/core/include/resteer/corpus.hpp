#pragma once

#include <array>
#include <string>
#include <vector>

#include "resteer/concepts.hpp"
#include "resteer/tensor.hpp"
#include "resteer/text.hpp"

namespace resteer {

// Procedural concept: a shape/color/texture recipe plus seed-driven nuisance
// jitter. Identity fixes (shape, color); object fixes shape and varies color
// inside a palette family; style fixes texture/palette and varies the shape.
struct BenchConcept {
  std::string name;
  ConceptCategory category = ConceptCategory::kObject;
  int shape_id = 0;    // 0 circle, 1 square, 2 triangle, 3 diamond, 4 cross, 5 ring
  std::array<double, 3> fill{0, 0, 0};
  int texture_id = 0;  // 0 solid, 1 horizontal stripes, 2 checker
  int palette_id = 0;  // 0 fixed fill, 1 warm, 2 cool, 3 haze, 4 grid
};

constexpr int64_t kImageSide = 16;
constexpr int64_t kImageChannels = 3;

Tensor render(const BenchConcept& concept, uint64_t seed);
Tensor render_canonical(const BenchConcept& concept);  // zero jitter

// The 8-concept training corpus plus a 9:1 dominance prompt used by the
// concept-correction scenario.
struct Corpus {
  std::vector<BenchConcept> concepts;
  Vocabulary vocab;
  std::vector<std::string> templates;
  std::string dominant_word;
  std::string dominant_concept;
  std::string minority_concept;
  double dominant_ratio = 0.9;

  static Corpus concept_bench_mini();

  const BenchConcept& concept(const std::string& name) const;
  std::vector<std::string> concept_names() const;

  // One training example: a rendered image and its prompt.
  std::pair<Tensor, std::string> draw_example(Rng& rng) const;

  // Concept spec with freshly rendered reference images.
  ConceptSpec spec_for(const std::string& name, int64_t n_references, uint64_t seed) const;
};

}  // namespace resteer
