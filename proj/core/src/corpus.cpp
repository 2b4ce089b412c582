#include "resteer/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "resteer/hashing.hpp"

namespace resteer {

namespace {

struct Jitter {
  double dx = 0, dy = 0;        // position, whole pixels in {-1, 0, 1}
  double radius = 4.5;          // scale
  double bg = -0.8;             // background / brightness shade
  double color_u = 0.5;         // palette coordinate for object concepts
  int style_shape = -1;         // -1 keeps the canonical shape
};

Jitter draw_jitter(const BenchConcept& c, Rng& rng) {
  Jitter j;
  j.dx = static_cast<double>(rng.uniform_index(3) - 1);
  j.dy = static_cast<double>(rng.uniform_index(3) - 1);
  j.radius = 4.5 + 0.8 * (rng.uniform() - 0.5);
  j.bg = -0.8 + 0.3 * (rng.uniform() - 0.5);
  j.color_u = rng.uniform();
  if (c.category == ConceptCategory::kStyle) j.style_shape = static_cast<int>(rng.uniform_index(3));
  return j;
}

std::array<double, 3> palette_color(int palette_id, double u, const std::array<double, 3>& fixed) {
  switch (palette_id) {
    case 1: return {1.0, -0.2 + 0.8 * u, -0.8};   // warm: orange..yellow
    case 2: return {-1.0, 0.2 + 0.6 * u, 0.8};    // cool: teal..sky
    default: return fixed;
  }
}

bool inside_shape(int shape_id, double dr, double dc, double r) {
  switch (shape_id) {
    case 0: return dr * dr + dc * dc <= r * r;                                  // circle
    case 1: return std::abs(dr) <= r - 0.5 && std::abs(dc) <= r - 0.5;          // square
    case 2: return dr >= -r && dr <= r && std::abs(dc) <= (dr + r) * 0.55;      // triangle, apex up
    case 3: return std::abs(dr) + std::abs(dc) <= r;                            // diamond
    case 4: return (std::abs(dr) <= 1.4 || std::abs(dc) <= 1.4) &&              // cross
                   std::abs(dr) <= r && std::abs(dc) <= r;
    case 5: {                                                                   // ring
      const double d2 = dr * dr + dc * dc;
      return d2 <= r * r && d2 >= (r - 2.2) * (r - 2.2);
    }
    default: throw std::invalid_argument("render: unknown shape id");
  }
}

Tensor render_with_jitter(const BenchConcept& c, const Jitter& j) {
  Tensor img = Tensor::zeros({kImageSide, kImageSide, kImageChannels});
  auto& v = img.values();
  const double cy = 7.5 + j.dy;
  const double cx = 7.5 + j.dx;

  auto put = [&](int64_t row, int64_t col, const std::array<double, 3>& color) {
    const size_t base = static_cast<size_t>((row * kImageSide + col) * kImageChannels);
    for (int ch = 0; ch < 3; ++ch) v[base + ch] = std::clamp(color[static_cast<size_t>(ch)], -1.0, 1.0);
  };

  const bool is_style = c.category == ConceptCategory::kStyle;
  const int shape = (is_style && j.style_shape >= 0) ? j.style_shape : c.shape_id;
  const double shade = is_style ? (j.bg + 0.8) * 0.35 : 0.0;  // style reuses bg jitter as brightness

  std::array<double, 3> fill = c.fill;
  if (c.category == ConceptCategory::kObject) fill = palette_color(c.palette_id, j.color_u, c.fill);

  for (int64_t row = 0; row < kImageSide; ++row) {
    for (int64_t col = 0; col < kImageSide; ++col) {
      std::array<double, 3> color{j.bg, j.bg, j.bg};
      if (is_style) {
        // texture covers the whole canvas
        bool alt = false;
        if (c.texture_id == 1) alt = (row % 2) == 1;
        if (c.texture_id == 2) alt = ((row / 2 + col / 2) % 2) == 1;
        if (c.palette_id == 3) {
          color = alt ? std::array<double, 3>{0.9, 0.85, 0.7} : std::array<double, 3>{0.6, -0.6, 0.8};
        } else {
          color = alt ? std::array<double, 3>{0.45, 0.45, 0.45} : std::array<double, 3>{-0.55, -0.55, -0.55};
        }
        for (double& ch : color) ch += shade;
      }
      if (inside_shape(shape, static_cast<double>(row) - cy, static_cast<double>(col) - cx, j.radius)) {
        color = is_style ? (c.palette_id == 3 ? std::array<double, 3>{-0.7, -0.7, -0.2}
                                              : std::array<double, 3>{0.9, 0.4, -0.9})
                         : fill;
      }
      put(row, col, color);
    }
  }
  return img;
}

}  // namespace

Tensor render(const BenchConcept& concept, uint64_t seed) {
  Rng rng = Rng(seed, streams::kCorpus).child(name_key(concept.name));
  return render_with_jitter(concept, draw_jitter(concept, rng));
}

Tensor render_canonical(const BenchConcept& concept) {
  return render_with_jitter(concept, Jitter{});
}

Corpus Corpus::concept_bench_mini() {
  Corpus c;
  c.concepts = {
      {"zorb", ConceptCategory::kIdentity, 0, {1.0, -0.9, -0.9}, 0, 0},
      {"kelp", ConceptCategory::kIdentity, 1, {-0.9, 0.9, -0.8}, 0, 0},
      {"vint", ConceptCategory::kIdentity, 2, {-0.9, -0.8, 1.0}, 0, 0},
      {"pyre", ConceptCategory::kIdentity, 5, {0.9, -0.9, 0.9}, 0, 0},
      {"drum", ConceptCategory::kObject, 3, {1.0, 0.2, -0.8}, 0, 1},
      {"fern", ConceptCategory::kObject, 4, {-1.0, 0.5, 0.8}, 0, 2},
      {"haze", ConceptCategory::kStyle, 0, {-0.7, -0.7, -0.2}, 1, 3},
      {"grid", ConceptCategory::kStyle, 1, {0.9, 0.4, -0.9}, 2, 4},
  };
  c.vocab = Vocabulary::from_tokens({"<pad>", "a", "photo", "of", "an", "image", "small", "in",
                                     "frame", "the", "relic", "zorb", "kelp", "vint", "pyre", "drum",
                                     "fern", "haze", "grid", "*0", "*1", "*2", "*3"});
  c.templates = {"a photo of {}", "an image of {}", "a small {}"};
  c.dominant_word = "relic";
  c.dominant_concept = "zorb";
  c.minority_concept = "kelp";
  c.dominant_ratio = 0.9;
  return c;
}

const BenchConcept& Corpus::concept(const std::string& name) const {
  for (const BenchConcept& b : concepts) {
    if (b.name == name) return b;
  }
  throw std::invalid_argument("corpus: no concept named '" + name + "'");
}

std::vector<std::string> Corpus::concept_names() const {
  std::vector<std::string> names;
  for (const BenchConcept& b : concepts) names.push_back(b.name);
  return names;
}

std::pair<Tensor, std::string> Corpus::draw_example(Rng& rng) const {
  const int64_t n = static_cast<int64_t>(concepts.size());
  const int64_t pick = rng.uniform_index(n + 1);
  const uint64_t render_seed = rng.next_u64();
  const size_t tpl = static_cast<size_t>(rng.uniform_index(static_cast<int64_t>(templates.size())));
  if (pick == n) {
    // dominance prompt: one shared word rendered 9:1 from two concepts
    const bool majority = rng.uniform() < dominant_ratio;
    const BenchConcept& b = concept(majority ? dominant_concept : minority_concept);
    return {render(b, render_seed), instantiate_template(templates[tpl], {dominant_word})};
  }
  const BenchConcept& b = concepts[static_cast<size_t>(pick)];
  return {render(b, render_seed), instantiate_template(templates[tpl], {b.name})};
}

ConceptSpec Corpus::spec_for(const std::string& name, int64_t n_references, uint64_t seed) const {
  const BenchConcept& b = concept(name);
  ConceptSpec spec;
  spec.name = b.name;
  spec.category = b.category;
  spec.prompt_words = {b.name};
  spec.templates = templates;
  Rng rng = Rng(seed, streams::kCorpus).child(name_key(name) ^ 0x5EFull);
  for (int64_t i = 0; i < n_references; ++i) spec.reference_images.push_back(render(b, rng.next_u64()));
  return spec;
}

}  // namespace resteer
