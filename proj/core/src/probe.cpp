#include "resteer/probe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace resteer {

ProbeClassifier::ProbeClassifier(const Corpus& corpus) {
  for (const BenchConcept& c : corpus.concepts) {
    Entry e;
    e.name = c.name;
    e.tmpl = render_canonical(c);
    const int64_t pixels = kImageSide * kImageSide;
    if (c.category == ConceptCategory::kStyle) {
      for (int64_t p = 0; p < pixels; ++p) e.mask.push_back(p);
    } else {
      // shape support: pixels that differ from the canonical background
      const auto& v = e.tmpl.values();
      for (int64_t p = 0; p < pixels; ++p) {
        const size_t base = static_cast<size_t>(p * kImageChannels);
        if (std::abs(v[base] + 0.8) > 1e-9 || std::abs(v[base + 1] + 0.8) > 1e-9 ||
            std::abs(v[base + 2] + 0.8) > 1e-9) {
          e.mask.push_back(p);
        }
      }
    }
    if (e.mask.empty()) throw std::logic_error("probe: concept '" + c.name + "' has empty mask");
    entries_.push_back(std::move(e));
  }

  // no-concept threshold: twice the largest margin seen on a fixed noise set
  Rng rng(0x70B3, streams::kMetrics);
  double worst = 0.0;
  for (int i = 0; i < 256; ++i) {
    Tensor noise = Tensor::zeros({kImageSide, kImageSide, kImageChannels});
    for (double& v : noise.values()) v = std::clamp(rng.normal() * 0.5, -1.0, 1.0);
    worst = std::max(worst, classify(noise).confidence);
  }
  threshold_ = 2.0 * worst;
}

double ProbeClassifier::distance(const Tensor& image, const Entry& e) const {
  const auto& iv = image.values();
  const auto& tv = e.tmpl.values();
  double total = 0.0;
  for (int64_t p : e.mask) {
    const size_t base = static_cast<size_t>(p * kImageChannels);
    for (int ch = 0; ch < 3; ++ch) {
      const double d = iv[base + ch] - tv[base + ch];
      total += d * d;
    }
  }
  return total / static_cast<double>(e.mask.size());
}

ProbeResult ProbeClassifier::classify(const Tensor& image) const {
  if (image.shape() != Shape{kImageSide, kImageSide, kImageChannels}) {
    throw std::invalid_argument("probe: image shape mismatch");
  }
  double best = std::numeric_limits<double>::infinity();
  double second = std::numeric_limits<double>::infinity();
  size_t best_ix = 0;
  for (size_t i = 0; i < entries_.size(); ++i) {
    const double d = distance(image, entries_[i]);
    if (d < best) {
      second = best;
      best = d;
      best_ix = i;
    } else if (d < second) {
      second = d;
    }
  }
  return {entries_[best_ix].name, second - best};
}

double ProbeClassifier::accuracy(const std::vector<Tensor>& images, const std::string& expected) const {
  if (images.empty()) return 0.0;
  int64_t hits = 0;
  for (const Tensor& img : images) {
    if (classify(img).label == expected) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(images.size());
}

double ProbeClassifier::label_share(const std::vector<Tensor>& images, const std::string& label) const {
  return accuracy(images, label);
}

}  // namespace resteer
