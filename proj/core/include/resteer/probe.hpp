#pragma once

#include <string>
#include <vector>

#include "resteer/corpus.hpp"
#include "resteer/tensor.hpp"

namespace resteer {

struct ProbeResult {
  std::string label;
  double confidence = 0.0;  // margin between best and runner-up distance
};

// Fixed template matcher over the zero-jitter canonical renders. Model-free:
// its verdicts never move when a learned checkpoint moves. Distances are
// masked per-pixel L2 (shape support for identity/object, full canvas for
// style); confidence is the margin to the runner-up.
class ProbeClassifier {
 public:
  explicit ProbeClassifier(const Corpus& corpus);

  ProbeResult classify(const Tensor& image) const;

  // Calibrated on a held-out noise corpus at construction: noise margins sit
  // below it, genuine renders sit above it.
  double no_concept_threshold() const { return threshold_; }

  double accuracy(const std::vector<Tensor>& images, const std::string& expected) const;
  double label_share(const std::vector<Tensor>& images, const std::string& label) const;

 private:
  struct Entry {
    std::string name;
    Tensor tmpl;
    std::vector<int64_t> mask;  // flat pixel indices entering the distance
  };
  double distance(const Tensor& image, const Entry& e) const;

  std::vector<Entry> entries_;
  double threshold_ = 0.0;
};

}  // namespace resteer
