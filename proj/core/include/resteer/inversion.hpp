#pragma once

#include <string>
#include <vector>

#include "resteer/diffusion.hpp"
#include "resteer/model.hpp"

namespace resteer {

struct InversionConfig {
  enum class Init { kMeanEmbedding, kRandom };

  int64_t n_tokens = 1;
  int64_t steps = 0;
  double lr = 0.0;
  Init init = Init::kMeanEmbedding;
  uint64_t seed = 0;

  void validate() const;
};

std::string init_name(InversionConfig::Init init);
InversionConfig::Init init_from_name(const std::string& name);

struct InversionResult {
  std::vector<Tensor> embeddings;  // n_tokens vectors of [d_ctx]
  std::vector<double> loss_trace;
};

// Textual-inversion against a frozen model: descends the diffusion loss on
// placeholder vectors only. `tmpl` carries a "{}" slot that is filled with
// the registered placeholder tokens *0..*{n-1}.
InversionResult invert(const Model& model, const std::vector<Tensor>& images, const std::string& tmpl,
                       const InversionConfig& cfg, const NoiseSchedule& sched);

// Runs invert and returns the pooled embedding of the template with the
// inverted tokens in place: the Memorization Score measurement input.
Tensor invert_for_score(const Model& model, const std::vector<Tensor>& images, const std::string& tmpl,
                        const InversionConfig& cfg, const NoiseSchedule& sched);

}  // namespace resteer
