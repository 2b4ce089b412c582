#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "resteer/concepts.hpp"
#include "resteer/diffusion.hpp"
#include "resteer/model.hpp"

namespace resteer {

struct ForgetConfig {
  ParamScope scope = ParamScope::kCaOnly;
  int64_t steps = 0;
  double lr = 0.0;
  int64_t batch = 1;  // draws per concept per step
  std::vector<ConceptSpec> concepts;
  std::vector<double> concept_weights;  // defaults to all-ones
  bool l1_loss = false;                 // L1 instead of squared attention mass

  void validate() const;
};

struct TrainLog {
  std::vector<double> loss;
  std::vector<double> target_mass;
  double wall_seconds = 0.0;
};

// Named weight deltas (after - before) over a parameter scope against a
// fingerprinted base.
struct ModelPatch {
  std::array<uint8_t, 32> base_fingerprint{};
  std::vector<std::pair<std::string, Tensor>> deltas;
  std::string metadata_json;
};

// Mean over (block, head) of the per-query squared attention mass that falls
// on the target token columns. Uniform maps give |positions| / L^2.
Tensor resteer_loss(const AttentionRecord& record, const std::vector<int64_t>& positions,
                    bool l1 = false);

// Plain probability mass on the target columns, averaged over blocks, heads
// and queries; the quantity the forgetting run drives down.
double attention_mass(const AttentionRecord& record, const std::vector<int64_t>& positions);

// Deterministic fixed-probe mass measurement for before/after comparisons.
double measure_target_mass(const Model& model, const ConceptSpec& concept, const NoiseSchedule& sched,
                           uint64_t seed, int64_t probes = 16);

// Attention resteering: minimizes the recorded cross-attention mass on the
// concept tokens and descends only on the scoped weights. The diffusion loss
// is not co-optimized.
std::pair<ModelPatch, TrainLog> forget(Model& model, const ForgetConfig& cfg, const NoiseSchedule& sched,
                                       Rng& rng);

// Token Blacklisting: zeroes the concept's embedding-table rows.
void baseline_blacklist(Model& model, const ConceptSpec& concept);

struct NaiveFinetuneConfig {
  int64_t steps = 0;
  double lr = 0.0;
  int64_t batch = 1;
};

// Naive Finetuning: remaps the concept prompt onto decoy images with the
// diffusion loss over the full denoiser scope.
TrainLog baseline_naive_finetune(Model& model, const ConceptSpec& concept,
                                 const std::vector<Tensor>& decoy_images, const NaiveFinetuneConfig& cfg,
                                 const NoiseSchedule& sched, Rng& rng);

ModelPatch make_patch(const std::vector<std::pair<std::string, Tensor>>& before,
                      const std::vector<std::pair<std::string, Tensor>>& after,
                      const std::vector<std::string>& scope_names, std::string metadata_json = "{}");

void apply_patch(Model& model, const ModelPatch& patch);

}  // namespace resteer
