#pragma once

#include <string>
#include <vector>

#include "resteer/concepts.hpp"
#include "resteer/diffusion.hpp"
#include "resteer/inversion.hpp"
#include "resteer/model.hpp"
#include "resteer/probe.hpp"

namespace resteer {

// Cosine similarity between two pooled embeddings.
double memorization_score(const Tensor& emb_r, const Tensor& emb_x);

struct MemorizationReport {
  std::string concept;
  int64_t runs = 0;
  std::vector<double> initial_runs;
  std::vector<double> forgetting_runs;
  std::vector<int64_t> diverged_runs;  // excluded run indices, reported explicitly
  double initial_mean = 0.0;
  double forgetting_mean = 0.0;
  double noise_band = 0.0;  // max min-to-max spread across the two run sets

  double delta() const { return initial_mean - forgetting_mean; }
};

struct MemorizationSetup {
  std::string reference_prompt;    // empty: first template with the concept words
  std::string inversion_template;  // empty: concept's first template
  std::vector<Tensor> anchors;     // empty: concept reference images
  InversionConfig inversion;       // run i uses a seed derived from (seed, i)
};

// Five-run protocol: invert the same anchors against both models with
// run-indexed seeds and compare cos(emb_r, emb_o) to cos(emb_r, emb_f).
MemorizationReport memorization_delta(const Model& original, const Model& forgotten,
                                      const ConceptSpec& concept, int64_t runs,
                                      const MemorizationSetup& setup, const NoiseSchedule& sched);

struct IntegrityControl {
  std::string concept;
  double probe_before = 0.0;
  double probe_after = 0.0;
  double l2_drift = 0.0;    // RMS pixel distance between fixed-seed pairs
  double mass_ratio = 0.0;  // control-token attention mass after / before
};

struct IntegrityReport {
  std::vector<IntegrityControl> controls;
};

IntegrityReport integrity_drift(const Model& original, const Model& forgotten,
                                const std::vector<ConceptSpec>& controls,
                                const std::vector<uint64_t>& seeds, const ProbeClassifier& probe,
                                const NoiseSchedule& sched, int64_t sampler_steps,
                                int64_t samples_per_seed);

// RMS distance between two images of equal shape.
double image_rms_distance(const Tensor& a, const Tensor& b);

uint64_t derive_seed(uint64_t base, uint64_t index);

// Fixed-seed samples for a prompt; parallelized over images.
std::vector<Tensor> sample_batch(const Model& model, const std::string& prompt, const NoiseSchedule& sched,
                                 int64_t sampler_steps, uint64_t seed, int64_t count,
                                 const std::vector<Tensor>& extra = {});

}  // namespace resteer
