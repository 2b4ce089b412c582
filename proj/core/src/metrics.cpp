#include "resteer/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "resteer/forgetting.hpp"
#include "resteer/hashing.hpp"
#include "resteer/threads.hpp"

namespace resteer {

double memorization_score(const Tensor& emb_r, const Tensor& emb_x) {
  if (emb_r.shape() != emb_x.shape() || emb_r.rank() != 1) {
    throw std::invalid_argument("memorization_score: embeddings must be rank-1 of equal extent");
  }
  const auto& a = emb_r.values();
  const auto& b = emb_x.values();
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw std::invalid_argument("memorization_score: zero-norm embedding");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

uint64_t derive_seed(uint64_t base, uint64_t index) {
  return Rng(base, streams::kMetrics).child(index).next_u64();
}

double image_rms_distance(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw std::invalid_argument("image_rms_distance: shape mismatch");
  const auto& av = a.values();
  const auto& bv = b.values();
  double total = 0.0;
  for (size_t i = 0; i < av.size(); ++i) {
    const double d = av[i] - bv[i];
    total += d * d;
  }
  return std::sqrt(total / static_cast<double>(av.size()));
}

std::vector<Tensor> sample_batch(const Model& model, const std::string& prompt, const NoiseSchedule& sched,
                                 int64_t sampler_steps, uint64_t seed, int64_t count,
                                 const std::vector<Tensor>& extra) {
  std::vector<Tensor> out(static_cast<size_t>(count));
  const ContextEmbedding ctx = model.text.encode_prompt(prompt, extra);
  parallel_for(count, [&](int64_t i) {
    SamplerConfig scfg{sampler_steps, derive_seed(seed, static_cast<uint64_t>(i))};
    out[static_cast<size_t>(i)] = model.sample(ctx, sched, scfg);
  });
  return out;
}

MemorizationReport memorization_delta(const Model& original, const Model& forgotten,
                                      const ConceptSpec& concept, int64_t runs,
                                      const MemorizationSetup& setup, const NoiseSchedule& sched) {
  if (runs < 1) throw std::invalid_argument("memorization_delta: runs must be >= 1");
  concept.validate();
  if (original.text.vocab.tokens != forgotten.text.vocab.tokens) {
    throw std::invalid_argument("memorization_delta: models do not share a vocabulary");
  }

  const std::string reference_prompt =
      setup.reference_prompt.empty()
          ? instantiate_template(concept.templates.at(0), concept.prompt_words)
          : setup.reference_prompt;
  const std::string tmpl =
      setup.inversion_template.empty() ? concept.templates.at(0) : setup.inversion_template;
  const std::vector<Tensor>& anchors =
      setup.anchors.empty() ? concept.reference_images : setup.anchors;
  if (anchors.empty()) throw std::invalid_argument("memorization_delta: no anchor images");

  // Reference embedding always comes from the original text encoder.
  const Tensor emb_r = original.text.encode_prompt(reference_prompt).pooled.clone();

  MemorizationReport report;
  report.concept = concept.name;
  report.runs = runs;

  struct RunOutcome {
    double initial = 0.0, forgetting = 0.0;
    bool diverged = false;
  };
  std::vector<RunOutcome> outcomes(static_cast<size_t>(runs));
  parallel_for(runs, [&](int64_t i) {
    InversionConfig icfg = setup.inversion;
    icfg.seed = derive_seed(setup.inversion.seed, static_cast<uint64_t>(i));
    // Each run inverts against private clones; invert() flips requires_grad
    // flags for its frozen-weights guard, which must not be shared.
    const Model own_original = original.clone();
    const Model own_forgotten = forgotten.clone();
    try {
      const Tensor emb_o = invert_for_score(own_original, anchors, tmpl, icfg, sched);
      const Tensor emb_f = invert_for_score(own_forgotten, anchors, tmpl, icfg, sched);
      outcomes[static_cast<size_t>(i)].initial = memorization_score(emb_r, emb_o);
      outcomes[static_cast<size_t>(i)].forgetting = memorization_score(emb_r, emb_f);
    } catch (const std::runtime_error&) {
      outcomes[static_cast<size_t>(i)].diverged = true;
    }
  });

  for (int64_t i = 0; i < runs; ++i) {
    const RunOutcome& o = outcomes[static_cast<size_t>(i)];
    if (o.diverged) {
      report.diverged_runs.push_back(i);
      continue;
    }
    report.initial_runs.push_back(o.initial);
    report.forgetting_runs.push_back(o.forgetting);
  }
  if (report.initial_runs.empty()) {
    throw std::runtime_error("memorization_delta: every inversion run diverged");
  }

  auto mean_of = [](const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
  };
  auto spread_of = [](const std::vector<double>& xs) {
    const auto [mn, mx] = std::minmax_element(xs.begin(), xs.end());
    return *mx - *mn;
  };
  report.initial_mean = mean_of(report.initial_runs);
  report.forgetting_mean = mean_of(report.forgetting_runs);
  report.noise_band = std::max(spread_of(report.initial_runs), spread_of(report.forgetting_runs));
  return report;
}

IntegrityReport integrity_drift(const Model& original, const Model& forgotten,
                                const std::vector<ConceptSpec>& controls,
                                const std::vector<uint64_t>& seeds, const ProbeClassifier& probe,
                                const NoiseSchedule& sched, int64_t sampler_steps,
                                int64_t samples_per_seed) {
  if (seeds.empty()) throw std::invalid_argument("integrity_drift: needs at least one seed");
  IntegrityReport report;
  for (const ConceptSpec& control : controls) {
    control.validate();
    const std::string prompt = control.prompt_for_template(0, original.text.vocab);
    std::vector<Tensor> before_images, after_images;
    double drift = 0.0;
    int64_t pairs = 0;
    for (uint64_t seed : seeds) {
      std::vector<Tensor> b = sample_batch(original, prompt, sched, sampler_steps, seed, samples_per_seed);
      std::vector<Tensor> a = sample_batch(forgotten, prompt, sched, sampler_steps, seed, samples_per_seed);
      for (size_t i = 0; i < b.size(); ++i) {
        drift += image_rms_distance(b[i], a[i]);
        ++pairs;
      }
      before_images.insert(before_images.end(), b.begin(), b.end());
      after_images.insert(after_images.end(), a.begin(), a.end());
    }
    IntegrityControl row;
    row.concept = control.name;
    row.probe_before = probe.accuracy(before_images, control.name);
    row.probe_after = probe.accuracy(after_images, control.name);
    row.l2_drift = drift / static_cast<double>(pairs);
    const double mass_before = measure_target_mass(original, control, sched, seeds[0]);
    const double mass_after = measure_target_mass(forgotten, control, sched, seeds[0]);
    row.mass_ratio = mass_before == 0.0 ? 1.0 : mass_after / mass_before;
    report.controls.push_back(std::move(row));
  }
  return report;
}

}  // namespace resteer
