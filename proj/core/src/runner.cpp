#include "resteer/runner.hpp"

#include <charconv>
#include <filesystem>
#include <iostream>

#include <json.hpp>

#include "resteer/forgetting.hpp"
#include "resteer/hashing.hpp"
#include "resteer/metrics.hpp"
#include "resteer/serialize.hpp"
#include "resteer/trainer.hpp"

namespace resteer {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::vector<Tensor> decoy_images(const Corpus& corpus, const std::string& target, int64_t count,
                                 uint64_t seed) {
  std::vector<const BenchConcept*> others;
  for (const BenchConcept& c : corpus.concepts) {
    if (c.name != target) others.push_back(&c);
  }
  std::vector<Tensor> out;
  Rng rng = Rng(seed, streams::kCorpus).child(0xDEC0);
  for (int64_t i = 0; i < count; ++i) {
    out.push_back(render(*others[static_cast<size_t>(i) % others.size()], rng.next_u64()));
  }
  return out;
}

nlohmann::json memorization_to_json(const MemorizationReport& r) {
  return nlohmann::json{{"concept", r.concept},
                        {"runs", r.runs},
                        {"initial_runs", r.initial_runs},
                        {"forgetting_runs", r.forgetting_runs},
                        {"diverged_runs", r.diverged_runs},
                        {"initial_mean", r.initial_mean},
                        {"forgetting_mean", r.forgetting_mean},
                        {"noise_band", r.noise_band},
                        {"delta", r.delta()}};
}

}  // namespace

void run_benchmark(const RunConfig& cfg, const std::string& out_dir) {
  const Corpus corpus = Corpus::concept_bench_mini();
  for (const std::string& name : cfg.benchmark.targets) corpus.concept(name);
  for (const std::string& name : cfg.benchmark.controls) corpus.concept(name);

  fs::create_directories(out_dir);
  fs::create_directories(out_dir + "/samples");
  fs::create_directories(out_dir + "/patches");

  const NoiseSchedule sched = make_schedule(cfg.schedule.T, cfg.schedule.beta_start, cfg.schedule.beta_end);
  const ProbeClassifier probe(corpus);

  Model model;
  if (!cfg.benchmark.base_checkpoint.empty()) {
    model = load_checkpoint(cfg.benchmark.base_checkpoint);
  } else {
    model = Model::init(cfg.model, corpus.vocab, cfg.seed);
    std::cerr << "bench: training base model (" << cfg.train.steps << " steps)\n";
    train_base_model(model, corpus, sched, cfg.train, cfg.seed);
    save_checkpoint(out_dir + "/model.ckpt", model);
  }
  const Model original = model.clone();

  std::vector<ConceptSpec> target_specs;
  for (const std::string& name : cfg.benchmark.targets) {
    target_specs.push_back(corpus.spec_for(name, cfg.benchmark.anchor_count, cfg.seed));
  }

  if (cfg.benchmark.method == "fmn") {
    ForgetConfig fc;
    fc.scope = scope_from_name(cfg.forget.scope);
    fc.steps = cfg.forget.steps;
    fc.lr = cfg.forget.lr;
    fc.batch = cfg.forget.batch;
    fc.concepts = target_specs;
    Rng rng(cfg.seed, streams::kForget);
    auto [patch, log] = forget(model, fc, sched, rng);
    std::string patch_name = out_dir + "/patches/";
    for (size_t i = 0; i < cfg.benchmark.targets.size(); ++i) {
      patch_name += (i ? "+" : "") + cfg.benchmark.targets[i];
    }
    save_patch(patch_name + ".rpch", patch);
  } else if (cfg.benchmark.method == "blacklist") {
    for (const ConceptSpec& spec : target_specs) baseline_blacklist(model, spec);
  } else {
    NaiveFinetuneConfig nc{cfg.naive.steps, cfg.naive.lr, cfg.naive.batch};
    Rng rng(cfg.seed, streams::kForget);
    for (const ConceptSpec& spec : target_specs) {
      baseline_naive_finetune(model, spec, decoy_images(corpus, spec.name, 16, cfg.seed), nc, sched, rng);
    }
  }

  nlohmann::json report;
  report["schema_version"] = 1;
  report["method"] = cfg.benchmark.method;
  report["seed"] = cfg.seed;

  std::string memorization_csv = "concept,run,initial,forgetting\n";
  std::string integrity_csv = "control,probe_before,probe_after,l2_drift,mass_ratio\n";
  std::string summary_csv = "section,key,value\n";

  const uint64_t sample_seed = cfg.benchmark.metric_seeds.empty() ? 1 : cfg.benchmark.metric_seeds[0];
  nlohmann::json targets_json = nlohmann::json::array();
  for (const ConceptSpec& spec : target_specs) {
    const std::string prompt = spec.prompt_for_template(0, corpus.vocab);
    const double mass_before = measure_target_mass(original, spec, sched, sample_seed);
    const double mass_after = measure_target_mass(model, spec, sched, sample_seed);

    std::vector<Tensor> before = sample_batch(original, prompt, sched, cfg.sampler_steps, sample_seed,
                                              cfg.benchmark.samples_per_concept);
    std::vector<Tensor> after = sample_batch(model, prompt, sched, cfg.sampler_steps, sample_seed,
                                             cfg.benchmark.samples_per_concept);
    const double probe_before = probe.accuracy(before, spec.name);
    const double probe_after = probe.accuracy(after, spec.name);

    const int64_t grid_n = std::min<int64_t>(16, cfg.benchmark.samples_per_concept);
    write_ppm(out_dir + "/samples/" + spec.name + "_before.ppm",
              mosaic({before.begin(), before.begin() + grid_n}, 4));
    write_ppm(out_dir + "/samples/" + spec.name + "_after.ppm",
              mosaic({after.begin(), after.begin() + grid_n}, 4));

    MemorizationSetup setup;
    setup.inversion = make_inversion_config(cfg.inversion, cfg.seed);
    const MemorizationReport mem =
        memorization_delta(original, model, spec, cfg.benchmark.metric_runs, setup, sched);
    for (size_t r = 0; r < mem.initial_runs.size(); ++r) {
      memorization_csv += spec.name + "," + std::to_string(r) + "," + fmt(mem.initial_runs[r]) + "," +
                          fmt(mem.forgetting_runs[r]) + "\n";
    }

    summary_csv += "target," + spec.name + "_mass_before," + fmt(mass_before) + "\n";
    summary_csv += "target," + spec.name + "_mass_after," + fmt(mass_after) + "\n";
    summary_csv += "target," + spec.name + "_probe_before," + fmt(probe_before) + "\n";
    summary_csv += "target," + spec.name + "_probe_after," + fmt(probe_after) + "\n";

    targets_json.push_back(nlohmann::json{{"concept", spec.name},
                                          {"prompt", prompt},
                                          {"attention_mass_before", mass_before},
                                          {"attention_mass_after", mass_after},
                                          {"probe_before", probe_before},
                                          {"probe_after", probe_after},
                                          {"memorization", memorization_to_json(mem)}});
  }
  report["targets"] = targets_json;

  std::vector<ConceptSpec> control_specs;
  for (const std::string& name : cfg.benchmark.controls) {
    control_specs.push_back(corpus.spec_for(name, cfg.benchmark.anchor_count, cfg.seed));
  }
  const IntegrityReport integrity =
      integrity_drift(original, model, control_specs, cfg.benchmark.metric_seeds, probe, sched,
                      cfg.sampler_steps, std::max<int64_t>(1, cfg.benchmark.samples_per_concept / 8));
  nlohmann::json controls_json = nlohmann::json::array();
  for (const IntegrityControl& row : integrity.controls) {
    integrity_csv += row.concept + "," + fmt(row.probe_before) + "," + fmt(row.probe_after) + "," +
                     fmt(row.l2_drift) + "," + fmt(row.mass_ratio) + "\n";
    controls_json.push_back(nlohmann::json{{"concept", row.concept},
                                           {"probe_before", row.probe_before},
                                           {"probe_after", row.probe_after},
                                           {"l2_drift", row.l2_drift},
                                           {"mass_ratio", row.mass_ratio}});
  }
  report["integrity"] = controls_json;

  write_text_file(out_dir + "/report.json", report.dump(2) + "\n");
  write_text_file(out_dir + "/memorization.csv", memorization_csv);
  write_text_file(out_dir + "/integrity.csv", integrity_csv);
  write_text_file(out_dir + "/summary.csv", summary_csv);
}

}  // namespace resteer
