#pragma once

#include <string>
#include <vector>

#include "resteer/denoiser.hpp"
#include "resteer/inversion.hpp"

namespace resteer {

struct ScheduleConfig {
  int64_t T = 200;
  double beta_start = 1e-4;
  double beta_end = 0.02;
};

struct TrainSettings {
  int64_t steps = 3000;
  int64_t batch = 8;
  double lr = 2e-3;
};

struct ForgetSettings {
  std::string scope = "ca";
  int64_t steps = 150;
  double lr = 1.5;
  int64_t batch = 2;
};

struct NaiveSettings {
  int64_t steps = 400;
  double lr = 4e-3;
  int64_t batch = 4;
};

struct InversionSettings {
  int64_t n_tokens = 1;
  int64_t steps = 250;
  double lr = 1.0;
  std::string init = "random";
};

struct BenchmarkSettings {
  std::string method = "fmn";  // fmn | blacklist | naive
  std::vector<std::string> targets = {"zorb"};
  std::vector<std::string> controls = {"kelp", "drum", "haze"};
  int64_t metric_runs = 5;
  int64_t samples_per_concept = 64;
  std::vector<uint64_t> metric_seeds = {11, 12, 13};
  int64_t anchor_count = 8;
  std::string base_checkpoint;  // empty: train from scratch
};

struct RunConfig {
  uint64_t seed = 1234;
  ScheduleConfig schedule;
  DenoiserConfig model;
  TrainSettings train;
  int64_t sampler_steps = 50;
  ForgetSettings forget;
  NaiveSettings naive;
  InversionSettings inversion;
  BenchmarkSettings benchmark;
};

// Parses and schema-validates; errors carry line and field diagnostics.
RunConfig parse_run_config(const std::string& json_text, const std::string& origin = "config");
RunConfig parse_run_config_file(const std::string& path);

// The calibrated reference configuration shipped with the project.
std::string default_run_config_json();
RunConfig default_run_config();

InversionConfig make_inversion_config(const InversionSettings& s, uint64_t seed);

}  // namespace resteer
