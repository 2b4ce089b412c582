#include "resteer/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "resteer/errors.hpp"

namespace resteer {

namespace {

using nlohmann::json;

int line_of_offset(const std::string& text, size_t offset) {
  int line = 1;
  for (size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

class Fields {
 public:
  Fields(const json& j, std::string path, const std::string& origin)
      : j_(j), path_(std::move(path)), origin_(origin) {}

  Fields object(const std::string& key) const {
    const json& v = get(key);
    if (!v.is_object()) fail(key, "must be an object");
    return Fields(v, path_ + key + ".", origin_);
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  int64_t integer(const std::string& key, int64_t def, int64_t min_value) const {
    if (!has(key)) return def;
    const json& v = get(key);
    if (!v.is_number_integer()) fail(key, "must be an integer");
    const int64_t x = v.get<int64_t>();
    if (x < min_value) fail(key, "must be >= " + std::to_string(min_value));
    return x;
  }

  double number(const std::string& key, double def, double min_value) const {
    if (!has(key)) return def;
    const json& v = get(key);
    if (!v.is_number()) fail(key, "must be a number");
    const double x = v.get<double>();
    if (!(x >= min_value)) fail(key, "must be >= " + std::to_string(min_value));
    return x;
  }

  std::string text(const std::string& key, const std::string& def) const {
    if (!has(key)) return def;
    const json& v = get(key);
    if (!v.is_string()) fail(key, "must be a string");
    return v.get<std::string>();
  }

  std::vector<std::string> text_list(const std::string& key, std::vector<std::string> def) const {
    if (!has(key)) return def;
    const json& v = get(key);
    if (!v.is_array()) fail(key, "must be an array of strings");
    std::vector<std::string> out;
    for (const json& e : v) {
      if (!e.is_string()) fail(key, "must contain only strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  std::vector<uint64_t> seed_list(const std::string& key, std::vector<uint64_t> def) const {
    if (!has(key)) return def;
    const json& v = get(key);
    if (!v.is_array()) fail(key, "must be an array of integers");
    std::vector<uint64_t> out;
    for (const json& e : v) {
      if (!e.is_number_integer()) fail(key, "must contain only integers");
      out.push_back(e.get<uint64_t>());
    }
    return out;
  }

  void check_known(const std::vector<std::string>& known) const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      bool found = false;
      for (const std::string& k : known) {
        if (it.key() == k) {
          found = true;
          break;
        }
      }
      if (!found) fail(it.key(), "is not a recognized field");
    }
  }

 private:
  const json& get(const std::string& key) const {
    if (!j_.contains(key)) fail(key, "is required");
    return j_.at(key);
  }
  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw schema_error(origin_ + ": field '" + path_ + key + "' " + what);
  }

  const json& j_;
  std::string path_;
  const std::string& origin_;
};

}  // namespace

RunConfig parse_run_config(const std::string& json_text, const std::string& origin) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw schema_error(origin + ": JSON parse error at line " +
                       std::to_string(line_of_offset(json_text, e.byte)) + ": " + e.what());
  }
  if (!j.is_object()) throw schema_error(origin + ": top-level value must be an object");

  RunConfig cfg;
  Fields root(j, "", origin);
  root.check_known({"seed", "schedule", "model", "train", "sampler", "forget", "naive", "inversion",
                    "benchmark"});
  cfg.seed = static_cast<uint64_t>(root.integer("seed", static_cast<int64_t>(cfg.seed), 0));

  if (root.has("schedule")) {
    Fields f = root.object("schedule");
    f.check_known({"T", "beta_start", "beta_end"});
    cfg.schedule.T = f.integer("T", cfg.schedule.T, 2);
    cfg.schedule.beta_start = f.number("beta_start", cfg.schedule.beta_start, 0.0);
    cfg.schedule.beta_end = f.number("beta_end", cfg.schedule.beta_end, 0.0);
    if (!(cfg.schedule.beta_start > 0.0 && cfg.schedule.beta_start <= cfg.schedule.beta_end &&
          cfg.schedule.beta_end < 1.0)) {
      throw schema_error(origin + ": field 'schedule.beta_start/beta_end' must satisfy 0 < start <= end < 1");
    }
  }
  if (root.has("model")) {
    Fields f = root.object("model");
    f.check_known({"image_size", "channels", "patch", "d_model", "heads", "blocks", "d_ctx", "d_cross",
                   "d_ff", "time_dim", "l_max"});
    cfg.model.image_size = f.integer("image_size", cfg.model.image_size, 1);
    cfg.model.channels = f.integer("channels", cfg.model.channels, 1);
    cfg.model.patch = f.integer("patch", cfg.model.patch, 1);
    cfg.model.d_model = f.integer("d_model", cfg.model.d_model, 1);
    cfg.model.heads = f.integer("heads", cfg.model.heads, 1);
    cfg.model.blocks = f.integer("blocks", cfg.model.blocks, 1);
    cfg.model.d_ctx = f.integer("d_ctx", cfg.model.d_ctx, 1);
    cfg.model.d_cross = f.integer("d_cross", cfg.model.d_cross, 1);
    cfg.model.d_ff = f.integer("d_ff", cfg.model.d_ff, 1);
    cfg.model.time_dim = f.integer("time_dim", cfg.model.time_dim, 2);
    cfg.model.l_max = f.integer("l_max", cfg.model.l_max, 1);
    try {
      cfg.model.validate();
    } catch (const std::invalid_argument& e) {
      throw schema_error(origin + ": field 'model' invalid: " + e.what());
    }
  }
  if (root.has("train")) {
    Fields f = root.object("train");
    f.check_known({"steps", "batch", "lr"});
    cfg.train.steps = f.integer("steps", cfg.train.steps, 0);
    cfg.train.batch = f.integer("batch", cfg.train.batch, 1);
    cfg.train.lr = f.number("lr", cfg.train.lr, 0.0);
  }
  if (root.has("sampler")) {
    Fields f = root.object("sampler");
    f.check_known({"steps"});
    cfg.sampler_steps = f.integer("steps", cfg.sampler_steps, 1);
  }
  if (root.has("forget")) {
    Fields f = root.object("forget");
    f.check_known({"scope", "steps", "lr", "batch"});
    cfg.forget.scope = f.text("scope", cfg.forget.scope);
    if (cfg.forget.scope != "ca" && cfg.forget.scope != "full") {
      throw schema_error(origin + ": field 'forget.scope' must be \"ca\" or \"full\"");
    }
    cfg.forget.steps = f.integer("steps", cfg.forget.steps, 0);
    cfg.forget.lr = f.number("lr", cfg.forget.lr, 0.0);
    cfg.forget.batch = f.integer("batch", cfg.forget.batch, 1);
  }
  if (root.has("naive")) {
    Fields f = root.object("naive");
    f.check_known({"steps", "lr", "batch"});
    cfg.naive.steps = f.integer("steps", cfg.naive.steps, 0);
    cfg.naive.lr = f.number("lr", cfg.naive.lr, 0.0);
    cfg.naive.batch = f.integer("batch", cfg.naive.batch, 1);
  }
  if (root.has("inversion")) {
    Fields f = root.object("inversion");
    f.check_known({"n_tokens", "steps", "lr", "init"});
    cfg.inversion.n_tokens = f.integer("n_tokens", cfg.inversion.n_tokens, 1);
    cfg.inversion.steps = f.integer("steps", cfg.inversion.steps, 0);
    cfg.inversion.lr = f.number("lr", cfg.inversion.lr, 0.0);
    cfg.inversion.init = f.text("init", cfg.inversion.init);
    init_from_name(cfg.inversion.init);  // validates
  }
  if (root.has("benchmark")) {
    Fields f = root.object("benchmark");
    f.check_known({"method", "targets", "controls", "metric_runs", "samples_per_concept", "metric_seeds",
                   "anchor_count", "base_checkpoint"});
    cfg.benchmark.method = f.text("method", cfg.benchmark.method);
    if (cfg.benchmark.method != "fmn" && cfg.benchmark.method != "blacklist" &&
        cfg.benchmark.method != "naive") {
      throw schema_error(origin + ": field 'benchmark.method' must be fmn|blacklist|naive");
    }
    cfg.benchmark.targets = f.text_list("targets", cfg.benchmark.targets);
    cfg.benchmark.controls = f.text_list("controls", cfg.benchmark.controls);
    cfg.benchmark.metric_runs = f.integer("metric_runs", cfg.benchmark.metric_runs, 1);
    cfg.benchmark.samples_per_concept = f.integer("samples_per_concept", cfg.benchmark.samples_per_concept, 1);
    cfg.benchmark.metric_seeds = f.seed_list("metric_seeds", cfg.benchmark.metric_seeds);
    cfg.benchmark.anchor_count = f.integer("anchor_count", cfg.benchmark.anchor_count, 1);
    cfg.benchmark.base_checkpoint = f.text("base_checkpoint", cfg.benchmark.base_checkpoint);
    if (cfg.benchmark.targets.empty()) {
      throw schema_error(origin + ": field 'benchmark.targets' must not be empty");
    }
  }
  if (cfg.sampler_steps > cfg.schedule.T || cfg.schedule.T % cfg.sampler_steps != 0) {
    throw schema_error(origin + ": field 'sampler.steps' must divide schedule.T");
  }
  return cfg;
}

RunConfig parse_run_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error(path + ": cannot open config file");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_run_config(os.str(), path);
}

std::string default_run_config_json() {
  return R"({
  "seed": 1234,
  "schedule": {"T": 200, "beta_start": 1e-4, "beta_end": 0.02},
  "model": {"image_size": 16, "channels": 3, "patch": 2, "d_model": 64, "heads": 4, "blocks": 2,
            "d_ctx": 32, "d_cross": 32, "d_ff": 256, "time_dim": 64, "l_max": 8},
  "train": {"steps": 3000, "batch": 8, "lr": 2e-3},
  "sampler": {"steps": 50},
  "forget": {"scope": "ca", "steps": 150, "lr": 1.5, "batch": 2},
  "naive": {"steps": 400, "lr": 4e-3, "batch": 4},
  "inversion": {"n_tokens": 1, "steps": 250, "lr": 1.0, "init": "random"},
  "benchmark": {"method": "fmn", "targets": ["zorb"], "controls": ["kelp", "drum", "haze"],
                "metric_runs": 5, "samples_per_concept": 64, "metric_seeds": [11, 12, 13],
                "anchor_count": 8, "base_checkpoint": ""}
})";
}

RunConfig default_run_config() { return parse_run_config(default_run_config_json(), "default config"); }

InversionConfig make_inversion_config(const InversionSettings& s, uint64_t seed) {
  InversionConfig c;
  c.n_tokens = s.n_tokens;
  c.steps = s.steps;
  c.lr = s.lr;
  c.init = init_from_name(s.init);
  c.seed = seed;
  return c;
}

}  // namespace resteer
