#include "resteer/trainer.hpp"

#include <cmath>
#include <stdexcept>

#include "resteer/ops.hpp"

namespace resteer {

namespace {

struct Adam {
  double lr;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int64_t step = 0;
  std::vector<std::vector<double>> m, v;

  explicit Adam(const std::vector<std::pair<std::string, Tensor>>& params, double lr_in) : lr(lr_in) {
    for (const auto& [name, t] : params) {
      m.emplace_back(t.values().size(), 0.0);
      v.emplace_back(t.values().size(), 0.0);
    }
  }

  void update(std::vector<std::pair<std::string, Tensor>>& params) {
    ++step;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    for (size_t p = 0; p < params.size(); ++p) {
      Tensor t = params[p].second;
      if (!t.has_grad()) continue;
      auto& w = t.values();
      const auto& g = t.grad();
      auto& mp = m[p];
      auto& vp = v[p];
      for (size_t i = 0; i < w.size(); ++i) {
        mp[i] = beta1 * mp[i] + (1.0 - beta1) * g[i];
        vp[i] = beta2 * vp[i] + (1.0 - beta2) * g[i] * g[i];
        w[i] -= lr * (mp[i] / bc1) / (std::sqrt(vp[i] / bc2) + eps);
      }
    }
  }
};

}  // namespace

std::vector<double> train_base_model(Model& model, const Corpus& corpus, const NoiseSchedule& sched,
                                     const TrainSettings& cfg, uint64_t seed) {
  if (cfg.batch < 1) throw std::invalid_argument("train: batch must be >= 1");
  std::vector<std::pair<std::string, Tensor>> params = model.all_params();
  set_params_requires_grad(params, true);
  Adam opt(params, cfg.lr);
  Rng rng(seed, streams::kTrain);

  std::vector<double> losses;
  losses.reserve(static_cast<size_t>(cfg.steps));
  for (int64_t step = 0; step < cfg.steps; ++step) {
    Graph graph;
    GraphScope scope(graph);
    std::vector<Tensor> x0s;
    std::vector<ContextEmbedding> ctxs;
    for (int64_t b = 0; b < cfg.batch; ++b) {
      auto [image, prompt] = corpus.draw_example(rng);
      x0s.push_back(std::move(image));
      ctxs.push_back(model.text.encode_prompt(prompt));
    }
    Tensor loss = ddpm_loss(model.eps_fn(), x0s, ctxs, sched, rng);
    const double loss_value = loss.item();
    if (!std::isfinite(loss_value)) throw std::runtime_error("train: loss diverged at step " + std::to_string(step));
    backward(graph, loss);
    opt.update(params);
    losses.push_back(loss_value);
  }
  set_params_requires_grad(params, false);
  return losses;
}

}  // namespace resteer
