#include "resteer/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace resteer {

namespace {
thread_local Graph* t_active = nullptr;
}

Graph::~Graph() = default;

Graph* Graph::active() { return t_active; }

void Graph::record(std::vector<Tensor> touched, std::function<void()> backward_fn) {
  for (Tensor& t : touched) {
    if (t.defined() && seen_.insert(t.id()).second) tracked_.push_back(std::move(t));
  }
  nodes_.push_back(std::move(backward_fn));
}

GraphScope::GraphScope(Graph& g) : prev_(t_active) { t_active = &g; }
GraphScope::~GraphScope() { t_active = prev_; }

void backward(Graph& g, const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw std::invalid_argument("backward: loss must be a defined scalar tensor");
  }
  for (Tensor& t : g.tracked_) t.zero_grad();
  Tensor seed = loss;
  seed.grad()[0] = 1.0;
  for (auto it = g.nodes_.rbegin(); it != g.nodes_.rend(); ++it) (*it)();
}

namespace {

double run_scalar(const std::function<Tensor(const Tensor&)>& f, const Tensor& x) {
  Tensor y = f(x);
  if (y.size() != 1) throw std::invalid_argument("gradcheck: f must be scalar-valued");
  return y.item();
}

}  // namespace

double gradcheck(const std::function<Tensor(const Tensor&)>& f, const Tensor& point, double h) {
  auto wrapped = [&f](const std::vector<Tensor>& xs) { return f(xs[0]); };
  return gradcheck_multi(wrapped, {point}, h);
}

double gradcheck_multi(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                       const std::vector<Tensor>& points, double h) {
  if (h <= 0) throw std::invalid_argument("gradcheck: step must be positive");

  std::vector<Tensor> xs;
  xs.reserve(points.size());
  for (const Tensor& p : points) {
    Tensor x = p.clone();
    x.set_requires_grad(true);
    xs.push_back(x);
  }

  Graph g;
  {
    GraphScope scope(g);
    Tensor y = f(xs);
    if (y.size() != 1) throw std::invalid_argument("gradcheck: f must be scalar-valued");
    backward(g, y);
  }

  double worst = 0.0;
  for (size_t p = 0; p < xs.size(); ++p) {
    for (int64_t i = 0; i < xs[p].size(); ++i) {
      const double analytic = xs[p].grad_at(i);

      std::vector<Tensor> shifted;
      shifted.reserve(xs.size());
      for (const Tensor& x : xs) shifted.push_back(x.clone());
      double* slot = &shifted[p].values()[static_cast<size_t>(i)];
      const double saved = *slot;
      *slot = saved + h;
      const double fp = [&] {
        Tensor y = f(shifted);
        return y.item();
      }();
      *slot = saved - h;
      const double fm = [&] {
        Tensor y = f(shifted);
        return y.item();
      }();
      const double numeric = (fp - fm) / (2.0 * h);

      const double err = std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
      if (err > worst) worst = err;
    }
  }
  return worst;
}

}  // namespace resteer
