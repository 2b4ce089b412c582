#pragma once

#include <functional>
#include <unordered_set>
#include <vector>

#include "resteer/tensor.hpp"

namespace resteer {

// Tape of executed primitives in execution (= topological) order. Ops record
// themselves on the active graph of the current thread; each node's closure
// propagates the output gradient into the inputs. A graph is confined to one
// execution context; distinct threads may run distinct graphs concurrently.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  ~Graph();

  // Called by ops: tensors whose grads this node may touch + the closure.
  void record(std::vector<Tensor> touched, std::function<void()> backward_fn);

  static Graph* active();

  size_t node_count() const { return nodes_.size(); }

 private:
  friend struct GraphScope;
  friend void backward(Graph&, const Tensor&);

  std::vector<std::function<void()>> nodes_;
  std::vector<Tensor> tracked_;
  std::unordered_set<const void*> seen_;
};

// RAII: makes `g` the active graph on this thread for the scope's lifetime.
struct GraphScope {
  explicit GraphScope(Graph& g);
  GraphScope(const GraphScope&) = delete;
  GraphScope& operator=(const GraphScope&) = delete;
  ~GraphScope();

 private:
  Graph* prev_;
};

// Reverse pass. Zeroes the gradients of every tensor recorded on the graph,
// seeds d(loss)/d(loss) = 1 and accumulates partials in reverse tape order.
// Parameters the loss never touched keep a zero gradient.
void backward(Graph& g, const Tensor& loss);

// Max over coordinates of |analytic - central difference| / max(1, |analytic|)
// for a scalar-valued f. The numeric side never sees a graph.
double gradcheck(const std::function<Tensor(const Tensor&)>& f, const Tensor& point, double h = 1e-5);

// Same check jointly over several inputs (model parameters etc.).
double gradcheck_multi(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                       const std::vector<Tensor>& points, double h = 1e-5);

}  // namespace resteer
