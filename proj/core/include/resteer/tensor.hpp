#pragma once

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

#include "resteer/rng.hpp"

namespace resteer {

using Shape = std::vector<int64_t>;

int64_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Checked mode validates finiteness of stored values at construction time.
void set_checked_mode(bool on);
bool checked_mode();

// Dense row-major f64 tensor. Values are immutable after construction except
// for gradient accumulation and explicit in-place parameter updates made by
// optimizers between graph executions. Copies share storage; identity is the
// storage address.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double value);
  static Tensor randn(Shape shape, Rng& rng, bool requires_grad = false);

  bool defined() const { return s_ != nullptr; }
  const Shape& shape() const;
  int64_t rank() const { return static_cast<int64_t>(shape().size()); }
  int64_t size() const;

  std::vector<double>& values();
  const std::vector<double>& values() const;
  double item() const;
  double at(std::initializer_list<int64_t> index) const;

  bool requires_grad() const;
  void set_requires_grad(bool on);

  // Gradient buffer, allocated to zeros on first touch.
  std::vector<double>& grad();
  bool has_grad() const;
  double grad_at(int64_t flat_index) const;  // 0 when never accumulated
  void zero_grad();

  Tensor clone() const;  // deep copy of values; fresh grad, keeps requires_grad

  const void* id() const { return s_.get(); }

 private:
  struct Storage {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;  // empty until touched
    bool requires_grad = false;
  };
  std::shared_ptr<Storage> s_;
};

}  // namespace resteer
