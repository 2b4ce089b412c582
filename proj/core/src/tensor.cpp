#include "resteer/tensor.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace resteer {

namespace {
std::atomic<bool> g_checked{true};

void check_finite(const std::vector<double>& data) {
  for (double v : data) {
    if (!std::isfinite(v)) throw std::invalid_argument("tensor: non-finite value in checked mode");
  }
}
}  // namespace

void set_checked_mode(bool on) { g_checked.store(on); }
bool checked_mode() { return g_checked.load(); }

int64_t numel(const Shape& shape) {
  int64_t n = 1;
  for (int64_t e : shape) {
    if (e <= 0) throw std::invalid_argument("shape: extents must be positive, got " + shape_str(shape));
    n *= e;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << "]";
  return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  Tensor t;
  t.s_ = std::make_shared<Storage>();
  t.s_->values.assign(static_cast<size_t>(numel(shape)), 0.0);
  t.s_->shape = std::move(shape);
  t.s_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  if (checked_mode() && !std::isfinite(value)) throw std::invalid_argument("tensor: non-finite fill value");
  for (double& v : t.s_->values) v = value;
  return t;
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
  const int64_t n = numel(shape);
  if (n != static_cast<int64_t>(data.size())) {
    throw std::invalid_argument("tensor: data length " + std::to_string(data.size()) +
                                " does not match shape " + shape_str(shape));
  }
  if (checked_mode()) check_finite(data);
  Tensor t;
  t.s_ = std::make_shared<Storage>();
  t.s_->shape = std::move(shape);
  t.s_->values = std::move(data);
  t.s_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::scalar(double value) { return from_data({1}, {value}); }

Tensor Tensor::randn(Shape shape, Rng& rng, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  for (double& v : t.s_->values) v = rng.normal();
  return t;
}

const Shape& Tensor::shape() const {
  if (!s_) throw std::logic_error("tensor: use of undefined tensor");
  return s_->shape;
}

int64_t Tensor::size() const { return static_cast<int64_t>(values().size()); }

std::vector<double>& Tensor::values() {
  if (!s_) throw std::logic_error("tensor: use of undefined tensor");
  return s_->values;
}

const std::vector<double>& Tensor::values() const {
  if (!s_) throw std::logic_error("tensor: use of undefined tensor");
  return s_->values;
}

double Tensor::item() const {
  if (size() != 1) throw std::invalid_argument("tensor: item() on non-scalar of shape " + shape_str(shape()));
  return values()[0];
}

double Tensor::at(std::initializer_list<int64_t> index) const {
  const Shape& sh = shape();
  if (index.size() != sh.size()) throw std::invalid_argument("tensor: at() rank mismatch");
  int64_t flat = 0;
  size_t d = 0;
  for (int64_t i : index) {
    if (i < 0 || i >= sh[d]) throw std::out_of_range("tensor: at() index out of range");
    flat = flat * sh[d] + i;
    ++d;
  }
  return values()[static_cast<size_t>(flat)];
}

bool Tensor::requires_grad() const { return s_ && s_->requires_grad; }

void Tensor::set_requires_grad(bool on) {
  if (!s_) throw std::logic_error("tensor: use of undefined tensor");
  s_->requires_grad = on;
}

std::vector<double>& Tensor::grad() {
  if (!s_) throw std::logic_error("tensor: use of undefined tensor");
  if (s_->grad.empty()) s_->grad.assign(s_->values.size(), 0.0);
  return s_->grad;
}

bool Tensor::has_grad() const { return s_ && !s_->grad.empty(); }

double Tensor::grad_at(int64_t flat_index) const {
  if (!s_ || s_->grad.empty()) return 0.0;
  return s_->grad[static_cast<size_t>(flat_index)];
}

void Tensor::zero_grad() {
  if (!s_) return;
  if (!s_->grad.empty()) s_->grad.assign(s_->values.size(), 0.0);
}

Tensor Tensor::clone() const {
  Tensor t;
  if (!s_) return t;
  t.s_ = std::make_shared<Storage>();
  t.s_->shape = s_->shape;
  t.s_->values = s_->values;
  t.s_->requires_grad = s_->requires_grad;
  return t;
}

}  // namespace resteer
