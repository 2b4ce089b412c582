#include "resteer/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace resteer {

namespace {

constexpr double kLayerNormEps = 1e-6;
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

void check_output(const Tensor& t, const char* op) {
  if (!checked_mode()) return;
  for (double v : t.values()) {
    if (!std::isfinite(v)) throw std::runtime_error(std::string(op) + ": produced non-finite values");
  }
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

bool wants_grad(const Tensor& a) { return Graph::active() && a.requires_grad(); }

// c[m,n] += a[m,k] * b[k,n]
void gemm_nn_acc(double* c, const double* a, const double* b, int64_t m, int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    const double* arow = a + i * k;
    for (int64_t p = 0; p < k; ++p) {
      const double aip = arow[p];
      const double* brow = b + p * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

// c[m,k] += a[m,n] * b[k,n]^T
void gemm_nt_acc(double* c, const double* a, const double* b, int64_t m, int64_t n, int64_t k) {
  for (int64_t i = 0; i < m; ++i) {
    const double* arow = a + i * n;
    double* crow = c + i * k;
    for (int64_t p = 0; p < k; ++p) {
      const double* brow = b + p * n;
      double acc = 0.0;
      for (int64_t j = 0; j < n; ++j) acc += arow[j] * brow[j];
      crow[p] += acc;
    }
  }
}

// c[k,n] += a[m,k]^T * b[m,n]
void gemm_tn_acc(double* c, const double* a, const double* b, int64_t m, int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    const double* brow = b + i * n;
    for (int64_t p = 0; p < k; ++p) {
      const double aip = arow[p];
      double* crow = c + p * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

std::vector<int64_t> strides_of(const Shape& shape) {
  std::vector<int64_t> st(shape.size(), 1);
  for (int64_t d = static_cast<int64_t>(shape.size()) - 2; d >= 0; --d) {
    st[d] = st[d + 1] * shape[d + 1];
  }
  return st;
}

// outer * extent * inner decomposition around one axis
struct AxisSplit {
  int64_t outer = 1, extent = 1, inner = 1;
};

AxisSplit split_axis(const Shape& shape, int64_t axis) {
  AxisSplit s;
  s.extent = shape[static_cast<size_t>(axis)];
  for (int64_t d = 0; d < axis; ++d) s.outer *= shape[static_cast<size_t>(d)];
  for (int64_t d = axis + 1; d < static_cast<int64_t>(shape.size()); ++d) {
    s.inner *= shape[static_cast<size_t>(d)];
  }
  return s;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), "add: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  Tensor out = Tensor::zeros(a.shape());
  const auto& av = a.values();
  const auto& bv = b.values();
  auto& ov = out.values();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + bv[i];
  check_output(out, "add");
  if (wants_grad(a) || wants_grad(b)) {
    out.set_requires_grad(true);
    Graph::active()->record({a, b, out}, [a, b, out]() mutable {
      const auto& go = out.grad();
      if (a.requires_grad()) {
        auto& ga = a.grad();
        for (size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
      }
      if (b.requires_grad()) {
        auto& gb = b.grad();
        for (size_t i = 0; i < go.size(); ++i) gb[i] += go[i];
      }
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), "sub: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  Tensor out = Tensor::zeros(a.shape());
  const auto& av = a.values();
  const auto& bv = b.values();
  auto& ov = out.values();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] - bv[i];
  check_output(out, "sub");
  if (wants_grad(a) || wants_grad(b)) {
    out.set_requires_grad(true);
    Graph::active()->record({a, b, out}, [a, b, out]() mutable {
      const auto& go = out.grad();
      if (a.requires_grad()) {
        auto& ga = a.grad();
        for (size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
      }
      if (b.requires_grad()) {
        auto& gb = b.grad();
        for (size_t i = 0; i < go.size(); ++i) gb[i] -= go[i];
      }
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), "mul: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  Tensor out = Tensor::zeros(a.shape());
  const auto& av = a.values();
  const auto& bv = b.values();
  auto& ov = out.values();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * bv[i];
  check_output(out, "mul");
  if (wants_grad(a) || wants_grad(b)) {
    out.set_requires_grad(true);
    Graph::active()->record({a, b, out}, [a, b, out]() mutable {
      const auto& go = out.grad();
      if (a.requires_grad()) {
        auto& ga = a.grad();
        const auto& bv2 = b.values();
        for (size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * bv2[i];
      }
      if (b.requires_grad()) {
        auto& gb = b.grad();
        const auto& av2 = a.values();
        for (size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * av2[i];
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& a, double c) {
  Tensor out = Tensor::zeros(a.shape());
  const auto& av = a.values();
  auto& ov = out.values();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * c;
  check_output(out, "scale");
  if (wants_grad(a)) {
    out.set_requires_grad(true);
    Graph::active()->record({a, out}, [a, out, c]() mutable {
      const auto& go = out.grad();
      auto& ga = a.grad();
      for (size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * c;
    });
  }
  return out;
}

Tensor add_rows(const Tensor& x, const Tensor& v) {
  require(x.rank() >= 1 && v.rank() == 1, "add_rows: expects x rank>=1 and v rank 1");
  const int64_t d = v.shape()[0];
  require(x.shape().back() == d, "add_rows: last extent " + std::to_string(x.shape().back()) +
                                     " != " + std::to_string(d));
  const int64_t rows = x.size() / d;
  Tensor out = Tensor::zeros(x.shape());
  const auto& xv = x.values();
  const auto& vv = v.values();
  auto& ov = out.values();
  for (int64_t r = 0; r < rows; ++r) {
    const size_t base = static_cast<size_t>(r * d);
    for (int64_t j = 0; j < d; ++j) ov[base + j] = xv[base + j] + vv[static_cast<size_t>(j)];
  }
  check_output(out, "add_rows");
  if (wants_grad(x) || wants_grad(v)) {
    out.set_requires_grad(true);
    Graph::active()->record({x, v, out}, [x, v, out, rows, d]() mutable {
      const auto& go = out.grad();
      if (x.requires_grad()) {
        auto& gx = x.grad();
        for (size_t i = 0; i < go.size(); ++i) gx[i] += go[i];
      }
      if (v.requires_grad()) {
        auto& gv = v.grad();
        for (int64_t r = 0; r < rows; ++r) {
          const size_t base = static_cast<size_t>(r * d);
          for (int64_t j = 0; j < d; ++j) gv[static_cast<size_t>(j)] += go[base + j];
        }
      }
    });
  }
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.rank() == 2 && b.rank() == 2, "matmul: expects rank-2 operands");
  const int64_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  require(b.shape()[0] == k, "matmul: inner extents differ, " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  Tensor out = Tensor::zeros({m, n});
  gemm_nn_acc(out.values().data(), a.values().data(), b.values().data(), m, k, n);
  check_output(out, "matmul");
  if (wants_grad(a) || wants_grad(b)) {
    out.set_requires_grad(true);
    Graph::active()->record({a, b, out}, [a, b, out, m, k, n]() mutable {
      const double* go = out.grad().data();
      if (a.requires_grad()) gemm_nt_acc(a.grad().data(), go, b.values().data(), m, n, k);
      if (b.requires_grad()) gemm_tn_acc(b.grad().data(), a.values().data(), go, m, k, n);
    });
  }
  return out;
}

Tensor bmm(const Tensor& a, const Tensor& b) {
  require(a.rank() == 3 && b.rank() == 3, "bmm: expects rank-3 operands");
  const int64_t B = a.shape()[0], m = a.shape()[1], k = a.shape()[2], n = b.shape()[2];
  require(b.shape()[0] == B && b.shape()[1] == k,
          "bmm: incompatible shapes " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  Tensor out = Tensor::zeros({B, m, n});
  for (int64_t i = 0; i < B; ++i) {
    gemm_nn_acc(out.values().data() + i * m * n, a.values().data() + i * m * k,
                b.values().data() + i * k * n, m, k, n);
  }
  check_output(out, "bmm");
  if (wants_grad(a) || wants_grad(b)) {
    out.set_requires_grad(true);
    Graph::active()->record({a, b, out}, [a, b, out, B, m, k, n]() mutable {
      const double* go = out.grad().data();
      for (int64_t i = 0; i < B; ++i) {
        if (a.requires_grad()) {
          gemm_nt_acc(a.grad().data() + i * m * k, go + i * m * n, b.values().data() + i * k * n, m, n, k);
        }
        if (b.requires_grad()) {
          gemm_tn_acc(b.grad().data() + i * k * n, a.values().data() + i * m * k, go + i * m * n, m, k, n);
        }
      }
    });
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  require(a.rank() == 2, "transpose: expects rank-2 input");
  return permute(a, {1, 0});
}

Tensor permute(const Tensor& a, const std::vector<int64_t>& axes) {
  const int64_t r = a.rank();
  require(static_cast<int64_t>(axes.size()) == r, "permute: axes size must equal rank");
  std::vector<bool> seen(static_cast<size_t>(r), false);
  Shape out_shape(static_cast<size_t>(r));
  for (int64_t d = 0; d < r; ++d) {
    const int64_t ax = axes[static_cast<size_t>(d)];
    require(ax >= 0 && ax < r && !seen[static_cast<size_t>(ax)], "permute: invalid axis list");
    seen[static_cast<size_t>(ax)] = true;
    out_shape[static_cast<size_t>(d)] = a.shape()[static_cast<size_t>(ax)];
  }

  const auto in_strides = strides_of(a.shape());
  const auto out_strides = strides_of(out_shape);
  // src stride per output axis
  std::vector<int64_t> src_stride(static_cast<size_t>(r));
  for (int64_t d = 0; d < r; ++d) src_stride[static_cast<size_t>(d)] = in_strides[static_cast<size_t>(axes[static_cast<size_t>(d)])];

  Tensor out = Tensor::zeros(out_shape);
  const auto& av = a.values();
  auto& ov = out.values();
  const int64_t n = out.size();
  for (int64_t flat = 0; flat < n; ++flat) {
    int64_t rem = flat, src = 0;
    for (int64_t d = 0; d < r; ++d) {
      const int64_t coord = rem / out_strides[static_cast<size_t>(d)];
      rem -= coord * out_strides[static_cast<size_t>(d)];
      src += coord * src_stride[static_cast<size_t>(d)];
    }
    ov[static_cast<size_t>(flat)] = av[static_cast<size_t>(src)];
  }
  if (wants_grad(a)) {
    out.set_requires_grad(true);
    Graph::active()->record({a, out}, [a, out, out_strides, src_stride, r]() mutable {
      const auto& go = out.grad();
      auto& ga = a.grad();
      const int64_t n2 = out.size();
      for (int64_t flat = 0; flat < n2; ++flat) {
        int64_t rem = flat, src = 0;
        for (int64_t d = 0; d < r; ++d) {
          const int64_t coord = rem / out_strides[static_cast<size_t>(d)];
          rem -= coord * out_strides[static_cast<size_t>(d)];
          src += coord * src_stride[static_cast<size_t>(d)];
        }
        ga[static_cast<size_t>(src)] += go[static_cast<size_t>(flat)];
      }
    });
  }
  return out;
}

Tensor reshape(const Tensor& a, Shape shape) {
  require(numel(shape) == a.size(),
          "reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
  Tensor out = Tensor::from_data(std::move(shape), a.values());
  if (wants_grad(a)) {
    out.set_requires_grad(true);
    Graph::active()->record({a, out}, [a, out]() mutable {
      const auto& go = out.grad();
      auto& ga = a.grad();
      for (size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
    });
  }
  return out;
}

Tensor concat(const std::vector<Tensor>& parts, int64_t axis) {
  require(!parts.empty(), "concat: needs at least one part");
  const Shape& first = parts[0].shape();
  const int64_t r = parts[0].rank();
  require(axis >= 0 && axis < r, "concat: axis out of range");
  Shape out_shape = first;
  int64_t total = 0;
  for (const Tensor& p : parts) {
    require(p.rank() == r, "concat: rank mismatch");
    for (int64_t d = 0; d < r; ++d) {
      if (d != axis) require(p.shape()[static_cast<size_t>(d)] == first[static_cast<size_t>(d)], "concat: extent mismatch off-axis");
    }
    total += p.shape()[static_cast<size_t>(axis)];
  }
  out_shape[static_cast<size_t>(axis)] = total;

  Tensor out = Tensor::zeros(out_shape);
  const AxisSplit so = split_axis(out_shape, axis);
  auto& ov = out.values();
  int64_t offset = 0;
  for (const Tensor& p : parts) {
    const AxisSplit sp = split_axis(p.shape(), axis);
    const auto& pv = p.values();
    for (int64_t o = 0; o < sp.outer; ++o) {
      const size_t dst = static_cast<size_t>((o * so.extent + offset) * so.inner);
      const size_t src = static_cast<size_t>(o * sp.extent * sp.inner);
      std::copy(pv.begin() + src, pv.begin() + src + sp.extent * sp.inner, ov.begin() + dst);
    }
    offset += sp.extent;
  }
  bool any_grad = false;
  for (const Tensor& p : parts) any_grad = any_grad || wants_grad(p);
  if (any_grad) {
    out.set_requires_grad(true);
    std::vector<Tensor> held = parts;
    std::vector<Tensor> touched = parts;
    touched.push_back(out);
    Graph::active()->record(std::move(touched), [held, out, so, axis]() mutable {
      const auto& go = out.grad();
      int64_t off = 0;
      for (Tensor& p : held) {
        const AxisSplit sp = split_axis(p.shape(), axis);
        if (p.requires_grad()) {
          auto& gp = p.grad();
          for (int64_t o = 0; o < sp.outer; ++o) {
            const size_t src = static_cast<size_t>((o * so.extent + off) * so.inner);
            const size_t dst = static_cast<size_t>(o * sp.extent * sp.inner);
            for (int64_t i = 0; i < sp.extent * sp.inner; ++i) gp[dst + i] += go[src + i];
          }
        }
        off += sp.extent;
      }
    });
  }
  check_output(out, "concat");
  return out;
}

Tensor index_select(const Tensor& a, int64_t axis, const std::vector<int64_t>& indices) {
  require(axis >= 0 && axis < a.rank(), "index_select: axis out of range");
  require(!indices.empty(), "index_select: empty index list");
  const AxisSplit s = split_axis(a.shape(), axis);
  for (int64_t idx : indices) {
    require(idx >= 0 && idx < s.extent,
            "index_select: index " + std::to_string(idx) + " out of range [0," + std::to_string(s.extent) + ")");
  }
  Shape out_shape = a.shape();
  out_shape[static_cast<size_t>(axis)] = static_cast<int64_t>(indices.size());
  Tensor out = Tensor::zeros(out_shape);
  const auto& av = a.values();
  auto& ov = out.values();
  const int64_t k = static_cast<int64_t>(indices.size());
  for (int64_t o = 0; o < s.outer; ++o) {
    for (int64_t j = 0; j < k; ++j) {
      const size_t src = static_cast<size_t>((o * s.extent + indices[static_cast<size_t>(j)]) * s.inner);
      const size_t dst = static_cast<size_t>((o * k + j) * s.inner);
      std::copy(av.begin() + src, av.begin() + src + s.inner, ov.begin() + dst);
    }
  }
  if (wants_grad(a)) {
    out.set_requires_grad(true);
    Graph::active()->record({a, out}, [a, out, s, indices, k]() mutable {
      const auto& go = out.grad();
      auto& ga = a.grad();
      for (int64_t o = 0; o < s.outer; ++o) {
        for (int64_t j = 0; j < k; ++j) {
          const size_t dst = static_cast<size_t>((o * s.extent + indices[static_cast<size_t>(j)]) * s.inner);
          const size_t src = static_cast<size_t>((o * k + j) * s.inner);
          for (int64_t i = 0; i < s.inner; ++i) ga[dst + i] += go[src + i];
        }
      }
    });
  }
  return out;
}

Tensor softmax(const Tensor& a, int64_t axis) {
  require(axis >= 0 && axis < a.rank(), "softmax: axis out of range");
  const AxisSplit s = split_axis(a.shape(), axis);
  Tensor out = Tensor::zeros(a.shape());
  const auto& av = a.values();
  auto& ov = out.values();
  for (int64_t o = 0; o < s.outer; ++o) {
    for (int64_t in = 0; in < s.inner; ++in) {
      const size_t base = static_cast<size_t>(o * s.extent * s.inner + in);
      double mx = av[base];
      for (int64_t e = 1; e < s.extent; ++e) mx = std::max(mx, av[base + e * s.inner]);
      double total = 0.0;
      for (int64_t e = 0; e < s.extent; ++e) {
        const double v = std::exp(av[base + e * s.inner] - mx);
        ov[base + e * s.inner] = v;
        total += v;
      }
      const double inv = 1.0 / total;
      for (int64_t e = 0; e < s.extent; ++e) ov[base + e * s.inner] *= inv;
    }
  }
  check_output(out, "softmax");
  if (wants_grad(a)) {
    out.set_requires_grad(true);
    Graph::active()->record({a, out}, [a, out, s]() mutable {
      const auto& go = out.grad();
      const auto& y = out.values();
      auto& ga = a.grad();
      for (int64_t o = 0; o < s.outer; ++o) {
        for (int64_t in = 0; in < s.inner; ++in) {
          const size_t base = static_cast<size_t>(o * s.extent * s.inner + in);
          double dot = 0.0;
          for (int64_t e = 0; e < s.extent; ++e) {
            const size_t ix = base + e * s.inner;
            dot += go[ix] * y[ix];
          }
          for (int64_t e = 0; e < s.extent; ++e) {
            const size_t ix = base + e * s.inner;
            ga[ix] += y[ix] * (go[ix] - dot);
          }
        }
      }
    });
  }
  return out;
}

Tensor gelu(const Tensor& a) {
  Tensor out = Tensor::zeros(a.shape());
  const auto& av = a.values();
  auto& ov = out.values();
  for (size_t i = 0; i < ov.size(); ++i) {
    ov[i] = 0.5 * av[i] * (1.0 + std::erf(av[i] * kInvSqrt2));
  }
  check_output(out, "gelu");
  if (wants_grad(a)) {
    out.set_requires_grad(true);
    Graph::active()->record({a, out}, [a, out]() mutable {
      const auto& go = out.grad();
      const auto& av2 = a.values();
      auto& ga = a.grad();
      for (size_t i = 0; i < go.size(); ++i) {
        const double x = av2[i];
        const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
        const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
        ga[i] += go[i] * (cdf + x * pdf);
      }
    });
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta) {
  require(x.rank() >= 1, "layer_norm: expects rank >= 1");
  const int64_t d = x.shape().back();
  require(gamma.rank() == 1 && gamma.shape()[0] == d, "layer_norm: gamma extent mismatch");
  require(beta.rank() == 1 && beta.shape()[0] == d, "layer_norm: beta extent mismatch");
  const int64_t rows = x.size() / d;

  Tensor out = Tensor::zeros(x.shape());
  const auto& xv = x.values();
  const auto& gv = gamma.values();
  const auto& bv = beta.values();
  auto& ov = out.values();
  std::vector<double> inv_sigma(static_cast<size_t>(rows));
  std::vector<double> mu(static_cast<size_t>(rows));
  for (int64_t r = 0; r < rows; ++r) {
    const size_t base = static_cast<size_t>(r * d);
    double m = 0.0;
    for (int64_t j = 0; j < d; ++j) m += xv[base + j];
    m /= static_cast<double>(d);
    double var = 0.0;
    for (int64_t j = 0; j < d; ++j) {
      const double c = xv[base + j] - m;
      var += c * c;
    }
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    mu[static_cast<size_t>(r)] = m;
    inv_sigma[static_cast<size_t>(r)] = inv;
    for (int64_t j = 0; j < d; ++j) {
      ov[base + j] = (xv[base + j] - m) * inv * gv[static_cast<size_t>(j)] + bv[static_cast<size_t>(j)];
    }
  }
  check_output(out, "layer_norm");
  if (wants_grad(x) || wants_grad(gamma) || wants_grad(beta)) {
    out.set_requires_grad(true);
    Graph::active()->record({x, gamma, beta, out},
                            [x, gamma, beta, out, rows, d, mu, inv_sigma]() mutable {
      const auto& go = out.grad();
      const auto& xv2 = x.values();
      const auto& gv2 = gamma.values();
      for (int64_t r = 0; r < rows; ++r) {
        const size_t base = static_cast<size_t>(r * d);
        const double m = mu[static_cast<size_t>(r)];
        const double inv = inv_sigma[static_cast<size_t>(r)];
        if (gamma.requires_grad() || beta.requires_grad()) {
          for (int64_t j = 0; j < d; ++j) {
            const double xhat = (xv2[base + j] - m) * inv;
            if (gamma.requires_grad()) gamma.grad()[static_cast<size_t>(j)] += go[base + j] * xhat;
            if (beta.requires_grad()) beta.grad()[static_cast<size_t>(j)] += go[base + j];
          }
        }
        if (x.requires_grad()) {
          double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
          for (int64_t j = 0; j < d; ++j) {
            const double xhat = (xv2[base + j] - m) * inv;
            const double dxhat = go[base + j] * gv2[static_cast<size_t>(j)];
            mean_dxhat += dxhat;
            mean_dxhat_xhat += dxhat * xhat;
          }
          mean_dxhat /= static_cast<double>(d);
          mean_dxhat_xhat /= static_cast<double>(d);
          auto& gx = x.grad();
          for (int64_t j = 0; j < d; ++j) {
            const double xhat = (xv2[base + j] - m) * inv;
            const double dxhat = go[base + j] * gv2[static_cast<size_t>(j)];
            gx[base + j] += inv * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat);
          }
        }
      }
    });
  }
  return out;
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.values()) total += v;
  Tensor out = Tensor::from_data({1}, {total});
  if (wants_grad(a)) {
    out.set_requires_grad(true);
    Graph::active()->record({a, out}, [a, out]() mutable {
      const double g = out.grad()[0];
      auto& ga = a.grad();
      for (double& v : ga) v += g;
    });
  }
  return out;
}

Tensor mean(const Tensor& a) {
  const double n = static_cast<double>(a.size());
  Tensor s = sum(a);
  return scale(s, 1.0 / n);
}

Tensor sum_axis(const Tensor& a, int64_t axis) {
  require(axis >= 0 && axis < a.rank(), "sum_axis: axis out of range");
  const AxisSplit s = split_axis(a.shape(), axis);
  Shape out_shape;
  for (int64_t d = 0; d < a.rank(); ++d) {
    if (d != axis) out_shape.push_back(a.shape()[static_cast<size_t>(d)]);
  }
  if (out_shape.empty()) out_shape.push_back(1);
  Tensor out = Tensor::zeros(out_shape);
  const auto& av = a.values();
  auto& ov = out.values();
  for (int64_t o = 0; o < s.outer; ++o) {
    for (int64_t e = 0; e < s.extent; ++e) {
      const size_t src = static_cast<size_t>((o * s.extent + e) * s.inner);
      const size_t dst = static_cast<size_t>(o * s.inner);
      for (int64_t i = 0; i < s.inner; ++i) ov[dst + i] += av[src + i];
    }
  }
  check_output(out, "sum_axis");
  if (wants_grad(a)) {
    out.set_requires_grad(true);
    Graph::active()->record({a, out}, [a, out, s]() mutable {
      const auto& go = out.grad();
      auto& ga = a.grad();
      for (int64_t o = 0; o < s.outer; ++o) {
        for (int64_t e = 0; e < s.extent; ++e) {
          const size_t dst = static_cast<size_t>((o * s.extent + e) * s.inner);
          const size_t src = static_cast<size_t>(o * s.inner);
          for (int64_t i = 0; i < s.inner; ++i) ga[dst + i] += go[src + i];
        }
      }
    });
  }
  return out;
}

Tensor mean_axis(const Tensor& a, int64_t axis) {
  const int64_t e = a.shape()[static_cast<size_t>(axis)];
  return scale(sum_axis(a, axis), 1.0 / static_cast<double>(e));
}

}  // namespace resteer
