#pragma once

#include <vector>

#include "resteer/autodiff.hpp"
#include "resteer/tensor.hpp"

namespace resteer {

// Elementwise (shapes must match exactly).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);

// x[..., d] + v[d], v broadcast over all leading axes.
Tensor add_rows(const Tensor& x, const Tensor& v);

// Linear algebra.
Tensor matmul(const Tensor& a, const Tensor& b);  // [m,k] x [k,n]
Tensor bmm(const Tensor& a, const Tensor& b);     // [B,m,k] x [B,k,n]
Tensor transpose(const Tensor& a);                // rank 2
Tensor permute(const Tensor& a, const std::vector<int64_t>& axes);
Tensor reshape(const Tensor& a, Shape shape);
Tensor concat(const std::vector<Tensor>& parts, int64_t axis);
Tensor index_select(const Tensor& a, int64_t axis, const std::vector<int64_t>& indices);

// Nonlinearities.
Tensor softmax(const Tensor& a, int64_t axis);
Tensor gelu(const Tensor& a);
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta);  // last axis

// Reductions.
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor sum_axis(const Tensor& a, int64_t axis);
Tensor mean_axis(const Tensor& a, int64_t axis);

}  // namespace resteer
