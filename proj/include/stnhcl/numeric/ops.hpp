#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "stnhcl/numeric/graph.hpp"

// Differentiable operations on graph variables. Every op records its result on
// the graph of its first operand and validates extents up front, throwing
// DimensionError on mismatch.
namespace stnhcl::numeric {

// Elementwise arithmetic. Operands of different shapes are broadcast with
// trailing-aligned numpy rules.
template <class T> Var<T> add(Var<T> a, Var<T> b);
template <class T> Var<T> sub(Var<T> a, Var<T> b);
template <class T> Var<T> mul(Var<T> a, Var<T> b);
template <class T> Var<T> div(Var<T> a, Var<T> b);
template <class T> Var<T> neg(Var<T> x);
template <class T> Var<T> scale(Var<T> x, double s);
template <class T> Var<T> add_scalar(Var<T> x, double s);
template <class T> Var<T> exp(Var<T> x);
template <class T> Var<T> log(Var<T> x);
template <class T> Var<T> relu(Var<T> x);
template <class T> Var<T> leaky_relu(Var<T> x, double slope);
template <class T> Var<T> sigmoid(Var<T> x);

template <class T> Var<T> broadcast_to(Var<T> x, const Shape& shape);
template <class T> Var<T> reshape(Var<T> x, const Shape& shape);
// 2-D transpose.
template <class T> Var<T> transpose(Var<T> x);
template <class T> Var<T> matmul(Var<T> a, Var<T> b);

// Sum / mean of every element, giving a scalar.
template <class T> Var<T> sum(Var<T> x);
template <class T> Var<T> mean(Var<T> x);
template <class T> Var<T> sum(Var<T> x, std::size_t axis, bool keepdim = false);
template <class T> Var<T> mean(Var<T> x, std::size_t axis, bool keepdim = false);

// Rows of a 2-D tensor selected by index (repeats allowed).
template <class T> Var<T> gather_rows(Var<T> x, std::span<const std::size_t> rows);

// Max-shifted softmax along `axis`.
template <class T> Var<T> softmax(Var<T> x, std::size_t axis);

// Row-wise x / (||x|| + eps) for a [K x d] matrix. A zero row maps to zero.
template <class T> Var<T> l2_normalize(Var<T> x, double eps = 1e-8);

// Cross-correlation of a [c_in x h x w] image with [c_out x c_in x k x k]
// kernels; bias is [c_out] or an invalid Var. Output extent per axis is
// floor((n + 2*pad - k) / stride) + 1.
template <class T>
Var<T> conv2d(Var<T> input, Var<T> weight, Var<T> bias, std::size_t stride, std::size_t pad);

// [c x h x w] -> [c x h*f x w*f], each value repeated in an f x f block.
template <class T> Var<T> upsample_nearest(Var<T> x, std::size_t factor);

// mean((x - target)^2)
template <class T> Var<T> mse(Var<T> x, const Tensor<T>& target);
template <class T> Var<T> mse(Var<T> x, double target);

// out[i] = log(sum_j w[i][j] * exp(s[i][j])) for [K x N] inputs. Weights must be
// non-negative with at least one positive entry per row.
template <class T> Var<T> weighted_logsumexp(Var<T> s, Var<T> w);

// Same value, no gradient flow.
template <class T> Var<T> detach(Var<T> x);

// Broadcast result shape of two operands, or DimensionError.
Shape broadcast_shape(const Shape& a, const Shape& b);

// Extent of a convolution output axis; throws DimensionError when non-positive.
std::size_t conv_out_extent(std::size_t n, std::size_t kernel, std::size_t stride, std::size_t pad);

}  // namespace stnhcl::numeric
