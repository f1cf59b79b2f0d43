// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable tensor operations. Every operation is a pure function of its
// inputs; when an input is tracked by the active Tape the result is recorded
// so that Tape::backward() can propagate gradients through it.

#pragma once

#include <span>
#include <vector>

#include "scarf/tensor.hpp"

namespace scarf {
inline namespace SCARF_PRECISION_NS {

// Elementwise sum. `b` may also be a length-C vector broadcast over a [C, H, W] `a`.
Tensor add(const Tensor& a, const Tensor& b);
// Elementwise (Hadamard) product, same broadcasting rule as add().
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, Real factor);
// Sum of all elements as a rank-0 tensor.
Tensor sum(const Tensor& a);
// Same elements under new dims; gradients flow through.
Tensor reshape(const Tensor& a, Shape dims);

Tensor concat_channels(std::span<const Tensor> xs);
Tensor slice_channels(const Tensor& x, std::int64_t begin, std::int64_t count);

/// 2-D convolution of x[inC, H, W] with w[outC, inC, kh, kw]. Output extent is
/// floor((in + 2*pad - k) / stride) + 1 along each axis.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad);
Tensor conv2d(const Tensor& x, const Tensor& w, int stride, int pad);

/// Bilinear resampling with half-pixel centres: the source coordinate of output
/// index i is (i + 0.5) * in / out - 0.5, clamped to [0, in - 1].
Tensor bilinear_resize(const Tensor& x, std::int64_t out_h, std::int64_t out_w);

/// [C, H, W] -> [C], spatial mean per channel.
Tensor global_avg_pool(const Tensor& x);

enum class Activation { Sigmoid, Tanh, Relu };
Tensor elementwise(Activation kind, const Tensor& x);
inline Tensor sigmoid(const Tensor& x) { return elementwise(Activation::Sigmoid, x); }
inline Tensor tanh(const Tensor& x) { return elementwise(Activation::Tanh, x); }
inline Tensor relu(const Tensor& x) { return elementwise(Activation::Relu, x); }

/// Affine map w[out, in] * x[in] + b[out].
Tensor fc(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor fc(const Tensor& x, const Tensor& w);

// Row views used by the detection losses.

/// Rearranges a head output x[G*M, H, W] into rows [H*W*G, M]; row index is
/// (y * W + x) * G + g and column m reads channel g * M + m.
Tensor head_rows(const Tensor& x, std::int64_t groups);
Tensor concat_rows(std::span<const Tensor> xs);
Tensor gather_rows(const Tensor& x, std::span<const std::int64_t> rows);

/// Mean softmax cross-entropy over the rows of logits[N, C].
Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> labels);
/// Mean smooth-L1 (0.5 d^2 below |d| = 1, |d| - 0.5 above).
Tensor smooth_l1(const Tensor& pred, const Tensor& target);

// Non-differentiable helpers.

/// Per-row cross-entropy values of logits[N, C].
std::vector<Real> row_cross_entropy(const Tensor& logits, std::span<const int> labels);
/// Row-wise softmax of logits[N, C].
Tensor softmax_rows(const Tensor& logits);

}  // namespace SCARF_PRECISION_NS
}  // namespace scarf
