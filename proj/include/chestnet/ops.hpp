#pragma once

#include <cstddef>

#include "chestnet/graph.hpp"

// Differentiable operations over Graph nodes. Image tensors are NCHW.

namespace chestnet::ops {

struct Conv2dSpec {
    std::size_t stride = 1;
    std::size_t padding = 0;
};

/// Cross-correlation plus bias. weight is [K,C,kh,kw], bias is [K].
template <typename T>
Var<T> conv2d(const Var<T>& input, const Var<T>& weight, const Var<T>& bias, Conv2dSpec spec = {});

/// Max over windows; padded cells never win. Ties route gradient to the first
/// maximal element in row-major window order.
template <typename T>
Var<T> maxpool2d(const Var<T>& input, std::size_t window, std::size_t stride,
                 std::size_t padding = 0);

template <typename T>
Var<T> relu(const Var<T>& x);
template <typename T>
Var<T> sigmoid(const Var<T>& x);
template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> scale(const Var<T>& x, T factor);
/// Elementwise arithmetic mean of two same-shaped tensors.
template <typename T>
Var<T> average(const Var<T>& a, const Var<T>& b);
/// Sum of all elements, shape [].
template <typename T>
Var<T> sum(const Var<T>& x);

/// x[N,in] * W^T + b with W [out,in] and b [out].
template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& weight, const Var<T>& bias);
/// [N,C,H,W] -> [N,C]
template <typename T>
Var<T> global_avg_pool(const Var<T>& x);
/// [N,...] -> [N, prod(...)]
template <typename T>
Var<T> flatten(const Var<T>& x);

/// out[n,c] = sum_k weights[n,c,k] * features[n,k]; weights [N,C,K],
/// features [N,K,H,W], output [N,C,H,W].
template <typename T>
Var<T> channel_mix(const Var<T>& weights, const Var<T>& features);

/// Softmax over the H*W cells of every (n,c) slice, max-subtracted.
template <typename T>
Var<T> spatial_softmax(const Var<T>& x);

/// Binary cross-entropy of probabilities against fixed targets: summed over
/// classes, averaged over the batch. Predictions are clamped to
/// [eps, 1-eps]; clamped entries pass no gradient.
template <typename T>
Var<T> bce_loss(const Var<T>& pred, const Tensor<T>& target);

inline constexpr double kBceEpsilon = 1e-7;

/// Numerically stable logistic function on a scalar.
template <typename T>
T stable_sigmoid(T x);

}  // namespace chestnet::ops
