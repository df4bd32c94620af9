#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rampinn/nn/tensor.hpp"

namespace rampinn::nn {

/// Same-length 1D convolution (stride 1). weight: (out, in, kernel), bias: (1, out, 1).
template <class T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, std::size_t padding);

template <class T>
struct BatchNormState {
    std::vector<T> running_mean;
    std::vector<T> running_var;
    double momentum = 0.1;
    double eps = 1e-5;

    explicit BatchNormState(std::size_t channels = 0) : running_mean(channels, T(0)), running_var(channels, T(1)) {}
};

/// Per-channel normalization over (batch, length). Training mode uses batch
/// statistics and updates `state`; otherwise the running statistics are used.
/// gamma, beta: (1, C, 1).
template <class T>
Tensor<T> batch_norm1d(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, BatchNormState<T>& state,
                       bool training);

template <class T>
Tensor<T> relu(const Tensor<T>& x);
template <class T>
Tensor<T> sigmoid(const Tensor<T>& x);

/// Non-overlapping average pooling; a trailing remainder is dropped.
template <class T>
Tensor<T> avg_pool1d(const Tensor<T>& x, std::size_t kernel = 2);

/// Linear resize along length with half-pixel (align_corners=false) sampling.
template <class T>
Tensor<T> interpolate_linear(const Tensor<T>& x, std::size_t target_length);
template <class T>
Tensor<T> upsample_linear(const Tensor<T>& x, std::size_t scale = 2);

template <class T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);

/// Single-head self-attention over positions with a residual connection:
/// x + V softmax(Q^T K / sqrt(C))^T, projections are (1, C, C) matrices.
template <class T>
Tensor<T> self_attention_1d(const Tensor<T>& x, const Tensor<T>& wq, const Tensor<T>& wk, const Tensor<T>& wv);

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <class T>
Tensor<T> scale(const Tensor<T>& a, double factor);
template <class T>
Tensor<T> sum(const Tensor<T>& a);

/// Mean squared error against a constant target, averaged over the samples
/// whose mask entry is non-zero (all samples when the mask is empty).
template <class T>
Tensor<T> mse_loss(const Tensor<T>& pred, std::span<const T> target, std::span<const unsigned char> mask = {});

/// mean((raman - Im H(x - nrb))^2); x is a constant input, gradients flow to
/// raman and nrb (the latter through the Hilbert adjoint).
template <class T>
Tensor<T> kk_loss(const Tensor<T>& raman, std::span<const T> x, const Tensor<T>& nrb);

/// Mean of squared forward differences along length.
template <class T>
Tensor<T> smooth_loss(const Tensor<T>& nrb);

}  // namespace rampinn::nn
