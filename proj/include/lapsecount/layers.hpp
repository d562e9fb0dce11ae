#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "lapsecount/tensor.hpp"

namespace lapsecount::nn {

// ---------------------------------------------------------------------------
// Dense layer, y = W x + b. W is [out x in], row-major.
// ---------------------------------------------------------------------------

inline void dense_forward(const Tensor& W, const Tensor& b, std::span<const double> x,
                          std::span<double> y) {
    const std::size_t out = W.shape[0], in = W.shape[1];
    if (x.size() != in || y.size() != out || b.size() != out)
        throw std::invalid_argument("dense_forward: shape mismatch");
    for (std::size_t r = 0; r < out; ++r) {
        double acc = b[r];
        const double* wr = W.data.data() + r * in;
        for (std::size_t c = 0; c < in; ++c) acc += wr[c] * x[c];
        y[r] = acc;
    }
}

/// Accumulates dW, db; writes dx (pass empty span to skip input grads).
inline void dense_backward(const Tensor& W, std::span<const double> x, std::span<const double> dy,
                           Tensor& dW, Tensor& db, std::span<double> dx) {
    const std::size_t out = W.shape[0], in = W.shape[1];
    if (x.size() != in || dy.size() != out)
        throw std::invalid_argument("dense_backward: shape mismatch");
    for (std::size_t r = 0; r < out; ++r) {
        const double g = dy[r];
        db[r] += g;
        double* wgr = dW.data.data() + r * in;
        for (std::size_t c = 0; c < in; ++c) wgr[c] += g * x[c];
    }
    if (!dx.empty()) {
        if (dx.size() != in) throw std::invalid_argument("dense_backward: dx shape");
        std::fill(dx.begin(), dx.end(), 0.0);
        for (std::size_t r = 0; r < out; ++r) {
            const double g = dy[r];
            const double* wr = W.data.data() + r * in;
            for (std::size_t c = 0; c < in; ++c) dx[c] += wr[c] * g;
        }
    }
}

// ---------------------------------------------------------------------------
// 3x3 same-padding stride-1 cross-correlation. x is [C x H x W] row-major,
// kernels [K x C x 3 x 3], output [K x H x W].
// ---------------------------------------------------------------------------

inline void conv2d_forward(std::span<const double> x, std::size_t C, std::size_t H, std::size_t W,
                           const Tensor& kernels, const Tensor& bias, std::span<double> y) {
    const std::size_t K = kernels.shape[0];
    if (kernels.shape.size() != 4 || kernels.shape[1] != C || kernels.shape[2] != 3 ||
        kernels.shape[3] != 3)
        throw std::invalid_argument("conv2d: kernel shape must be [K x C x 3 x 3]");
    if (x.size() != C * H * W || y.size() != K * H * W || bias.size() != K)
        throw std::invalid_argument("conv2d: shape mismatch");

    for (std::size_t k = 0; k < K; ++k) {
        double* yk = y.data() + k * H * W;
        std::fill(yk, yk + H * W, bias[k]);
        for (std::size_t c = 0; c < C; ++c) {
            const double* xc = x.data() + c * H * W;
            const double* kr = kernels.data.data() + ((k * C + c) * 9);
            for (std::size_t i = 0; i < H; ++i) {
                for (std::size_t j = 0; j < W; ++j) {
                    double acc = 0.0;
                    for (int di = -1; di <= 1; ++di) {
                        const long ii = static_cast<long>(i) + di;
                        if (ii < 0 || ii >= static_cast<long>(H)) continue;
                        for (int dj = -1; dj <= 1; ++dj) {
                            const long jj = static_cast<long>(j) + dj;
                            if (jj < 0 || jj >= static_cast<long>(W)) continue;
                            acc += kr[(di + 1) * 3 + (dj + 1)] * xc[ii * W + jj];
                        }
                    }
                    yk[i * W + j] += acc;
                }
            }
        }
    }
}

inline void conv2d_backward(std::span<const double> x, std::size_t C, std::size_t H, std::size_t W,
                            const Tensor& kernels, std::span<const double> dy, Tensor& dkernels,
                            Tensor& dbias, std::span<double> dx) {
    const std::size_t K = kernels.shape[0];
    if (x.size() != C * H * W || dy.size() != K * H * W)
        throw std::invalid_argument("conv2d_backward: shape mismatch");
    if (!dx.empty()) std::fill(dx.begin(), dx.end(), 0.0);

    for (std::size_t k = 0; k < K; ++k) {
        const double* dyk = dy.data() + k * H * W;
        double acc_b = 0.0;
        for (std::size_t p = 0; p < H * W; ++p) acc_b += dyk[p];
        dbias[k] += acc_b;

        for (std::size_t c = 0; c < C; ++c) {
            const double* xc = x.data() + c * H * W;
            const double* kr = kernels.data.data() + ((k * C + c) * 9);
            double* dkr = dkernels.data.data() + ((k * C + c) * 9);
            double* dxc = dx.empty() ? nullptr : dx.data() + c * H * W;
            for (std::size_t i = 0; i < H; ++i) {
                for (std::size_t j = 0; j < W; ++j) {
                    const double g = dyk[i * W + j];
                    if (g == 0.0) continue;
                    for (int di = -1; di <= 1; ++di) {
                        const long ii = static_cast<long>(i) + di;
                        if (ii < 0 || ii >= static_cast<long>(H)) continue;
                        for (int dj = -1; dj <= 1; ++dj) {
                            const long jj = static_cast<long>(j) + dj;
                            if (jj < 0 || jj >= static_cast<long>(W)) continue;
                            dkr[(di + 1) * 3 + (dj + 1)] += g * xc[ii * W + jj];
                            if (dxc) dxc[ii * W + jj] += g * kr[(di + 1) * 3 + (dj + 1)];
                        }
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// 2x2 max pooling, stride 2, ceil semantics at odd borders. Ties resolve to
// the first element in row-major window order.
// ---------------------------------------------------------------------------

inline std::size_t pooled_extent(std::size_t n) { return (n + 1) / 2; }

/// argmax stores, per output cell, the flat input index that won.
inline void maxpool2_forward(std::span<const double> x, std::size_t C, std::size_t H,
                             std::size_t W, std::span<double> y, std::vector<std::size_t>& argmax) {
    if (H < 2 || W < 2) throw std::invalid_argument("maxpool2: H and W must be >= 2");
    const std::size_t Ho = pooled_extent(H), Wo = pooled_extent(W);
    if (x.size() != C * H * W || y.size() != C * Ho * Wo)
        throw std::invalid_argument("maxpool2: shape mismatch");
    argmax.assign(C * Ho * Wo, 0);
    for (std::size_t c = 0; c < C; ++c) {
        const double* xc = x.data() + c * H * W;
        for (std::size_t i = 0; i < Ho; ++i) {
            for (std::size_t j = 0; j < Wo; ++j) {
                double best = -1e308;
                std::size_t best_idx = 0;
                for (std::size_t di = 0; di < 2; ++di) {
                    const std::size_t ii = 2 * i + di;
                    if (ii >= H) continue;
                    for (std::size_t dj = 0; dj < 2; ++dj) {
                        const std::size_t jj = 2 * j + dj;
                        if (jj >= W) continue;
                        const double v = xc[ii * W + jj];
                        if (v > best) {
                            best = v;
                            best_idx = ii * W + jj;
                        }
                    }
                }
                y[(c * Ho + i) * Wo + j] = best;
                argmax[(c * Ho + i) * Wo + j] = c * H * W + best_idx;
            }
        }
    }
}

inline void maxpool2_backward(std::span<const double> dy, const std::vector<std::size_t>& argmax,
                              std::span<double> dx) {
    std::fill(dx.begin(), dx.end(), 0.0);
    for (std::size_t p = 0; p < dy.size(); ++p) dx[argmax[p]] += dy[p];
}

// ---------------------------------------------------------------------------
// Elementwise activations and global average pooling.
// ---------------------------------------------------------------------------

inline double relu(double v) { return v > 0.0 ? v : 0.0; }
inline double relu_grad(double v) { return v > 0.0 ? 1.0 : 0.0; }

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

inline void relu_forward(std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = relu(x[i]);
}

/// dx = dy * relu'(x); x is the pre-activation input.
inline void relu_backward(std::span<const double> x, std::span<const double> dy,
                          std::span<double> dx) {
    for (std::size_t i = 0; i < x.size(); ++i) dx[i] = dy[i] * relu_grad(x[i]);
}

inline void sigmoid_forward(std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = sigmoid(x[i]);
}

/// dx = dy * s (1 - s); y is the activation output.
inline void sigmoid_backward(std::span<const double> y, std::span<const double> dy,
                             std::span<double> dx) {
    for (std::size_t i = 0; i < y.size(); ++i) dx[i] = dy[i] * y[i] * (1.0 - y[i]);
}

inline void tanh_forward(std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
}

inline void tanh_backward(std::span<const double> y, std::span<const double> dy,
                          std::span<double> dx) {
    for (std::size_t i = 0; i < y.size(); ++i) dx[i] = dy[i] * (1.0 - y[i] * y[i]);
}

/// C x H x W -> C by spatial mean.
inline void global_avg_pool_forward(std::span<const double> x, std::size_t C, std::size_t H,
                                    std::size_t W, std::span<double> y) {
    const double inv = 1.0 / static_cast<double>(H * W);
    for (std::size_t c = 0; c < C; ++c) {
        double acc = 0.0;
        const double* xc = x.data() + c * H * W;
        for (std::size_t p = 0; p < H * W; ++p) acc += xc[p];
        y[c] = acc * inv;
    }
}

inline void global_avg_pool_backward(std::span<const double> dy, std::size_t C, std::size_t H,
                                     std::size_t W, std::span<double> dx) {
    const double inv = 1.0 / static_cast<double>(H * W);
    for (std::size_t c = 0; c < C; ++c) {
        double* dxc = dx.data() + c * H * W;
        const double g = dy[c] * inv;
        for (std::size_t p = 0; p < H * W; ++p) dxc[p] = g;
    }
}

}  // namespace lapsecount::nn
