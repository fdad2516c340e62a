#pragma once

// Forward and backward kernels for the layer set the search needs:
// 2-D convolution, batch normalization, ReLU, 2x2 stride-2 pooling,
// global average pooling, dense, dropout, softmax cross-entropy.
// Activations are NHWC, kernels are (k1, k2, in_channels, out_channels).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "wsearch/errors.hpp"
#include "wsearch/tensor.hpp"

namespace wsearch {

inline std::size_t conv_out_dim(std::size_t in, std::size_t kernel, int stride, int padding) {
    std::size_t padded = in + 2 * static_cast<std::size_t>(padding);
    if (padded < kernel) throw ShapeError("conv: kernel larger than padded input");
    return (padded - kernel) / static_cast<std::size_t>(stride) + 1;
}

template <typename T>
Tensor4<T> conv2d_forward(const Tensor4<T>& input, const Tensor4<T>& weights, int stride,
                          int padding, const std::vector<T>* bias = nullptr) {
    const auto& id = input.dims();
    const auto& wd = weights.dims();
    const std::size_t B = id[0], H = id[1], W = id[2], C = id[3];
    const std::size_t K1 = wd[0], K2 = wd[1], F = wd[3];
    if (wd[2] != C)
        throw ShapeError("conv: weight in-channels " + std::to_string(wd[2]) +
                         " != input channels " + std::to_string(C));
    if (stride < 1) throw InputError("conv: stride must be >= 1");
    if (bias && bias->size() != F) throw ShapeError("conv: bias length != out-channels");

    const std::size_t OH = conv_out_dim(H, K1, stride, padding);
    const std::size_t OW = conv_out_dim(W, K2, stride, padding);
    Tensor4<T> out(B, OH, OW, F);

    const T* in = input.data();
    const T* w = weights.data();
    T* o = out.data();
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t oy = 0; oy < OH; ++oy) {
            const std::ptrdiff_t iy0 = static_cast<std::ptrdiff_t>(oy) * stride - padding;
            for (std::size_t ox = 0; ox < OW; ++ox) {
                const std::ptrdiff_t ix0 = static_cast<std::ptrdiff_t>(ox) * stride - padding;
                T* opx = o + ((b * OH + oy) * OW + ox) * F;
                if (bias) {
                    for (std::size_t f = 0; f < F; ++f) opx[f] = (*bias)[f];
                }
                for (std::size_t ky = 0; ky < K1; ++ky) {
                    const std::ptrdiff_t iy = iy0 + static_cast<std::ptrdiff_t>(ky);
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
                    for (std::size_t kx = 0; kx < K2; ++kx) {
                        const std::ptrdiff_t ix = ix0 + static_cast<std::ptrdiff_t>(kx);
                        if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
                        const T* ipx = in + ((b * H + static_cast<std::size_t>(iy)) * W +
                                             static_cast<std::size_t>(ix)) * C;
                        const T* wrow = w + (ky * K2 + kx) * C * F;
                        for (std::size_t c = 0; c < C; ++c) {
                            const T v = ipx[c];
                            const T* wf = wrow + c * F;
                            for (std::size_t f = 0; f < F; ++f) opx[f] += v * wf[f];
                        }
                    }
                }
            }
        }
    }
    return out;
}

// Gradients w.r.t. input, weights and bias. Any output pointer may be null.
template <typename T>
void conv2d_backward(const Tensor4<T>& input, const Tensor4<T>& weights,
                     const Tensor4<T>& grad_out, int stride, int padding,
                     Tensor4<T>* grad_input, Tensor4<T>* grad_weights,
                     std::vector<T>* grad_bias) {
    const auto& id = input.dims();
    const auto& wd = weights.dims();
    const auto& gd = grad_out.dims();
    const std::size_t B = id[0], H = id[1], W = id[2], C = id[3];
    const std::size_t K1 = wd[0], K2 = wd[1], F = wd[3];
    if (wd[2] != C) throw ShapeError("conv backward: channel mismatch");
    if (gd[0] != B || gd[3] != F) throw ShapeError("conv backward: grad_out shape mismatch");
    const std::size_t OH = gd[1], OW = gd[2];

    if (grad_input) {
        *grad_input = Tensor4<T>(B, H, W, C);
    }
    if (grad_weights) {
        *grad_weights = Tensor4<T>(K1, K2, C, F);
    }
    if (grad_bias) grad_bias->assign(F, T(0));

    const T* in = input.data();
    const T* w = weights.data();
    const T* go = grad_out.data();
    T* gi = grad_input ? grad_input->data() : nullptr;
    T* gw = grad_weights ? grad_weights->data() : nullptr;

    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t oy = 0; oy < OH; ++oy) {
            const std::ptrdiff_t iy0 = static_cast<std::ptrdiff_t>(oy) * stride - padding;
            for (std::size_t ox = 0; ox < OW; ++ox) {
                const std::ptrdiff_t ix0 = static_cast<std::ptrdiff_t>(ox) * stride - padding;
                const T* gpx = go + ((b * OH + oy) * OW + ox) * F;
                if (grad_bias) {
                    for (std::size_t f = 0; f < F; ++f) (*grad_bias)[f] += gpx[f];
                }
                for (std::size_t ky = 0; ky < K1; ++ky) {
                    const std::ptrdiff_t iy = iy0 + static_cast<std::ptrdiff_t>(ky);
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
                    for (std::size_t kx = 0; kx < K2; ++kx) {
                        const std::ptrdiff_t ix = ix0 + static_cast<std::ptrdiff_t>(kx);
                        if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
                        const std::size_t ipos = ((b * H + static_cast<std::size_t>(iy)) * W +
                                                  static_cast<std::size_t>(ix)) * C;
                        const T* ipx = in + ipos;
                        const std::size_t wpos = (ky * K2 + kx) * C * F;
                        for (std::size_t c = 0; c < C; ++c) {
                            const T* wf = w + wpos + c * F;
                            T acc = T(0);
                            if (gw) {
                                T* gwf = gw + wpos + c * F;
                                const T v = ipx[c];
                                for (std::size_t f = 0; f < F; ++f) {
                                    gwf[f] += v * gpx[f];
                                    acc += wf[f] * gpx[f];
                                }
                            } else {
                                for (std::size_t f = 0; f < F; ++f) acc += wf[f] * gpx[f];
                            }
                            if (gi) gi[ipos + c] += acc;
                        }
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Batch normalization (per-channel over batch and spatial axes)

template <typename T>
struct BatchNormParams {
    std::vector<T> gamma, beta;
    std::vector<T> running_mean, running_var;
    T eps = T(1e-5);

    explicit BatchNormParams(std::size_t channels = 0)
        : gamma(channels, T(1)), beta(channels, T(0)),
          running_mean(channels, T(0)), running_var(channels, T(1)) {}
    std::size_t channels() const { return gamma.size(); }
};

template <typename T>
struct BatchNormCache {
    std::vector<T> mean, inv_std;
    Tensor4<T> xhat;
};

// training: normalize by batch statistics (and optionally update the running
// averages); otherwise normalize by the stored running averages.
template <typename T>
Tensor4<T> batchnorm_forward(const Tensor4<T>& input, BatchNormParams<T>& p, bool training,
                             T momentum = T(0.1), BatchNormCache<T>* cache = nullptr,
                             bool update_running = true) {
    const auto& d = input.dims();
    const std::size_t B = d[0], H = d[1], W = d[2], C = d[3];
    if (p.channels() != C) throw ShapeError("batchnorm: channel mismatch");
    const std::size_t m = B * H * W;

    std::vector<T> mean(C, T(0)), var(C, T(0));
    if (training) {
        const T* in = input.data();
        for (std::size_t i = 0; i < m; ++i) {
            const T* px = in + i * C;
            for (std::size_t c = 0; c < C; ++c) mean[c] += px[c];
        }
        for (std::size_t c = 0; c < C; ++c) mean[c] /= static_cast<T>(m);
        for (std::size_t i = 0; i < m; ++i) {
            const T* px = in + i * C;
            for (std::size_t c = 0; c < C; ++c) {
                const T dlt = px[c] - mean[c];
                var[c] += dlt * dlt;
            }
        }
        for (std::size_t c = 0; c < C; ++c) var[c] /= static_cast<T>(m);
        if (update_running) {
            for (std::size_t c = 0; c < C; ++c) {
                p.running_mean[c] = (T(1) - momentum) * p.running_mean[c] + momentum * mean[c];
                p.running_var[c] = (T(1) - momentum) * p.running_var[c] + momentum * var[c];
            }
        }
    } else {
        mean = p.running_mean;
        var = p.running_var;
    }

    std::vector<T> inv_std(C);
    for (std::size_t c = 0; c < C; ++c)
        inv_std[c] = T(1) / std::sqrt(var[c] + p.eps);

    Tensor4<T> out(B, H, W, C);
    Tensor4<T>* xhat_dst = nullptr;
    if (cache) {
        cache->mean = mean;
        cache->inv_std = inv_std;
        cache->xhat = Tensor4<T>(B, H, W, C);
        xhat_dst = &cache->xhat;
    }
    const T* in = input.data();
    T* o = out.data();
    T* xh = xhat_dst ? xhat_dst->data() : nullptr;
    for (std::size_t i = 0; i < m; ++i) {
        const T* px = in + i * C;
        T* opx = o + i * C;
        for (std::size_t c = 0; c < C; ++c) {
            const T x = (px[c] - mean[c]) * inv_std[c];
            if (xh) xh[i * C + c] = x;
            opx[c] = p.gamma[c] * x + p.beta[c];
        }
    }
    return out;
}

// Backward through the training-mode normalization (batch statistics).
template <typename T>
Tensor4<T> batchnorm_backward(const BatchNormCache<T>& cache, const BatchNormParams<T>& p,
                              const Tensor4<T>& grad_out, std::vector<T>* grad_gamma,
                              std::vector<T>* grad_beta) {
    const auto& d = grad_out.dims();
    const std::size_t C = d[3];
    const std::size_t m = d[0] * d[1] * d[2];
    if (cache.xhat.dims() != d) throw ShapeError("batchnorm backward: cache mismatch");

    std::vector<T> sum_dy(C, T(0)), sum_dy_xhat(C, T(0));
    const T* go = grad_out.data();
    const T* xh = cache.xhat.data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t c = 0; c < C; ++c) {
            sum_dy[c] += go[i * C + c];
            sum_dy_xhat[c] += go[i * C + c] * xh[i * C + c];
        }
    }
    if (grad_gamma) *grad_gamma = sum_dy_xhat;
    if (grad_beta) *grad_beta = sum_dy;

    Tensor4<T> gin(d[0], d[1], d[2], d[3]);
    T* gi = gin.data();
    const T inv_m = T(1) / static_cast<T>(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t c = 0; c < C; ++c) {
            const T dxhat = go[i * C + c] * p.gamma[c];
            gi[i * C + c] = cache.inv_std[c] * (dxhat - inv_m * (p.gamma[c] * sum_dy[c] +
                            p.gamma[c] * sum_dy_xhat[c] * xh[i * C + c]));
        }
    }
    return gin;
}

// ---------------------------------------------------------------------------
// ReLU

template <typename T>
Tensor4<T> relu_forward(const Tensor4<T>& input) {
    Tensor4<T> out = input;
    T* o = out.data();
    for (std::size_t i = 0; i < out.size(); ++i) o[i] = o[i] > T(0) ? o[i] : T(0);
    return out;
}

template <typename T>
Tensor4<T> relu_backward(const Tensor4<T>& pre_activation, const Tensor4<T>& grad_out) {
    if (!pre_activation.same_shape(grad_out)) throw ShapeError("relu backward: shape mismatch");
    Tensor4<T> gin = grad_out;
    const T* pre = pre_activation.data();
    T* g = gin.data();
    for (std::size_t i = 0; i < gin.size(); ++i)
        if (pre[i] <= T(0)) g[i] = T(0);
    return gin;
}

// ---------------------------------------------------------------------------
// 2x2 stride-2 pooling (odd trailing rows/columns are dropped)

template <typename T>
struct PoolCache {
    std::vector<std::uint8_t> argmax;  // window-local index, max pooling only
    std::array<std::size_t, 4> in_dims{};
};

template <typename T>
Tensor4<T> pool2x2_forward(const Tensor4<T>& input, bool max_pool, PoolCache<T>* cache = nullptr) {
    const auto& d = input.dims();
    const std::size_t B = d[0], H = d[1], W = d[2], C = d[3];
    if (H < 2 || W < 2) throw ShapeError("pool: spatial dims must be >= 2");
    const std::size_t OH = H / 2, OW = W / 2;
    Tensor4<T> out(B, OH, OW, C);
    if (cache) {
        cache->in_dims = d;
        if (max_pool) cache->argmax.assign(out.size(), 0);
    }
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t oy = 0; oy < OH; ++oy)
            for (std::size_t ox = 0; ox < OW; ++ox)
                for (std::size_t c = 0; c < C; ++c) {
                    const T v00 = input(b, 2 * oy, 2 * ox, c);
                    const T v01 = input(b, 2 * oy, 2 * ox + 1, c);
                    const T v10 = input(b, 2 * oy + 1, 2 * ox, c);
                    const T v11 = input(b, 2 * oy + 1, 2 * ox + 1, c);
                    if (max_pool) {
                        T best = v00;
                        std::uint8_t arg = 0;
                        if (v01 > best) { best = v01; arg = 1; }
                        if (v10 > best) { best = v10; arg = 2; }
                        if (v11 > best) { best = v11; arg = 3; }
                        out(b, oy, ox, c) = best;
                        if (cache)
                            cache->argmax[((b * OH + oy) * OW + ox) * C + c] = arg;
                    } else {
                        out(b, oy, ox, c) = (v00 + v01 + v10 + v11) / T(4);
                    }
                }
    return out;
}

template <typename T>
Tensor4<T> pool2x2_backward(const PoolCache<T>& cache, bool max_pool,
                            const Tensor4<T>& grad_out) {
    const auto& od = grad_out.dims();
    Tensor4<T> gin(cache.in_dims[0], cache.in_dims[1], cache.in_dims[2], cache.in_dims[3]);
    const std::size_t B = od[0], OH = od[1], OW = od[2], C = od[3];
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t oy = 0; oy < OH; ++oy)
            for (std::size_t ox = 0; ox < OW; ++ox)
                for (std::size_t c = 0; c < C; ++c) {
                    const T g = grad_out(b, oy, ox, c);
                    if (max_pool) {
                        const std::uint8_t arg = cache.argmax[((b * OH + oy) * OW + ox) * C + c];
                        gin(b, 2 * oy + arg / 2, 2 * ox + arg % 2, c) += g;
                    } else {
                        const T q = g / T(4);
                        gin(b, 2 * oy, 2 * ox, c) += q;
                        gin(b, 2 * oy, 2 * ox + 1, c) += q;
                        gin(b, 2 * oy + 1, 2 * ox, c) += q;
                        gin(b, 2 * oy + 1, 2 * ox + 1, c) += q;
                    }
                }
    return gin;
}

// ---------------------------------------------------------------------------
// Global average pooling: (B,H,W,C) -> (B,1,1,C)

template <typename T>
Tensor4<T> global_avg_pool_forward(const Tensor4<T>& input) {
    const auto& d = input.dims();
    const std::size_t B = d[0], H = d[1], W = d[2], C = d[3];
    Tensor4<T> out(B, 1, 1, C);
    const T inv = T(1) / static_cast<T>(H * W);
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x)
                for (std::size_t c = 0; c < C; ++c) out(b, 0, 0, c) += input(b, y, x, c);
        for (std::size_t c = 0; c < C; ++c) out(b, 0, 0, c) *= inv;
    }
    return out;
}

template <typename T>
Tensor4<T> global_avg_pool_backward(const std::array<std::size_t, 4>& in_dims,
                                    const Tensor4<T>& grad_out) {
    const std::size_t B = in_dims[0], H = in_dims[1], W = in_dims[2], C = in_dims[3];
    Tensor4<T> gin(B, H, W, C);
    const T inv = T(1) / static_cast<T>(H * W);
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x)
                for (std::size_t c = 0; c < C; ++c) gin(b, y, x, c) = grad_out(b, 0, 0, c) * inv;
    return gin;
}

// ---------------------------------------------------------------------------
// Dense: input (B,1,1,in) x weight (1,1,in,out) + bias

template <typename T>
Tensor4<T> dense_forward(const Tensor4<T>& input, const Tensor4<T>& weight,
                         const std::vector<T>& bias) {
    const auto& id = input.dims();
    const auto& wd = weight.dims();
    const std::size_t B = id[0], In = id[1] * id[2] * id[3], Out = wd[3];
    if (wd[2] != In) throw ShapeError("dense: input features " + std::to_string(In) +
                                      " != weight rows " + std::to_string(wd[2]));
    if (bias.size() != Out) throw ShapeError("dense: bias length mismatch");
    Tensor4<T> out(B, 1, 1, Out);
    const T* in = input.data();
    const T* w = weight.data();
    for (std::size_t b = 0; b < B; ++b) {
        T* opx = out.data() + b * Out;
        for (std::size_t o = 0; o < Out; ++o) opx[o] = bias[o];
        for (std::size_t i = 0; i < In; ++i) {
            const T v = in[b * In + i];
            const T* wrow = w + i * Out;
            for (std::size_t o = 0; o < Out; ++o) opx[o] += v * wrow[o];
        }
    }
    return out;
}

template <typename T>
void dense_backward(const Tensor4<T>& input, const Tensor4<T>& weight,
                    const Tensor4<T>& grad_out, Tensor4<T>* grad_input,
                    Tensor4<T>* grad_weight, std::vector<T>* grad_bias) {
    const auto& id = input.dims();
    const auto& wd = weight.dims();
    const std::size_t B = id[0], In = id[1] * id[2] * id[3], Out = wd[3];
    if (grad_input) *grad_input = Tensor4<T>(id[0], id[1], id[2], id[3]);
    if (grad_weight) *grad_weight = Tensor4<T>(1, 1, In, Out);
    if (grad_bias) grad_bias->assign(Out, T(0));
    const T* in = input.data();
    const T* w = weight.data();
    const T* go = grad_out.data();
    for (std::size_t b = 0; b < B; ++b) {
        const T* gpx = go + b * Out;
        if (grad_bias)
            for (std::size_t o = 0; o < Out; ++o) (*grad_bias)[o] += gpx[o];
        for (std::size_t i = 0; i < In; ++i) {
            const T* wrow = w + i * Out;
            T acc = T(0);
            if (grad_weight) {
                T* gw = grad_weight->data() + i * Out;
                const T v = in[b * In + i];
                for (std::size_t o = 0; o < Out; ++o) {
                    gw[o] += v * gpx[o];
                    acc += wrow[o] * gpx[o];
                }
            } else {
                for (std::size_t o = 0; o < Out; ++o) acc += wrow[o] * gpx[o];
            }
            if (grad_input) grad_input->data()[b * In + i] = acc;
        }
    }
}

// ---------------------------------------------------------------------------
// Dropout (inverted scaling; identity when not training)

template <typename T>
Tensor4<T> dropout_forward(const Tensor4<T>& input, double rate, bool training,
                           std::mt19937_64& rng, std::vector<std::uint8_t>* mask = nullptr) {
    if (rate < 0.0 || rate >= 1.0) throw InputError("dropout: rate must be in [0,1)");
    if (!training || rate == 0.0) {
        if (mask) mask->assign(input.size(), 1);
        return input;
    }
    Tensor4<T> out = input;
    if (mask) mask->assign(input.size(), 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const T scale = T(1.0 / (1.0 - rate));
    T* o = out.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (u(rng) < rate) {
            o[i] = T(0);
            if (mask) (*mask)[i] = 0;
        } else {
            o[i] *= scale;
        }
    }
    return out;
}

template <typename T>
Tensor4<T> dropout_backward(const std::vector<std::uint8_t>& mask, double rate,
                            const Tensor4<T>& grad_out) {
    Tensor4<T> gin = grad_out;
    const T scale = T(1.0 / (1.0 - rate));
    T* g = gin.data();
    for (std::size_t i = 0; i < gin.size(); ++i) g[i] = mask[i] ? g[i] * scale : T(0);
    return gin;
}

// ---------------------------------------------------------------------------
// Softmax + cross-entropy

template <typename T>
Tensor4<T> softmax_rows(const Tensor4<T>& logits) {
    const auto& d = logits.dims();
    const std::size_t B = d[0], K = d[1] * d[2] * d[3];
    Tensor4<T> out(d[0], d[1], d[2], d[3]);
    for (std::size_t b = 0; b < B; ++b) {
        const T* row = logits.data() + b * K;
        T* orow = out.data() + b * K;
        T mx = row[0];
        for (std::size_t k = 1; k < K; ++k) mx = std::max(mx, row[k]);
        T sum = T(0);
        for (std::size_t k = 0; k < K; ++k) {
            orow[k] = std::exp(row[k] - mx);
            sum += orow[k];
        }
        for (std::size_t k = 0; k < K; ++k) orow[k] /= sum;
    }
    return out;
}

// Mean cross-entropy over the batch; grad (if requested) is d(loss)/d(logits).
template <typename T>
double softmax_cross_entropy(const Tensor4<T>& logits, const std::vector<int>& labels,
                             Tensor4<T>* grad_logits = nullptr) {
    const auto& d = logits.dims();
    const std::size_t B = d[0], K = d[1] * d[2] * d[3];
    if (labels.size() != B) throw ShapeError("cross-entropy: labels/batch mismatch");
    for (int l : labels)
        if (l < 0 || static_cast<std::size_t>(l) >= K)
            throw InputError("cross-entropy: label out of range");
    Tensor4<T> probs = softmax_rows(logits);
    double loss = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
        const T p = probs.data()[b * K + static_cast<std::size_t>(labels[b])];
        loss -= std::log(std::max(static_cast<double>(p), 1e-300));
    }
    loss /= static_cast<double>(B);
    if (grad_logits) {
        *grad_logits = probs;
        T* g = grad_logits->data();
        const T inv_b = T(1) / static_cast<T>(B);
        for (std::size_t b = 0; b < B; ++b) {
            g[b * K + static_cast<std::size_t>(labels[b])] -= T(1);
            for (std::size_t k = 0; k < K; ++k) g[b * K + k] *= inv_b;
        }
    }
    return loss;
}

}  // namespace wsearch
