#pragma once

// Independent reference implementations the test suites check against. These
// deliberately mirror the textbook definitions, not the production kernels.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "wsearch/network.hpp"
#include "wsearch/tensor.hpp"

namespace oracles {

// Direct cross-correlation: six nested loops over output position and kernel
// support, with explicit bounds checks for the zero padding.
template <typename T>
wsearch::Tensor4<T> reference_conv2d(const wsearch::Tensor4<T>& input,
                                     const wsearch::Tensor4<T>& weights, int stride,
                                     int padding) {
    const auto& id = input.dims();
    const auto& wd = weights.dims();
    const int B = static_cast<int>(id[0]), H = static_cast<int>(id[1]),
              W = static_cast<int>(id[2]), C = static_cast<int>(id[3]);
    const int K1 = static_cast<int>(wd[0]), K2 = static_cast<int>(wd[1]),
              F = static_cast<int>(wd[3]);
    const int OH = (H + 2 * padding - K1) / stride + 1;
    const int OW = (W + 2 * padding - K2) / stride + 1;
    wsearch::Tensor4<T> out(B, OH, OW, F);
    for (int b = 0; b < B; ++b)
        for (int f = 0; f < F; ++f)
            for (int oy = 0; oy < OH; ++oy)
                for (int ox = 0; ox < OW; ++ox) {
                    double acc = 0.0;
                    for (int ky = 0; ky < K1; ++ky)
                        for (int kx = 0; kx < K2; ++kx)
                            for (int c = 0; c < C; ++c) {
                                const int iy = oy * stride - padding + ky;
                                const int ix = ox * stride - padding + kx;
                                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                                acc += static_cast<double>(input(b, iy, ix, c)) *
                                       static_cast<double>(weights(ky, kx, c, f));
                            }
                    out(b, oy, ox, f) = static_cast<T>(acc);
                }
    return out;
}

// Central finite differences over every trainable parameter. Returns the
// largest relative error against the analytic gradients. `loss_fn` must be a
// pure function of the current parameters.
inline double max_gradient_rel_error(wsearch::NetworkInstance<double>& net,
                                     const wsearch::Tensor4<double>& batch,
                                     const std::vector<int>& labels, double h = 1e-5) {
    auto loss_at = [&]() {
        // fixed rng so dropout masks match across evaluations
        std::mt19937_64 rng(12345);
        wsearch::Tensor4<double> logits =
            net.forward(batch, /*training=*/true, &rng, nullptr, /*update_running=*/false);
        return wsearch::softmax_cross_entropy(logits, labels, nullptr);
    };

    wsearch::NetworkInstance<double> grads = net.gradient_like();
    {
        std::mt19937_64 rng(12345);
        net.backward(batch, labels, /*training=*/true, &rng, grads, /*update_running=*/false);
    }

    auto wrefs = net.params(false);
    auto grefs = grads.params(false);
    double worst = 0.0;
    for (std::size_t p = 0; p < wrefs.size(); ++p) {
        for (std::size_t j = 0; j < wrefs[p].values.size(); ++j) {
            double& w = wrefs[p].values[j];
            const double saved = w;
            w = saved + h;
            const double up = loss_at();
            w = saved - h;
            const double down = loss_at();
            w = saved;
            const double fd = (up - down) / (2.0 * h);
            const double an = grefs[p].values[j];
            const double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-6});
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

// Growth functions recomputed in extended precision straight from their
// closed forms.
inline long double reference_growth(char tag, long double x, long double n, long double lam,
                                    const std::vector<int>& boundaries) {
    const long double a = lam + 1.0L;
    switch (tag) {
        case 'a': return lam * (std::pow(a, x) - 1.0L) / (std::pow(a, n) - 1.0L);
        case 'b': return lam * (std::pow(a, n - x) - 1.0L) / (std::pow(a, n) - 1.0L);
        case 'c': return lam / n * x;
        case 'd': return lam - lam / n * x;
        case 'e':
            return lam * (std::pow(a, n) - std::pow(a, n - x)) / (std::pow(a, n) - 1.0L);
        case 'f':
            return lam * (std::pow(a, n) - std::pow(a, x)) / (std::pow(a, n) - 1.0L);
        case 'g':
        case 'h': {
            int s = 1;
            for (int k : boundaries)
                if (x > static_cast<long double>(k)) ++s;
            const int segs = static_cast<int>(boundaries.size()) + 1;
            const int e = tag == 'g' ? segs - s : s - 1;
            return lam / std::pow(2.0L, static_cast<long double>(e));
        }
        default: return lam / 2.0L;  // const
    }
}

// MAC count by explicit enumeration of output positions.
inline std::uint64_t reference_conv_macs(int h, int w, int kernel, int stride, int padding,
                                         int cin, int cout) {
    std::uint64_t macs = 0;
    const int oh = (h + 2 * padding - kernel) / stride + 1;
    const int ow = (w + 2 * padding - kernel) / stride + 1;
    for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
            (void)oy;
            (void)ox;
            macs += static_cast<std::uint64_t>(kernel) * kernel * cin * cout;
        }
    return macs;
}

}  // namespace oracles
