#pragma once

// Child-training loop: SGD with Nesterov momentum under the SGDR schedule,
// L2 decay on conv/dense kernels, optional per-batch augmentation.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "wsearch/dataset.hpp"
#include "wsearch/errors.hpp"
#include "wsearch/network.hpp"
#include "wsearch/sgdr.hpp"

namespace wsearch {

struct TrainConfig {
    int batch_size = 128;
    double momentum = 0.9;
    double l_max = 0.05;
    double t0 = 1.0;
    double t_mult = 2.0;
    double weight_decay = 1e-4;
    int epochs = 15;

    void validate() const {
        if (batch_size < 1) throw InputError("train: batch_size must be >= 1");
        if (momentum < 0.0 || momentum >= 1.0) throw InputError("train: momentum outside [0,1)");
        if (l_max < 0.0) throw InputError("train: l_max must be >= 0");
        if (t0 < 1.0 || t_mult < 1.0) throw InputError("train: need t0 >= 1, t_mult >= 1");
        if (epochs < 0) throw InputError("train: epochs must be >= 0");
    }
};

struct TrainResult {
    std::vector<double> epoch_loss;  // mean training loss per epoch
};

// Trains in place. The SGDR position starts at cumulative epoch 0 (each call
// is a fresh schedule). Deterministic given the rng state.
template <typename T>
TrainResult train(NetworkInstance<T>& net, const LabeledDataset& data, const TrainConfig& cfg,
                  std::mt19937_64 rng, const AugmentConfig* aug = nullptr) {
    cfg.validate();
    data.validate();
    if (data.count() == 0) throw InputError("train: dataset is empty");

    NetworkInstance<T> grads = net.gradient_like();
    NetworkInstance<T> velocity = net.gradient_like();
    TrainResult result;

    std::vector<int> order(static_cast<std::size_t>(data.count()));
    for (int i = 0; i < data.count(); ++i) order[static_cast<std::size_t>(i)] = i;
    const int batches = (data.count() + cfg.batch_size - 1) / cfg.batch_size;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) {
            std::uniform_int_distribution<std::size_t> u(0, i - 1);
            std::swap(order[i - 1], order[u(rng)]);
        }
        double epoch_loss = 0.0;
        for (int b = 0; b < batches; ++b) {
            const int lo = b * cfg.batch_size;
            const int hi = std::min(lo + cfg.batch_size, data.count());
            std::vector<int> idx(order.begin() + lo, order.begin() + hi);
            Tensor4<float> images = gather_images(data, idx);
            if (aug) images = augment(images, *aug, rng);
            Tensor4<T> batch = images.template cast<T>();
            std::vector<int> labels = gather_labels(data, idx);

            auto grefs = grads.params(true);
            for (auto& g : grefs) std::fill(g.values.begin(), g.values.end(), T(0));
            const double loss = net.backward(batch, labels, /*training=*/true, &rng, grads);
            if (!std::isfinite(loss)) throw TrainingError("training diverged", epoch);
            epoch_loss += loss;

            const double cum = epoch + static_cast<double>(b) / batches;
            const T lr = static_cast<T>(sgdr_rate_at(cum, cfg.t0, cfg.t_mult, cfg.l_max));
            const T mu = static_cast<T>(cfg.momentum);
            const T wd = static_cast<T>(cfg.weight_decay);

            auto wrefs = net.params(false);
            auto gref = grads.params(false);
            auto vref = velocity.params(false);
            for (std::size_t p = 0; p < wrefs.size(); ++p) {
                T* w = wrefs[p].values.data();
                T* g = gref[p].values.data();
                T* v = vref[p].values.data();
                const bool decay = wrefs[p].decay;
                for (std::size_t j = 0; j < wrefs[p].values.size(); ++j) {
                    T gj = g[j];
                    if (decay) gj += wd * w[j];
                    v[j] = mu * v[j] + gj;
                    w[j] -= lr * (gj + mu * v[j]);  // Nesterov
                }
            }
        }
        result.epoch_loss.push_back(epoch_loss / batches);
    }
    return result;
}

// Fraction of argmax predictions matching the labels (evaluation mode).
template <typename T>
double accuracy(NetworkInstance<T>& net, const LabeledDataset& data, int batch_size = 256) {
    data.validate();
    if (data.count() == 0) throw InputError("accuracy: dataset is empty");
    int correct = 0;
    for (int lo = 0; lo < data.count(); lo += batch_size) {
        const int hi = std::min(lo + batch_size, data.count());
        std::vector<int> idx;
        for (int i = lo; i < hi; ++i) idx.push_back(i);
        Tensor4<T> batch = gather_images(data, idx).template cast<T>();
        Tensor4<T> logits = net.forward(batch, /*training=*/false);
        const std::size_t K = logits.dims()[3];
        for (int i = 0; i < hi - lo; ++i) {
            const T* row = logits.data() + static_cast<std::size_t>(i) * K;
            std::size_t best = 0;
            for (std::size_t k = 1; k < K; ++k)
                if (row[k] > row[best]) best = k;
            if (static_cast<int>(best) == data.labels[static_cast<std::size_t>(lo + i)]) ++correct;
        }
    }
    return static_cast<double>(correct) / data.count();
}

}  // namespace wsearch
