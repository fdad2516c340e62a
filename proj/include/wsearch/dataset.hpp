#pragma once

// Dataset ingestion (CIFAR-style binary records, seeded synthetic generator),
// stratified splitting, channel normalization and training-time augmentation.

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "wsearch/tensor.hpp"

namespace wsearch {

struct LabeledDataset {
    Tensor4<float> images;   // (count, h, w, c); [0,1] before normalization
    std::vector<int> labels;
    int class_count = 0;

    int count() const { return static_cast<int>(labels.size()); }
    void validate() const;
};

// CIFAR binary layout: per record one label byte (two for 100 classes, the
// fine label is the second byte) followed by 32*32 pixels in channel planes.
LabeledDataset load_binary_dataset(const std::string& path, int class_count);
void save_binary_dataset(const LabeledDataset& data, const std::string& path);

// Class-conditional Gaussian blob patterns a small CNN can separate; classes
// balanced to within one sample.
LabeledDataset synthetic_dataset(std::uint64_t seed, int count, int classes, int height,
                                 int width, int channels);

// Per-class proportional holdout (largest-remainder quotas); disjoint and
// exhaustive.
std::pair<LabeledDataset, LabeledDataset> stratified_split(const LabeledDataset& data,
                                                           int holdout, std::uint64_t seed);

struct ChannelStats {
    std::vector<float> mean, stddev;
};

ChannelStats channel_stats(const LabeledDataset& data);

LabeledDataset normalize(const LabeledDataset& data, const std::vector<float>& means,
                         const std::vector<float>& stds);

struct AugmentConfig {
    int pad = 4;
    int crop = 32;
    bool flip = true;
    int cutout = 0;  // square mask side; 0 disables
};

// zero-pad -> random crop -> random horizontal flip -> optional cutout mask.
Tensor4<float> augment(const Tensor4<float>& batch, const AugmentConfig& cfg,
                       std::mt19937_64& rng);

// In-place horizontal mirror of one image in a batch (an involution).
void flip_horizontal(Tensor4<float>& batch, int index);

// Gather a training batch by dataset indices.
Tensor4<float> gather_images(const LabeledDataset& data, const std::vector<int>& indices);
std::vector<int> gather_labels(const LabeledDataset& data, const std::vector<int>& indices);

}  // namespace wsearch
