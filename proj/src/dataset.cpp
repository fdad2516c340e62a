#include "wsearch/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "wsearch/errors.hpp"
#include "wsearch/rng.hpp"

namespace wsearch {

namespace {
constexpr int kCifarDim = 32;
constexpr int kCifarChannels = 3;
constexpr std::size_t kCifarPixels = kCifarDim * kCifarDim * kCifarChannels;
}  // namespace

void LabeledDataset::validate() const {
    if (images.dims()[0] != labels.size())
        throw InputError("dataset: images/labels length mismatch");
    if (class_count < 1) throw InputError("dataset: class_count must be >= 1");
    for (int l : labels)
        if (l < 0 || l >= class_count) throw InputError("dataset: label out of range");
}

LabeledDataset load_binary_dataset(const std::string& path, int class_count) {
    if (class_count != 10 && class_count != 100)
        throw InputError("load_binary_dataset: class_count must be 10 or 100");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open dataset '" + path + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    const std::size_t label_bytes = class_count == 100 ? 2 : 1;
    const std::size_t record = label_bytes + kCifarPixels;
    if (bytes.empty() || bytes.size() % record != 0)
        throw FormatError("dataset '" + path + "': size " + std::to_string(bytes.size()) +
                          " is not a multiple of the record size " + std::to_string(record));
    const std::size_t n = bytes.size() / record;

    LabeledDataset data;
    data.class_count = class_count;
    data.images = Tensor4<float>(n, kCifarDim, kCifarDim, kCifarChannels);
    data.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned char* rec = bytes.data() + i * record;
        const int label = rec[label_bytes - 1];  // fine label for 100 classes
        if (label >= class_count)
            throw FormatError("dataset '" + path + "': label " + std::to_string(label) +
                              " out of range");
        data.labels[i] = label;
        const unsigned char* px = rec + label_bytes;
        for (int c = 0; c < kCifarChannels; ++c)
            for (int y = 0; y < kCifarDim; ++y)
                for (int x = 0; x < kCifarDim; ++x)
                    data.images(i, y, x, c) =
                        static_cast<float>(px[(c * kCifarDim + y) * kCifarDim + x]) / 255.0f;
    }
    return data;
}

void save_binary_dataset(const LabeledDataset& data, const std::string& path) {
    data.validate();
    const auto& d = data.images.dims();
    if (d[1] != kCifarDim || d[2] != kCifarDim || d[3] != kCifarChannels)
        throw InputError("save_binary_dataset: images must be 32x32x3");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write dataset '" + path + "'");
    const std::size_t label_bytes = data.class_count == 100 ? 2 : 1;
    for (int i = 0; i < data.count(); ++i) {
        if (label_bytes == 2) out.put(0);  // coarse label slot, unused
        out.put(static_cast<char>(data.labels[i]));
        for (int c = 0; c < kCifarChannels; ++c)
            for (int y = 0; y < kCifarDim; ++y)
                for (int x = 0; x < kCifarDim; ++x) {
                    const float v = data.images(i, y, x, c) * 255.0f;
                    out.put(static_cast<char>(std::lround(std::clamp(v, 0.0f, 255.0f))));
                }
    }
}

LabeledDataset synthetic_dataset(std::uint64_t seed, int count, int classes, int height,
                                 int width, int channels) {
    if (classes < 2) throw InputError("synthetic_dataset: need >= 2 classes");
    if (count < classes) throw InputError("synthetic_dataset: count must be >= classes");
    LabeledDataset data;
    data.class_count = classes;
    data.images = Tensor4<float>(count, height, width, channels);
    data.labels.resize(count);

    std::mt19937_64 rng = make_stream(seed, "synthetic");
    std::normal_distribution<double> noise(0.0, 0.08);

    // One Gaussian bump per class, centers spread on a circle, per-channel
    // amplitude varying with class so channels carry signal too.
    const double cy0 = height / 2.0, cx0 = width / 2.0;
    const double r = std::min(height, width) / 4.0;
    const double sigma = std::min(height, width) / 5.0;
    for (int i = 0; i < count; ++i) {
        const int k = i % classes;  // balanced within one
        data.labels[i] = k;
        const double angle = 2.0 * 3.14159265358979323846 * k / classes;
        const double cy = cy0 + r * std::sin(angle), cx = cx0 + r * std::cos(angle);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
                const double bump = std::exp(-d2 / (2.0 * sigma * sigma));
                for (int c = 0; c < channels; ++c) {
                    const double amp = 0.35 * (0.5 + 0.5 * std::cos(angle + c));
                    double v = 0.5 + amp * bump + noise(rng);
                    data.images(i, y, x, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
                }
            }
    }
    return data;
}

namespace {

LabeledDataset take(const LabeledDataset& data, const std::vector<int>& idx) {
    const auto& d = data.images.dims();
    LabeledDataset out;
    out.class_count = data.class_count;
    out.labels.reserve(idx.size());
    if (idx.empty()) {
        out.images = Tensor4<float>();
        return out;
    }
    out.images = Tensor4<float>(idx.size(), d[1], d[2], d[3]);
    const std::size_t px = d[1] * d[2] * d[3];
    for (std::size_t i = 0; i < idx.size(); ++i) {
        std::copy_n(data.images.data() + static_cast<std::size_t>(idx[i]) * px, px,
                    out.images.data() + i * px);
        out.labels.push_back(data.labels[static_cast<std::size_t>(idx[i])]);
    }
    return out;
}

}  // namespace

std::pair<LabeledDataset, LabeledDataset> stratified_split(const LabeledDataset& data,
                                                           int holdout, std::uint64_t seed) {
    data.validate();
    if (holdout < 0 || holdout > data.count())
        throw InputError("stratified_split: holdout outside [0, count]");

    std::vector<std::vector<int>> by_class(static_cast<std::size_t>(data.class_count));
    for (int i = 0; i < data.count(); ++i)
        by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);

    // Largest-remainder quotas keep per-class proportions within one sample.
    const double frac = data.count() ? static_cast<double>(holdout) / data.count() : 0.0;
    std::vector<int> quota(by_class.size());
    std::vector<std::pair<double, std::size_t>> rema;
    int assigned = 0;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        const double exact = frac * static_cast<double>(by_class[c].size());
        quota[c] = static_cast<int>(exact);
        assigned += quota[c];
        rema.push_back({exact - quota[c], c});
    }
    std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    for (std::size_t i = 0; assigned < holdout && i < rema.size(); ++i) {
        const std::size_t c = rema[i].second;
        if (quota[c] < static_cast<int>(by_class[c].size())) {
            ++quota[c];
            ++assigned;
        }
    }
    if (assigned != holdout)
        throw InputError("stratified_split: infeasible stratification");

    std::mt19937_64 rng = make_stream(seed, "split");
    std::vector<int> val_idx, train_idx;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& pool = by_class[c];
        // Fisher-Yates prefix selection
        for (int i = 0; i < quota[c]; ++i) {
            std::uniform_int_distribution<std::size_t> u(static_cast<std::size_t>(i),
                                                         pool.size() - 1);
            std::swap(pool[static_cast<std::size_t>(i)], pool[u(rng)]);
        }
        val_idx.insert(val_idx.end(), pool.begin(), pool.begin() + quota[c]);
        train_idx.insert(train_idx.end(), pool.begin() + quota[c], pool.end());
    }
    std::sort(val_idx.begin(), val_idx.end());
    std::sort(train_idx.begin(), train_idx.end());
    return {take(data, train_idx), take(data, val_idx)};
}

ChannelStats channel_stats(const LabeledDataset& data) {
    const auto& d = data.images.dims();
    const std::size_t n = d[0] * d[1] * d[2], C = d[3];
    if (n == 0) throw InputError("channel_stats: empty dataset");
    ChannelStats s;
    s.mean.assign(C, 0.0f);
    s.stddev.assign(C, 0.0f);
    std::vector<double> mean(C, 0.0), var(C, 0.0);
    const float* px = data.images.data();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < C; ++c) mean[c] += px[i * C + c];
    for (std::size_t c = 0; c < C; ++c) mean[c] /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < C; ++c) {
            const double dlt = px[i * C + c] - mean[c];
            var[c] += dlt * dlt;
        }
    for (std::size_t c = 0; c < C; ++c) {
        s.mean[c] = static_cast<float>(mean[c]);
        s.stddev[c] = static_cast<float>(std::sqrt(var[c] / static_cast<double>(n)));
    }
    return s;
}

LabeledDataset normalize(const LabeledDataset& data, const std::vector<float>& means,
                         const std::vector<float>& stds) {
    const auto& d = data.images.dims();
    const std::size_t C = d[3];
    if (means.size() != C || stds.size() != C)
        throw InputError("normalize: stats length does not match channels");
    for (float s : stds)
        if (!(s > 0.0f)) throw InputError("normalize: stds must be > 0");
    LabeledDataset out = data;
    float* px = out.images.data();
    const std::size_t n = d[0] * d[1] * d[2];
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < C; ++c) px[i * C + c] = (px[i * C + c] - means[c]) / stds[c];
    return out;
}

void flip_horizontal(Tensor4<float>& batch, int index) {
    const auto& d = batch.dims();
    const std::size_t H = d[1], W = d[2], C = d[3];
    for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W / 2; ++x)
            for (std::size_t c = 0; c < C; ++c)
                std::swap(batch(static_cast<std::size_t>(index), y, x, c),
                          batch(static_cast<std::size_t>(index), y, W - 1 - x, c));
}

Tensor4<float> augment(const Tensor4<float>& batch, const AugmentConfig& cfg,
                       std::mt19937_64& rng) {
    const auto& d = batch.dims();
    const int B = static_cast<int>(d[0]), H = static_cast<int>(d[1]),
              W = static_cast<int>(d[2]), C = static_cast<int>(d[3]);
    const int PH = H + 2 * cfg.pad, PW = W + 2 * cfg.pad;
    if (cfg.crop > PH || cfg.crop > PW)
        throw InputError("augment: crop larger than padded image");

    Tensor4<float> out(static_cast<std::size_t>(B), static_cast<std::size_t>(cfg.crop),
                       static_cast<std::size_t>(cfg.crop), static_cast<std::size_t>(C));
    std::uniform_int_distribution<int> off_y(0, PH - cfg.crop), off_x(0, PW - cfg.crop);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    for (int b = 0; b < B; ++b) {
        const int oy = cfg.pad > 0 || cfg.crop < PH ? off_y(rng) : 0;
        const int ox = cfg.pad > 0 || cfg.crop < PW ? off_x(rng) : 0;
        for (int y = 0; y < cfg.crop; ++y) {
            const int sy = y + oy - cfg.pad;
            for (int x = 0; x < cfg.crop; ++x) {
                const int sx = x + ox - cfg.pad;
                if (sy < 0 || sy >= H || sx < 0 || sx >= W) continue;  // zero padding
                for (int c = 0; c < C; ++c)
                    out(static_cast<std::size_t>(b), static_cast<std::size_t>(y),
                        static_cast<std::size_t>(x), static_cast<std::size_t>(c)) =
                        batch(static_cast<std::size_t>(b), static_cast<std::size_t>(sy),
                              static_cast<std::size_t>(sx), static_cast<std::size_t>(c));
            }
        }
        if (cfg.flip && coin(rng) < 0.5) flip_horizontal(out, b);
        if (cfg.cutout > 0) {
            std::uniform_int_distribution<int> cy(0, cfg.crop - 1), cx(0, cfg.crop - 1);
            const int my = cy(rng), mx = cx(rng), half = cfg.cutout / 2;
            const int y0 = std::max(0, my - half), y1 = std::min(cfg.crop, my - half + cfg.cutout);
            const int x0 = std::max(0, mx - half), x1 = std::min(cfg.crop, mx - half + cfg.cutout);
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x)
                    for (int c = 0; c < C; ++c)
                        out(static_cast<std::size_t>(b), static_cast<std::size_t>(y),
                            static_cast<std::size_t>(x), static_cast<std::size_t>(c)) = 0.0f;
        }
    }
    return out;
}

Tensor4<float> gather_images(const LabeledDataset& data, const std::vector<int>& indices) {
    const auto& d = data.images.dims();
    Tensor4<float> out(indices.size(), d[1], d[2], d[3]);
    const std::size_t px = d[1] * d[2] * d[3];
    for (std::size_t i = 0; i < indices.size(); ++i)
        std::copy_n(data.images.data() + static_cast<std::size_t>(indices[i]) * px, px,
                    out.data() + i * px);
    return out;
}

std::vector<int> gather_labels(const LabeledDataset& data, const std::vector<int>& indices) {
    std::vector<int> out;
    out.reserve(indices.size());
    for (int i : indices) out.push_back(data.labels[static_cast<std::size_t>(i)]);
    return out;
}

}  // namespace wsearch
