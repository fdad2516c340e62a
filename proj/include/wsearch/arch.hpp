#pragma once

// Symbolic architecture description: ordered layer descriptors, downsampling
// segmentation, channel schedules, parameter and MAC counting. Everything here
// is pure and cheap; weight tensors live in NetworkInstance.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "wsearch/errors.hpp"

namespace wsearch {

enum class BlockKind { Conv, Basic, Bottleneck, MaxPool, AvgPool };

// Identity: classic convention, 1x1 projection only where channels change.
// Projection: 1x1 projection on every block (the search-time convention).
enum class ShortcutKind { None, Identity, Projection };

struct LayerDesc {
    BlockKind kind = BlockKind::Conv;
    std::vector<int> widths;  // original widths: 1 per conv layer inside this entry
    int kernel = 3;           // square kernels
    int stride = 1;
    bool downsample = false;  // explicit marker for pools; strided convs imply it
    ShortcutKind shortcut = ShortcutKind::None;
    double dropout = 0.0;     // post-activation dropout (VGG fixture)

    int conv_count() const;
    bool is_pool() const { return kind == BlockKind::MaxPool || kind == BlockKind::AvgPool; }
    bool downsamples() const { return is_pool() ? downsample : stride > 1; }
};

struct ArchitectureSpec {
    std::string name;
    int input_h = 32, input_w = 32, input_c = 3;
    int classes = 10;
    bool batch_norm = true;  // BN after every conv; convs then carry no bias
    bool conv_bias = false;  // bias on convs (used when batch_norm is off)
    int head_hidden = 0;     // optional hidden dense layer before the classifier
    double head_dropout = 0.0;
    std::vector<LayerDesc> layers;

    int conv_layer_count() const;  // N
    bool has_bottleneck() const;
    bool has_identity_shortcut() const;
    std::vector<int> original_widths() const;
    void validate() const;
};

struct ChannelSchedule {
    std::vector<int> widths;  // one per conv layer, even, >= 2

    int size() const { return static_cast<int>(widths.size()); }
    bool operator==(const ChannelSchedule&) const = default;
};

struct SegmentInfo {
    std::vector<int> boundaries;  // K_i: conv layers before the i-th downsampling
    int segment_count = 1;        // n
};

// Boundaries strictly inside (0, N); a downsampling op after the last conv
// layer does not split any segment and is dropped.
SegmentInfo segment_boundaries(const ArchitectureSpec& spec);

// Throws InputError on length mismatch, odd or < 2 widths, or a broken 1:1:4
// ratio inside a bottleneck block.
void validate_schedule(const ArchitectureSpec& spec, const ChannelSchedule& schedule);

// Trainable parameters: conv kernels (+bias where configured), batch-norm
// scale/shift, projection shortcuts, dense layers.
std::uint64_t param_count(const ArchitectureSpec& spec, const ChannelSchedule& schedule);

// Multiply-accumulate count of all conv and dense layers for one input at the
// spec's resolution.
std::uint64_t flop_count(const ArchitectureSpec& spec, const ChannelSchedule& schedule);

ChannelSchedule original_schedule(const ArchitectureSpec& spec);
ChannelSchedule uniform_schedule(const ArchitectureSpec& spec, int width);

// Half the minimum original width, made even (>= 2).
int default_base_width(const ArchitectureSpec& spec);

// JSON spec and schedule files.
ArchitectureSpec load_spec(const std::string& path);
void save_spec(const ArchitectureSpec& spec, const std::string& path);
ChannelSchedule load_schedule(const std::string& path);
void save_schedule(const ChannelSchedule& schedule, const std::string& path);

std::string_view to_string(BlockKind k);
std::string_view to_string(ShortcutKind k);

namespace fixtures {

// Bundled specs. resnet18/resnet34 use the search-time projection convention;
// resnet18_identity is the classic CIFAR basic-block convention kept for
// parameter-count comparisons.
ArchitectureSpec resnet18();
ArchitectureSpec resnet18_identity();
ArchitectureSpec resnet34();
ArchitectureSpec vgg16();
ArchitectureSpec plain_cnn();

// Accepts the names above ("resnet18", "resnet18-identity", "resnet34",
// "vgg16", "plain-cnn"); throws InputError otherwise.
ArchitectureSpec by_name(std::string_view name);
std::vector<std::string> names();

}  // namespace fixtures

}  // namespace wsearch
