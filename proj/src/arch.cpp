#include "wsearch/arch.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

namespace wsearch {

using nlohmann::json;

int LayerDesc::conv_count() const {
    switch (kind) {
        case BlockKind::Conv: return 1;
        case BlockKind::Basic: return 2;
        case BlockKind::Bottleneck: return 3;
        default: return 0;
    }
}

int ArchitectureSpec::conv_layer_count() const {
    int n = 0;
    for (const auto& l : layers) n += l.conv_count();
    return n;
}

bool ArchitectureSpec::has_bottleneck() const {
    return std::any_of(layers.begin(), layers.end(),
                       [](const LayerDesc& l) { return l.kind == BlockKind::Bottleneck; });
}

bool ArchitectureSpec::has_identity_shortcut() const {
    return std::any_of(layers.begin(), layers.end(),
                       [](const LayerDesc& l) { return l.shortcut == ShortcutKind::Identity; });
}

std::vector<int> ArchitectureSpec::original_widths() const {
    std::vector<int> out;
    for (const auto& l : layers)
        for (int w : l.widths) out.push_back(w);
    return out;
}

void ArchitectureSpec::validate() const {
    if (input_h < 1 || input_w < 1 || input_c < 1) throw InputError("spec: bad input dims");
    if (classes < 2) throw InputError("spec: need at least 2 classes");
    if (conv_layer_count() < 1) throw InputError("spec: need at least one conv layer");
    for (const auto& l : layers) {
        if (static_cast<int>(l.widths.size()) != l.conv_count())
            throw InputError("spec: layer width count does not match its kind");
        for (int w : l.widths)
            if (w < 1) throw InputError("spec: widths must be >= 1");
        if (l.stride < 1) throw InputError("spec: stride must be >= 1");
        if (l.kernel < 1) throw InputError("spec: kernel must be >= 1");
        if (l.dropout < 0.0 || l.dropout >= 1.0) throw InputError("spec: dropout outside [0,1)");
        const bool is_block = l.kind == BlockKind::Basic || l.kind == BlockKind::Bottleneck;
        if (is_block && l.shortcut == ShortcutKind::None)
            throw InputError("spec: residual blocks need a shortcut kind");
        if (!is_block && l.shortcut != ShortcutKind::None)
            throw InputError("spec: shortcut kinds only apply to residual blocks");
    }
    if (head_hidden < 0) throw InputError("spec: head_hidden must be >= 0");
}

SegmentInfo segment_boundaries(const ArchitectureSpec& spec) {
    spec.validate();
    const int n_conv = spec.conv_layer_count();
    SegmentInfo info;
    int seen = 0;
    for (const auto& l : spec.layers) {
        // A strided conv/block is itself the downsampling op: the boundary
        // counts the convs strictly before it. Pools sit between convs.
        if (l.downsamples()) {
            const int k = seen;
            if (k > 0 && k < n_conv &&
                (info.boundaries.empty() || info.boundaries.back() != k))
                info.boundaries.push_back(k);
        }
        seen += l.conv_count();
    }
    info.segment_count = static_cast<int>(info.boundaries.size()) + 1;
    return info;
}

void validate_schedule(const ArchitectureSpec& spec, const ChannelSchedule& schedule) {
    if (schedule.size() != spec.conv_layer_count())
        throw InputError("schedule: length " + std::to_string(schedule.size()) +
                         " does not match spec conv layers " +
                         std::to_string(spec.conv_layer_count()));
    for (int w : schedule.widths) {
        if (w < 2) throw InputError("schedule: widths must be >= 2");
        if (w % 2 != 0) throw InputError("schedule: width " + std::to_string(w) + " is odd");
    }
    int i = 0;
    for (const auto& l : spec.layers) {
        if (l.kind == BlockKind::Bottleneck) {
            const int w1 = schedule.widths[i], w2 = schedule.widths[i + 1],
                      w3 = schedule.widths[i + 2];
            if (w1 != w2 || w3 != 4 * w1)
                throw InputError("schedule: bottleneck block widths must follow 1:1:4");
        }
        i += l.conv_count();
    }
}

namespace {

struct CountWalk {
    std::uint64_t params = 0;
    std::uint64_t macs = 0;
    int cin, h, w;
    bool bias, bn;

    explicit CountWalk(const ArchitectureSpec& s)
        : cin(s.input_c), h(s.input_h), w(s.input_w),
          bias(s.conv_bias && !s.batch_norm), bn(s.batch_norm) {}

    void conv(int kernel, int width, int stride) {
        params += static_cast<std::uint64_t>(kernel) * kernel * cin * width;
        if (bias) params += static_cast<std::uint64_t>(width);
        if (bn) params += 2ULL * width;
        const int pad = kernel / 2;
        h = (h + 2 * pad - kernel) / stride + 1;
        w = (w + 2 * pad - kernel) / stride + 1;
        macs += static_cast<std::uint64_t>(h) * w * kernel * kernel * cin * width;
        cin = width;
    }

    void projection(int from, int to, int stride, int ph, int pw) {
        params += static_cast<std::uint64_t>(from) * to;
        if (bn) params += 2ULL * to;
        const int oh = (ph - 1) / stride + 1, ow = (pw - 1) / stride + 1;
        macs += static_cast<std::uint64_t>(oh) * ow * from * to;
    }

    void pool() {
        h /= 2;
        w /= 2;
    }

    void dense(int from, int to) {
        params += static_cast<std::uint64_t>(from) * to + to;
        macs += static_cast<std::uint64_t>(from) * to;
    }
};

void walk_counts(const ArchitectureSpec& spec, const ChannelSchedule& schedule, CountWalk& cw) {
    int i = 0;
    for (const auto& l : spec.layers) {
        switch (l.kind) {
            case BlockKind::Conv:
                cw.conv(l.kernel, schedule.widths[i], l.stride);
                break;
            case BlockKind::Basic: {
                const int block_in = cw.cin, ph = cw.h, pw = cw.w;
                cw.conv(l.kernel, schedule.widths[i], l.stride);
                cw.conv(l.kernel, schedule.widths[i + 1], 1);
                if (l.shortcut == ShortcutKind::Projection ||
                    (l.shortcut == ShortcutKind::Identity && block_in != cw.cin))
                    cw.projection(block_in, cw.cin, l.stride, ph, pw);
                break;
            }
            case BlockKind::Bottleneck: {
                const int block_in = cw.cin, ph = cw.h, pw = cw.w;
                cw.conv(1, schedule.widths[i], 1);
                cw.conv(l.kernel, schedule.widths[i + 1], l.stride);
                cw.conv(1, schedule.widths[i + 2], 1);
                if (l.shortcut == ShortcutKind::Projection ||
                    (l.shortcut == ShortcutKind::Identity && block_in != cw.cin))
                    cw.projection(block_in, cw.cin, l.stride, ph, pw);
                break;
            }
            case BlockKind::MaxPool:
            case BlockKind::AvgPool:
                cw.pool();
                break;
        }
        i += l.conv_count();
    }
    if (spec.head_hidden > 0) {
        cw.dense(cw.cin, spec.head_hidden);
        cw.dense(spec.head_hidden, spec.classes);
    } else {
        cw.dense(cw.cin, spec.classes);
    }
}

}  // namespace

std::uint64_t param_count(const ArchitectureSpec& spec, const ChannelSchedule& schedule) {
    spec.validate();
    if (schedule.size() != spec.conv_layer_count())
        throw InputError("param_count: schedule length mismatch");
    CountWalk cw(spec);
    walk_counts(spec, schedule, cw);
    return cw.params;
}

std::uint64_t flop_count(const ArchitectureSpec& spec, const ChannelSchedule& schedule) {
    spec.validate();
    if (schedule.size() != spec.conv_layer_count())
        throw InputError("flop_count: schedule length mismatch");
    CountWalk cw(spec);
    walk_counts(spec, schedule, cw);
    return cw.macs;
}

ChannelSchedule original_schedule(const ArchitectureSpec& spec) {
    return ChannelSchedule{spec.original_widths()};
}

ChannelSchedule uniform_schedule(const ArchitectureSpec& spec, int width) {
    return ChannelSchedule{std::vector<int>(static_cast<std::size_t>(spec.conv_layer_count()),
                                            width)};
}

int default_base_width(const ArchitectureSpec& spec) {
    const auto widths = spec.original_widths();
    const int mn = *std::min_element(widths.begin(), widths.end());
    int base = mn / 2;
    if (base % 2 != 0) ++base;
    return std::max(base, 2);
}

// ---------------------------------------------------------------------------
// JSON

std::string_view to_string(BlockKind k) {
    switch (k) {
        case BlockKind::Conv: return "conv";
        case BlockKind::Basic: return "basic";
        case BlockKind::Bottleneck: return "bottleneck";
        case BlockKind::MaxPool: return "maxpool";
        case BlockKind::AvgPool: return "avgpool";
    }
    return "?";
}

std::string_view to_string(ShortcutKind k) {
    switch (k) {
        case ShortcutKind::None: return "none";
        case ShortcutKind::Identity: return "identity";
        case ShortcutKind::Projection: return "projection";
    }
    return "?";
}

namespace {

BlockKind block_kind_from(const std::string& s) {
    if (s == "conv") return BlockKind::Conv;
    if (s == "basic") return BlockKind::Basic;
    if (s == "bottleneck") return BlockKind::Bottleneck;
    if (s == "maxpool") return BlockKind::MaxPool;
    if (s == "avgpool") return BlockKind::AvgPool;
    throw FormatError("spec: unknown layer kind '" + s + "'");
}

ShortcutKind shortcut_from(const std::string& s) {
    if (s == "none") return ShortcutKind::None;
    if (s == "identity") return ShortcutKind::Identity;
    if (s == "projection") return ShortcutKind::Projection;
    throw FormatError("spec: unknown shortcut kind '" + s + "'");
}

json spec_to_json(const ArchitectureSpec& spec) {
    json j;
    j["name"] = spec.name;
    j["input"] = {spec.input_h, spec.input_w, spec.input_c};
    j["classes"] = spec.classes;
    j["batch_norm"] = spec.batch_norm;
    j["conv_bias"] = spec.conv_bias;
    j["head_hidden"] = spec.head_hidden;
    j["head_dropout"] = spec.head_dropout;
    j["layers"] = json::array();
    for (const auto& l : spec.layers) {
        json e;
        e["kind"] = std::string(to_string(l.kind));
        if (!l.widths.empty()) e["widths"] = l.widths;
        if (l.conv_count() > 0) e["kernel"] = l.kernel;
        e["stride"] = l.stride;
        if (l.is_pool()) e["downsample"] = l.downsample;
        if (l.shortcut != ShortcutKind::None) e["shortcut"] = std::string(to_string(l.shortcut));
        if (l.dropout > 0.0) e["dropout"] = l.dropout;
        j["layers"].push_back(e);
    }
    return j;
}

ArchitectureSpec spec_from_json(const json& j) {
    ArchitectureSpec spec;
    spec.name = j.value("name", "");
    if (j.contains("input")) {
        const auto& in = j.at("input");
        if (!in.is_array() || in.size() != 3) throw FormatError("spec: input must be [h,w,c]");
        spec.input_h = in[0].get<int>();
        spec.input_w = in[1].get<int>();
        spec.input_c = in[2].get<int>();
    }
    spec.classes = j.value("classes", 10);
    spec.batch_norm = j.value("batch_norm", true);
    spec.conv_bias = j.value("conv_bias", false);
    spec.head_hidden = j.value("head_hidden", 0);
    spec.head_dropout = j.value("head_dropout", 0.0);
    if (!j.contains("layers") || !j.at("layers").is_array())
        throw FormatError("spec: missing layers array");
    for (const auto& e : j.at("layers")) {
        LayerDesc l;
        l.kind = block_kind_from(e.at("kind").get<std::string>());
        if (e.contains("widths")) l.widths = e.at("widths").get<std::vector<int>>();
        l.kernel = e.value("kernel", 3);
        l.stride = e.value("stride", l.is_pool() ? 2 : 1);
        l.downsample = e.value("downsample", l.is_pool());
        if (e.contains("shortcut")) l.shortcut = shortcut_from(e.at("shortcut").get<std::string>());
        l.dropout = e.value("dropout", 0.0);
        spec.layers.push_back(std::move(l));
    }
    spec.validate();
    return spec;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError("bad JSON in '" + path + "': " + e.what());
    }
    return j;
}

}  // namespace

ArchitectureSpec load_spec(const std::string& path) {
    try {
        return spec_from_json(read_json_file(path));
    } catch (const json::exception& e) {
        throw FormatError("bad spec file '" + path + "': " + e.what());
    }
}

void save_spec(const ArchitectureSpec& spec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << spec_to_json(spec).dump(2) << "\n";
}

ChannelSchedule load_schedule(const std::string& path) {
    const json j = read_json_file(path);
    if (!j.is_array()) throw FormatError("schedule file must be a JSON array of integers");
    ChannelSchedule s;
    try {
        s.widths = j.get<std::vector<int>>();
    } catch (const json::exception& e) {
        throw FormatError("bad schedule file '" + path + "': " + e.what());
    }
    return s;
}

void save_schedule(const ChannelSchedule& schedule, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << json(schedule.widths).dump() << "\n";
}

// ---------------------------------------------------------------------------
// Bundled fixtures

namespace fixtures {

namespace {

ArchitectureSpec resnet_cifar(const std::string& name, const std::vector<int>& blocks_per_stage,
                              ShortcutKind shortcut) {
    ArchitectureSpec spec;
    spec.name = name;
    spec.batch_norm = true;
    spec.conv_bias = false;
    int width = 64;
    for (std::size_t stage = 0; stage < blocks_per_stage.size(); ++stage) {
        for (int b = 0; b < blocks_per_stage[stage]; ++b) {
            LayerDesc l;
            l.kind = BlockKind::Basic;
            l.widths = {width, width};
            l.stride = (stage > 0 && b == 0) ? 2 : 1;
            l.shortcut = shortcut;
            spec.layers.push_back(std::move(l));
        }
        width *= 2;
    }
    return spec;
}

}  // namespace

ArchitectureSpec resnet18() {
    return resnet_cifar("resnet18", {2, 2, 2, 2}, ShortcutKind::Projection);
}

ArchitectureSpec resnet18_identity() {
    auto spec = resnet_cifar("resnet18-identity", {2, 2, 2, 2}, ShortcutKind::Identity);
    return spec;
}

ArchitectureSpec resnet34() {
    return resnet_cifar("resnet34", {3, 4, 6, 3}, ShortcutKind::Projection);
}

ArchitectureSpec vgg16() {
    ArchitectureSpec spec;
    spec.name = "vgg16";
    spec.batch_norm = false;
    spec.conv_bias = true;
    spec.head_hidden = 512;
    spec.head_dropout = 0.5;
    const std::vector<std::vector<int>> stages = {
        {64, 64}, {128, 128}, {256, 256, 256}, {512, 512, 512}, {512, 512, 512}};
    const std::vector<double> conv_dropout = {0.3, 0.4, 0.4, 0.4, 0.4};
    for (std::size_t s = 0; s < stages.size(); ++s) {
        for (int w : stages[s]) {
            LayerDesc l;
            l.kind = BlockKind::Conv;
            l.widths = {w};
            l.dropout = conv_dropout[s];
            spec.layers.push_back(std::move(l));
        }
        LayerDesc pool;
        pool.kind = BlockKind::MaxPool;
        pool.stride = 2;
        pool.downsample = true;
        spec.layers.push_back(std::move(pool));
    }
    return spec;
}

ArchitectureSpec plain_cnn() {
    ArchitectureSpec spec;
    spec.name = "plain-cnn";
    spec.input_h = 16;
    spec.input_w = 16;
    spec.classes = 4;
    const std::vector<int> widths = {16, 16, 32, 32, 64, 64};
    for (std::size_t i = 0; i < widths.size(); ++i) {
        LayerDesc l;
        l.kind = BlockKind::Conv;
        l.widths = {widths[i]};
        spec.layers.push_back(std::move(l));
        if (i == 1 || i == 3) {
            LayerDesc pool;
            pool.kind = BlockKind::MaxPool;
            pool.stride = 2;
            pool.downsample = true;
            spec.layers.push_back(std::move(pool));
        }
    }
    return spec;
}

ArchitectureSpec by_name(std::string_view name) {
    if (name == "resnet18") return resnet18();
    if (name == "resnet18-identity") return resnet18_identity();
    if (name == "resnet34") return resnet34();
    if (name == "vgg16") return vgg16();
    if (name == "plain-cnn") return plain_cnn();
    throw InputError("unknown fixture spec '" + std::string(name) + "'");
}

std::vector<std::string> names() {
    return {"resnet18", "resnet18-identity", "resnet34", "vgg16", "plain-cnn"};
}

}  // namespace fixtures

}  // namespace wsearch
