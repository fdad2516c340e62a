#pragma once

// Materialized network: weight tensors for a concrete integer width schedule,
// plus forward/backward passes and checkpoint IO. One instance is used from a
// single thread at a time; distinct instances are independent.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "wsearch/arch.hpp"
#include "wsearch/layers.hpp"
#include "wsearch/rng.hpp"
#include "wsearch/tensor.hpp"

namespace wsearch {

template <typename T>
struct ConvUnit {
    Tensor4<T> weight;  // (k, k, cin, cout)
    std::vector<T> bias;
    std::optional<BatchNormParams<T>> bn;
    bool relu = true;
    double dropout = 0.0;
    int stride = 1, pad = 1;

    std::size_t out_channels() const { return weight.dims()[3]; }
};

template <typename T>
struct ResidualBlock {
    std::vector<ConvUnit<T>> units;       // 2 (basic) or 3 (bottleneck); last has relu=false
    std::optional<ConvUnit<T>> projection;  // 1x1, no relu; absent => identity shortcut
};

struct PoolNode {
    bool max_pool = true;
};

template <typename T>
using BodyNode = std::variant<ConvUnit<T>, ResidualBlock<T>, PoolNode>;

template <typename T>
struct DenseLayer {
    Tensor4<T> weight;  // (1, 1, in, out)
    std::vector<T> bias;
};

// Named view of one parameter (or state) array, used by the optimizer, the
// finite-difference harness and checkpointing. `decay` marks arrays that get
// L2 weight decay (conv/dense kernels only). Plain vectors report dims
// (1,1,1,n).
template <typename T>
struct ParamRef {
    std::string name;
    std::span<T> values;
    bool decay = false;
    std::array<std::size_t, 4> dims{1, 1, 1, 0};
};

template <typename T>
class NetworkInstance;

namespace detail {

template <typename T>
ParamRef<T> vec_ref(const std::string& name, std::vector<T>& v) {
    return ParamRef<T>{name, std::span<T>(v), false, {1, 1, 1, v.size()}};
}

template <typename T>
ParamRef<T> tensor_ref(const std::string& name, Tensor4<T>& t, bool decay) {
    return ParamRef<T>{name, std::span<T>(t.data(), t.size()), decay, t.dims()};
}

template <typename T, typename Fn>
void visit_unit_params(ConvUnit<T>& u, const std::string& prefix, bool with_state, Fn&& fn) {
    fn(tensor_ref(prefix + ".w", u.weight, true));
    if (!u.bias.empty()) fn(vec_ref(prefix + ".b", u.bias));
    if (u.bn) {
        fn(vec_ref(prefix + ".bn.gamma", u.bn->gamma));
        fn(vec_ref(prefix + ".bn.beta", u.bn->beta));
        if (with_state) {
            fn(vec_ref(prefix + ".bn.mean", u.bn->running_mean));
            fn(vec_ref(prefix + ".bn.var", u.bn->running_var));
        }
    }
}

}  // namespace detail

// Per-forward cache of everything backward needs.
template <typename T>
struct UnitTrace {
    Tensor4<T> input;        // unit input
    Tensor4<T> pre_bn;       // conv output
    BatchNormCache<T> bn;
    Tensor4<T> pre_relu;     // input to the relu (bn output or conv output)
    std::vector<std::uint8_t> dropout_mask;
};

template <typename T>
struct BlockTrace {
    std::vector<UnitTrace<T>> units;
    UnitTrace<T> projection;
    Tensor4<T> pre_relu_sum;  // residual sum before the closing relu
};

template <typename T>
struct ForwardTrace {
    std::vector<std::variant<UnitTrace<T>, BlockTrace<T>, PoolCache<T>>> body;
    std::array<std::size_t, 4> gap_in_dims{};
    Tensor4<T> gap_out;
    Tensor4<T> hidden_pre_relu;
    Tensor4<T> hidden_out;
    std::vector<std::uint8_t> hidden_dropout_mask;
};

template <typename T>
class NetworkInstance {
public:
    ArchitectureSpec spec;
    ChannelSchedule schedule;
    std::vector<BodyNode<T>> body;
    std::optional<DenseLayer<T>> hidden;  // followed by relu (+ head dropout)
    DenseLayer<T> head;

    // Logits for a batch. `training` selects batch-norm statistics and enables
    // dropout; `rng` is required whenever dropout can fire. `trace` gathers what
    // backward needs. `update_running` lets callers run training-mode math
    // without touching the running averages.
    Tensor4<T> forward(const Tensor4<T>& batch, bool training = false,
                       std::mt19937_64* rng = nullptr, ForwardTrace<T>* trace = nullptr,
                       bool update_running = true);

    // Mean cross-entropy loss and gradients for every trainable tensor.
    // `grads` must be a same-shape instance (see gradient_like).
    double backward(const Tensor4<T>& batch, const std::vector<int>& labels, bool training,
                    std::mt19937_64* rng, NetworkInstance<T>& grads, bool update_running = true);

    // Zero-filled structural copy used as a gradient (or velocity) store.
    NetworkInstance<T> gradient_like() const;

    // Trainable parameter arrays in declaration order.
    template <typename Fn>
    void for_each_param(Fn&& fn, bool with_state = false);

    std::vector<ParamRef<T>> params(bool with_state = false);

    std::uint64_t trainable_param_count();

    template <typename U>
    NetworkInstance<U> cast() const;
};

// ---------------------------------------------------------------------------
// Materialization

namespace detail {

template <typename T>
Tensor4<T> he_normal(std::size_t k1, std::size_t k2, std::size_t cin, std::size_t cout,
                     std::mt19937_64& rng) {
    Tensor4<T> w(k1, k2, cin, cout);
    const double stddev = std::sqrt(2.0 / static_cast<double>(k1 * k2 * cin));
    std::normal_distribution<double> n(0.0, stddev);
    for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = static_cast<T>(n(rng));
    return w;
}

template <typename T>
ConvUnit<T> make_unit(int kernel, int cin, int cout, int stride, bool bn, bool bias, bool relu,
                      double dropout, std::mt19937_64& rng) {
    ConvUnit<T> u;
    u.weight = he_normal<T>(static_cast<std::size_t>(kernel), static_cast<std::size_t>(kernel),
                            static_cast<std::size_t>(cin), static_cast<std::size_t>(cout), rng);
    if (bias) u.bias.assign(static_cast<std::size_t>(cout), T(0));
    if (bn) u.bn.emplace(static_cast<std::size_t>(cout));
    u.relu = relu;
    u.dropout = dropout;
    u.stride = stride;
    u.pad = kernel / 2;
    return u;
}

}  // namespace detail

// Network whose conv widths equal the schedule; He-normal weights.
template <typename T>
NetworkInstance<T> materialize(const ArchitectureSpec& spec, const ChannelSchedule& schedule,
                               std::uint64_t seed) {
    spec.validate();
    validate_schedule(spec, schedule);
    std::mt19937_64 rng = make_stream(seed, "materialize");

    NetworkInstance<T> net;
    net.spec = spec;
    net.schedule = schedule;
    const bool bn = spec.batch_norm;
    const bool bias = spec.conv_bias && !spec.batch_norm;

    int cin = spec.input_c, i = 0;
    for (const auto& l : spec.layers) {
        switch (l.kind) {
            case BlockKind::Conv: {
                net.body.emplace_back(detail::make_unit<T>(l.kernel, cin, schedule.widths[i],
                                                           l.stride, bn, bias, true, l.dropout,
                                                           rng));
                cin = schedule.widths[i];
                break;
            }
            case BlockKind::Basic:
            case BlockKind::Bottleneck: {
                ResidualBlock<T> block;
                const int block_in = cin;
                if (l.kind == BlockKind::Basic) {
                    const int w1 = schedule.widths[i], w2 = schedule.widths[i + 1];
                    block.units.push_back(detail::make_unit<T>(l.kernel, cin, w1, l.stride, bn,
                                                               bias, true, 0.0, rng));
                    block.units.push_back(detail::make_unit<T>(l.kernel, w1, w2, 1, bn, bias,
                                                               false, 0.0, rng));
                    cin = w2;
                } else {
                    const int w1 = schedule.widths[i], w2 = schedule.widths[i + 1],
                              w3 = schedule.widths[i + 2];
                    block.units.push_back(detail::make_unit<T>(1, cin, w1, 1, bn, bias, true,
                                                               0.0, rng));
                    block.units.push_back(detail::make_unit<T>(l.kernel, w1, w2, l.stride, bn,
                                                               bias, true, 0.0, rng));
                    block.units.push_back(detail::make_unit<T>(1, w2, w3, 1, bn, bias, false,
                                                               0.0, rng));
                    cin = w3;
                }
                if (l.shortcut == ShortcutKind::Projection ||
                    (l.shortcut == ShortcutKind::Identity && block_in != cin)) {
                    block.projection = detail::make_unit<T>(1, block_in, cin, l.stride, bn, bias,
                                                            false, 0.0, rng);
                }
                net.body.emplace_back(std::move(block));
                break;
            }
            case BlockKind::MaxPool:
                net.body.emplace_back(PoolNode{true});
                break;
            case BlockKind::AvgPool:
                net.body.emplace_back(PoolNode{false});
                break;
        }
        i += l.conv_count();
    }

    if (spec.head_hidden > 0) {
        DenseLayer<T> h;
        h.weight = detail::he_normal<T>(1, 1, static_cast<std::size_t>(cin),
                                        static_cast<std::size_t>(spec.head_hidden), rng);
        h.bias.assign(static_cast<std::size_t>(spec.head_hidden), T(0));
        net.hidden = std::move(h);
        cin = spec.head_hidden;
    }
    net.head.weight = detail::he_normal<T>(1, 1, static_cast<std::size_t>(cin),
                                           static_cast<std::size_t>(spec.classes), rng);
    net.head.bias.assign(static_cast<std::size_t>(spec.classes), T(0));
    return net;
}

// Uniform small-width starting point for the search. base_width must be even;
// pass 0 to use the spec default (half the minimum original width).
template <typename T>
NetworkInstance<T> build_initial_model(const ArchitectureSpec& spec, int base_width,
                                       std::uint64_t seed) {
    if (base_width == 0) base_width = default_base_width(spec);
    if (base_width < 2 || base_width % 2 != 0)
        throw InputError("build_initial_model: base_width must be even and >= 2");
    ChannelSchedule schedule = uniform_schedule(spec, base_width);
    if (spec.has_bottleneck()) {
        int i = 0;
        for (const auto& l : spec.layers) {
            if (l.kind == BlockKind::Bottleneck) schedule.widths[i + 2] = 4 * base_width;
            i += l.conv_count();
        }
    }
    return materialize<T>(spec, schedule, seed);
}

// ---------------------------------------------------------------------------
// Forward / backward

namespace detail {

template <typename T>
Tensor4<T> unit_forward(ConvUnit<T>& u, const Tensor4<T>& x, bool training,
                        std::mt19937_64* rng, UnitTrace<T>* tr, bool update_running) {
    if (tr) tr->input = x;
    Tensor4<T> h = conv2d_forward(x, u.weight, u.stride, u.pad,
                                  u.bias.empty() ? nullptr : &u.bias);
    if (u.bn) {
        if (tr) tr->pre_bn = h;
        h = batchnorm_forward(h, *u.bn, training, T(0.1), tr ? &tr->bn : nullptr, update_running);
    }
    if (u.relu) {
        if (tr) tr->pre_relu = h;
        h = relu_forward(h);
    }
    if (u.dropout > 0.0 && training) {
        if (!rng) throw InputError("dropout needs an rng in training mode");
        h = dropout_forward(h, u.dropout, training, *rng, tr ? &tr->dropout_mask : nullptr);
    }
    return h;
}

// Gradients flow back through dropout, relu, bn, conv. Returns grad wrt input.
template <typename T>
Tensor4<T> unit_backward(const ConvUnit<T>& u, const UnitTrace<T>& tr, Tensor4<T> grad,
                         ConvUnit<T>& g) {
    if (u.dropout > 0.0 && !tr.dropout_mask.empty())
        grad = dropout_backward(tr.dropout_mask, u.dropout, grad);
    if (u.relu) grad = relu_backward(tr.pre_relu, grad);
    std::vector<T> ggamma, gbeta;
    if (u.bn) {
        grad = batchnorm_backward(tr.bn, *u.bn, grad, &ggamma, &gbeta);
        for (std::size_t c = 0; c < ggamma.size(); ++c) {
            g.bn->gamma[c] += ggamma[c];
            g.bn->beta[c] += gbeta[c];
        }
    }
    Tensor4<T> gin, gw;
    std::vector<T> gb;
    conv2d_backward(tr.input, u.weight, grad, u.stride, u.pad, &gin, &gw,
                    u.bias.empty() ? nullptr : &gb);
    T* dst = g.weight.data();
    const T* src = gw.data();
    for (std::size_t i = 0; i < gw.size(); ++i) dst[i] += src[i];
    for (std::size_t i = 0; i < gb.size(); ++i) g.bias[i] += gb[i];
    return gin;
}

}  // namespace detail

template <typename T>
Tensor4<T> NetworkInstance<T>::forward(const Tensor4<T>& batch, bool training,
                                       std::mt19937_64* rng, ForwardTrace<T>* trace,
                                       bool update_running) {
    const auto& d = batch.dims();
    if (static_cast<int>(d[1]) != spec.input_h || static_cast<int>(d[2]) != spec.input_w ||
        static_cast<int>(d[3]) != spec.input_c)
        throw ShapeError("forward: batch dims " + batch.shape_str() +
                         " do not match spec input");

    Tensor4<T> h = batch;
    for (auto& node : body) {
        if (auto* unit = std::get_if<ConvUnit<T>>(&node)) {
            UnitTrace<T>* tr = nullptr;
            if (trace) {
                trace->body.emplace_back(UnitTrace<T>{});
                tr = &std::get<UnitTrace<T>>(trace->body.back());
            }
            h = detail::unit_forward(*unit, h, training, rng, tr, update_running);
        } else if (auto* block = std::get_if<ResidualBlock<T>>(&node)) {
            BlockTrace<T>* tr = nullptr;
            if (trace) {
                trace->body.emplace_back(BlockTrace<T>{});
                tr = &std::get<BlockTrace<T>>(trace->body.back());
                tr->units.resize(block->units.size());
            }
            Tensor4<T> branch = h;
            for (std::size_t ui = 0; ui < block->units.size(); ++ui)
                branch = detail::unit_forward(block->units[ui], branch, training, rng,
                                              tr ? &tr->units[ui] : nullptr, update_running);
            Tensor4<T> shortcut;
            if (block->projection) {
                shortcut = detail::unit_forward(*block->projection, h, training, rng,
                                                tr ? &tr->projection : nullptr, update_running);
            } else {
                if (!branch.same_shape(h))
                    throw ShapeError("identity shortcut needs matching block in/out shape");
                shortcut = h;
            }
            T* bp = branch.data();
            const T* sp = shortcut.data();
            for (std::size_t i = 0; i < branch.size(); ++i) bp[i] += sp[i];
            if (tr) tr->pre_relu_sum = branch;
            h = relu_forward(branch);
        } else {
            auto& pool = std::get<PoolNode>(node);
            PoolCache<T>* pc = nullptr;
            if (trace) {
                trace->body.emplace_back(PoolCache<T>{});
                pc = &std::get<PoolCache<T>>(trace->body.back());
            }
            h = pool2x2_forward(h, pool.max_pool, pc);
        }
    }

    if (trace) trace->gap_in_dims = h.dims();
    h = global_avg_pool_forward(h);
    if (trace) trace->gap_out = h;

    if (hidden) {
        Tensor4<T> pre = dense_forward(h, hidden->weight, hidden->bias);
        if (trace) trace->hidden_pre_relu = pre;
        h = relu_forward(pre);
        if (spec.head_dropout > 0.0 && training) {
            if (!rng) throw InputError("dropout needs an rng in training mode");
            h = dropout_forward(h, spec.head_dropout, training, *rng,
                                trace ? &trace->hidden_dropout_mask : nullptr);
        }
        if (trace) trace->hidden_out = h;
    }
    return dense_forward(h, head.weight, head.bias);
}

template <typename T>
double NetworkInstance<T>::backward(const Tensor4<T>& batch, const std::vector<int>& labels,
                                    bool training, std::mt19937_64* rng,
                                    NetworkInstance<T>& grads, bool update_running) {
    if (batch.dims()[0] == 0 || labels.empty()) throw InputError("backward: empty batch");
    ForwardTrace<T> trace;
    Tensor4<T> logits = forward(batch, training, rng, &trace, update_running);
    Tensor4<T> grad;
    const double loss = softmax_cross_entropy(logits, labels, &grad);

    // head
    {
        const Tensor4<T>& head_in = hidden ? trace.hidden_out : trace.gap_out;
        Tensor4<T> gin, gw;
        std::vector<T> gb;
        dense_backward(head_in, head.weight, grad, &gin, &gw, &gb);
        T* dst = grads.head.weight.data();
        for (std::size_t i = 0; i < gw.size(); ++i) dst[i] += gw.data()[i];
        for (std::size_t i = 0; i < gb.size(); ++i) grads.head.bias[i] += gb[i];
        grad = std::move(gin);
    }
    if (hidden) {
        if (spec.head_dropout > 0.0 && !trace.hidden_dropout_mask.empty())
            grad = dropout_backward(trace.hidden_dropout_mask, spec.head_dropout, grad);
        grad = relu_backward(trace.hidden_pre_relu, grad);
        Tensor4<T> gin, gw;
        std::vector<T> gb;
        dense_backward(trace.gap_out, hidden->weight, grad, &gin, &gw, &gb);
        T* dst = grads.hidden->weight.data();
        for (std::size_t i = 0; i < gw.size(); ++i) dst[i] += gw.data()[i];
        for (std::size_t i = 0; i < gb.size(); ++i) grads.hidden->bias[i] += gb[i];
        grad = std::move(gin);
    }
    grad = global_avg_pool_backward(trace.gap_in_dims, grad);

    for (std::size_t bi = body.size(); bi-- > 0;) {
        auto& node = body[bi];
        auto& gnode = grads.body[bi];
        auto& tnode = trace.body[bi];
        if (auto* unit = std::get_if<ConvUnit<T>>(&node)) {
            grad = detail::unit_backward(*unit, std::get<UnitTrace<T>>(tnode), std::move(grad),
                                         std::get<ConvUnit<T>>(gnode));
        } else if (auto* block = std::get_if<ResidualBlock<T>>(&node)) {
            auto& btr = std::get<BlockTrace<T>>(tnode);
            auto& gblock = std::get<ResidualBlock<T>>(gnode);
            grad = relu_backward(btr.pre_relu_sum, grad);
            Tensor4<T> gshort;
            if (block->projection) {
                gshort = detail::unit_backward(*block->projection, btr.projection, grad,
                                               *gblock.projection);
            } else {
                gshort = grad;
            }
            Tensor4<T> gbr = std::move(grad);
            for (std::size_t ui = block->units.size(); ui-- > 0;)
                gbr = detail::unit_backward(block->units[ui], btr.units[ui], std::move(gbr),
                                            gblock.units[ui]);
            T* gp = gbr.data();
            const T* sp = gshort.data();
            for (std::size_t i = 0; i < gbr.size(); ++i) gp[i] += sp[i];
            grad = std::move(gbr);
        } else {
            auto& pool = std::get<PoolNode>(node);
            grad = pool2x2_backward(std::get<PoolCache<T>>(tnode), pool.max_pool, grad);
        }
    }
    return loss;
}

template <typename T>
NetworkInstance<T> NetworkInstance<T>::gradient_like() const {
    NetworkInstance<T> g = *this;
    g.for_each_param([](ParamRef<T> p) { std::fill(p.values.begin(), p.values.end(), T(0)); },
                     /*with_state=*/true);
    return g;
}

template <typename T>
template <typename Fn>
void NetworkInstance<T>::for_each_param(Fn&& fn, bool with_state) {
    int idx = 0;
    for (auto& node : body) {
        const std::string base = "body" + std::to_string(idx++);
        if (auto* unit = std::get_if<ConvUnit<T>>(&node)) {
            detail::visit_unit_params(*unit, base, with_state, fn);
        } else if (auto* block = std::get_if<ResidualBlock<T>>(&node)) {
            for (std::size_t u = 0; u < block->units.size(); ++u)
                detail::visit_unit_params(block->units[u], base + ".u" + std::to_string(u),
                                          with_state, fn);
            if (block->projection)
                detail::visit_unit_params(*block->projection, base + ".proj", with_state, fn);
        }
    }
    if (hidden) {
        fn(detail::tensor_ref("hidden.w", hidden->weight, true));
        fn(detail::vec_ref("hidden.b", hidden->bias));
    }
    fn(detail::tensor_ref("head.w", head.weight, true));
    fn(detail::vec_ref("head.b", head.bias));
}

template <typename T>
std::vector<ParamRef<T>> NetworkInstance<T>::params(bool with_state) {
    std::vector<ParamRef<T>> out;
    for_each_param([&out](ParamRef<T> p) { out.push_back(p); }, with_state);
    return out;
}

template <typename T>
std::uint64_t NetworkInstance<T>::trainable_param_count() {
    std::uint64_t n = 0;
    for_each_param([&n](ParamRef<T> p) { n += p.values.size(); }, false);
    return n;
}

template <typename T>
template <typename U>
NetworkInstance<U> NetworkInstance<T>::cast() const {
    NetworkInstance<U> out = materialize<U>(spec, schedule, 0);
    auto src = const_cast<NetworkInstance<T>&>(*this).params(true);
    auto dst = out.params(true);
    for (std::size_t i = 0; i < src.size(); ++i)
        for (std::size_t j = 0; j < src[i].values.size(); ++j)
            dst[i].values[j] = static_cast<U>(src[i].values[j]);
    return out;
}

// ---------------------------------------------------------------------------
// Probabilities and accuracy

template <typename T>
Tensor4<T> network_forward(NetworkInstance<T>& net, const Tensor4<T>& batch) {
    return softmax_rows(net.forward(batch, /*training=*/false));
}

// ---------------------------------------------------------------------------
// Checkpoint file: "WSCK" magic, version, tensor count, per-tensor dims,
// then float32 little-endian payloads in declaration order.

namespace detail {

constexpr std::uint32_t kCheckpointMagic = 0x4b435357;  // "WSCK"
constexpr std::uint32_t kCheckpointVersion = 1;

inline void put_u32(std::ostream& out, std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::big)
        v = ((v & 0xff) << 24) | ((v & 0xff00) << 8) | ((v >> 8) & 0xff00) | (v >> 24);
    out.write(reinterpret_cast<const char*>(&v), 4);
}

inline std::uint32_t get_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    if (!in) throw FormatError("checkpoint: truncated header");
    if constexpr (std::endian::native == std::endian::big)
        v = ((v & 0xff) << 24) | ((v & 0xff00) << 8) | ((v >> 8) & 0xff00) | (v >> 24);
    return v;
}

inline void put_f32(std::ostream& out, float f) {
    std::uint32_t v;
    std::memcpy(&v, &f, 4);
    put_u32(out, v);
}

inline float get_f32(std::istream& in) {
    const std::uint32_t v = get_u32(in);
    float f;
    std::memcpy(&f, &v, 4);
    return f;
}

}  // namespace detail

template <typename T>
void save_checkpoint(NetworkInstance<T>& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write checkpoint '" + path + "'");
    auto refs = net.params(/*with_state=*/true);
    detail::put_u32(out, detail::kCheckpointMagic);
    detail::put_u32(out, detail::kCheckpointVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(refs.size()));
    for (const auto& r : refs)
        for (std::size_t d : r.dims) detail::put_u32(out, static_cast<std::uint32_t>(d));
    for (const auto& r : refs)
        for (T v : r.values) detail::put_f32(out, static_cast<float>(v));
    if (!out) throw InputError("write failure on checkpoint '" + path + "'");
}

// Loads into an already materialized instance; dims must match exactly.
template <typename T>
void load_checkpoint(NetworkInstance<T>& net, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open checkpoint '" + path + "'");
    if (detail::get_u32(in) != detail::kCheckpointMagic)
        throw FormatError("checkpoint: bad magic");
    if (detail::get_u32(in) != detail::kCheckpointVersion)
        throw FormatError("checkpoint: unsupported version");
    auto refs = net.params(/*with_state=*/true);
    const std::uint32_t count = detail::get_u32(in);
    if (count != refs.size())
        throw InputError("checkpoint: tensor count " + std::to_string(count) +
                         " does not match network (" + std::to_string(refs.size()) + ")");
    for (const auto& r : refs)
        for (std::size_t d : r.dims)
            if (detail::get_u32(in) != d)
                throw InputError("checkpoint: dim mismatch on tensor '" + r.name + "'");
    for (auto& r : refs)
        for (auto& v : r.values) v = static_cast<T>(detail::get_f32(in));
    if (!in) throw FormatError("checkpoint: truncated payload");
}

}  // namespace wsearch
