#pragma once

// Function-preserving widening: replicate randomly chosen filters along the
// out-channel axis, divide successor weights by the replication multiplicity,
// and optionally scale successor entries by (1 + delta) to break symmetry.
// Batch-norm parameters and running statistics are replicated with their
// source channel, so the widened network computes the identical function when
// the noise is disabled.

#include <random>
#include <utility>
#include <vector>

#include "wsearch/errors.hpp"
#include "wsearch/network.hpp"

namespace wsearch {

struct WidenMapping {
    std::vector<int> source;       // g: new index -> source index (0-based)
    std::vector<int> replication;  // per-source multiplicity
    int old_width = 0, new_width = 0;

    bool is_identity() const { return new_width == old_width; }
};

// Identity prefix, uniform random sources for the appended filters.
WidenMapping make_mapping(int f, int f_prime, std::mt19937_64& rng);
WidenMapping identity_mapping(int f);

struct NoiseSpec {
    double delta_max = 0.05;
    bool enabled = true;
    bool per_filter = false;  // one delta per replicated in-channel instead of per entry

    void validate() const {
        if (delta_max < 0.0 || delta_max > 1.0)
            throw InputError("noise: delta_max outside [0,1]");
    }
};

namespace detail {

// In-axis pass of the widening: re-index axis 2 by the mapping, divide by the
// replication count and apply the noise factor.
template <typename T>
Tensor4<T> widen_in_axis(const Tensor4<T>& w, const WidenMapping& m, const NoiseSpec& noise,
                         std::mt19937_64& rng) {
    const auto& d = w.dims();
    if (static_cast<int>(d[2]) != m.old_width)
        throw ShapeError("widen: successor in-channels do not match mapping");
    Tensor4<T> out(d[0], d[1], static_cast<std::size_t>(m.new_width), d[3]);
    const bool with_noise = noise.enabled && noise.delta_max > 0.0;
    std::uniform_real_distribution<double> u(0.0, noise.delta_max);
    std::vector<double> filter_delta;
    if (with_noise && noise.per_filter) {
        filter_delta.resize(static_cast<std::size_t>(m.new_width));
        for (auto& dl : filter_delta) dl = u(rng);
    }
    for (std::size_t k1 = 0; k1 < d[0]; ++k1)
        for (std::size_t k2 = 0; k2 < d[1]; ++k2)
            for (int j = 0; j < m.new_width; ++j) {
                const int src = m.source[static_cast<std::size_t>(j)];
                const T div = static_cast<T>(m.replication[static_cast<std::size_t>(src)]);
                for (std::size_t f = 0; f < d[3]; ++f) {
                    T v = w(k1, k2, static_cast<std::size_t>(src), f) / div;
                    if (with_noise) {
                        const double delta =
                            noise.per_filter ? filter_delta[static_cast<std::size_t>(j)] : u(rng);
                        v *= static_cast<T>(1.0 + delta);
                    }
                    out(k1, k2, static_cast<std::size_t>(j), f) = v;
                }
            }
    return out;
}

// Out-axis pass: replicate axis 3 by the mapping (plain parameter copies).
template <typename T>
Tensor4<T> widen_out_axis(const Tensor4<T>& w, const WidenMapping& m) {
    const auto& d = w.dims();
    if (static_cast<int>(d[3]) != m.old_width)
        throw ShapeError("widen: out-channels do not match mapping");
    Tensor4<T> out(d[0], d[1], d[2], static_cast<std::size_t>(m.new_width));
    for (std::size_t k1 = 0; k1 < d[0]; ++k1)
        for (std::size_t k2 = 0; k2 < d[1]; ++k2)
            for (std::size_t c = 0; c < d[2]; ++c)
                for (int j = 0; j < m.new_width; ++j)
                    out(k1, k2, c, static_cast<std::size_t>(j)) =
                        w(k1, k2, c, static_cast<std::size_t>(m.source[static_cast<std::size_t>(j)]));
    return out;
}

template <typename T>
std::vector<T> widen_vector(const std::vector<T>& v, const WidenMapping& m) {
    std::vector<T> out(static_cast<std::size_t>(m.new_width));
    for (int j = 0; j < m.new_width; ++j)
        out[static_cast<std::size_t>(j)] = v[static_cast<std::size_t>(m.source[static_cast<std::size_t>(j)])];
    return out;
}

}  // namespace detail

// The pairwise operation on one (layer, successor) pair of kernels.
// The noise factor is applied to every entry of the successor.
template <typename T>
std::pair<Tensor4<T>, Tensor4<T>> widen_layer(const Tensor4<T>& w_i, const Tensor4<T>& w_next,
                                              const WidenMapping& mapping,
                                              const NoiseSpec& noise, std::mt19937_64& rng) {
    noise.validate();
    if (static_cast<int>(w_i.dims()[3]) != mapping.old_width)
        throw InputError("widen_layer: layer out-channels do not match mapping");
    if (static_cast<int>(w_next.dims()[2]) != mapping.old_width)
        throw InputError("widen_layer: successor in-channels do not match mapping");
    Tensor4<T> u_i = detail::widen_out_axis(w_i, mapping);
    Tensor4<T> u_next = detail::widen_in_axis(w_next, mapping, noise, rng);
    return {std::move(u_i), std::move(u_next)};
}

// Whole-network widening to a target schedule. Noise touches a successor
// tensor only where its feeding interface actually widened, so an unchanged
// target returns a bit-identical network even with noise enabled.
template <typename T>
NetworkInstance<T> widen_network(const NetworkInstance<T>& net, const ChannelSchedule& target,
                                 const NoiseSpec& noise, std::mt19937_64& rng) {
    noise.validate();
    const ArchitectureSpec& spec = net.spec;
    validate_schedule(spec, target);
    for (int i = 0; i < target.size(); ++i)
        if (target.widths[i] < net.schedule.widths[i])
            throw InputError("widen_network: narrowing layer " + std::to_string(i + 1) +
                             " is unsupported");
    if (target == net.schedule) return net;
    if (spec.has_identity_shortcut())
        throw InputError("widen_network: identity-shortcut specs cannot be widened");

    // One mapping per conv layer, drawn in layer order.
    std::vector<WidenMapping> maps;
    maps.reserve(static_cast<std::size_t>(target.size()));
    for (int i = 0; i < target.size(); ++i)
        maps.push_back(make_mapping(net.schedule.widths[i], target.widths[i], rng));

    NetworkInstance<T> out = materialize<T>(spec, target, /*seed=*/0);

    const NoiseSpec no_noise{0.0, false, false};
    auto fill_unit = [&](const ConvUnit<T>& src, ConvUnit<T>& dst, const WidenMapping& m_in,
                         const WidenMapping& m_out) {
        const NoiseSpec& eff = m_in.is_identity() ? no_noise : noise;
        Tensor4<T> w = detail::widen_in_axis(src.weight, m_in, eff, rng);
        dst.weight = detail::widen_out_axis(w, m_out);
        if (!src.bias.empty()) dst.bias = detail::widen_vector(src.bias, m_out);
        if (src.bn) {
            dst.bn->gamma = detail::widen_vector(src.bn->gamma, m_out);
            dst.bn->beta = detail::widen_vector(src.bn->beta, m_out);
            dst.bn->running_mean = detail::widen_vector(src.bn->running_mean, m_out);
            dst.bn->running_var = detail::widen_vector(src.bn->running_var, m_out);
        }
    };

    WidenMapping interface = identity_mapping(spec.input_c);
    int i = 0;
    for (std::size_t bi = 0; bi < net.body.size(); ++bi) {
        if (const auto* unit = std::get_if<ConvUnit<T>>(&net.body[bi])) {
            fill_unit(*unit, std::get<ConvUnit<T>>(out.body[bi]), interface, maps[i]);
            interface = maps[i];
            ++i;
        } else if (const auto* block = std::get_if<ResidualBlock<T>>(&net.body[bi])) {
            auto& oblock = std::get<ResidualBlock<T>>(out.body[bi]);
            WidenMapping unit_in = interface;
            const int units = static_cast<int>(block->units.size());
            for (int u = 0; u < units; ++u) {
                fill_unit(block->units[static_cast<std::size_t>(u)],
                          oblock.units[static_cast<std::size_t>(u)], unit_in, maps[i + u]);
                unit_in = maps[i + u];
            }
            // The projection shares the block input and output interfaces, so
            // the residual sum replicates channel-for-channel.
            if (block->projection)
                fill_unit(*block->projection, *oblock.projection, interface,
                          maps[i + units - 1]);
            interface = maps[i + units - 1];
            i += units;
        }
        // pools pass activations through channel-wise
    }

    // Dense layer fed by global average pooling divides like a 1x1 successor.
    const NoiseSpec& head_eff = interface.is_identity() ? no_noise : noise;
    if (net.hidden) {
        out.hidden->weight = detail::widen_in_axis(net.hidden->weight, interface, head_eff, rng);
        out.hidden->bias = net.hidden->bias;
        out.head = net.head;
    } else {
        out.head.weight = detail::widen_in_axis(net.head.weight, interface, head_eff, rng);
        out.head.bias = net.head.bias;
    }
    return out;
}

// Standard-normal input batch matching the spec's input dims.
template <typename T>
Tensor4<T> make_random_batch(const ArchitectureSpec& spec, int count, std::mt19937_64& rng) {
    Tensor4<T> batch(static_cast<std::size_t>(count), static_cast<std::size_t>(spec.input_h),
                     static_cast<std::size_t>(spec.input_w),
                     static_cast<std::size_t>(spec.input_c));
    std::normal_distribution<double> n(0.0, 1.0);
    for (std::size_t j = 0; j < batch.size(); ++j) batch.data()[j] = static_cast<T>(n(rng));
    return batch;
}

// Max-abs logit difference between two networks over a shared random batch.
template <typename T>
double max_logit_deviation(NetworkInstance<T>& a, NetworkInstance<T>& b, int trials,
                           std::uint64_t seed) {
    std::mt19937_64 rng = make_stream(seed, "deviation-inputs");
    Tensor4<T> batch = make_random_batch<T>(a.spec, trials, rng);
    Tensor4<T> la = a.forward(batch);
    Tensor4<T> lb = b.forward(batch);
    if (!la.same_shape(lb)) throw ShapeError("deviation: logit shapes differ");
    double dev = 0.0;
    for (std::size_t j = 0; j < la.size(); ++j)
        dev = std::max(dev, std::abs(static_cast<double>(la.data()[j]) -
                                     static_cast<double>(lb.data()[j])));
    return dev;
}

}  // namespace wsearch
