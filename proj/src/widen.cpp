#include "wsearch/widen.hpp"

namespace wsearch {

WidenMapping make_mapping(int f, int f_prime, std::mt19937_64& rng) {
    if (f < 1) throw InputError("make_mapping: f must be >= 1");
    if (f_prime < f) throw InputError("make_mapping: narrowing (f' < f) is unsupported");
    WidenMapping m;
    m.old_width = f;
    m.new_width = f_prime;
    m.source.resize(static_cast<std::size_t>(f_prime));
    m.replication.assign(static_cast<std::size_t>(f), 1);
    for (int j = 0; j < f; ++j) m.source[static_cast<std::size_t>(j)] = j;
    std::uniform_int_distribution<int> u(0, f - 1);
    for (int j = f; j < f_prime; ++j) {
        const int src = u(rng);
        m.source[static_cast<std::size_t>(j)] = src;
        ++m.replication[static_cast<std::size_t>(src)];
    }
    return m;
}

WidenMapping identity_mapping(int f) {
    WidenMapping m;
    m.old_width = f;
    m.new_width = f;
    m.source.resize(static_cast<std::size_t>(f));
    m.replication.assign(static_cast<std::size_t>(f), 1);
    for (int j = 0; j < f; ++j) m.source[static_cast<std::size_t>(j)] = j;
    return m;
}

}  // namespace wsearch
