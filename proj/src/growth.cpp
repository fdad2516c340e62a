#include "wsearch/growth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "wsearch/errors.hpp"

namespace wsearch {

using nlohmann::json;

std::string_view to_string(GrowthFunctionId id) {
    switch (id) {
        case GrowthFunctionId::A: return "a";
        case GrowthFunctionId::B: return "b";
        case GrowthFunctionId::C: return "c";
        case GrowthFunctionId::D: return "d";
        case GrowthFunctionId::E: return "e";
        case GrowthFunctionId::F: return "f";
        case GrowthFunctionId::G: return "g";
        case GrowthFunctionId::H: return "h";
        case GrowthFunctionId::Const: return "const";
    }
    return "?";
}

GrowthFunctionId growth_from_string(std::string_view s) {
    for (GrowthFunctionId id : kAllGrowthFunctions)
        if (s == to_string(id)) return id;
    throw InputError("unknown growth function '" + std::string(s) + "'");
}

std::string_view to_string(AccountingMode m) {
    return m == AccountingMode::Compound ? "compound" : "fixed-base";
}

AccountingMode accounting_mode_from_string(std::string_view s) {
    if (s == "compound") return AccountingMode::Compound;
    if (s == "fixed-base") return AccountingMode::FixedBase;
    throw InputError("unknown accounting mode '" + std::string(s) + "'");
}

GrowthContext GrowthContext::from_spec(const ArchitectureSpec& spec, double lambda) {
    GrowthContext ctx;
    ctx.conv_layers = spec.conv_layer_count();
    ctx.lambda = lambda;
    ctx.boundaries = segment_boundaries(spec).boundaries;
    ctx.validate();
    return ctx;
}

void GrowthContext::validate() const {
    if (conv_layers < 1) throw InputError("growth: N must be >= 1");
    if (!(lambda > 0.0)) throw InputError("growth: lambda must be > 0");
    int prev = 0;
    for (int k : boundaries) {
        if (k <= prev || k >= conv_layers)
            throw InputError("growth: boundaries must be strictly increasing inside (0, N)");
        prev = k;
    }
}

double eval_growth(GrowthFunctionId id, double x, const GrowthContext& ctx) {
    ctx.validate();
    const double n = static_cast<double>(ctx.conv_layers);
    const double lam = ctx.lambda;
    if (!(x > 0.0) || x > n)
        throw InputError("growth: x must lie in (0, N]");

    double v = 0.0;
    switch (id) {
        case GrowthFunctionId::A:
            v = lam * (std::pow(lam + 1.0, x) - 1.0) / (std::pow(lam + 1.0, n) - 1.0);
            break;
        case GrowthFunctionId::B:
            v = lam * (std::pow(lam + 1.0, n - x) - 1.0) / (std::pow(lam + 1.0, n) - 1.0);
            break;
        case GrowthFunctionId::C:
            v = lam / n * x;
            break;
        case GrowthFunctionId::D:
            v = lam - lam / n * x;
            break;
        case GrowthFunctionId::E:
            v = lam * (std::pow(lam + 1.0, n) - std::pow(lam + 1.0, n - x)) /
                (std::pow(lam + 1.0, n) - 1.0);
            break;
        case GrowthFunctionId::F:
            v = lam * (std::pow(lam + 1.0, n) - std::pow(lam + 1.0, x)) /
                (std::pow(lam + 1.0, n) - 1.0);
            break;
        case GrowthFunctionId::G:
        case GrowthFunctionId::H: {
            // segment s (1-based) of (0,K1], (K1,K2], ..., (K_{n-1},N]
            int s = 1;
            for (int k : ctx.boundaries)
                if (x > static_cast<double>(k)) ++s;
            const int segments = static_cast<int>(ctx.boundaries.size()) + 1;
            const int exponent = id == GrowthFunctionId::G ? segments - s : s - 1;
            v = lam / std::pow(2.0, exponent);
            break;
        }
        case GrowthFunctionId::Const:
            v = lam / 2.0;
            break;
    }
    return std::clamp(v, 0.0, lam);
}

Genotype Genotype::identity(std::vector<double> base, AccountingMode mode) {
    Genotype g;
    g.base_widths = std::move(base);
    g.multipliers.assign(g.base_widths.size(), 1.0);
    g.mode = mode;
    g.validate();
    return g;
}

Genotype Genotype::identity(const ChannelSchedule& base, AccountingMode mode) {
    std::vector<double> b;
    b.reserve(base.widths.size());
    for (int w : base.widths) b.push_back(static_cast<double>(w));
    return identity(std::move(b), mode);
}

std::vector<double> Genotype::real_widths() const {
    std::vector<double> out(base_widths.size());
    for (std::size_t i = 0; i < base_widths.size(); ++i)
        out[i] = base_widths[i] * multipliers[i];
    return out;
}

void Genotype::validate() const {
    if (base_widths.empty()) throw InputError("genotype: empty base widths");
    if (multipliers.size() != base_widths.size())
        throw InputError("genotype: multipliers/base length mismatch");
    for (double b : base_widths)
        if (!(b >= 1.0)) throw InputError("genotype: base widths must be >= 1");
    for (double m : multipliers)
        if (!(m >= 1.0)) throw InputError("genotype: multipliers must be >= 1");
}

Genotype apply_increment(const Genotype& g, GrowthFunctionId id, const GrowthContext& ctx) {
    g.validate();
    if (static_cast<int>(g.base_widths.size()) != ctx.conv_layers)
        throw InputError("apply_increment: genotype/context length mismatch");
    Genotype out = g;
    for (int i = 0; i < ctx.conv_layers; ++i) {
        const double f = eval_growth(id, static_cast<double>(i + 1), ctx);
        if (out.mode == AccountingMode::Compound)
            out.multipliers[static_cast<std::size_t>(i)] *= 1.0 + f;
        else
            out.multipliers[static_cast<std::size_t>(i)] += f;
    }
    out.history.push_back(id);
    return out;
}

int round_width(double w) {
    if (!(w >= 1.0)) throw InputError("round_width: width must be >= 1");
    const double lo = std::floor(w);
    const double frac = w - lo;
    long long n;
    if (frac > 0.5)
        n = static_cast<long long>(lo) + 1;
    else if (frac < 0.5)
        n = static_cast<long long>(lo);
    else  // tie: toward the even neighbor
        n = static_cast<long long>(lo) % 2 == 0 ? static_cast<long long>(lo)
                                                : static_cast<long long>(lo) + 1;
    if (n % 2 != 0) ++n;  // odd widths move up to the adjacent even number
    return static_cast<int>(std::max<long long>(n, 2));
}

ChannelSchedule realize_schedule(const Genotype& g) {
    g.validate();
    ChannelSchedule s;
    s.widths.reserve(g.base_widths.size());
    for (double w : g.real_widths()) s.widths.push_back(round_width(w));
    return s;
}

std::string genotype_to_json(const Genotype& g) {
    json j;
    j["mode"] = std::string(to_string(g.mode));
    j["base_widths"] = g.base_widths;
    j["multipliers"] = g.multipliers;
    j["history"] = json::array();
    for (GrowthFunctionId id : g.history) j["history"].push_back(std::string(to_string(id)));
    return j.dump(2);
}

Genotype genotype_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
        Genotype g;
        g.mode = accounting_mode_from_string(j.at("mode").get<std::string>());
        g.base_widths = j.at("base_widths").get<std::vector<double>>();
        g.multipliers = j.at("multipliers").get<std::vector<double>>();
        for (const auto& t : j.at("history"))
            g.history.push_back(growth_from_string(t.get<std::string>()));
        g.validate();
        return g;
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad genotype JSON: ") + e.what());
    }
}

void save_genotype(const Genotype& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << genotype_to_json(g) << "\n";
}

Genotype load_genotype(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return genotype_from_json(text);
}

}  // namespace wsearch
