#pragma once

// The nine width-growth functions (eight closed-form shapes plus the
// constant), increment accounting in compound and fixed-base modes, and the
// even-integer realization of real-valued widths.

#include <string>
#include <string_view>
#include <vector>

#include "wsearch/arch.hpp"

namespace wsearch {

enum class GrowthFunctionId { A, B, C, D, E, F, G, H, Const };

inline constexpr GrowthFunctionId kAllGrowthFunctions[] = {
    GrowthFunctionId::A, GrowthFunctionId::B, GrowthFunctionId::C,
    GrowthFunctionId::D, GrowthFunctionId::E, GrowthFunctionId::F,
    GrowthFunctionId::G, GrowthFunctionId::H, GrowthFunctionId::Const};

std::string_view to_string(GrowthFunctionId id);
GrowthFunctionId growth_from_string(std::string_view s);

struct GrowthContext {
    int conv_layers = 0;          // N
    double lambda = 0.2;          // rate of increase
    std::vector<int> boundaries;  // K_i, strictly increasing inside (0, N)

    static GrowthContext from_spec(const ArchitectureSpec& spec, double lambda);
    void validate() const;
};

// Fractional increment for layer position x in (0, N]; always in [0, lambda].
double eval_growth(GrowthFunctionId id, double x, const GrowthContext& ctx);

enum class AccountingMode { Compound, FixedBase };

std::string_view to_string(AccountingMode m);
AccountingMode accounting_mode_from_string(std::string_view s);

// Real-valued width state; integers appear only at realization.
struct Genotype {
    std::vector<double> base_widths;
    std::vector<double> multipliers;  // accumulated factor per layer, >= 1
    std::vector<GrowthFunctionId> history;
    AccountingMode mode = AccountingMode::Compound;

    static Genotype identity(std::vector<double> base, AccountingMode mode);
    static Genotype identity(const ChannelSchedule& base, AccountingMode mode);

    std::vector<double> real_widths() const;
    void validate() const;
};

// Compound: multiplier_i *= (1 + f(i)); fixed-base: multiplier_i += f(i).
Genotype apply_increment(const Genotype& g, GrowthFunctionId id, const GrowthContext& ctx);

// Nearest integer (ties toward even), then odd values bumped up; >= 2.
int round_width(double w);

ChannelSchedule realize_schedule(const Genotype& g);

// JSON round-trip, sufficient to replay or audit a search.
std::string genotype_to_json(const Genotype& g);
Genotype genotype_from_json(const std::string& text);
void save_genotype(const Genotype& g, const std::string& path);
Genotype load_genotype(const std::string& path);

}  // namespace wsearch
