#pragma once

// Steady-state evolutionary search over genotypes: grow the population to
// capacity, then replace the worst individual per step. Selection is by
// tournament; every mutation is one growth-function increment realized through
// the function-preserving widening of the parent's weights.

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "wsearch/arch.hpp"
#include "wsearch/dataset.hpp"
#include "wsearch/growth.hpp"
#include "wsearch/network.hpp"
#include "wsearch/train.hpp"
#include "wsearch/widen.hpp"

namespace wsearch {

struct SearchConfig {
    double lambda = 0.2;
    int p1 = 12;          // initial population
    int p2 = 20;          // capacity
    int k = 3;            // tournament size
    int child_epochs = 15;
    int init_epochs = 31;
    std::uint64_t param_budget = 0;
    double budget_fraction = 0.95;
    int max_steps = 500;  // generation cap
    std::uint64_t seed = 0;
    int base_width = 0;   // 0 = spec default (half the minimum original width)
    AccountingMode mode = AccountingMode::Compound;
    NoiseSpec noise;
    std::vector<GrowthFunctionId> mutation_pool;  // empty = all nine
    double fitness_param_weight = 0.0;  // optional params/FLOPs penalty terms,
    double fitness_flop_weight = 0.0;   // disabled by default
    bool cold_start = false;            // ablation: He-init children instead of inheritance
    int seeding_threads = 0;            // 0 = hardware concurrency

    void validate() const;
    const std::vector<GrowthFunctionId>& pool() const;
};

struct Individual {
    int id = 0;
    int parent_id = -1;
    Genotype genotype;
    std::shared_ptr<NetworkInstance<float>> net;  // the checkpoint
    double fitness = std::numeric_limits<double>::quiet_NaN();
    bool evaluated = false;
    std::uint64_t params = 0;
    GrowthFunctionId mutation_tag = GrowthFunctionId::Const;
};

struct Population {
    std::vector<Individual> members;
    int next_id = 1;

    int size() const { return static_cast<int>(members.size()); }
};

// Trains (where applicable) and scores individuals. evaluate() must be safe to
// call concurrently on distinct individuals.
class FitnessEvaluator {
public:
    virtual ~FitnessEvaluator() = default;
    virtual void prepare_initial(NetworkInstance<float>& /*net*/) {}
    virtual double evaluate(Individual& indiv) = 0;
};

// Dataset-backed fitness: train child_epochs, then validation accuracy, minus
// the optional params/FLOPs penalties.
class TrainingFitness : public FitnessEvaluator {
public:
    TrainingFitness(const ArchitectureSpec& spec, const SearchConfig& cfg,
                    const TrainConfig& train_cfg, const AugmentConfig& aug,
                    LabeledDataset train_data, LabeledDataset val_data)
        : spec_(spec), cfg_(cfg), train_cfg_(train_cfg), aug_(aug),
          train_data_(std::move(train_data)), val_data_(std::move(val_data)) {}

    void prepare_initial(NetworkInstance<float>& net) override;
    double evaluate(Individual& indiv) override;

private:
    ArchitectureSpec spec_;
    SearchConfig cfg_;
    TrainConfig train_cfg_;
    AugmentConfig aug_;
    LabeledDataset train_data_, val_data_;
};

// Fitness from a plain function of the individual (no training); used for
// desk-scale dynamics checks.
class SyntheticFitness : public FitnessEvaluator {
public:
    explicit SyntheticFitness(std::function<double(const Individual&)> fn)
        : fn_(std::move(fn)) {}
    double evaluate(Individual& indiv) override { return fn_(indiv); }

private:
    std::function<double(const Individual&)> fn_;
};

struct LogRow {
    double wallclock_s = 0.0;
    std::string event;  // "seed" | "step"
    int individual_id = 0;
    int parent_id = 0;
    std::string mutation_tag;
    std::uint64_t params = 0;
    double fitness = 0.0;
    double best_fitness = 0.0;
    int population_size = 0;
};

struct RunLog {
    std::vector<LogRow> rows;

    static std::string csv_header();
    static std::string csv_row(const LogRow& row);
    std::string to_csv() const;

    // Equality that ignores the wallclock column (replay comparisons).
    bool same_events(const RunLog& other) const;
};

const Individual& best_of(const Population& pop);

// P1 individuals, each one mutation from the initial model, each evaluated.
Population seed_population(const std::shared_ptr<NetworkInstance<float>>& initial,
                           const ArchitectureSpec& spec, const SearchConfig& cfg,
                           FitnessEvaluator& fitness, std::mt19937_64& search_rng,
                           RunLog* log = nullptr, std::ostream* live_csv = nullptr,
                           double t0_seconds = 0.0);

// Uniform k-subset without replacement; returns the max-fitness member, ties
// broken by lower id.
const Individual& tournament_select(const Population& pop, int k, std::mt19937_64& rng);

// One increment of the given tag plus weight inheritance via widen_network.
Individual mutate(const Individual& parent, const ArchitectureSpec& spec,
                  const SearchConfig& cfg, GrowthFunctionId tag, int child_id);

// Draws the tag uniformly from the configured pool.
Individual mutate(const Individual& parent, const ArchitectureSpec& spec,
                  const SearchConfig& cfg, std::mt19937_64& rng, int child_id);

// Tournament -> mutate -> evaluate -> insert (replacing the worst at capacity).
void evolve_step(Population& pop, const ArchitectureSpec& spec, const SearchConfig& cfg,
                 FitnessEvaluator& fitness, std::mt19937_64& search_rng, RunLog* log = nullptr,
                 std::ostream* live_csv = nullptr, double t0_seconds = 0.0);

struct SearchResult {
    Individual best;
    RunLog log;
    bool budget_reached = false;
    int steps = 0;
    std::uint64_t initial_params = 0;
    std::string warning;
};

// Full pipeline: build + train the initial model, seed, evolve until the best
// individual's params reach budget_fraction * param_budget or the step cap.
SearchResult run_search(const ArchitectureSpec& spec, const SearchConfig& cfg,
                        FitnessEvaluator& fitness, std::ostream* live_csv = nullptr);

}  // namespace wsearch
