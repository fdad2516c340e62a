#include "wsearch/evolution.hpp"

#include <algorithm>
#include <chrono>
#include <future>
#include <sstream>
#include <thread>

#include "wsearch/rng.hpp"

namespace wsearch {

namespace {

double now_seconds() {
    using clock = std::chrono::steady_clock;
    static const clock::time_point origin = clock::now();
    return std::chrono::duration<double>(clock::now() - origin).count();
}

void emit(RunLog* log, std::ostream* live, const LogRow& row) {
    if (log) log->rows.push_back(row);
    if (live) {
        (*live) << RunLog::csv_row(row) << "\n";
        live->flush();  // interrupted runs stay analyzable
    }
}

LogRow row_for(const Individual& ind, const Population& pop, const std::string& event,
               double t0) {
    LogRow row;
    row.wallclock_s = now_seconds() - t0;
    row.event = event;
    row.individual_id = ind.id;
    row.parent_id = ind.parent_id;
    row.mutation_tag = std::string(to_string(ind.mutation_tag));
    row.params = ind.params;
    row.fitness = ind.fitness;
    row.best_fitness = best_of(pop).fitness;
    row.population_size = pop.size();
    return row;
}

}  // namespace

void SearchConfig::validate() const {
    if (!(lambda > 0.0)) throw InputError("search: lambda must be > 0");
    if (k < 1 || p1 < k || p2 < p1)
        throw InputError("search: need 1 <= k <= p1 <= p2");
    if (child_epochs < 0 || init_epochs < 0)
        throw InputError("search: epoch budgets must be >= 0");
    if (!(budget_fraction > 0.0) || budget_fraction > 1.0)
        throw InputError("search: budget_fraction outside (0, 1]");
    if (max_steps < 0) throw InputError("search: max_steps must be >= 0");
    noise.validate();
    if (fitness_param_weight < 0.0 || fitness_flop_weight < 0.0)
        throw InputError("search: fitness penalty weights must be >= 0");
}

const std::vector<GrowthFunctionId>& SearchConfig::pool() const {
    static const std::vector<GrowthFunctionId> all(std::begin(kAllGrowthFunctions),
                                                   std::end(kAllGrowthFunctions));
    return mutation_pool.empty() ? all : mutation_pool;
}

void TrainingFitness::prepare_initial(NetworkInstance<float>& net) {
    if (cfg_.init_epochs == 0) return;
    TrainConfig tc = train_cfg_;
    tc.epochs = cfg_.init_epochs;
    train(net, train_data_, tc, make_stream(cfg_.seed, "train-init"), &aug_);
}

double TrainingFitness::evaluate(Individual& indiv) {
    TrainConfig tc = train_cfg_;
    tc.epochs = cfg_.child_epochs;
    train(*indiv.net, train_data_, tc,
          make_stream(cfg_.seed, "train", static_cast<std::uint64_t>(indiv.id)), &aug_);
    double fit = accuracy(*indiv.net, val_data_);
    if (cfg_.fitness_param_weight > 0.0 && cfg_.param_budget > 0)
        fit -= cfg_.fitness_param_weight *
               (static_cast<double>(indiv.params) / static_cast<double>(cfg_.param_budget));
    if (cfg_.fitness_flop_weight > 0.0) {
        const auto target = realize_schedule(indiv.genotype);
        const auto base = realize_schedule(
            Genotype::identity(indiv.genotype.base_widths, indiv.genotype.mode));
        const double flops = static_cast<double>(flop_count(spec_, target));
        const double ref = static_cast<double>(flop_count(spec_, base));
        fit -= cfg_.fitness_flop_weight * (flops / ref);
    }
    return fit;
}

std::string RunLog::csv_header() {
    return "wallclock_s,event,individual_id,parent_id,mutation_tag,params,fitness,"
           "best_fitness,population_size";
}

std::string RunLog::csv_row(const LogRow& row) {
    std::ostringstream out;
    out.precision(10);
    out << row.wallclock_s << "," << row.event << "," << row.individual_id << ","
        << row.parent_id << "," << row.mutation_tag << "," << row.params << ","
        << row.fitness << "," << row.best_fitness << "," << row.population_size;
    return out.str();
}

std::string RunLog::to_csv() const {
    std::string out = csv_header() + "\n";
    for (const auto& row : rows) out += csv_row(row) + "\n";
    return out;
}

bool RunLog::same_events(const RunLog& other) const {
    if (rows.size() != other.rows.size()) return false;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const LogRow& a = rows[i];
        const LogRow& b = other.rows[i];
        if (a.event != b.event || a.individual_id != b.individual_id ||
            a.parent_id != b.parent_id || a.mutation_tag != b.mutation_tag ||
            a.params != b.params || a.fitness != b.fitness ||
            a.best_fitness != b.best_fitness || a.population_size != b.population_size)
            return false;
    }
    return true;
}

const Individual& best_of(const Population& pop) {
    if (pop.members.empty()) throw InputError("best_of: empty population");
    const Individual* best = &pop.members.front();
    for (const auto& ind : pop.members)
        if (ind.fitness > best->fitness ||
            (ind.fitness == best->fitness && ind.id < best->id))
            best = &ind;
    return *best;
}

const Individual& tournament_select(const Population& pop, int k, std::mt19937_64& rng) {
    if (pop.members.empty()) throw InputError("tournament: empty population");
    if (k < 1 || k > pop.size())
        throw InputError("tournament: k outside [1, population size]");
    // Fisher-Yates prefix over the index set
    std::vector<int> idx(static_cast<std::size_t>(pop.size()));
    for (int i = 0; i < pop.size(); ++i) idx[static_cast<std::size_t>(i)] = i;
    for (int i = 0; i < k; ++i) {
        std::uniform_int_distribution<int> u(i, pop.size() - 1);
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(u(rng))]);
    }
    const Individual* best = nullptr;
    for (int i = 0; i < k; ++i) {
        const Individual& cand = pop.members[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
        if (!best || cand.fitness > best->fitness ||
            (cand.fitness == best->fitness && cand.id < best->id))
            best = &cand;
    }
    return *best;
}

Individual mutate(const Individual& parent, const ArchitectureSpec& spec,
                  const SearchConfig& cfg, GrowthFunctionId tag, int child_id) {
    if (!parent.evaluated) throw InputError("mutate: parent has not been evaluated");
    const GrowthContext ctx = GrowthContext::from_spec(spec, cfg.lambda);

    Individual child;
    child.id = child_id;
    child.parent_id = parent.id;
    child.mutation_tag = tag;
    child.genotype = apply_increment(parent.genotype, tag, ctx);
    const ChannelSchedule target = realize_schedule(child.genotype);
    child.params = param_count(spec, target);

    std::mt19937_64 widen_rng =
        make_stream(cfg.seed, "widen", static_cast<std::uint64_t>(child_id));
    if (cfg.cold_start) {
        child.net = std::make_shared<NetworkInstance<float>>(
            materialize<float>(spec, target, splitmix64(cfg.seed ^ static_cast<std::uint64_t>(child_id))));
    } else {
        child.net = std::make_shared<NetworkInstance<float>>(
            widen_network(*parent.net, target, cfg.noise, widen_rng));
    }
    return child;
}

Individual mutate(const Individual& parent, const ArchitectureSpec& spec,
                  const SearchConfig& cfg, std::mt19937_64& rng, int child_id) {
    const auto& pool = cfg.pool();
    std::uniform_int_distribution<std::size_t> u(0, pool.size() - 1);
    return mutate(parent, spec, cfg, pool[u(rng)], child_id);
}

Population seed_population(const std::shared_ptr<NetworkInstance<float>>& initial,
                           const ArchitectureSpec& spec, const SearchConfig& cfg,
                           FitnessEvaluator& fitness, std::mt19937_64& search_rng,
                           RunLog* log, std::ostream* live_csv, double t0) {
    cfg.validate();
    Population pop;

    Individual root;  // the trained initial model, id 0; not a population member
    root.id = 0;
    root.evaluated = true;
    root.genotype = Genotype::identity(initial->schedule, cfg.mode);
    root.net = initial;
    root.params = param_count(spec, initial->schedule);

    std::vector<Individual> children;
    children.reserve(static_cast<std::size_t>(cfg.p1));
    for (int i = 0; i < cfg.p1; ++i)
        children.push_back(mutate(root, spec, cfg, search_rng, pop.next_id++));

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const int threads = cfg.seeding_threads > 0 ? cfg.seeding_threads : static_cast<int>(hw);
    if (threads > 1 && cfg.p1 > 1) {
        std::vector<std::future<double>> futures;
        futures.reserve(children.size());
        for (auto& child : children)
            futures.push_back(std::async(std::launch::async,
                                         [&fitness, &child] { return fitness.evaluate(child); }));
        for (std::size_t i = 0; i < children.size(); ++i) {
            try {
                children[i].fitness = futures[i].get();
            } catch (const std::exception& e) {
                throw SearchError(std::string("seed evaluation failed: ") + e.what(),
                                  children[i].id);
            }
            children[i].evaluated = true;
        }
    } else {
        for (auto& child : children) {
            try {
                child.fitness = fitness.evaluate(child);
            } catch (const std::exception& e) {
                throw SearchError(std::string("seed evaluation failed: ") + e.what(), child.id);
            }
            child.evaluated = true;
        }
    }

    for (auto& child : children) {
        pop.members.push_back(std::move(child));
        emit(log, live_csv, row_for(pop.members.back(), pop, "seed", t0));
    }
    return pop;
}

void evolve_step(Population& pop, const ArchitectureSpec& spec, const SearchConfig& cfg,
                 FitnessEvaluator& fitness, std::mt19937_64& search_rng, RunLog* log,
                 std::ostream* live_csv, double t0) {
    if (pop.size() < cfg.p1) throw InputError("evolve_step: population below p1");

    const Individual& parent = tournament_select(pop, cfg.k, search_rng);
    Individual child = mutate(parent, spec, cfg, search_rng, pop.next_id++);
    try {
        child.fitness = fitness.evaluate(child);
    } catch (const std::exception& e) {
        throw SearchError(std::string("evaluation failed: ") + e.what(), child.id);
    }
    child.evaluated = true;

    if (pop.size() >= cfg.p2) {
        // discard the worst (ties: the oldest) before the child enters
        std::size_t worst = 0;
        for (std::size_t i = 1; i < pop.members.size(); ++i) {
            const auto& cand = pop.members[i];
            const auto& cur = pop.members[worst];
            if (cand.fitness < cur.fitness ||
                (cand.fitness == cur.fitness && cand.id < cur.id))
                worst = i;
        }
        pop.members.erase(pop.members.begin() + static_cast<std::ptrdiff_t>(worst));
    }
    pop.members.push_back(std::move(child));
    emit(log, live_csv, row_for(pop.members.back(), pop, "step", t0));
}

SearchResult run_search(const ArchitectureSpec& spec, const SearchConfig& cfg,
                        FitnessEvaluator& fitness, std::ostream* live_csv) {
    cfg.validate();
    spec.validate();
    if (cfg.param_budget == 0) throw InputError("run_search: param_budget must be > 0");

    const double t0 = now_seconds();
    if (live_csv) {
        (*live_csv) << RunLog::csv_header() << "\n";
        live_csv->flush();
    }

    auto initial = std::make_shared<NetworkInstance<float>>(
        build_initial_model<float>(spec, cfg.base_width, derive_seed(cfg.seed, "init")));
    fitness.prepare_initial(*initial);

    SearchResult result;
    result.initial_params = param_count(spec, initial->schedule);

    std::mt19937_64 search_rng = make_stream(cfg.seed, "search");
    Population pop = seed_population(initial, spec, cfg, fitness, search_rng, &result.log,
                                     live_csv, t0);

    const double threshold = cfg.budget_fraction * static_cast<double>(cfg.param_budget);
    while (result.steps < cfg.max_steps) {
        if (static_cast<double>(best_of(pop).params) >= threshold) {
            result.budget_reached = true;
            break;
        }
        evolve_step(pop, spec, cfg, fitness, search_rng, &result.log, live_csv, t0);
        ++result.steps;
    }
    if (!result.budget_reached &&
        static_cast<double>(best_of(pop).params) >= threshold)
        result.budget_reached = true;
    if (!result.budget_reached)
        result.warning = "parameter budget not reached within the generation cap";

    result.best = best_of(pop);
    return result;
}

}  // namespace wsearch
