#pragma once

// Genetic algorithm over integer hyperparameter genomes.
//
// Generation loop: evaluate every individual, copy the elitism_count fittest
// unchanged, then fill the population with children produced by
// tournament -> crossover -> mutation. All random draws come from one stream
// seeded by GAConfig::seed, consumed in this order per child pair:
//   tournament draws for parent A, tournament draws for parent B,
//   crossover gate, crossover swap bits (only when the gate fires),
//   mutation gates and resamples for child A, then child B.
// Fitness evaluation itself draws nothing from that stream, so it may run in
// parallel without changing results.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "afsd/error.hpp"
#include "afsd/forest.hpp"
#include "afsd/metrics.hpp"
#include "afsd/parallel.hpp"
#include "afsd/random.hpp"
#include "afsd/tree.hpp"

namespace afsd::ga {

enum class ModelKind { DT, RF };

inline std::string_view to_string(ModelKind k) { return k == ModelKind::DT ? "DT" : "RF"; }

struct GeneBounds {
    int lo = 0;
    int hi = 0;
    bool operator==(const GeneBounds&) const = default;
};

/// DT genes: (max_depth, min_samples_split, min_samples_leaf).
/// RF genes: (n_estimators, max_depth, min_samples_split, min_samples_leaf).
struct Genome {
    ModelKind kind = ModelKind::DT;
    std::vector<int> genes;

    bool operator==(const Genome&) const = default;
    auto operator<=>(const Genome&) const = default;
};

inline std::size_t arity(ModelKind k) { return k == ModelKind::DT ? 3 : 4; }

inline std::vector<GeneBounds> default_bounds(ModelKind k) {
    std::vector<GeneBounds> b = {{1, 20}, {2, 20}, {1, 10}};
    if (k == ModelKind::RF) b.insert(b.begin(), GeneBounds{10, 200});
    return b;
}

struct GAConfig {
    int population_size = 50;
    int generations = 200;
    double crossover_prob = 0.8;
    double mutation_prob = 0.1;
    int tournament_size = 3;
    int elitism_count = 1;
    std::uint64_t seed = 42;
    double fitness_epsilon = 1e-12;
    /// Empty selects default_bounds(kind).
    std::vector<GeneBounds> gene_bounds;
    /// Reuse fitness values of genomes already evaluated in this run.
    bool memoize = true;

    bool operator==(const GAConfig&) const = default;

    [[nodiscard]] std::vector<GeneBounds> bounds_for(ModelKind k) const {
        return gene_bounds.empty() ? default_bounds(k) : gene_bounds;
    }

    void validate(ModelKind k) const {
        if (population_size < 2) throw ConfigError("population_size must be >= 2");
        if (generations < 1) throw ConfigError("generations must be >= 1");
        if (!(crossover_prob >= 0 && crossover_prob <= 1)) throw ConfigError("crossover_prob must lie in [0, 1]");
        if (!(mutation_prob >= 0 && mutation_prob <= 1)) throw ConfigError("mutation_prob must lie in [0, 1]");
        if (tournament_size < 1) throw ConfigError("tournament_size must be >= 1");
        if (elitism_count < 0 || elitism_count >= population_size)
            throw ConfigError("elitism_count must lie in [0, population_size)");
        if (!(fitness_epsilon > 0)) throw ConfigError("fitness_epsilon must be positive");
        const auto b = bounds_for(k);
        if (b.size() != arity(k)) throw ConfigError("gene_bounds arity does not match the model kind");
        for (const auto& g : b)
            if (g.lo > g.hi) throw ConfigError("gene bound lo exceeds hi");
    }
};

struct GARunReport {
    Genome best_genome;
    double best_fitness = 0.0;
    std::vector<double> curve;  // best fitness in each generation
    std::size_t evaluations = 0;
};

inline bool within_bounds(const Genome& g, std::span<const GeneBounds> bounds) {
    if (g.genes.size() != bounds.size()) return false;
    for (std::size_t i = 0; i < bounds.size(); ++i)
        if (g.genes[i] < bounds[i].lo || g.genes[i] > bounds[i].hi) return false;
    return true;
}

inline Genome random_genome(ModelKind kind, std::span<const GeneBounds> bounds, Rng& rng) {
    Genome g{kind, {}};
    for (const auto& b : bounds) g.genes.push_back(static_cast<int>(rng.between(b.lo, b.hi)));
    return g;
}

/// Draws k individuals uniformly with replacement and returns the index of the
/// fittest; ties go to the lowest population index.
inline std::size_t tournament_select(std::span<const double> fitnesses, int k, Rng& rng) {
    if (fitnesses.empty()) throw ConfigError("tournament over an empty population");
    if (k < 1) throw ConfigError("tournament size must be >= 1");
    std::size_t best = 0;
    bool first = true;
    for (int draw = 0; draw < k; ++draw) {
        const auto i = static_cast<std::size_t>(rng.below(fitnesses.size()));
        if (first || fitnesses[i] > fitnesses[best] || (fitnesses[i] == fitnesses[best] && i < best)) best = i;
        first = false;
    }
    return best;
}

inline const Genome& tournament_select(std::span<const Genome> population, std::span<const double> fitnesses, int k,
                                       Rng& rng) {
    if (population.size() != fitnesses.size()) throw ConfigError("population and fitness sizes differ");
    return population[tournament_select(fitnesses, k, rng)];
}

/// Uniform crossover: with probability pc each gene position is swapped
/// between the children with probability 1/2; otherwise children copy parents.
inline std::pair<Genome, Genome> crossover(const Genome& a, const Genome& b, double pc, Rng& rng) {
    if (a.kind != b.kind || a.genes.size() != b.genes.size()) throw ConfigError("crossover of mismatched genome kinds");
    std::pair<Genome, Genome> out{a, b};
    if (rng.uniform() < pc) {
        for (std::size_t i = 0; i < a.genes.size(); ++i)
            if (rng.bernoulli(0.5)) std::swap(out.first.genes[i], out.second.genes[i]);
    }
    return out;
}

/// Each gene is resampled uniformly within its bounds with probability pm.
inline Genome mutate(Genome g, double pm, std::span<const GeneBounds> bounds, Rng& rng) {
    for (std::size_t i = 0; i < g.genes.size(); ++i)
        if (rng.uniform() < pm) g.genes[i] = static_cast<int>(rng.between(bounds[i].lo, bounds[i].hi));
    return g;
}

using FitnessFn = std::function<double(const Genome&)>;
/// Called once per generation with the evaluated population.
using GenerationObserver =
    std::function<void(int generation, std::span<const Genome> population, std::span<const double> fitnesses)>;

/// Runs the generational loop. `fitness` must be thread-safe and deterministic.
inline GARunReport run_ga(const GAConfig& config, ModelKind kind, const FitnessFn& fitness,
                          const GenerationObserver& observer = {}) {
    config.validate(kind);
    const auto bounds = config.bounds_for(kind);
    const auto pop_size = static_cast<std::size_t>(config.population_size);
    Rng rng(config.seed);

    std::vector<Genome> population;
    population.reserve(pop_size);
    for (std::size_t i = 0; i < pop_size; ++i) population.push_back(random_genome(kind, bounds, rng));

    GARunReport report;
    std::map<Genome, double> cache;
    bool have_best = false;

    for (int gen = 0; gen < config.generations; ++gen) {
        std::vector<double> fit(pop_size, 0.0);
        std::vector<std::size_t> todo;
        std::vector<Genome> pending;
        for (std::size_t i = 0; i < pop_size; ++i) {
            if (config.memoize) {
                if (auto it = cache.find(population[i]); it != cache.end()) {
                    fit[i] = it->second;
                    continue;
                }
                if (std::find(pending.begin(), pending.end(), population[i]) != pending.end()) continue;
                pending.push_back(population[i]);
            }
            todo.push_back(i);
        }
        std::vector<double> computed(todo.size());
        parallel_for(todo.size(), [&](std::size_t t) { computed[t] = fitness(population[todo[t]]); });
        report.evaluations += todo.size();
        for (std::size_t t = 0; t < todo.size(); ++t) {
            fit[todo[t]] = computed[t];
            if (config.memoize) cache.emplace(population[todo[t]], computed[t]);
        }
        if (config.memoize)
            for (std::size_t i = 0; i < pop_size; ++i) fit[i] = cache.at(population[i]);

        std::size_t gen_best = 0;
        for (std::size_t i = 1; i < pop_size; ++i)
            if (fit[i] > fit[gen_best]) gen_best = i;
        report.curve.push_back(fit[gen_best]);
        if (!have_best || fit[gen_best] > report.best_fitness) {
            report.best_fitness = fit[gen_best];
            report.best_genome = population[gen_best];
            have_best = true;
        }
        if (observer) observer(gen, population, fit);
        if (gen + 1 == config.generations) break;

        std::vector<std::size_t> ranked(pop_size);
        std::iota(ranked.begin(), ranked.end(), 0);
        std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) { return fit[a] > fit[b]; });

        std::vector<Genome> next;
        next.reserve(pop_size);
        for (int e = 0; e < config.elitism_count; ++e) next.push_back(population[ranked[static_cast<std::size_t>(e)]]);
        while (next.size() < pop_size) {
            const Genome& pa = population[tournament_select(fit, config.tournament_size, rng)];
            const Genome& pb = population[tournament_select(fit, config.tournament_size, rng)];
            auto [ca, cb] = crossover(pa, pb, config.crossover_prob, rng);
            next.push_back(mutate(std::move(ca), config.mutation_prob, bounds, rng));
            auto mb = mutate(std::move(cb), config.mutation_prob, bounds, rng);
            if (next.size() < pop_size) next.push_back(std::move(mb));
        }
        population = std::move(next);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Model fitness

struct Partition {
    const ml::FeatureMatrix* x = nullptr;
    std::span<const double> y;
};

inline ml::TreeHyperparams tree_hyperparams(const Genome& g) {
    const std::size_t o = g.kind == ModelKind::RF ? 1 : 0;
    ml::TreeHyperparams hp;
    hp.max_depth = g.genes.at(o);
    hp.min_samples_split = g.genes.at(o + 1);
    hp.min_samples_leaf = g.genes.at(o + 2);
    return hp;
}

inline ml::ForestHyperparams forest_hyperparams(const Genome& g) {
    ml::ForestHyperparams hp;
    hp.n_estimators = g.genes.at(0);
    hp.tree = tree_hyperparams(g);
    return hp;
}

/// Model seed for a genome: a function of the genes and the GA seed only.
inline std::uint64_t model_seed(const Genome& g, std::uint64_t ga_seed) {
    std::uint64_t s = derive_seed(ga_seed, {static_cast<std::uint64_t>(g.kind)});
    for (int v : g.genes) s = derive_seed(s, {static_cast<std::uint64_t>(v)});
    return s;
}

inline ml::Model fit_genome(const Genome& g, const ml::FeatureMatrix& x, std::span<const double> y,
                            std::uint64_t ga_seed, bool parallel = false) {
    const auto seed = model_seed(g, ga_seed);
    if (g.kind == ModelKind::DT) return ml::fit_tree(x, y, tree_hyperparams(g), seed);
    return ml::fit_forest(x, y, forest_hyperparams(g), seed, parallel);
}

/// 1 / (MSE + epsilon) of the genome's model trained on `train` and scored on
/// `eval`. A model that fails to fit scores 0.
inline double evaluate_fitness(const Genome& g, const Partition& train, const Partition& eval, std::uint64_t ga_seed,
                               double epsilon) {
    try {
        const auto model = fit_genome(g, *train.x, train.y, ga_seed);
        const auto pred = ml::predict_all(model, *eval.x);
        return 1.0 / (ml::mean_squared_error(eval.y, pred) + epsilon);
    } catch (const std::exception& e) {
        std::cerr << "warning: non-viable individual (" << to_string(g.kind) << ") : " << e.what() << "\n";
        return 0.0;
    }
}

inline GARunReport run_ga(const GAConfig& config, ModelKind kind, const Partition& train, const Partition& eval) {
    if (train.y.empty() || eval.y.empty()) throw ConfigError("GA needs nonempty train and evaluation data");
    return run_ga(config, kind, [&](const Genome& g) {
        return evaluate_fitness(g, train, eval, config.seed, config.fitness_epsilon);
    });
}

}  // namespace afsd::ga
