#pragma once

#include <cstdint>
#include <numeric>
#include <span>
#include <variant>
#include <vector>

#include "afsd/error.hpp"
#include "afsd/parallel.hpp"
#include "afsd/random.hpp"
#include "afsd/tree.hpp"

namespace afsd::ml {

struct ForestHyperparams {
    int n_estimators = 100;
    TreeHyperparams tree;
    bool bootstrap = true;

    bool operator==(const ForestHyperparams&) const = default;

    void validate() const {
        if (n_estimators < 1) throw ConfigError("n_estimators must be >= 1");
        tree.validate();
    }
};

/// Bagged ensemble of regression trees; the prediction is the mean of the
/// member predictions taken in tree order.
class RandomForest {
public:
    RandomForest() = default;
    RandomForest(std::vector<RegressionTree> trees, std::vector<std::uint64_t> bootstrap_seeds, ForestHyperparams hp,
                 std::uint64_t seed)
        : trees_(std::move(trees)), bootstrap_seeds_(std::move(bootstrap_seeds)), hp_(hp), seed_(seed) {}

    [[nodiscard]] double predict(std::span<const double> x) const {
        double sum = 0.0;
        for (const auto& t : trees_) sum += t.predict(x);
        return sum / static_cast<double>(trees_.size());
    }

    [[nodiscard]] const std::vector<RegressionTree>& trees() const { return trees_; }
    [[nodiscard]] const std::vector<std::uint64_t>& bootstrap_seeds() const { return bootstrap_seeds_; }
    [[nodiscard]] const ForestHyperparams& hyperparams() const { return hp_; }
    [[nodiscard]] std::uint64_t seed() const { return seed_; }

    bool operator==(const RandomForest&) const = default;

private:
    std::vector<RegressionTree> trees_;
    std::vector<std::uint64_t> bootstrap_seeds_;
    ForestHyperparams hp_;
    std::uint64_t seed_ = 0;
};

/// Tree i draws its bootstrap sample (n rows with replacement) from a stream
/// seeded by (seed, i), so each tree is independent of fitting order.
inline RandomForest fit_forest(const FeatureMatrix& x, std::span<const double> y, const ForestHyperparams& hp,
                               std::uint64_t seed, bool parallel = false) {
    hp.validate();
    detail::check_inputs(x, y);
    const auto n_trees = static_cast<std::size_t>(hp.n_estimators);
    std::vector<std::uint64_t> seeds(n_trees);
    for (std::size_t i = 0; i < n_trees; ++i) seeds[i] = derive_seed(seed, {i});
    std::vector<RegressionTree> trees(n_trees);

    auto fit_one = [&](std::size_t i) {
        Rng rng(seeds[i]);
        std::vector<std::size_t> rows(x.rows());
        if (hp.bootstrap) {
            for (auto& r : rows) r = static_cast<std::size_t>(rng.below(x.rows()));
        } else {
            std::iota(rows.begin(), rows.end(), 0);
        }
        trees[i] = fit_tree_rows(x, y, std::move(rows), hp.tree, derive_seed(seeds[i], {1}));
    };
    if (parallel) {
        parallel_for(n_trees, fit_one);
    } else {
        for (std::size_t i = 0; i < n_trees; ++i) fit_one(i);
    }
    return RandomForest(std::move(trees), std::move(seeds), hp, seed);
}

inline double predict_forest(const RandomForest& forest, std::span<const double> x) { return forest.predict(x); }

using Model = std::variant<RegressionTree, RandomForest>;

inline double predict(const Model& m, std::span<const double> x) {
    return std::visit([&](const auto& model) { return model.predict(x); }, m);
}

inline std::vector<double> predict_all(const Model& m, const FeatureMatrix& x) {
    std::vector<double> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict(m, x.row(i));
    return out;
}

}  // namespace afsd::ml
