#pragma once

// CART regression tree.
//
// Greedy top-down induction: every node takes the (feature, threshold) pair
// that minimises the summed squared error of its two children. Candidate
// thresholds are midpoints between consecutive distinct feature values.
// Ties go to the lowest feature index, then the lowest threshold.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "afsd/error.hpp"
#include "afsd/random.hpp"

namespace afsd::ml {

/// Row-major feature matrix.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    FeatureMatrix(std::size_t rows, std::size_t cols) : cols_(cols), values_(rows * cols, 0.0) {}

    [[nodiscard]] std::size_t rows() const { return cols_ == 0 ? 0 : values_.size() / cols_; }
    [[nodiscard]] std::size_t cols() const { return cols_; }

    [[nodiscard]] std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols_, cols_}; }
    [[nodiscard]] std::span<double> row(std::size_t i) { return {values_.data() + i * cols_, cols_}; }
    [[nodiscard]] double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }

    void push_row(std::span<const double> r) {
        if (cols_ == 0 && values_.empty()) cols_ = r.size();
        if (r.size() != cols_) throw ConfigError("row width does not match matrix");
        values_.insert(values_.end(), r.begin(), r.end());
    }

    /// Rows selected by index, in the given order (repeats allowed).
    [[nodiscard]] FeatureMatrix select(std::span<const std::size_t> idx) const {
        FeatureMatrix out(idx.size(), cols_);
        for (std::size_t r = 0; r < idx.size(); ++r) std::copy_n(row(idx[r]).begin(), cols_, out.row(r).begin());
        return out;
    }

    bool operator==(const FeatureMatrix&) const = default;

private:
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

struct TreeHyperparams {
    int max_depth = 20;          // d
    int min_samples_split = 2;   // s
    int min_samples_leaf = 1;    // l
    int max_features = 0;        // features tried per split; 0 = all

    bool operator==(const TreeHyperparams&) const = default;

    void validate() const {
        if (max_depth < 1) throw ConfigError("max_depth must be >= 1");
        if (min_samples_split < 2) throw ConfigError("min_samples_split must be >= 2");
        if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be >= 1");
        if (max_features < 0) throw ConfigError("max_features must be >= 0");
    }
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // mean target of the node's training samples
    int samples = 0;
    int depth = 0;

    [[nodiscard]] bool is_leaf() const { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

class RegressionTree {
public:
    RegressionTree() = default;
    RegressionTree(std::vector<TreeNode> nodes, TreeHyperparams hp, std::size_t n_features, std::uint64_t seed)
        : nodes_(std::move(nodes)), hp_(hp), n_features_(n_features), seed_(seed) {
        for (const auto& n : nodes_) depth_ = std::max(depth_, n.depth);
    }

    /// Routes x down the tree (x[feature] <= threshold goes left).
    [[nodiscard]] double predict(std::span<const double> x) const {
        int i = 0;
        while (!nodes_[static_cast<std::size_t>(i)].is_leaf()) {
            const auto& n = nodes_[static_cast<std::size_t>(i)];
            i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
        }
        return nodes_[static_cast<std::size_t>(i)].value;
    }

    /// Index of the leaf that x lands in.
    [[nodiscard]] int leaf_index(std::span<const double> x) const {
        int i = 0;
        while (!nodes_[static_cast<std::size_t>(i)].is_leaf()) {
            const auto& n = nodes_[static_cast<std::size_t>(i)];
            i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
        }
        return i;
    }

    [[nodiscard]] const std::vector<TreeNode>& nodes() const { return nodes_; }
    [[nodiscard]] int depth() const { return depth_; }
    [[nodiscard]] const TreeHyperparams& hyperparams() const { return hp_; }
    [[nodiscard]] std::size_t n_features() const { return n_features_; }
    [[nodiscard]] std::uint64_t seed() const { return seed_; }

    bool operator==(const RegressionTree&) const = default;

private:
    std::vector<TreeNode> nodes_;
    int depth_ = 0;
    TreeHyperparams hp_;
    std::size_t n_features_ = 0;
    std::uint64_t seed_ = 0;
};

struct SplitCandidate {
    int feature = -1;
    double threshold = 0.0;
    double sse = std::numeric_limits<double>::infinity();  // children's summed squared error
    std::size_t left_count = 0;
};

namespace detail {

inline void check_inputs(const FeatureMatrix& x, std::span<const double> y) {
    if (x.rows() == 0 || y.empty()) throw ConfigError("cannot fit on empty data");
    if (x.rows() != y.size()) throw ConfigError("feature rows and targets differ in length");
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (double v : x.row(i))
            if (!std::isfinite(v)) throw ConfigError("non-finite feature value at row " + std::to_string(i));
    for (std::size_t i = 0; i < y.size(); ++i)
        if (!std::isfinite(y[i])) throw ConfigError("non-finite target at row " + std::to_string(i));
}

inline double midpoint(double a, double b) {
    const double m = a + (b - a) / 2.0;
    // guarantees a <= m < b even for adjacent doubles
    return m < b ? m : a;
}

}  // namespace detail

/// Best split of the rows `idx` over `features`, honouring the leaf-size limit.
/// Returns a candidate with feature = -1 when no admissible split exists.
inline SplitCandidate best_split(const FeatureMatrix& x, std::span<const double> y,
                                 std::span<const std::size_t> idx, std::span<const int> features,
                                 int min_samples_leaf) {
    SplitCandidate best;
    const std::size_t n = idx.size();
    if (n < 2) return best;
    double mean = 0.0;
    for (auto i : idx) mean += y[i];
    mean /= static_cast<double>(n);

    std::vector<std::size_t> order(idx.begin(), idx.end());
    const auto leaf = static_cast<std::size_t>(min_samples_leaf);
    for (int f : features) {
        const auto fu = static_cast<std::size_t>(f);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x(a, fu) < x(b, fu); });
        double total = 0.0, total_sq = 0.0;
        for (auto i : order) {
            const double c = y[i] - mean;
            total += c;
            total_sq += c * c;
        }
        double left = 0.0, left_sq = 0.0;
        for (std::size_t pos = 1; pos < n; ++pos) {
            const double c = y[order[pos - 1]] - mean;
            left += c;
            left_sq += c * c;
            const double lo = x(order[pos - 1], fu);
            const double hi = x(order[pos], fu);
            if (!(lo < hi)) continue;
            if (pos < leaf || n - pos < leaf) continue;
            const auto nl = static_cast<double>(pos);
            const auto nr = static_cast<double>(n - pos);
            const double right = total - left;
            const double right_sq = total_sq - left_sq;
            const double sse = std::max(0.0, left_sq - left * left / nl) + std::max(0.0, right_sq - right * right / nr);
            // rounding of the running sums must not break ties between identical partitions
            if (best.feature < 0 || sse < best.sse - 1e-12 * std::max(1.0, total_sq)) {
                best.feature = f;
                best.threshold = detail::midpoint(lo, hi);
                best.sse = sse;
                best.left_count = pos;
            }
        }
    }
    return best;
}

namespace detail {

struct TreeBuilder {
    const FeatureMatrix& x;
    std::span<const double> y;
    TreeHyperparams hp;
    Rng rng;
    std::vector<TreeNode> nodes;

    int build(std::vector<std::size_t> idx, int depth) {
        const auto node_id = static_cast<int>(nodes.size());
        TreeNode node;
        node.samples = static_cast<int>(idx.size());
        node.depth = depth;
        double sum = 0.0;
        for (auto i : idx) sum += y[i];
        node.value = sum / static_cast<double>(idx.size());
        nodes.push_back(node);

        const bool constant = std::all_of(idx.begin(), idx.end(), [&](std::size_t i) { return y[i] == y[idx[0]]; });
        if (depth >= hp.max_depth || node.samples < hp.min_samples_split || constant) return node_id;

        const auto split = best_split(x, y, idx, candidate_features(), hp.min_samples_leaf);
        if (split.feature < 0) return node_id;

        std::vector<std::size_t> left, right;
        left.reserve(split.left_count);
        right.reserve(idx.size() - split.left_count);
        for (auto i : idx) (x(i, static_cast<std::size_t>(split.feature)) <= split.threshold ? left : right).push_back(i);
        idx.clear();
        idx.shrink_to_fit();

        const int l = build(std::move(left), depth + 1);
        const int r = build(std::move(right), depth + 1);
        auto& self = nodes[static_cast<std::size_t>(node_id)];
        self.feature = split.feature;
        self.threshold = split.threshold;
        self.left = l;
        self.right = r;
        return node_id;
    }

    std::vector<int> candidate_features() {
        std::vector<int> f(x.cols());
        std::iota(f.begin(), f.end(), 0);
        const auto m = static_cast<std::size_t>(hp.max_features);
        if (m == 0 || m >= f.size()) return f;
        shuffle(f, rng);
        f.resize(m);
        std::sort(f.begin(), f.end());
        return f;
    }
};

}  // namespace detail

/// Fits a tree to the rows `idx` of (x, y). `seed` drives feature subsampling
/// only and is unused when every feature is considered at each split.
inline RegressionTree fit_tree_rows(const FeatureMatrix& x, std::span<const double> y,
                                    std::vector<std::size_t> idx, const TreeHyperparams& hp, std::uint64_t seed) {
    hp.validate();
    detail::check_inputs(x, y);
    if (idx.empty()) throw ConfigError("cannot fit on empty data");
    detail::TreeBuilder b{x, y, hp, Rng(seed), {}};
    b.build(std::move(idx), 0);
    return RegressionTree(std::move(b.nodes), hp, x.cols(), seed);
}

inline RegressionTree fit_tree(const FeatureMatrix& x, std::span<const double> y, const TreeHyperparams& hp,
                               std::uint64_t seed) {
    std::vector<std::size_t> idx(x.rows());
    std::iota(idx.begin(), idx.end(), 0);
    return fit_tree_rows(x, y, std::move(idx), hp, seed);
}

inline double predict_tree(const RegressionTree& tree, std::span<const double> x) { return tree.predict(x); }

}  // namespace afsd::ml
