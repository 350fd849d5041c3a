#pragma once

// Model document: versioned JSON holding hyperparameters, seeds and the full
// node structure of a fitted tree or forest.
//
//   {
//     "format_version": 1,
//     "model": "decision_tree" | "random_forest",
//     "n_features": 5,
//     "feature_names": [...],          optional
//     "target": "von_mises_mpa",       optional
//     "seed": "<u64 as decimal string>",
//     "hyperparameters": {n_estimators, bootstrap, max_depth,
//                         min_samples_split, min_samples_leaf, max_features},
//     "trees": [{"seed": "...", "bootstrap_seed": "...",
//                "nodes": [[feature, threshold, left, right, value, samples, depth], ...]}],
//     "metadata": {...}                optional, free form
//   }
//
// A leaf has feature = -1 and left = right = -1. Node 0 is the root. Seeds are
// strings because many JSON readers cannot hold a full 64-bit integer.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "afsd/error.hpp"
#include "afsd/forest.hpp"
#include "afsd/tree.hpp"

namespace afsd::ml {

inline constexpr int kModelFormatVersion = 1;

struct ModelDocument {
    Model model;
    std::string target;
    std::vector<std::string> feature_names;
    nlohmann::ordered_json metadata = nlohmann::ordered_json::object();
};

namespace detail {

inline nlohmann::ordered_json tree_json(const RegressionTree& t, std::uint64_t bootstrap_seed) {
    nlohmann::ordered_json j;
    j["seed"] = std::to_string(t.seed());
    j["bootstrap_seed"] = std::to_string(bootstrap_seed);
    auto nodes = nlohmann::ordered_json::array();
    for (const auto& n : t.nodes())
        nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value, n.samples, n.depth});
    j["nodes"] = std::move(nodes);
    return j;
}

[[noreturn]] inline void malformed(const std::string& where, const std::string& what) {
    throw ConfigError("malformed model document at " + where + ": " + what);
}

inline std::uint64_t parse_seed(const nlohmann::ordered_json& j, const std::string& where) {
    if (!j.is_string()) malformed(where, "expected a decimal string");
    const auto& s = j.get_ref<const std::string&>();
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) malformed(where, "invalid seed");
    try {
        return std::stoull(s);
    } catch (...) {
        malformed(where, "seed out of range");
    }
}

inline const nlohmann::ordered_json& field(const nlohmann::ordered_json& obj, const char* key,
                                           const std::string& where) {
    if (!obj.is_object()) malformed(where, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) malformed(where + "/" + key, "missing");
    return *it;
}

inline int int_field(const nlohmann::ordered_json& obj, const char* key, const std::string& where) {
    const auto& v = field(obj, key, where);
    if (!v.is_number_integer()) malformed(where + "/" + key, "expected an integer");
    return v.get<int>();
}

inline RegressionTree parse_tree(const nlohmann::ordered_json& j, const TreeHyperparams& hp, std::size_t n_features,
                                 const std::string& where) {
    const auto seed = parse_seed(field(j, "seed", where), where + "/seed");
    const auto& arr = field(j, "nodes", where);
    if (!arr.is_array() || arr.empty()) malformed(where + "/nodes", "expected a nonempty array");
    std::vector<TreeNode> nodes;
    nodes.reserve(arr.size());
    const auto count = static_cast<int>(arr.size());
    std::vector<int> parents(arr.size(), 0);
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string at = where + "/nodes/" + std::to_string(i);
        const auto& a = arr[i];
        if (!a.is_array() || a.size() != 7) malformed(at, "expected [feature, threshold, left, right, value, samples, depth]");
        for (std::size_t k : {0u, 2u, 3u, 5u, 6u})
            if (!a[k].is_number_integer()) malformed(at, "integer field expected in position " + std::to_string(k));
        for (std::size_t k : {1u, 4u})
            if (!a[k].is_number()) malformed(at, "number expected in position " + std::to_string(k));
        TreeNode n;
        n.feature = a[0].get<int>();
        n.threshold = a[1].get<double>();
        n.left = a[2].get<int>();
        n.right = a[3].get<int>();
        n.value = a[4].get<double>();
        n.samples = a[5].get<int>();
        n.depth = a[6].get<int>();
        const auto self = static_cast<int>(i);
        if (n.feature < -1 || n.feature >= static_cast<int>(n_features)) malformed(at, "feature index out of range");
        if (n.is_leaf()) {
            if (n.left != -1 || n.right != -1) malformed(at, "leaf with children");
        } else {
            if (n.left <= self || n.left >= count || n.right <= self || n.right >= count || n.left == n.right)
                malformed(at, "child index out of range");
            ++parents[static_cast<std::size_t>(n.left)];
            ++parents[static_cast<std::size_t>(n.right)];
        }
        nodes.push_back(n);
    }
    for (std::size_t i = 1; i < parents.size(); ++i)
        if (parents[i] != 1) malformed(where + "/nodes/" + std::to_string(i), "node is not referenced exactly once");
    return RegressionTree(std::move(nodes), hp, n_features, seed);
}

}  // namespace detail

inline std::string serialize_model(const ModelDocument& doc) {
    nlohmann::ordered_json j;
    j["format_version"] = kModelFormatVersion;
    const bool forest = std::holds_alternative<RandomForest>(doc.model);
    j["model"] = forest ? "random_forest" : "decision_tree";

    std::vector<RegressionTree> trees;
    std::vector<std::uint64_t> boot;
    ForestHyperparams hp;
    std::uint64_t seed = 0;
    if (forest) {
        const auto& f = std::get<RandomForest>(doc.model);
        trees = f.trees();
        boot = f.bootstrap_seeds();
        hp = f.hyperparams();
        seed = f.seed();
    } else {
        const auto& t = std::get<RegressionTree>(doc.model);
        trees = {t};
        boot = {0};
        hp.n_estimators = 1;
        hp.bootstrap = false;
        hp.tree = t.hyperparams();
        seed = t.seed();
    }
    j["n_features"] = trees.front().n_features();
    if (!doc.feature_names.empty()) j["feature_names"] = doc.feature_names;
    if (!doc.target.empty()) j["target"] = doc.target;
    j["seed"] = std::to_string(seed);
    j["hyperparameters"] = {{"n_estimators", hp.n_estimators},
                            {"bootstrap", hp.bootstrap},
                            {"max_depth", hp.tree.max_depth},
                            {"min_samples_split", hp.tree.min_samples_split},
                            {"min_samples_leaf", hp.tree.min_samples_leaf},
                            {"max_features", hp.tree.max_features}};
    auto arr = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < trees.size(); ++i) arr.push_back(detail::tree_json(trees[i], boot[i]));
    j["trees"] = std::move(arr);
    if (!doc.metadata.empty()) j["metadata"] = doc.metadata;
    return j.dump(1) + "\n";
}

/// Parses a model document. Any structural problem throws ConfigError naming
/// the offending location; no partially built model escapes.
inline ModelDocument deserialize_model(const std::string& text) {
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("malformed model document: ") + e.what());
    }
    const std::string root;
    if (!j.is_object()) detail::malformed("/", "expected an object");
    if (detail::int_field(j, "format_version", root) != kModelFormatVersion)
        detail::malformed("/format_version", "unsupported version");
    const auto& kind = detail::field(j, "model", root);
    if (!kind.is_string() || (kind != "decision_tree" && kind != "random_forest"))
        detail::malformed("/model", "expected \"decision_tree\" or \"random_forest\"");
    const int n_features = detail::int_field(j, "n_features", root);
    if (n_features < 1) detail::malformed("/n_features", "must be positive");
    const auto seed = detail::parse_seed(detail::field(j, "seed", root), "/seed");

    const auto& h = detail::field(j, "hyperparameters", root);
    ForestHyperparams hp;
    hp.n_estimators = detail::int_field(h, "n_estimators", "/hyperparameters");
    hp.tree.max_depth = detail::int_field(h, "max_depth", "/hyperparameters");
    hp.tree.min_samples_split = detail::int_field(h, "min_samples_split", "/hyperparameters");
    hp.tree.min_samples_leaf = detail::int_field(h, "min_samples_leaf", "/hyperparameters");
    hp.tree.max_features = detail::int_field(h, "max_features", "/hyperparameters");
    const auto& boot = detail::field(h, "bootstrap", "/hyperparameters");
    if (!boot.is_boolean()) detail::malformed("/hyperparameters/bootstrap", "expected a boolean");
    hp.bootstrap = boot.get<bool>();
    try {
        hp.validate();
    } catch (const ConfigError& e) {
        detail::malformed("/hyperparameters", e.what());
    }

    const auto& trees_j = detail::field(j, "trees", root);
    if (!trees_j.is_array() || trees_j.empty()) detail::malformed("/trees", "expected a nonempty array");
    std::vector<RegressionTree> trees;
    std::vector<std::uint64_t> boot_seeds;
    for (std::size_t i = 0; i < trees_j.size(); ++i) {
        const std::string at = "/trees/" + std::to_string(i);
        trees.push_back(detail::parse_tree(trees_j[i], hp.tree, static_cast<std::size_t>(n_features), at));
        boot_seeds.push_back(detail::parse_seed(detail::field(trees_j[i], "bootstrap_seed", at), at + "/bootstrap_seed"));
    }

    ModelDocument doc;
    if (kind == "random_forest") {
        if (static_cast<int>(trees.size()) != hp.n_estimators)
            detail::malformed("/trees", "tree count does not match n_estimators");
        doc.model = RandomForest(std::move(trees), std::move(boot_seeds), hp, seed);
    } else {
        if (trees.size() != 1) detail::malformed("/trees", "a decision tree document holds exactly one tree");
        doc.model = std::move(trees.front());
    }
    if (auto it = j.find("target"); it != j.end()) {
        if (!it->is_string()) detail::malformed("/target", "expected a string");
        doc.target = it->get<std::string>();
    }
    if (auto it = j.find("feature_names"); it != j.end()) {
        if (!it->is_array()) detail::malformed("/feature_names", "expected an array");
        for (std::size_t i = 0; i < it->size(); ++i) {
            if (!(*it)[i].is_string()) detail::malformed("/feature_names/" + std::to_string(i), "expected a string");
            doc.feature_names.push_back((*it)[i].get<std::string>());
        }
        if (doc.feature_names.size() != static_cast<std::size_t>(n_features))
            detail::malformed("/feature_names", "length does not match n_features");
    }
    if (auto it = j.find("metadata"); it != j.end()) doc.metadata = *it;
    return doc;
}

}  // namespace afsd::ml
