#pragma once

// Run configuration (JSON). See configs/default.json for the full schema.
//
// A user file is layered over the built-in defaults: inside the geometry,
// process, solver, ranges, ga and train sections individual keys override the
// defaults. The alloys section is different: when a user file provides it, it
// replaces the default overlays wholesale, so every alloy constant that is
// missing from the user's overlay is reported rather than silently filled in.
// Keys beginning with '_' are comments and are ignored.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "afsd/dataset.hpp"
#include "afsd/deposition.hpp"
#include "afsd/error.hpp"
#include "afsd/forest.hpp"
#include "afsd/ga.hpp"
#include "afsd/io.hpp"
#include "afsd/materials.hpp"
#include "afsd/simulation.hpp"
#include "afsd/tree.hpp"

namespace afsd {

using Json = nlohmann::ordered_json;

inline constexpr const char* kDefaultConfig = R"json({
  "geometry": {
    "nx": 30,
    "ny": 12,
    "nz": 7,
    "spacing_m": 0.002,
    "substrate_layers": 3,
    "wall_layers": 4,
    "wall_width": 4,
    "wall_length": 24,
    "traverse_speed_m_per_s": 0.006,
    "interlayer_dwell_s": 5.0,
    "alternate_direction": true
  },
  "process": {
    "heat_source_w_per_m3": 3e9,
    "shear_translation_n": 2000,
    "shear_rotational_nm": 20,
    "tool_radius_m": 0.006,
    "convection_coeff_w_per_m2k": 20,
    "emissivity": 0.3,
    "ambient_temp_c": 25,
    "initial_temp_c": 25,
    "end_dwell_s": 2,
    "deposition_temp_c": null
  },
  "solver": {
    "dt_s": null,
    "bottom_boundary": "clamp"
  },
  "ranges": {
    "heat_source_w_per_m3": [1e9, 6e9],
    "shear_translation_n": [500, 5000],
    "shear_rotational_nm": [5, 50]
  },
  "target_reduction": "max",
  "alloys": {
    "_provenance": "handbook values, config-supplied; not part of the built-in alloy table",
    "AA2024": {"thermal_conductivity": 121, "cte": 2.32e-5, "poisson_ratio": 0.33, "yield_stress_ref": 324, "solidus_temp": 502},
    "AA5083": {"thermal_conductivity": 117, "cte": 2.38e-5, "poisson_ratio": 0.33, "yield_stress_ref": 228, "solidus_temp": 574},
    "AA5086": {"thermal_conductivity": 127, "cte": 2.38e-5, "poisson_ratio": 0.33, "yield_stress_ref": 207, "solidus_temp": 585},
    "AA7075": {"thermal_conductivity": 130, "cte": 2.36e-5, "poisson_ratio": 0.33, "yield_stress_ref": 503, "solidus_temp": 477},
    "AA6061": {"thermal_conductivity": 167, "cte": 2.36e-5, "poisson_ratio": 0.33, "yield_stress_ref": 276, "solidus_temp": 582}
  },
  "ga": {
    "population_size": 50,
    "generations": 200,
    "crossover_prob": 0.8,
    "mutation_prob": 0.1,
    "tournament_size": 3,
    "elitism_count": 1,
    "fitness_epsilon": 1e-12,
    "validation_fraction": 0.25,
    "memoize": true,
    "bounds": {
      "n_estimators": [10, 200],
      "max_depth": [1, 20],
      "min_samples_split": [2, 20],
      "min_samples_leaf": [1, 10]
    }
  },
  "train": {
    "dt": {"max_depth": 20, "min_samples_split": 2, "min_samples_leaf": 1, "max_features": 0},
    "rf": {"n_estimators": 100, "max_depth": 20, "min_samples_split": 2, "min_samples_leaf": 1, "max_features": 0, "bootstrap": true}
  },
  "seed": 42
}
)json";

struct TrainDefaults {
    ml::TreeHyperparams dt;
    ml::ForestHyperparams rf;
};

struct RunConfig {
    Geometry geometry;
    ProcessParameters process;
    SolverOptions solver;
    ParameterRanges ranges;
    TargetReduction reduction = TargetReduction::max;
    std::map<Alloy, PropertyOverlay> overlays;
    ga::GAConfig ga;
    double validation_fraction = 0.25;
    TrainDefaults train;
    std::uint64_t seed = 42;
    Json resolved;     // merged document
    std::string hash;  // sha256 of the merged document

    /// Built-in table values plus this config's overlay; throws naming any
    /// constant that is still missing.
    [[nodiscard]] AlloyProperties resolve(Alloy a) const {
        auto it = overlays.find(a);
        return with_overrides(builtin_alloy(a), it == overlays.end() ? PropertyOverlay{} : it->second);
    }

    [[nodiscard]] DatasetConfig dataset_config() const {
        DatasetConfig d;
        d.geometry = geometry;
        d.base_process = process;
        d.solver = solver;
        d.ranges = ranges;
        d.reduction = reduction;
        d.config_hash = hash;
        for (auto a : kAllAlloys) d.alloys.emplace(a, resolve(a));
        return d;
    }
};

namespace detail {

class Section {
public:
    Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError("config: " + path_ + " must be an object");
    }

    ~Section() noexcept(false) {
        if (std::uncaught_exceptions() > 0) return;
        for (const auto& [key, value] : j_.items()) {
            if (key.starts_with("_") || seen_.contains(key)) continue;
            throw ConfigError("config: unknown key " + path_ + "." + key);
        }
    }

    const Json& raw(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) throw ConfigError("config: missing key " + path_ + "." + key);
        return *it;
    }

    double number(const std::string& key) {
        const auto& v = raw(key);
        if (!v.is_number()) throw ConfigError("config: " + path_ + "." + key + " must be a number");
        return v.get<double>();
    }

    std::optional<double> optional_number(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end() || it->is_null()) return std::nullopt;
        if (!it->is_number()) throw ConfigError("config: " + path_ + "." + key + " must be a number or null");
        return it->get<double>();
    }

    int integer(const std::string& key) {
        const auto& v = raw(key);
        if (!v.is_number_integer()) throw ConfigError("config: " + path_ + "." + key + " must be an integer");
        return v.get<int>();
    }

    bool boolean(const std::string& key) {
        const auto& v = raw(key);
        if (!v.is_boolean()) throw ConfigError("config: " + path_ + "." + key + " must be a boolean");
        return v.get<bool>();
    }

    std::string string(const std::string& key) {
        const auto& v = raw(key);
        if (!v.is_string()) throw ConfigError("config: " + path_ + "." + key + " must be a string");
        return v.get<std::string>();
    }

    std::pair<double, double> pair(const std::string& key) {
        const auto& v = raw(key);
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
            throw ConfigError("config: " + path_ + "." + key + " must be [lo, hi]");
        return {v[0].get<double>(), v[1].get<double>()};
    }

    Section child(const std::string& key) { return Section(raw(key), path_ + "." + key); }

private:
    const Json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline PropertyOverlay parse_overlay(const Json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError("config: " + path + " must be an object");
    PropertyOverlay o;
    for (const auto& [key, value] : j.items()) {
        if (key.starts_with("_")) continue;
        if (key == "temperature_coefficients") {
            if (!value.is_object()) throw ConfigError("config: " + path + ".temperature_coefficients must be an object");
            for (const auto& [f, c] : value.items()) {
                if (!c.is_number()) throw ConfigError("config: " + path + ".temperature_coefficients." + f + " must be a number");
                o.temperature_coefficients[f] = c.get<double>();
            }
            continue;
        }
        if (!value.is_number()) throw ConfigError("config: " + path + "." + key + " must be a number");
        o.values[key] = value.get<double>();
    }
    return o;
}

}  // namespace detail

inline RunConfig parse_config(const Json& user) {
    if (!user.is_object()) throw ConfigError("config: top level must be an object");
    Json merged = Json::parse(kDefaultConfig);
    for (const auto& [key, value] : user.items()) {
        if (key.starts_with("_")) continue;
        if (!merged.contains(key)) throw ConfigError("config: unknown key " + key);
        if (key == "alloys" || !value.is_object() || !merged[key].is_object()) {
            merged[key] = value;
        } else {
            for (const auto& [k, v] : value.items()) {
                if (k == "bounds" && v.is_object()) {
                    for (const auto& [bk, bv] : v.items()) merged[key][k][bk] = bv;
                } else {
                    merged[key][k] = v;
                }
            }
        }
    }

    RunConfig c;
    detail::Section root(merged, "$");
    {
        auto g = root.child("geometry");
        c.geometry.nx = g.integer("nx");
        c.geometry.ny = g.integer("ny");
        c.geometry.nz = g.integer("nz");
        c.geometry.spacing = g.number("spacing_m");
        c.geometry.substrate_layers = g.integer("substrate_layers");
        c.geometry.wall_layers = g.integer("wall_layers");
        c.geometry.wall_width = g.integer("wall_width");
        c.geometry.wall_length = g.integer("wall_length");
        c.geometry.traverse_speed = g.number("traverse_speed_m_per_s");
        c.geometry.interlayer_dwell = g.number("interlayer_dwell_s");
        c.geometry.alternate_direction = g.boolean("alternate_direction");
    }
    {
        auto p = root.child("process");
        c.process.heat_source = p.number("heat_source_w_per_m3");
        c.process.shear_translation = p.number("shear_translation_n");
        c.process.shear_rotational = p.number("shear_rotational_nm");
        c.process.tool_radius = p.number("tool_radius_m");
        c.process.convection_coeff = p.number("convection_coeff_w_per_m2k");
        c.process.emissivity = p.number("emissivity");
        c.process.ambient_temp = p.number("ambient_temp_c");
        c.process.initial_temp = p.number("initial_temp_c");
        c.process.end_dwell = p.number("end_dwell_s");
        c.process.deposition_temp = p.optional_number("deposition_temp_c");
        c.process.validate();
    }
    {
        auto s = root.child("solver");
        c.solver.dt = s.optional_number("dt_s");
        const auto b = s.string("bottom_boundary");
        if (b == "clamp") c.solver.bottom = BottomBoundary::clamp;
        else if (b == "convective") c.solver.bottom = BottomBoundary::convective;
        else throw ConfigError("config: solver.bottom_boundary must be 'clamp' or 'convective'");
    }
    {
        auto r = root.child("ranges");
        auto read = [&](const char* key) {
            const auto [lo, hi] = r.pair(key);
            if (!(lo < hi)) throw ConfigError(std::string("config: ranges.") + key + " must satisfy lo < hi");
            return Range{lo, hi};
        };
        c.ranges.heat_source = read("heat_source_w_per_m3");
        c.ranges.shear_translation = read("shear_translation_n");
        c.ranges.shear_rotational = read("shear_rotational_nm");
    }
    {
        const auto red = root.string("target_reduction");
        if (red == "max") c.reduction = TargetReduction::max;
        else if (red == "mean") c.reduction = TargetReduction::mean;
        else throw ConfigError("config: target_reduction must be 'max' or 'mean'");
    }
    {
        const auto& alloys = root.raw("alloys");
        if (!alloys.is_object()) throw ConfigError("config: alloys must be an object");
        for (const auto& [key, value] : alloys.items()) {
            if (key.starts_with("_")) continue;
            c.overlays[parse_alloy(key)] = detail::parse_overlay(value, "alloys." + key);
        }
    }
    {
        auto g = root.child("ga");
        c.ga.population_size = g.integer("population_size");
        c.ga.generations = g.integer("generations");
        c.ga.crossover_prob = g.number("crossover_prob");
        c.ga.mutation_prob = g.number("mutation_prob");
        c.ga.tournament_size = g.integer("tournament_size");
        c.ga.elitism_count = g.integer("elitism_count");
        c.ga.fitness_epsilon = g.number("fitness_epsilon");
        c.ga.memoize = g.boolean("memoize");
        c.validation_fraction = g.number("validation_fraction");
        if (!(c.validation_fraction > 0 && c.validation_fraction < 1))
            throw ConfigError("config: ga.validation_fraction must lie in (0, 1)");
        auto b = g.child("bounds");
        auto bound = [&](const char* key) {
            const auto [lo, hi] = b.pair(key);
            return ga::GeneBounds{static_cast<int>(lo), static_cast<int>(hi)};
        };
        const auto n = bound("n_estimators");
        const auto d = bound("max_depth");
        const auto s = bound("min_samples_split");
        const auto l = bound("min_samples_leaf");
        if (d.lo < 1 || s.lo < 2 || l.lo < 1 || n.lo < 1)
            throw ConfigError("config: ga.bounds fall outside valid hyperparameter values");
        c.ga.gene_bounds = {n, d, s, l};  // RF layout; DT drops the first gene
    }
    {
        auto t = root.child("train");
        auto dt = t.child("dt");
        c.train.dt.max_depth = dt.integer("max_depth");
        c.train.dt.min_samples_split = dt.integer("min_samples_split");
        c.train.dt.min_samples_leaf = dt.integer("min_samples_leaf");
        c.train.dt.max_features = dt.integer("max_features");
        c.train.dt.validate();
        auto rf = t.child("rf");
        c.train.rf.n_estimators = rf.integer("n_estimators");
        c.train.rf.tree.max_depth = rf.integer("max_depth");
        c.train.rf.tree.min_samples_split = rf.integer("min_samples_split");
        c.train.rf.tree.min_samples_leaf = rf.integer("min_samples_leaf");
        c.train.rf.tree.max_features = rf.integer("max_features");
        c.train.rf.bootstrap = rf.boolean("bootstrap");
        c.train.rf.validate();
    }
    {
        const auto& s = root.raw("seed");
        if (!s.is_number_unsigned() && !s.is_number_integer()) throw ConfigError("config: seed must be an integer");
        c.seed = s.get<std::uint64_t>();
    }
    c.resolved = merged;
    c.hash = io::sha256_hex(merged.dump());
    return c;
}

/// GA settings for a model kind; the DT genome omits the n_estimators gene.
inline ga::GAConfig ga_config_for(const RunConfig& c, ga::ModelKind kind) {
    auto g = c.ga;
    if (kind == ga::ModelKind::DT && g.gene_bounds.size() == 4) g.gene_bounds.erase(g.gene_bounds.begin());
    return g;
}

inline RunConfig default_config() { return parse_config(Json::object()); }

inline RunConfig load_config(const std::optional<std::string>& path) {
    if (!path) return default_config();
    Json j;
    try {
        j = Json::parse(io::read_file(*path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config: " + *path + ": " + e.what());
    }
    return parse_config(j);
}

/// Resolved alloy record with per-field provenance, for run manifests.
inline Json alloy_json(const AlloyProperties& p, const PropertyOverlay& overlay) {
    auto source = [&](const char* field) {
        return overlay.values.contains(field) ? "config-supplied (handbook)" : "built-in table";
    };
    Json j;
    j["name"] = std::string(to_string(p.name));
    j["elastic_modulus_gpa"] = {{"value", p.elastic_modulus}, {"source", source("elastic_modulus")}};
    j["density_g_per_cm3"] = {{"value", p.density}, {"source", source("density")}};
    j["specific_heat_j_per_kgk"] = {{"value", p.specific_heat}, {"source", source("specific_heat")}};
    j["thermal_conductivity_w_per_mk"] = {{"value", p.k()}, {"source", "config-supplied (handbook)"}};
    j["cte_per_k"] = {{"value", p.alpha()}, {"source", "config-supplied (handbook)"}};
    j["poisson_ratio"] = {{"value", p.nu()}, {"source", "config-supplied (handbook)"}};
    j["yield_stress_ref_mpa"] = {{"value", p.sigma_y_ref()}, {"source", "config-supplied (handbook)"}};
    j["solidus_temp_c"] = {{"value", p.solidus()}, {"source", "config-supplied (handbook)"}};
    j["reference_temp_c"] = p.reference_temp;
    j["temperature_coefficients"] = p.temperature_coefficients;
    return j;
}

}  // namespace afsd
