#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "afsd/deposition.hpp"
#include "afsd/error.hpp"
#include "afsd/materials.hpp"
#include "afsd/parallel.hpp"
#include "afsd/random.hpp"
#include "afsd/simulation.hpp"
#include "afsd/tree.hpp"

namespace afsd {

inline constexpr std::array<const char*, 5> kFeatureColumns = {
    "elastic_modulus_gpa", "specific_heat_j_per_kgk", "shear_translation_n", "shear_rotational_nm",
    "heat_source_w_per_m3"};
inline constexpr std::array<const char*, 2> kTargetColumns = {"von_mises_mpa", "log_strain"};
inline constexpr const char* kDatasetHeader =
    "alloy,elastic_modulus_gpa,specific_heat_j_per_kgk,shear_translation_n,shear_rotational_nm,"
    "heat_source_w_per_m3,von_mises_mpa,log_strain,split";

enum class Target { von_mises = 0, log_strain = 1 };

inline Target parse_target(std::string_view s) {
    if (s == "von-mises" || s == "von_mises" || s == kTargetColumns[0]) return Target::von_mises;
    if (s == "log-strain" || s == "log_strain") return Target::log_strain;
    throw ConfigError("unknown target '" + std::string(s) + "' (valid: von-mises, log-strain)");
}

/// Formats with 9 significant digits, '.' decimal separator.
inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

/// Value as it reads back from its 9-significant-digit text.
inline double quantize(double v) { return std::strtod(format_number(v).c_str(), nullptr); }

struct Sample {
    Alloy alloy = Alloy::AA2024;
    std::array<double, 5> features{};  // E [GPa], c_p, F [N], M [N m], Q [W/m^3]
    std::array<double, 2> targets{};   // von Mises [MPa], LE
    std::uint64_t seed = 0;
    std::string config_hash;
};

struct Dataset {
    std::vector<Sample> samples;
    std::vector<std::size_t> train;  // ascending
    std::vector<std::size_t> test;   // ascending

    [[nodiscard]] ml::FeatureMatrix features(std::span<const std::size_t> rows) const {
        ml::FeatureMatrix x;
        for (auto r : rows) x.push_row(samples.at(r).features);
        return x;
    }
    [[nodiscard]] std::vector<double> targets(std::span<const std::size_t> rows, Target t) const {
        std::vector<double> y;
        y.reserve(rows.size());
        for (auto r : rows) y.push_back(samples.at(r).targets[static_cast<std::size_t>(t)]);
        return y;
    }
};

struct Range {
    double lo = 0.0;
    double hi = 0.0;
    bool operator==(const Range&) const = default;
};

/// Sweep ranges for the process parameters that vary between samples.
struct ParameterRanges {
    Range heat_source{1e9, 6e9};
    Range shear_translation{500, 5000};
    Range shear_rotational{5, 50};
    bool operator==(const ParameterRanges&) const = default;
};

struct ParameterDraw {
    Alloy alloy = Alloy::AA2024;
    ProcessParameters params;
};

/// n/5 draws per alloy, alloys in table order, each swept parameter uniform in
/// its range. Parameters outside the sweep are copied from `base`.
inline std::vector<ParameterDraw> sample_parameters(int n, const ParameterRanges& ranges, std::uint64_t seed,
                                                    const ProcessParameters& base = {}) {
    if (n <= 0 || n % static_cast<int>(kAllAlloys.size()) != 0)
        throw ConfigError("samples must be divisible by 5");
    for (const auto& [name, r] : {std::pair{"heat_source", ranges.heat_source},
                                  std::pair{"shear_translation", ranges.shear_translation},
                                  std::pair{"shear_rotational", ranges.shear_rotational}}) {
        if (!(r.lo < r.hi)) throw ConfigError(std::string("range for ") + name + " must satisfy lo < hi");
    }
    Rng rng(seed);
    std::vector<ParameterDraw> out;
    out.reserve(static_cast<std::size_t>(n));
    const int per_alloy = n / static_cast<int>(kAllAlloys.size());
    for (auto alloy : kAllAlloys) {
        for (int d = 0; d < per_alloy; ++d) {
            ParameterDraw draw{alloy, base};
            draw.params.heat_source = rng.uniform(ranges.heat_source.lo, ranges.heat_source.hi);
            draw.params.shear_translation = rng.uniform(ranges.shear_translation.lo, ranges.shear_translation.hi);
            draw.params.shear_rotational = rng.uniform(ranges.shear_rotational.lo, ranges.shear_rotational.hi);
            out.push_back(draw);
        }
    }
    return out;
}

enum class TargetReduction { max, mean };

/// (von Mises, LE) reduced over active voxels at the final time.
inline std::array<double, 2> extract_targets(const SimulationResult& r,
                                             TargetReduction reduction = TargetReduction::max) {
    double vm = 0.0, le = 0.0;
    std::size_t count = 0;
    for (std::size_t v = 0; v < r.thermal.active.size(); ++v) {
        if (!r.thermal.active[v]) continue;
        ++count;
        if (reduction == TargetReduction::max) {
            vm = std::max(vm, r.mechanics.sigma_vm[v]);
            le = std::max(le, r.mechanics.log_strain[v]);
        } else {
            vm += r.mechanics.sigma_vm[v];
            le += r.mechanics.log_strain[v];
        }
    }
    if (count == 0) throw ConfigError("no active voxels to extract targets from");
    if (reduction == TargetReduction::mean) {
        vm /= static_cast<double>(count);
        le /= static_cast<double>(count);
    }
    return {vm, le};
}

/// Everything needed to turn parameter draws into samples.
struct DatasetConfig {
    Geometry geometry;
    ProcessParameters base_process;
    SolverOptions solver;
    ParameterRanges ranges;
    std::map<Alloy, AlloyProperties> alloys;  // resolved, complete records
    TargetReduction reduction = TargetReduction::max;
    double train_ratio = 0.8;
    std::string config_hash;
};

/// Seeded shuffle of all indices; the first floor(ratio * n) go to training.
/// Both index lists are returned sorted.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, double ratio,
                                                                                   std::uint64_t seed) {
    if (n == 0) throw ConfigError("cannot split an empty dataset");
    if (!(ratio > 0 && ratio < 1)) throw ConfigError("split ratio must lie in (0, 1)");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    shuffle(idx, rng);
    const auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
    std::vector<std::size_t> train(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> test(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {std::move(train), std::move(test)};
}

inline void split(Dataset& ds, double ratio, std::uint64_t seed) {
    auto [train, test] = split_indices(ds.samples.size(), ratio, seed);
    ds.train = std::move(train);
    ds.test = std::move(test);
}

/// Runs one simulation for a draw under the given configuration.
inline SimulationResult simulate_draw(const DatasetConfig& cfg, const ParameterDraw& draw) {
    const auto& props = cfg.alloys.at(draw.alloy);
    auto model = build_model(cfg.geometry, draw.params.tool_radius);
    return run_deposition(std::move(model), draw.params, props, cfg.solver);
}

/// Simulates every draw (in parallel) and assembles samples in draw order.
/// Values are stored at the precision they are written to CSV with, so a
/// written dataset reads back identically.
inline Dataset generate(const DatasetConfig& cfg, int n, std::uint64_t seed) {
    for (auto a : kAllAlloys)
        if (!cfg.alloys.contains(a)) throw ConfigError("no resolved properties for " + std::string(to_string(a)));
    const auto draws = sample_parameters(n, cfg.ranges, seed, cfg.base_process);
    DatasetConfig quiet = cfg;
    quiet.solver.record_history = false;
    Dataset ds;
    ds.samples.resize(draws.size());
    parallel_for(draws.size(), [&](std::size_t i) {
        const auto& d = draws[i];
        std::array<double, 2> targets{};
        try {
            targets = extract_targets(simulate_draw(quiet, d), cfg.reduction);
        } catch (const ConfigError& e) {
            throw ConfigError("sample " + std::to_string(i) + ": " + e.what());
        } catch (const Error& e) {
            throw RuntimeFailure("sample " + std::to_string(i) + ": " + e.what());
        }
        const auto& props = cfg.alloys.at(d.alloy);
        Sample s;
        s.alloy = d.alloy;
        s.features = {quantize(props.elastic_modulus), quantize(props.specific_heat),
                      quantize(d.params.shear_translation), quantize(d.params.shear_rotational),
                      quantize(d.params.heat_source)};
        s.targets = {quantize(targets[0]), quantize(targets[1])};
        s.seed = seed;
        s.config_hash = cfg.config_hash;
        ds.samples[i] = std::move(s);
    });
    split(ds, cfg.train_ratio, derive_seed(seed, {0x5B1u}));
    return ds;
}

inline std::string write_dataset_csv(const Dataset& ds) {
    std::vector<char> is_train(ds.samples.size(), 0);
    for (auto i : ds.train) is_train.at(i) = 1;
    std::string out = kDatasetHeader;
    out += '\n';
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        const auto& s = ds.samples[i];
        out += to_string(s.alloy);
        for (double f : s.features) out += "," + format_number(f);
        for (double t : s.targets) out += "," + format_number(t);
        out += is_train[i] ? ",train\n" : ",test\n";
    }
    return out;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

inline double parse_number(const std::string& s, std::size_t row, const char* column) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v))
        throw ConfigError("row " + std::to_string(row) + ": invalid number in column " + column);
    return v;
}

}  // namespace detail

/// Parses the dataset CSV. The header must match exactly.
inline Dataset read_dataset_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("schema mismatch: empty dataset file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kDatasetHeader) {
        const auto got = detail::split_csv_line(line);
        const auto want = detail::split_csv_line(kDatasetHeader);
        for (std::size_t c = 0; c < want.size(); ++c)
            if (c >= got.size() || got[c] != want[c])
                throw ConfigError("schema mismatch: expected column '" + want[c] + "' at position " + std::to_string(c + 1));
        throw ConfigError("schema mismatch: unexpected column '" + got[want.size()] + "'");
    }
    Dataset ds;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != 9) throw ConfigError("row " + std::to_string(row) + ": expected 9 columns");
        Sample s;
        s.alloy = parse_alloy(cells[0]);
        for (std::size_t f = 0; f < 5; ++f) s.features[f] = detail::parse_number(cells[1 + f], row, kFeatureColumns[f]);
        for (std::size_t t = 0; t < 2; ++t) s.targets[t] = detail::parse_number(cells[6 + t], row, kTargetColumns[t]);
        const std::size_t index = ds.samples.size();
        if (cells[8] == "train") ds.train.push_back(index);
        else if (cells[8] == "test") ds.test.push_back(index);
        else throw ConfigError("row " + std::to_string(row) + ": split must be 'train' or 'test'");
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

}  // namespace afsd
