#pragma once

// Implementation of the `afsd` subcommands. Each command takes a plain options
// struct so it can be driven from the CLI front end or from tests.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "afsd/config.hpp"
#include "afsd/dataset.hpp"
#include "afsd/forest.hpp"
#include "afsd/ga.hpp"
#include "afsd/io.hpp"
#include "afsd/metrics.hpp"
#include "afsd/model_io.hpp"
#include "afsd/simulation.hpp"
#include "afsd/tree.hpp"
#include "afsd/vtk.hpp"

namespace afsd::cli {

inline constexpr const char* kToolVersion = "1.0.0";

namespace fs = std::filesystem;

namespace detail {

inline Json manifest_base(const std::string& command, const RunConfig& cfg, const std::string& started) {
    Json m;
    m["tool"] = "afsd";
    m["tool_version"] = kToolVersion;
    m["command"] = command;
    m["config_hash"] = cfg.hash;
    m["config"] = cfg.resolved;
    m["started_at"] = started;
    return m;
}

inline void finish_manifest(Json& m, const std::vector<std::pair<fs::path, std::string>>& outputs,
                            const fs::path& manifest_path) {
    m["finished_at"] = io::utc_timestamp();
    Json digests = Json::object();
    for (const auto& [path, content] : outputs) digests[path.filename().string()] = io::sha256_hex(content);
    m["outputs"] = digests;
    io::atomic_write(manifest_path, m.dump(2) + "\n");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
    std::optional<std::string> config_path;
    std::string alloy = "AA2024";
    std::string out_dir = ".";
    std::optional<double> heat_source;
    std::optional<double> shear_translation;
    std::optional<double> shear_rotational;
};

inline std::string history_csv(const SimulationResult& r) {
    std::string out = "step,time_s,max_temperature_k,max_von_mises_mpa,max_log_strain\n";
    for (std::size_t i = 0; i < r.history.size(); ++i) {
        const auto& h = r.history[i];
        out += std::to_string(i + 1) + "," + format_number(h.time) + "," + format_number(h.max_temperature) + "," +
               format_number(h.max_von_mises) + "," + format_number(h.max_log_strain) + "\n";
    }
    return out;
}

inline int cmd_simulate(const SimulateOptions& o, std::ostream& out) {
    const auto started = io::utc_timestamp();
    const auto cfg = load_config(o.config_path);
    const auto alloy = parse_alloy(o.alloy);
    const auto props = cfg.resolve(alloy);
    auto params = cfg.process;
    if (o.heat_source) params.heat_source = *o.heat_source;
    if (o.shear_translation) params.shear_translation = *o.shear_translation;
    if (o.shear_rotational) params.shear_rotational = *o.shear_rotational;
    params.validate();

    auto model = build_model(cfg.geometry, params.tool_radius);
    const auto result = run_deposition(std::move(model), params, props, cfg.solver);
    const auto fields = field_state(result, props);
    const auto targets = extract_targets(result, cfg.reduction);

    const fs::path dir(o.out_dir);
    const std::string vtk_text = vtk::export_fields(fields, result.model);
    const std::string hist = history_csv(result);
    io::atomic_write(dir / "fields.vtk", vtk_text);
    io::atomic_write(dir / "history.csv", hist);

    auto m = detail::manifest_base("simulate", cfg, started);
    m["alloy"] = alloy_json(props, cfg.overlays.count(alloy) ? cfg.overlays.at(alloy) : PropertyOverlay{});
    m["process"] = {{"heat_source_w_per_m3", params.heat_source},
                    {"shear_translation_n", params.shear_translation},
                    {"shear_rotational_nm", params.shear_rotational},
                    {"deposition_temp_c", params.deposition_temp_c(props)}};
    m["dt_s"] = result.dt;
    m["steps"] = result.steps;
    m["targets"] = {{"von_mises_mpa", targets[0]}, {"log_strain", targets[1]}};
    detail::finish_manifest(m, {{dir / "fields.vtk", vtk_text}, {dir / "history.csv", hist}}, dir / "manifest.json");

    out << "simulated " << to_string(alloy) << ": " << result.steps << " steps of " << format_number(result.dt)
        << " s; von_mises_mpa=" << format_number(targets[0]) << " log_strain=" << format_number(targets[1]) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// dataset

struct DatasetOptions {
    std::optional<std::string> config_path;
    int samples = 200;
    std::optional<std::uint64_t> seed;
    std::string out = "dataset.csv";
};

inline int cmd_dataset(const DatasetOptions& o, std::ostream& out) {
    const auto started = io::utc_timestamp();
    if (o.samples <= 0 || o.samples % 5 != 0) throw ConfigError("samples must be divisible by 5");
    const auto cfg = load_config(o.config_path);
    const auto seed = o.seed.value_or(cfg.seed);
    const auto dcfg = cfg.dataset_config();
    const auto ds = generate(dcfg, o.samples, seed);
    const std::string csv = write_dataset_csv(ds);
    const fs::path path(o.out);
    io::atomic_write(path, csv);

    auto m = detail::manifest_base("dataset", cfg, started);
    m["samples"] = o.samples;
    m["seed"] = seed;
    m["train_rows"] = ds.train.size();
    m["test_rows"] = ds.test.size();
    Json alloys = Json::object();
    for (auto a : kAllAlloys)
        alloys[std::string(to_string(a))] =
            alloy_json(dcfg.alloys.at(a), cfg.overlays.count(a) ? cfg.overlays.at(a) : PropertyOverlay{});
    m["alloys"] = alloys;
    detail::finish_manifest(m, {{path, csv}}, path.string() + ".manifest.json");

    out << "wrote " << ds.samples.size() << " samples (" << ds.train.size() << " train / " << ds.test.size()
        << " test) to " << path.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
    std::string dataset_path;
    std::string model = "ga-rf";  // dt | rf | ga-dt | ga-rf
    std::string target = "von-mises";
    std::string out = "model.json";
    std::optional<std::string> curve_path;
    std::optional<std::string> config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> generations;
    std::optional<int> population;
    bool fitness_on_test = false;
};

struct TrainResult {
    ml::Model model;
    ml::Metrics metrics;
    std::optional<ga::GARunReport> ga_report;
    std::string algorithm;
    std::string model_document;
    std::string curve_csv;
};

inline std::string curve_csv(const ga::GARunReport& r, double epsilon) {
    std::string out = "generation,best_fitness,best_mse\n";
    for (std::size_t g = 0; g < r.curve.size(); ++g) {
        const double f = r.curve[g];
        const double mse = f > 0 ? 1.0 / f - epsilon : std::numeric_limits<double>::infinity();
        out += std::to_string(g + 1) + "," + format_number(f) + "," + format_number(std::max(0.0, mse)) + "\n";
    }
    return out;
}

inline Json hyperparams_json(const ml::Model& m) {
    if (const auto* f = std::get_if<ml::RandomForest>(&m)) {
        const auto& hp = f->hyperparams();
        return {{"max_depth", hp.tree.max_depth},
                {"min_samples_split", hp.tree.min_samples_split},
                {"min_samples_leaf", hp.tree.min_samples_leaf},
                {"n_estimators", hp.n_estimators}};
    }
    const auto& hp = std::get<ml::RegressionTree>(m).hyperparams();
    return {{"max_depth", hp.max_depth}, {"min_samples_split", hp.min_samples_split}, {"min_samples_leaf", hp.min_samples_leaf}};
}

/// Trains and evaluates without touching the filesystem.
inline TrainResult train_model(const Dataset& ds, const TrainOptions& o, const RunConfig& cfg) {
    const auto target = parse_target(o.target);
    if (o.model != "dt" && o.model != "rf" && o.model != "ga-dt" && o.model != "ga-rf")
        throw ConfigError("unknown model '" + o.model + "' (valid: dt, rf, ga-dt, ga-rf)");
    if (ds.train.empty() || ds.test.empty()) throw ConfigError("dataset needs both train and test rows");
    const auto seed = o.seed.value_or(cfg.seed);
    const bool use_ga = o.model.starts_with("ga-");
    const auto kind = o.model.ends_with("rf") ? ga::ModelKind::RF : ga::ModelKind::DT;

    const auto x_train = ds.features(ds.train);
    const auto y_train = ds.targets(ds.train, target);
    const auto x_test = ds.features(ds.test);
    const auto y_test = ds.targets(ds.test, target);

    TrainResult r;
    if (use_ga) {
        auto gcfg = ga_config_for(cfg, kind);
        gcfg.seed = seed;
        if (o.generations) gcfg.generations = *o.generations;
        if (o.population) gcfg.population_size = *o.population;

        ml::FeatureMatrix x_fit, x_eval;
        std::vector<double> y_fit, y_eval;
        if (o.fitness_on_test) {
            x_fit = x_train;
            y_fit = y_train;
            x_eval = x_test;
            y_eval = y_test;
        } else {
            auto [fit_rows, val_rows] =
                split_indices(ds.train.size(), 1.0 - cfg.validation_fraction, derive_seed(seed, {0x7A1u}));
            x_fit = x_train.select(fit_rows);
            x_eval = x_train.select(val_rows);
            for (auto i : fit_rows) y_fit.push_back(y_train[i]);
            for (auto i : val_rows) y_eval.push_back(y_train[i]);
        }
        r.ga_report = ga::run_ga(gcfg, kind, ga::Partition{&x_fit, y_fit}, ga::Partition{&x_eval, y_eval});
        r.model = ga::fit_genome(r.ga_report->best_genome, x_train, y_train, seed, true);
        r.curve_csv = curve_csv(*r.ga_report, gcfg.fitness_epsilon);
        r.algorithm = kind == ga::ModelKind::RF ? "GA-RF" : "GA-DT";
    } else if (kind == ga::ModelKind::RF) {
        r.model = ml::fit_forest(x_train, y_train, cfg.train.rf, derive_seed(seed, {0xF0u}), true);
        r.algorithm = "RF";
    } else {
        r.model = ml::fit_tree(x_train, y_train, cfg.train.dt, derive_seed(seed, {0xD7u}));
        r.algorithm = "DT";
    }
    const auto pred = ml::predict_all(r.model, x_test);
    r.metrics = ml::compute_metrics(y_test, pred);

    ml::ModelDocument doc;
    doc.model = r.model;
    doc.target = kTargetColumns[static_cast<std::size_t>(target)];
    doc.feature_names.assign(kFeatureColumns.begin(), kFeatureColumns.end());
    doc.metadata["algorithm"] = r.algorithm;
    doc.metadata["train_rows"] = ds.train.size();
    doc.metadata["test_rows"] = ds.test.size();
    doc.metadata["test_metrics"] = {{"rmse", r.metrics.rmse}, {"mae", r.metrics.mae}, {"r2", r.metrics.r2}};
    if (r.ga_report) {
        doc.metadata["ga"] = {{"generations", r.ga_report->curve.size()},
                              {"best_fitness", r.ga_report->best_fitness},
                              {"fitness_data", o.fitness_on_test ? "test" : "validation"}};
    }
    r.model_document = ml::serialize_model(doc);
    return r;
}

inline int cmd_train(const TrainOptions& o, std::ostream& out) {
    const auto started = io::utc_timestamp();
    const auto cfg = load_config(o.config_path);
    const std::string dataset_text = io::read_file(o.dataset_path);
    const auto ds = read_dataset_csv(dataset_text);
    const auto r = train_model(ds, o, cfg);

    const fs::path model_path(o.out);
    io::atomic_write(model_path, r.model_document);
    std::vector<std::pair<fs::path, std::string>> outputs = {{model_path, r.model_document}};
    if (r.ga_report && o.curve_path) {
        io::atomic_write(*o.curve_path, r.curve_csv);
        outputs.emplace_back(*o.curve_path, r.curve_csv);
    }
    auto m = detail::manifest_base("train", cfg, started);
    m["dataset"] = {{"path", o.dataset_path}, {"sha256", io::sha256_hex(dataset_text)}};
    m["model"] = o.model;
    m["target"] = o.target;
    m["seed"] = o.seed.value_or(cfg.seed);
    m["fitness_on_test"] = o.fitness_on_test;
    if (r.ga_report) {
        const auto g = ga_config_for(cfg, o.model == "ga-rf" ? ga::ModelKind::RF : ga::ModelKind::DT);
        m["ga"] = {{"generations", o.generations.value_or(g.generations)},
                   {"population_size", o.population.value_or(g.population_size)},
                   {"best_genome", r.ga_report->best_genome.genes},
                   {"evaluations", r.ga_report->evaluations}};
    }
    detail::finish_manifest(m, outputs, model_path.string() + ".manifest.json");

    char line[160];
    out << "Algorithms\tRMSE\tMAE\tR2 Value\n";
    std::snprintf(line, sizeof line, "%s\t%.6g\t%.6g\t%.4f\n", r.algorithm.c_str(), r.metrics.rmse, r.metrics.mae,
                  r.metrics.r2);
    out << line;
    out << "hyperparameters:";
    const auto hp = hyperparams_json(r.model);
    for (const auto& [k, v] : hp.items()) out << " " << k << "=" << v.dump();
    out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// predict

struct PredictOptions {
    std::string model_path;
    std::string features_path;
    std::string out = "predictions.csv";
};

inline std::string predict_csv(const ml::ModelDocument& doc, const std::string& text) {
    std::istringstream in(text);
    std::string header;
    if (!std::getline(in, header) || header.empty() || header == "\r") {
        std::string h;
        for (auto c : kFeatureColumns) h += std::string(c) + ",";
        return h + "prediction\n";
    }
    if (header.back() == '\r') header.pop_back();
    const auto cols = afsd::detail::split_csv_line(header);
    std::vector<std::size_t> pos;
    std::string missing;
    for (auto c : kFeatureColumns) {
        auto it = std::find(cols.begin(), cols.end(), c);
        if (it == cols.end()) missing += (missing.empty() ? "" : ", ") + std::string(c);
        else pos.push_back(static_cast<std::size_t>(it - cols.begin()));
    }
    if (!missing.empty()) throw ConfigError("missing columns: " + missing);

    std::string out = header + ",prediction\n";
    std::string line;
    std::size_t row = 0;
    std::vector<double> x(kFeatureColumns.size());
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = afsd::detail::split_csv_line(line);
        if (cells.size() != cols.size())
            throw ConfigError("row " + std::to_string(row) + ": expected " + std::to_string(cols.size()) + " columns");
        for (std::size_t f = 0; f < pos.size(); ++f) x[f] = afsd::detail::parse_number(cells[pos[f]], row, kFeatureColumns[f]);
        out += line + "," + format_number(ml::predict(doc.model, x)) + "\n";
    }
    return out;
}

inline int cmd_predict(const PredictOptions& o, std::ostream& out) {
    const auto doc = ml::deserialize_model(io::read_file(o.model_path));
    const auto n_features = std::visit(
        [](const auto& m) {
            if constexpr (std::is_same_v<std::decay_t<decltype(m)>, ml::RandomForest>)
                return m.trees().front().n_features();
            else
                return m.n_features();
        },
        doc.model);
    if (n_features != kFeatureColumns.size())
        throw ConfigError("model expects " + std::to_string(n_features) + " features, dataset schema has 5");
    const auto result = predict_csv(doc, io::read_file(o.features_path));
    io::atomic_write(o.out, result);
    out << "wrote predictions to " << o.out << "\n";
    return 0;
}

}  // namespace afsd::cli
