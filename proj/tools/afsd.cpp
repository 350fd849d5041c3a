#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "afsd/commands.hpp"

namespace {

int run(CLI::App& app, int argc, char** argv) {
    using namespace afsd::cli;
    app.require_subcommand(1);

    SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "Run one deposition simulation and export fields");
    simulate->add_option("--config", sim.config_path, "Run config JSON (defaults built in)");
    simulate->add_option("--alloy", sim.alloy, "Alloy: AA2024, AA5083, AA5086, AA7075, AA6061")->capture_default_str();
    simulate->add_option("--out-dir", sim.out_dir, "Directory for fields.vtk, history.csv, manifest.json")
        ->capture_default_str();
    simulate->add_option("--heat-source", sim.heat_source, "Override heat source, W/m^3");
    simulate->add_option("--shear-translation", sim.shear_translation, "Override longitudinal shear force, N");
    simulate->add_option("--shear-rotational", sim.shear_rotational, "Override rotational shear torque, N m");

    DatasetOptions data;
    auto* dataset = app.add_subcommand("dataset", "Generate the simulation dataset CSV");
    dataset->add_option("--config", data.config_path, "Run config JSON (defaults built in)");
    dataset->add_option("--samples", data.samples, "Number of samples, divisible by 5")->capture_default_str();
    dataset->add_option("--seed", data.seed, "Seed for parameter draws and the train/test split");
    dataset->add_option("--out", data.out, "Output CSV path")->capture_default_str();

    TrainOptions tr;
    auto* train = app.add_subcommand("train", "Train a regressor on a dataset CSV and report test metrics");
    train->add_option("dataset", tr.dataset_path, "Dataset CSV")->required();
    train->add_option("--model", tr.model, "dt | rf | ga-dt | ga-rf")
        ->check(CLI::IsMember({"dt", "rf", "ga-dt", "ga-rf"}))
        ->capture_default_str();
    train->add_option("--target", tr.target, "von-mises | log-strain")
        ->check(CLI::IsMember({"von-mises", "log-strain"}))
        ->capture_default_str();
    train->add_option("--out", tr.out, "Model document path")->capture_default_str();
    train->add_option("--curve", tr.curve_path, "Convergence curve CSV path (GA models)");
    train->add_option("--config", tr.config_path, "Run config JSON (defaults built in)");
    train->add_option("--seed", tr.seed, "Seed for GA, validation split and model fitting");
    train->add_option("--generations", tr.generations, "Override GA generations");
    train->add_option("--population", tr.population, "Override GA population size");
    train->add_flag("--fitness-on-test", tr.fitness_on_test,
                    "Score GA individuals on the test split instead of a validation split");

    PredictOptions pr;
    auto* predict = app.add_subcommand("predict", "Append model predictions to a features CSV");
    predict->add_option("--model", pr.model_path, "Model document")->required();
    predict->add_option("--features", pr.features_path, "CSV with the five feature columns")->required();
    predict->add_option("--out", pr.out, "Output CSV path")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*simulate) return cmd_simulate(sim, std::cout);
        if (*dataset) return cmd_dataset(data, std::cout);
        if (*train) return cmd_train(tr, std::cout);
        if (*predict) return cmd_predict(pr, std::cout);
    } catch (const afsd::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AFSD deposition simulation and GA-tuned tree regressors"};
    return run(app, argc, argv);
}
