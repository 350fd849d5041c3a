#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "afsd/commands.hpp"
#include "afsd/config.hpp"
#include "afsd/io.hpp"
#include "afsd/vtk.hpp"
#include "support.hpp"

using namespace afsd;
namespace fs = std::filesystem;

namespace {

const std::string kCli = AFSD_CLI_PATH;

/// Small but complete run configuration used for the CLI round trips.
Json small_run_config() {
    Json j;
    j["geometry"] = {{"nx", 12}, {"ny", 6}, {"nz", 4}, {"substrate_layers", 2}, {"wall_layers", 2},
                     {"wall_width", 2}, {"wall_length", 8}, {"traverse_speed_m_per_s", 0.008},
                     {"interlayer_dwell_s", 0.5}};
    j["process"] = {{"tool_radius_m", 0.003}, {"end_dwell_s", 0.5}};
    j["ga"] = {{"population_size", 8}, {"generations", 4}};
    return j;
}

fs::path write_text(const fs::path& p, const std::string& s) {
    std::ofstream(p, std::ios::binary) << s;
    return p;
}

/// Runs the CLI with stdout and stderr captured into `out`.
int afsd_cli(const std::string& args, const fs::path& dir, std::string* out = nullptr) {
    const auto log = dir / "cli.log";
    const int rc = test::run(kCli + " " + args + " > " + log.string() + " 2>&1");
    if (out) *out = test::slurp(log);
    return rc;
}

}  // namespace

TEST(Config, ShippedFileEqualsBuiltInDefaults) {
    const auto shipped = Json::parse(io::read_file(fs::path(AFSD_SOURCE_DIR) / "configs" / "default.json"));
    EXPECT_EQ(shipped, Json::parse(kDefaultConfig));
    EXPECT_EQ(parse_config(shipped).hash, default_config().hash);
}

TEST(Config, DefaultsResolve) {
    const auto c = default_config();
    EXPECT_EQ(c.geometry, Geometry{});
    EXPECT_EQ(c.process, ProcessParameters{});
    EXPECT_EQ(c.ranges, ParameterRanges{});
    EXPECT_EQ(c.ga.population_size, 50);
    EXPECT_EQ(c.ga.generations, 200);
    EXPECT_EQ(c.seed, 42u);
    EXPECT_EQ(c.train.rf.n_estimators, 100);
    EXPECT_EQ(c.hash.size(), 64u);
    for (auto a : kAllAlloys) EXPECT_TRUE(c.resolve(a).complete());
    EXPECT_EQ(ga_config_for(c, ga::ModelKind::DT).gene_bounds, ga::default_bounds(ga::ModelKind::DT));
    EXPECT_EQ(ga_config_for(c, ga::ModelKind::RF).gene_bounds, ga::default_bounds(ga::ModelKind::RF));
}

TEST(Config, UserValuesOverrideKeys) {
    Json j;
    j["process"] = {{"heat_source_w_per_m3", 4e9}};
    j["ga"] = {{"bounds", {{"max_depth", {2, 9}}}}};
    j["_comment"] = "ignored";
    const auto c = parse_config(j);
    EXPECT_EQ(c.process.heat_source, 4e9);
    EXPECT_EQ(c.process.shear_translation, 2000);
    EXPECT_EQ(ga_config_for(c, ga::ModelKind::DT).gene_bounds[0], (ga::GeneBounds{2, 9}));
    EXPECT_NE(c.hash, default_config().hash);
}

TEST(Config, Rejections) {
    auto message = [](const Json& j) {
        try {
            (void)parse_config(j);
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    EXPECT_NE(message({{"geometry", {{"nx", 3}, {"bogus", 1}}}}).find("unknown key $.geometry.bogus"), std::string::npos);
    EXPECT_NE(message({{"nonsense", 1}}).find("unknown key nonsense"), std::string::npos);
    EXPECT_NE(message({{"process", {{"emissivity", 2}}}}).find("emissivity"), std::string::npos);
    EXPECT_NE(message({{"ranges", {{"heat_source_w_per_m3", {6e9, 1e9}}}}}).find("lo < hi"), std::string::npos);
    EXPECT_NE(message({{"solver", {{"bottom_boundary", "floating"}}}}).find("bottom_boundary"), std::string::npos);
    EXPECT_NE(message({{"alloys", {{"AA1100", Json::object()}}}}).find("unknown alloy"), std::string::npos);
}

TEST(Config, AlloysSectionReplacesDefaults) {
    Json j;
    j["alloys"] = {{"AA2024", {{"cte", 2.3e-5}, {"poisson_ratio", 0.33}, {"yield_stress_ref", 324}, {"solidus_temp", 502}}}};
    const auto c = parse_config(j);
    try {
        (void)c.resolve(Alloy::AA2024);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_STREQ(e.what(), "missing field: thermal_conductivity");
    }
    EXPECT_THROW(c.resolve(Alloy::AA6061), ConfigError);
}

TEST(Vtk, ConstantGridGolden) {
    const std::vector<double> ones(8, 1.5);
    const std::vector<std::array<double, 3>> vec(8, {0.0, -0.0, 2.0});
    const auto text = vtk::write_structured_points({2, 2, 2, 0.5}, {{"T", ones}}, {{"HFL", vec}}, "golden");
    std::string expected =
        "# vtk DataFile Version 3.0\ngolden\nASCII\nDATASET STRUCTURED_POINTS\nDIMENSIONS 2 2 2\n"
        "ORIGIN 0.25 0.25 0.25\nSPACING 0.5 0.5 0.5\nPOINT_DATA 8\nSCALARS T double 1\nLOOKUP_TABLE default\n";
    for (int i = 0; i < 8; ++i) expected += "1.5\n";
    expected += "VECTORS HFL double\n";
    for (int i = 0; i < 8; ++i) expected += "0 0 2\n";
    EXPECT_EQ(text, expected);
    EXPECT_THROW(vtk::write_structured_points({2, 2, 3, 1}, {{"T", ones}}, {}), ConfigError);
}

TEST(Vtk, SimulationExportHasAllFields) {
    const auto props = test::handbook();
    auto p = test::small_process();
    const auto r = run_deposition(build_model(test::small_geometry(), p.tool_radius), p, props);
    const auto text = vtk::export_fields(field_state(r, props), r.model);
    EXPECT_EQ(text, vtk::export_fields(field_state(r, props), r.model));
    const auto f = test::read_vtk(text);
    EXPECT_EQ(f.nx, 12);
    for (const char* name : {"T", "GRADT", "SIGMA_VM", "LE", "PEEQ", "ACTIVE"}) {
        ASSERT_TRUE(f.scalars.contains(name)) << name;
        EXPECT_EQ(f.scalars.at(name).size(), r.model.size());
    }
    ASSERT_TRUE(f.vectors.contains("HFL"));
    // x-fastest ordering
    const auto v = r.model.index(3, 1, 2);
    EXPECT_NEAR(f.scalars.at("T")[v], r.thermal.temperature[v], 1e-6);
}

TEST(Io, Sha256AndAtomicWrite) {
    EXPECT_EQ(io::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    const auto dir = test::scratch_dir("io");
    io::atomic_write(dir / "sub" / "a.txt", "hello");
    EXPECT_EQ(test::slurp(dir / "sub" / "a.txt"), "hello");
    EXPECT_FALSE(fs::exists(dir / "sub" / "a.txt.tmp"));
    EXPECT_THROW(io::read_file(dir / "missing"), ConfigError);
}

TEST(Cli, HelpExitsZeroForEveryCommand) {
    const auto dir = test::scratch_dir("help");
    std::string out;
    EXPECT_EQ(afsd_cli("--help", dir, &out), 0);
    for (const char* c : {"simulate", "dataset", "train", "predict"}) EXPECT_NE(out.find(c), std::string::npos);
    EXPECT_EQ(afsd_cli("simulate --help", dir, &out), 0);
    for (const char* f : {"--config", "--alloy", "--out-dir", "--heat-source", "--shear-translation", "--shear-rotational"})
        EXPECT_NE(out.find(f), std::string::npos) << f;
    EXPECT_EQ(afsd_cli("dataset --help", dir, &out), 0);
    for (const char* f : {"--config", "--samples", "--seed", "--out"}) EXPECT_NE(out.find(f), std::string::npos) << f;
    EXPECT_EQ(afsd_cli("train --help", dir, &out), 0);
    for (const char* f : {"--model", "--target", "--out", "--curve", "--seed", "--generations", "--fitness-on-test"})
        EXPECT_NE(out.find(f), std::string::npos) << f;
    EXPECT_EQ(afsd_cli("predict --help", dir, &out), 0);
    for (const char* f : {"--model", "--features", "--out"}) EXPECT_NE(out.find(f), std::string::npos) << f;
}

TEST(Cli, UsageAndConfigErrorsExitOne) {
    const auto dir = test::scratch_dir("errors");
    std::string out;
    EXPECT_EQ(afsd_cli("dataset --samples 7 --out " + (dir / "d.csv").string(), dir, &out), 1);
    EXPECT_NE(out.find("samples must be divisible by 5"), std::string::npos);
    EXPECT_EQ(afsd_cli("frobnicate", dir, &out), 1);
    EXPECT_EQ(afsd_cli("simulate --alloy AA9999 --out-dir " + dir.string(), dir, &out), 1);
    EXPECT_NE(out.find("unknown alloy"), std::string::npos);

    Json j = small_run_config();
    j["alloys"] = {{"AA2024", {{"cte", 2.3e-5}, {"poisson_ratio", 0.33}, {"yield_stress_ref", 324}, {"solidus_temp", 502}}}};
    const auto cfg = write_text(dir / "partial.json", j.dump());
    EXPECT_EQ(afsd_cli("simulate --alloy AA2024 --config " + cfg.string() + " --out-dir " + dir.string(), dir, &out), 1);
    EXPECT_NE(out.find("missing field: thermal_conductivity"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir / "fields.vtk"));
}

TEST(Cli, SolverFailureExitsTwo) {
    const auto dir = test::scratch_dir("diverge");
    Json j = small_run_config();
    j["process"]["heat_source_w_per_m3"] = 1e308;
    const auto cfg = write_text(dir / "hot.json", j.dump());
    std::string out;
    EXPECT_EQ(afsd_cli("simulate --config " + cfg.string() + " --out-dir " + dir.string(), dir, &out), 2);
    EXPECT_NE(out.find("diverged"), std::string::npos);
}

TEST(Cli, SimulateWritesFieldsHistoryAndManifest) {
    const auto dir = test::scratch_dir("simulate");
    const auto cfg = write_text(dir / "run.json", small_run_config().dump());
    const std::string args = "simulate --alloy AA5083 --config " + cfg.string() + " --heat-source 2.5e9 --out-dir ";
    ASSERT_EQ(afsd_cli(args + (dir / "a").string(), dir), 0);
    ASSERT_EQ(afsd_cli(args + (dir / "b").string(), dir), 0);
    for (const char* f : {"fields.vtk", "history.csv"})
        EXPECT_EQ(test::slurp(dir / "a" / f), test::slurp(dir / "b" / f)) << f;

    const auto m = Json::parse(test::slurp(dir / "a" / "manifest.json"));
    EXPECT_EQ(m["outputs"]["fields.vtk"], io::sha256_hex(test::slurp(dir / "a" / "fields.vtk")));
    EXPECT_EQ(m["outputs"]["history.csv"], io::sha256_hex(test::slurp(dir / "a" / "history.csv")));
    EXPECT_EQ(m["alloy"]["name"], "AA5083");
    EXPECT_EQ(m["alloy"]["thermal_conductivity_w_per_mk"]["source"], "config-supplied (handbook)");
    EXPECT_EQ(m["alloy"]["elastic_modulus_gpa"]["source"], "built-in table");
    EXPECT_EQ(m["process"]["heat_source_w_per_m3"], 2.5e9);
    EXPECT_EQ(m["config_hash"], parse_config(small_run_config()).hash);
    EXPECT_TRUE(m.contains("started_at"));
    EXPECT_EQ(m["tool_version"], cli::kToolVersion);

    const auto history = test::slurp(dir / "a" / "history.csv");
    EXPECT_EQ(history.substr(0, history.find('\n')), "step,time_s,max_temperature_k,max_von_mises_mpa,max_log_strain");
}

TEST(Cli, DatasetTrainPredictRoundTrip) {
    const auto dir = test::scratch_dir("pipeline");
    const auto cfg = write_text(dir / "run.json", small_run_config().dump());
    const auto data = dir / "ds.csv";
    ASSERT_EQ(afsd_cli("dataset --samples 10 --seed 3 --config " + cfg.string() + " --out " + data.string(), dir), 0);
    const auto ds = read_dataset_csv(test::slurp(data));
    ASSERT_EQ(ds.samples.size(), 10u);
    for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(ds.samples[i].alloy, kAllAlloys[i / 2]);
    const auto dm = Json::parse(test::slurp(dir / "ds.csv.manifest.json"));
    EXPECT_EQ(dm["outputs"]["ds.csv"], io::sha256_hex(test::slurp(data)));
    EXPECT_EQ(dm["seed"], 3);
    EXPECT_EQ(dm["alloys"].size(), 5u);

    // a fully grown tree reproduces its training targets
    std::string out;
    const auto model = dir / "dt.json";
    ASSERT_EQ(afsd_cli("train " + data.string() + " --model dt --target log-strain --config " + cfg.string() + " --out " +
                      model.string(),
                  dir, &out),
              0);
    EXPECT_NE(out.find("Algorithms\tRMSE\tMAE\tR2 Value"), std::string::npos);
    EXPECT_NE(out.find("\nDT\t"), std::string::npos);
    EXPECT_NE(out.find("max_depth=20"), std::string::npos);

    std::string features = "heat_source_w_per_m3,elastic_modulus_gpa,specific_heat_j_per_kgk,shear_translation_n,"
                           "shear_rotational_nm,extra\n";
    for (auto i : ds.train) {
        const auto& f = ds.samples[i].features;
        features += format_number(f[4]) + "," + format_number(f[0]) + "," + format_number(f[1]) + "," +
                    format_number(f[2]) + "," + format_number(f[3]) + ",x\n";
    }
    const auto feat = write_text(dir / "features.csv", features);
    const auto pred = dir / "pred.csv";
    ASSERT_EQ(afsd_cli("predict --model " + model.string() + " --features " + feat.string() + " --out " + pred.string(), dir), 0);
    std::istringstream in(test::slurp(pred));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, features.substr(0, features.find('\n')) + ",prediction");
    for (auto i : ds.train) {
        ASSERT_TRUE(std::getline(in, line));
        EXPECT_EQ(std::stod(line.substr(line.rfind(',') + 1)), ds.samples[i].targets[1]);
    }

    // empty features file gives a header-only result
    write_text(dir / "empty.csv", "");
    ASSERT_EQ(afsd_cli("predict --model " + model.string() + " --features " + (dir / "empty.csv").string() + " --out " +
                      (dir / "empty_pred.csv").string(),
                  dir),
              0);
    EXPECT_EQ(test::slurp(dir / "empty_pred.csv"),
              "elastic_modulus_gpa,specific_heat_j_per_kgk,shear_translation_n,shear_rotational_nm,"
              "heat_source_w_per_m3,prediction\n");

    // malformed row names its row; missing columns are listed
    write_text(dir / "bad.csv", std::string(features.substr(0, features.find('\n'))) + "\n1,2,3,4,5,x\n1,2,oops,4,5,x\n");
    EXPECT_EQ(afsd_cli("predict --model " + model.string() + " --features " + (dir / "bad.csv").string() + " --out " +
                      (dir / "bad_pred.csv").string(),
                  dir, &out),
              1);
    EXPECT_NE(out.find("row 2"), std::string::npos);
    write_text(dir / "cols.csv", "elastic_modulus_gpa,heat_source_w_per_m3\n1,2\n");
    EXPECT_EQ(afsd_cli("predict --model " + model.string() + " --features " + (dir / "cols.csv").string() + " --out " +
                      (dir / "cols_pred.csv").string(),
                  dir, &out),
              1);
    EXPECT_NE(out.find("missing columns: specific_heat_j_per_kgk, shear_translation_n, shear_rotational_nm"),
              std::string::npos);
}

TEST(Cli, TrainGaIsDeterministicAndWritesCurve) {
    const auto dir = test::scratch_dir("train_ga");
    const auto cfg = write_text(dir / "run.json", small_run_config().dump());
    const auto data = dir / "ds.csv";
    ASSERT_EQ(afsd_cli("dataset --samples 20 --seed 8 --config " + cfg.string() + " --out " + data.string(), dir), 0);
    for (const char* model : {"ga-dt", "ga-rf"}) {
        std::string a_out, b_out;
        const std::string base = "train " + data.string() + " --model " + model + " --config " + cfg.string();
        ASSERT_EQ(afsd_cli(base + " --out " + (dir / "a.json").string() + " --curve " + (dir / "a.csv").string(), dir, &a_out), 0);
        ASSERT_EQ(afsd_cli(base + " --out " + (dir / "b.json").string() + " --curve " + (dir / "b.csv").string(), dir, &b_out), 0);
        EXPECT_EQ(test::slurp(dir / "a.json"), test::slurp(dir / "b.json"));
        EXPECT_EQ(test::slurp(dir / "a.csv"), test::slurp(dir / "b.csv"));
        EXPECT_EQ(a_out, b_out);
        const auto curve = test::slurp(dir / "a.csv");
        EXPECT_EQ(curve.substr(0, curve.find('\n')), "generation,best_fitness,best_mse");
        EXPECT_EQ(std::count(curve.begin(), curve.end(), '\n'), 5);  // header + 4 generations
        const auto m = Json::parse(test::slurp(dir / "a.json.manifest.json"));
        EXPECT_EQ(m["outputs"]["a.json"], io::sha256_hex(test::slurp(dir / "a.json")));
        EXPECT_EQ(m["outputs"]["a.csv"], io::sha256_hex(test::slurp(dir / "a.csv")));
        EXPECT_EQ(m["ga"]["generations"], 4);
    }
    std::string out;
    write_text(dir / "broken.csv", "alloy,E\n");
    EXPECT_EQ(afsd_cli("train " + (dir / "broken.csv").string() + " --model dt", dir, &out), 1);
    EXPECT_NE(out.find("schema mismatch"), std::string::npos);
}
