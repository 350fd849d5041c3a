#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <vector>

#include "afsd/simulation.hpp"
#include "support.hpp"

using namespace afsd;

namespace {

double max_temperature(const ThermalState& s) {
    double m = 0.0;
    for (std::size_t v = 0; v < s.temperature.size(); ++v)
        if (s.active[v]) m = std::max(m, s.temperature[v]);
    return m;
}

SimulationResult run_small(const ProcessParameters& p, const SolverOptions& opt = {}) {
    return run_deposition(build_model(test::small_geometry(), p.tool_radius), p, test::handbook(), opt);
}

}  // namespace

TEST(RunDeposition, StepCountCoversBuildPlusDwell) {
    const auto p = test::small_process();
    const auto r = run_small(p);
    const double end = r.model.deposition_end_time() + p.end_dwell;
    EXPECT_GE(r.steps * r.dt, end - 1e-9);
    EXPECT_LT((r.steps - 1) * r.dt, end);
    EXPECT_EQ(r.history.size(), r.steps);
    EXPECT_NEAR(r.thermal.time, r.steps * r.dt, 1e-9);
    EXPECT_DOUBLE_EQ(r.dt, stable_dt(r.model, test::handbook()));
}

TEST(RunDeposition, Deterministic) {
    const auto p = test::small_process();
    const auto a = run_small(p), b = run_small(p);
    EXPECT_EQ(a.thermal, b.thermal);
    EXPECT_EQ(a.mechanics, b.mechanics);
    EXPECT_EQ(a.history, b.history);
}

TEST(RunDeposition, ConfiguredStepMustBeStable) {
    auto p = test::small_process();
    SolverOptions opt;
    opt.dt = 1.0;
    EXPECT_THROW(run_small(p, opt), ConfigError);
    opt.dt = 0.5 * stable_dt(build_model(test::small_geometry(), p.tool_radius), test::handbook());
    EXPECT_NO_THROW(run_small(p, opt));
}

TEST(RunDeposition, SubstrateOnlyStaysAtInitialTemperature) {
    auto g = test::small_geometry();
    g.wall_layers = 0;
    auto p = test::small_process();
    const auto r = run_deposition(build_model(g, p.tool_radius), p, test::handbook());
    for (std::size_t v = 0; v < r.model.size(); ++v) {
        EXPECT_EQ(r.thermal.temperature[v], p.initial_temp + kKelvinOffset);
        EXPECT_EQ(r.mechanics.sigma_vm[v], 0.0);
        EXPECT_EQ(r.mechanics.log_strain[v], 0.0);
        EXPECT_EQ(r.mechanics.peeq[v], 0.0);
    }
}

TEST(RunDeposition, InactiveInvarianceAndActivationMonotonicity) {
    const auto p = test::small_process();
    const auto model = build_model(test::small_geometry(), p.tool_radius);
    const double t_init = p.initial_temp + kKelvinOffset;
    std::vector<std::uint8_t> was_active(model.size(), 0);
    bool ok = true;
    run_deposition(model, p, test::handbook(), {}, [&](const ThermalState& th, const MechanicalState&) {
        for (std::size_t v = 0; v < model.size(); ++v) {
            if (th.time < model.activation_time[v] && th.temperature[v] != t_init) ok = false;
            if (was_active[v] && !th.active[v]) ok = false;
            was_active[v] = th.active[v];
        }
    });
    EXPECT_TRUE(ok);
}

TEST(RunDeposition, YieldClampAndPeeqMonotoneThroughoutRun) {
    const auto p = test::small_process();
    const auto props = test::handbook();
    const auto model = build_model(test::small_geometry(), p.tool_radius);
    std::vector<double> prev(model.size(), 0.0);
    double worst = 0.0;
    bool monotone = true;
    run_deposition(model, p, props, {}, [&](const ThermalState& th, const MechanicalState& me) {
        for (std::size_t v = 0; v < model.size(); ++v) {
            if (!th.active[v]) continue;
            const double sy = yield_stress(th.temperature[v], props);
            worst = std::max(worst, me.sigma_vm[v] - sy * (1 + 1e-9));
            if (me.peeq[v] < prev[v]) monotone = false;
            prev[v] = me.peeq[v];
        }
    });
    EXPECT_LE(worst, 0.0);
    EXPECT_TRUE(monotone);
}

TEST(RunDeposition, MaximumPrincipleWithoutSourceOrRadiation) {
    // no tool energy, no radiation: temperatures stay within the initial,
    // ambient and deposition extremes
    auto p = test::small_process();
    p.heat_source = 1e-300;
    p.emissivity = 0;
    p.deposition_temp = 300;
    p.initial_temp = 40;
    p.ambient_temp = 20;
    const auto model = build_model(test::small_geometry(), p.tool_radius);
    const double lo = 20 + kKelvinOffset, hi = 300 + kKelvinOffset;
    bool ok = true;
    run_deposition(model, p, test::handbook(), {}, [&](const ThermalState& th, const MechanicalState&) {
        for (std::size_t v = 0; v < model.size(); ++v)
            if (th.active[v] && (th.temperature[v] < lo - 1e-9 || th.temperature[v] > hi + 1e-9)) ok = false;
    });
    EXPECT_TRUE(ok);
}

TEST(RunDeposition, LowerBoundWithPositiveSource) {
    auto p = test::small_process();
    p.initial_temp = 25;
    p.ambient_temp = 25;
    const auto model = build_model(test::small_geometry(), p.tool_radius);
    double lowest = 1e9;
    run_deposition(model, p, test::handbook(), {}, [&](const ThermalState& th, const MechanicalState&) {
        lowest = std::min(lowest, *std::min_element(th.temperature.begin(), th.temperature.end()));
    });
    EXPECT_GE(lowest, 25 + kKelvinOffset - 1e-9);
}

TEST(RunDeposition, HotterSourceGivesHotterFinalField) {
    auto p = test::small_process();
    double prev = 0.0;
    for (double q : {1e9, 3e9, 6e9}) {
        p.heat_source = q;
        const double t = max_temperature(run_small(p).thermal);
        EXPECT_GE(t, prev);
        prev = t;
    }
}

TEST(RunDeposition, HistoryTracksFieldMaxima) {
    const auto r = run_small(test::small_process());
    const auto& last = r.history.back();
    EXPECT_DOUBLE_EQ(last.max_temperature, max_temperature(r.thermal));
    EXPECT_DOUBLE_EQ(last.max_von_mises, *std::max_element(r.mechanics.sigma_vm.begin(), r.mechanics.sigma_vm.end()));
    double peak = 0.0;
    for (const auto& h : r.history) peak = std::max(peak, h.max_temperature);
    EXPECT_GT(peak, last.max_temperature);
}

TEST(Thermal, GridRefinementDifferencesShrink) {
    // 20 x 10 x 10 mm block whose top corner region (8 x 4 x 4 mm) starts hot
    // and cools by conduction, convection and radiation for one second; the
    // region boundaries align with every grid used
    const auto props = test::handbook();
    ProcessParameters p;
    p.convection_coeff = 200;
    p.emissivity = 0.5;
    std::vector<double> tmax;
    for (double h : {2e-3, 1e-3, 0.5e-3}) {
        Geometry g;
        g.nx = static_cast<int>(std::lround(20e-3 / h));
        g.ny = g.nz = static_cast<int>(std::lround(10e-3 / h));
        g.spacing = h;
        g.substrate_layers = g.nz;
        g.wall_layers = 0;
        auto m = build_model(g, 1e-3);
        m.bottom = BottomBoundary::convective;
        auto s = initial_state(m, p, props);
        for (std::size_t v = 0; v < m.size(); ++v) {
            const auto c = m.center(v);
            if (c.x < 8e-3 && c.y < 4e-3 && c.z > 6e-3) s.temperature[v] = 700.0;
        }
        const double end = 1.0;
        const auto steps = static_cast<int>(std::ceil(end / stable_dt(m, props)));
        const double dt = end / steps;
        for (int n = 0; n < steps; ++n) s = thermal_step(s, m, p, props, std::nullopt, dt);
        tmax.push_back(max_temperature(s));
    }
    const double d1 = std::abs(tmax[1] - tmax[0]);
    const double d2 = std::abs(tmax[2] - tmax[1]);
    std::cout << "final max T [K] at h, h/2, h/4: " << tmax[0] << " " << tmax[1] << " " << tmax[2]
              << "; changes " << d1 << " then " << d2 << "\n";
    EXPECT_LT(d2, d1);
}

TEST(FieldState, DerivedFieldsFromFinalState) {
    const auto props = test::handbook();
    const auto r = run_small(test::small_process());
    const auto f = field_state(r, props);
    EXPECT_EQ(f.temperature, r.thermal.temperature);
    EXPECT_EQ(f.gradt, temperature_gradient(r.thermal, r.model));
    EXPECT_EQ(f.sigma_vm, r.mechanics.sigma_vm);
    EXPECT_EQ(f.heat_flux.size(), r.model.size());
}
