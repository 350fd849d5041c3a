#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "afsd/deposition.hpp"
#include "afsd/error.hpp"
#include "afsd/materials.hpp"
#include "afsd/mechanics.hpp"

namespace afsd {

struct SolverOptions {
    /// Explicit step; must not exceed stable_dt. Unset uses stable_dt.
    std::optional<double> dt;
    BottomBoundary bottom = BottomBoundary::clamp;
    /// Keep per-step maxima of temperature, von Mises stress and LE.
    bool record_history = true;

    bool operator==(const SolverOptions&) const = default;
};

struct HistoryRow {
    double time = 0.0;
    double max_temperature = 0.0;  // K
    double max_von_mises = 0.0;    // MPa
    double max_log_strain = 0.0;

    bool operator==(const HistoryRow&) const = default;
};

struct SimulationResult {
    DepositionModel model;
    ThermalState thermal;
    MechanicalState mechanics;
    std::vector<HistoryRow> history;
    double dt = 0.0;
    std::size_t steps = 0;
};

/// Derived per-voxel output fields at one instant.
struct FieldState {
    std::vector<double> temperature;                // K
    std::vector<std::uint8_t> active;
    std::vector<double> gradt;                      // K/m
    std::vector<std::array<double, 3>> heat_flux;   // W/m^2
    std::vector<double> sigma_vm;                   // MPa
    std::vector<double> log_strain;
    std::vector<double> peeq;
};

inline FieldState field_state(const SimulationResult& r, const AlloyProperties& props) {
    FieldState f;
    f.temperature = r.thermal.temperature;
    f.active = r.thermal.active;
    f.gradt = temperature_gradient(r.thermal, r.model);
    f.heat_flux = heat_flux(r.thermal, r.model, props);
    f.sigma_vm = r.mechanics.sigma_vm;
    f.log_strain = r.mechanics.log_strain;
    f.peeq = r.mechanics.peeq;
    return f;
}

namespace detail {

inline HistoryRow summarize(const ThermalState& th, const MechanicalState& me) {
    HistoryRow row;
    row.time = th.time;
    for (std::size_t v = 0; v < th.temperature.size(); ++v) {
        if (!th.active[v]) continue;
        row.max_temperature = std::max(row.max_temperature, th.temperature[v]);
        row.max_von_mises = std::max(row.max_von_mises, me.sigma_vm[v]);
        row.max_log_strain = std::max(row.max_log_strain, me.log_strain[v]);
    }
    return row;
}

}  // namespace detail

/// Marches the coupled thermal and mechanical update from t = 0 until the end
/// of the last toolpath segment plus end_dwell. Each step applies the thermal
/// update first and then the mechanical update on the new temperature field.
///
/// `observer(thermal, mechanics)` is called after every step when provided.
template <typename Observer>
SimulationResult run_deposition(DepositionModel model, const ProcessParameters& params,
                                const AlloyProperties& props, const SolverOptions& options, Observer&& observer) {
    params.validate();
    model.bottom = options.bottom;
    const double limit = stable_dt(model, props);
    double dt = limit;
    if (options.dt) {
        if (!(*options.dt > 0)) throw ConfigError("dt must be positive");
        if (*options.dt > limit * (1.0 + 1e-12))
            throw ConfigError("unstable step: configured dt=" + std::to_string(*options.dt) + " s exceeds stable " +
                              std::to_string(limit) + " s");
        dt = *options.dt;
    }
    const double tau = shear_traction(params);
    const double end_time = model.deposition_end_time() + params.end_dwell;
    const auto steps = static_cast<std::size_t>(std::ceil(end_time / dt - 1e-9));

    SimulationResult r;
    r.dt = dt;
    r.steps = steps;
    ThermalState current = initial_state(model, params, props);
    ThermalState next;
    MechanicalState mech = initial_mechanics(current);
    if (options.record_history) r.history.reserve(steps);

    for (std::size_t n = 0; n < steps; ++n) {
        const double t0 = static_cast<double>(n) * dt;
        const double t1 = static_cast<double>(n + 1) * dt;
        try {
            const auto tool = tool_position(model, t0);
            const auto mask = tool_footprint(model, current, params.tool_radius, tool);
            detail::advance_thermal(current, next, model, params, props, mask, dt, t1);
            mech = mechanical_update(std::move(mech), next, mask, tau, props);
        } catch (const RuntimeFailure& e) {
            throw RuntimeFailure(std::string(e.what()) + " (step " + std::to_string(n + 1) + ", t=" +
                                 std::to_string(t1) + " s)");
        }
        std::swap(current, next);
        if (options.record_history) r.history.push_back(detail::summarize(current, mech));
        observer(current, mech);
    }

    r.model = std::move(model);
    r.thermal = std::move(current);
    r.mechanics = std::move(mech);
    return r;
}

inline SimulationResult run_deposition(DepositionModel model, const ProcessParameters& params,
                                       const AlloyProperties& props, const SolverOptions& options = {}) {
    return run_deposition(std::move(model), params, props, options, [](const ThermalState&, const MechanicalState&) {});
}

}  // namespace afsd
