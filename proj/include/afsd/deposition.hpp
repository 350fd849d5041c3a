#pragma once

// Transient heat conduction on a uniform voxel grid with element activation.
//
// Each voxel is a finite volume of edge `spacing`. Voxels become part of the
// body at their activation time; before that they are excluded from
// conduction and hold the initial temperature. The heat equation
//
//   rho c_p dT/dt = div(k grad T) + Q
//
// is integrated with forward Euler over the active set. Faces that border
// inactive voxels or the domain edge lose heat by convection and radiation.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "afsd/error.hpp"
#include "afsd/materials.hpp"

namespace afsd {

inline constexpr double kStefanBoltzmann = 5.670374419e-8;  // W/(m^2 K^4)
inline constexpr double kStabilitySafety = 0.9;

enum class BottomBoundary {
    clamp,       // substrate bottom held at ambient (massive backing plate)
    convective,  // treated like any other exposed face
};

/// Wall-build layout in voxel units. The wall is centred on the substrate.
struct Geometry {
    int nx = 30;
    int ny = 12;
    int nz = 7;
    double spacing = 2e-3;  // m
    int substrate_layers = 3;
    int wall_layers = 4;
    int wall_width = 4;    // voxels across y
    int wall_length = 24;  // voxels along x
    double traverse_speed = 6e-3;    // m/s
    double interlayer_dwell = 5.0;   // s between layers
    bool alternate_direction = true;  // serpentine toolpath

    bool operator==(const Geometry&) const = default;
};

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;
    bool operator==(const Vec3&) const = default;
};

struct ToolpathSegment {
    int layer = 0;  // index within the wall, 0 = first deposited layer
    Vec3 start;
    Vec3 end;
    double traverse_speed = 0.0;  // m/s
    double start_time = 0.0;      // s

    [[nodiscard]] double length() const { return std::hypot(end.x - start.x, end.y - start.y); }
    [[nodiscard]] double end_time() const { return start_time + length() / traverse_speed; }
};

/// Voxel grid, toolpath and per-voxel activation schedule.
struct DepositionModel {
    int nx = 0, ny = 0, nz = 0;
    double spacing = 0.0;
    int substrate_layers = 0;
    int wall_layers = 0;
    int wall_width = 0;
    std::vector<ToolpathSegment> toolpath;
    /// Seconds. 0 for substrate, +inf for voxels that are never deposited.
    std::vector<double> activation_time;
    /// Optional fixed-temperature voxels in kelvin; NaN marks a free voxel.
    /// Empty means no voxel is held.
    std::vector<double> held_temperature;
    BottomBoundary bottom = BottomBoundary::clamp;

    [[nodiscard]] std::size_t size() const {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
    }
    [[nodiscard]] std::size_t index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(nx) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(ny) * k);
    }
    [[nodiscard]] std::array<int, 3> coords(std::size_t v) const {
        const auto i = static_cast<int>(v % nx);
        const auto j = static_cast<int>((v / nx) % ny);
        const auto k = static_cast<int>(v / (static_cast<std::size_t>(nx) * ny));
        return {i, j, k};
    }
    [[nodiscard]] Vec3 center(std::size_t v) const {
        const auto [i, j, k] = coords(v);
        return {(i + 0.5) * spacing, (j + 0.5) * spacing, (k + 0.5) * spacing};
    }
    [[nodiscard]] bool is_substrate(std::size_t v) const { return coords(v)[2] < substrate_layers; }
    [[nodiscard]] bool is_held(std::size_t v) const {
        return !held_temperature.empty() && !std::isnan(held_temperature[v]);
    }
    /// Time at which the last toolpath segment finishes.
    [[nodiscard]] double deposition_end_time() const {
        return toolpath.empty() ? 0.0 : toolpath.back().end_time();
    }
};

/// Loads and boundary conditions for one deposition run. Temperatures in Celsius.
struct ProcessParameters {
    double heat_source = 3e9;        // W/m^3 under the tool
    double shear_translation = 2000;  // N
    double shear_rotational = 20;     // N m
    double tool_radius = 6e-3;        // m
    double convection_coeff = 20;     // W/(m^2 K)
    double emissivity = 0.3;
    double ambient_temp = 25;  // C
    double initial_temp = 25;  // C
    double end_dwell = 2;      // s
    /// Entry temperature of freshly deposited material; defaults to 0.8 * solidus.
    std::optional<double> deposition_temp;

    bool operator==(const ProcessParameters&) const = default;

    void validate() const {
        if (!(heat_source > 0)) throw ConfigError("heat_source must be positive");
        if (!(tool_radius > 0)) throw ConfigError("tool_radius must be positive");
        if (!(convection_coeff >= 0)) throw ConfigError("convection_coeff must be non-negative");
        if (!(emissivity >= 0 && emissivity <= 1)) throw ConfigError("emissivity must lie in [0, 1]");
        if (!(end_dwell >= 0)) throw ConfigError("end_dwell must be non-negative");
        if (!(shear_translation >= 0) || !(shear_rotational >= 0))
            throw ConfigError("shear loads must be non-negative");
        if (!std::isfinite(ambient_temp) || !std::isfinite(initial_temp))
            throw ConfigError("ambient_temp and initial_temp must be finite");
    }

    [[nodiscard]] double deposition_temp_c(const AlloyProperties& props) const {
        return deposition_temp.value_or(0.8 * props.solidus());
    }
};

struct ThermalState {
    double time = 0.0;                 // s
    std::vector<double> temperature;   // K
    std::vector<std::uint8_t> active;  // 0/1

    bool operator==(const ThermalState&) const = default;
};

/// Horizontal tool centre plus the height of the layer being deposited.
using ToolPosition = Vec3;

/// Builds the voxel model for a centred single-track wall.
/// Activation time of a wall voxel is the first instant its centre lies within
/// tool_radius (horizontal distance) of the moving tool centre.
inline DepositionModel build_model(const Geometry& g, double tool_radius) {
    if (g.nx < 1 || g.ny < 1 || g.nz < 1) throw ConfigError("grid dimensions must be positive");
    if (!(g.spacing > 0)) throw ConfigError("spacing must be positive");
    if (g.substrate_layers < 1) throw ConfigError("substrate_layers must be at least 1");
    if (g.wall_layers < 0) throw ConfigError("wall_layers must be non-negative");
    if (g.substrate_layers + g.wall_layers > g.nz) throw ConfigError("substrate_layers + wall_layers exceeds nz");
    if (!(tool_radius > 0)) throw ConfigError("tool_radius must be positive");

    DepositionModel m;
    m.nx = g.nx;
    m.ny = g.ny;
    m.nz = g.nz;
    m.spacing = g.spacing;
    m.substrate_layers = g.substrate_layers;
    m.wall_layers = g.wall_layers;
    m.wall_width = g.wall_width;
    m.activation_time.assign(m.size(), std::numeric_limits<double>::infinity());

    for (int k = 0; k < g.substrate_layers; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) m.activation_time[m.index(i, j, k)] = 0.0;

    if (g.wall_layers == 0) return m;

    if (g.wall_width < 1 || g.wall_width > g.ny) throw ConfigError("wall_width must lie in [1, ny]");
    if (g.wall_length < 1 || g.wall_length > g.nx) throw ConfigError("wall_length must lie in [1, nx]");
    if (!(g.traverse_speed > 0)) throw ConfigError("traverse_speed must be positive");
    if (!(g.interlayer_dwell >= 0)) throw ConfigError("interlayer_dwell must be non-negative");

    const int x0 = (g.nx - g.wall_length) / 2;
    const int y0 = (g.ny - g.wall_width) / 2;
    const double dx = g.spacing;
    const double y_center = (y0 + 0.5 * g.wall_width) * dx;
    const double half_width = 0.5 * (g.wall_width - 1) * dx;  // farthest voxel centre from the track
    if (half_width > tool_radius)
        throw ConfigError("wall_width exceeds the tool footprint (tool_radius too small)");

    double t = 0.0;
    for (int layer = 0; layer < g.wall_layers; ++layer) {
        const int k = g.substrate_layers + layer;
        const bool reverse = g.alternate_direction && (layer % 2 == 1);
        const double xa = x0 * dx;
        const double xb = (x0 + g.wall_length) * dx;
        const double z = (k + 0.5) * dx;
        ToolpathSegment seg;
        seg.layer = layer;
        seg.start = {reverse ? xb : xa, y_center, z};
        seg.end = {reverse ? xa : xb, y_center, z};
        seg.traverse_speed = g.traverse_speed;
        seg.start_time = t;
        m.toolpath.push_back(seg);

        for (int j = y0; j < y0 + g.wall_width; ++j) {
            const double dy = (j + 0.5) * dx - y_center;
            const double reach = std::sqrt(std::max(0.0, tool_radius * tool_radius - dy * dy));
            for (int i = x0; i < x0 + g.wall_length; ++i) {
                const double xv = (i + 0.5) * dx;
                const double along = reverse ? seg.start.x - xv : xv - seg.start.x;
                m.activation_time[m.index(i, j, k)] = t + std::max(0.0, along - reach) / g.traverse_speed;
            }
        }
        t = seg.end_time() + g.interlayer_dwell;
    }
    return m;
}

/// Element activation indicator: 1 iff t >= activation_time (boundary inclusive).
inline int activation(const DepositionModel& m, std::size_t voxel, double t) {
    if (voxel >= m.size()) throw ConfigError("voxel index out of range");
    return t >= m.activation_time[voxel] ? 1 : 0;
}

/// Tool centre at time t, or nothing between segments and after the last one.
inline std::optional<ToolPosition> tool_position(const DepositionModel& m, double t) {
    for (const auto& seg : m.toolpath) {
        if (t >= seg.start_time && t < seg.end_time()) {
            const double len = seg.length();
            const double f = len > 0 ? (t - seg.start_time) * seg.traverse_speed / len : 0.0;
            return ToolPosition{seg.start.x + f * (seg.end.x - seg.start.x),
                                seg.start.y + f * (seg.end.y - seg.start.y), seg.start.z};
        }
    }
    return std::nullopt;
}

/// Largest explicit step that keeps interior updates non-oscillatory.
inline double stable_dt(const DepositionModel& m, const AlloyProperties& props) {
    double k = props.k();
    double cp = props.specific_heat;
    if (props.temperature_dependent()) {
        // linear in T, so the extremes over [reference, solidus] sit at the ends
        const double lo = props.reference_temp + kKelvinOffset;
        const double hi = props.solidus() + kKelvinOffset;
        k = std::max(props.k_at(lo), props.k_at(hi));
        cp = std::min(props.cp_at(lo), props.cp_at(hi));
    }
    return kStabilitySafety * props.density_si() * cp * m.spacing * m.spacing / (6.0 * k);
}

/// Active voxels in the tool's layer whose centre lies within tool_radius of the tool axis.
inline std::vector<std::uint8_t> tool_footprint(const DepositionModel& m, const ThermalState& s,
                                                double tool_radius, const std::optional<ToolPosition>& tool) {
    std::vector<std::uint8_t> mask(m.size(), 0);
    if (!tool) return mask;
    const int k = static_cast<int>(std::floor(tool->z / m.spacing));
    if (k < 0 || k >= m.nz) return mask;
    const double r2 = tool_radius * tool_radius;
    for (int j = 0; j < m.ny; ++j) {
        const double dy = (j + 0.5) * m.spacing - tool->y;
        for (int i = 0; i < m.nx; ++i) {
            const double dx = (i + 0.5) * m.spacing - tool->x;
            const auto v = m.index(i, j, k);
            if (s.active[v] && dx * dx + dy * dy <= r2) mask[v] = 1;
        }
    }
    return mask;
}

/// Initial field: active voxels at t = 0, substrate at initial_temp, any wall
/// voxel already under the tool at the deposition temperature.
inline ThermalState initial_state(const DepositionModel& m, const ProcessParameters& p,
                                  const AlloyProperties& props) {
    ThermalState s;
    s.time = 0.0;
    const double t_init = p.initial_temp + kKelvinOffset;
    s.temperature.assign(m.size(), t_init);
    s.active.assign(m.size(), 0);
    for (std::size_t v = 0; v < m.size(); ++v) {
        if (activation(m, v, 0.0)) {
            s.active[v] = 1;
            if (!m.is_substrate(v)) s.temperature[v] = p.deposition_temp_c(props) + kKelvinOffset;
        }
        if (m.is_held(v) && s.active[v]) s.temperature[v] = m.held_temperature[v];
    }
    return s;
}

namespace detail {

/// One forward-Euler update from `in` into `out`, ending at `new_time`.
inline void advance_thermal(const ThermalState& in, ThermalState& out, const DepositionModel& m,
                            const ProcessParameters& p, const AlloyProperties& props,
                            const std::vector<std::uint8_t>& source_mask, double dt, double new_time) {
    const double dx = m.spacing;
    const double area = dx * dx;
    const double volume = area * dx;
    const double rho = props.density_si();
    const double t_amb = p.ambient_temp + kKelvinOffset;
    const double t_amb4 = t_amb * t_amb * t_amb * t_amb;
    const double h = p.convection_coeff;
    const double eps_sigma = p.emissivity * kStefanBoltzmann;
    const bool variable = props.temperature_dependent();
    const double k_const = props.k();
    const double t_dep = p.deposition_temp_c(props) + kKelvinOffset;

    out.temperature = in.temperature;
    out.active = in.active;

    const std::size_t sx = 1, sy = static_cast<std::size_t>(m.nx),
                      sz = static_cast<std::size_t>(m.nx) * static_cast<std::size_t>(m.ny);

    for (int k = 0; k < m.nz; ++k) {
        for (int j = 0; j < m.ny; ++j) {
            for (int i = 0; i < m.nx; ++i) {
                const std::size_t v = m.index(i, j, k);
                if (!in.active[v] || m.is_held(v)) continue;
                const double t = in.temperature[v];
                const double k_self = variable ? props.k_at(t) : k_const;
                double q = 0.0;  // W into the voxel

                auto face = [&](bool inside, std::size_t nb, bool clamp_face) {
                    if (inside && in.active[nb]) {
                        const double tn = in.temperature[nb];
                        const double kf = variable ? 0.5 * (k_self + props.k_at(tn)) : k_const;
                        q += kf * dx * (tn - t);
                    } else if (clamp_face) {
                        q += k_self * dx * (t_amb - t);
                    } else {
                        q -= (h * (t - t_amb) + eps_sigma * (t * t * t * t - t_amb4)) * area;
                    }
                };
                face(i > 0, v - sx, false);
                face(i + 1 < m.nx, v + sx, false);
                face(j > 0, v - sy, false);
                face(j + 1 < m.ny, v + sy, false);
                face(k > 0, k > 0 ? v - sz : v, k == 0 && m.bottom == BottomBoundary::clamp);
                face(k + 1 < m.nz, v + sz, false);

                if (source_mask[v]) q += p.heat_source * volume;

                const double cp = variable ? props.cp_at(t) : props.specific_heat;
                out.temperature[v] = t + dt * q / (rho * cp * volume);
                if (!std::isfinite(out.temperature[v]))
                    throw RuntimeFailure("solver diverged at t=" + std::to_string(new_time) + " s");
            }
        }
    }

    out.time = new_time;
    for (std::size_t v = 0; v < m.size(); ++v) {
        if (!out.active[v] && new_time >= m.activation_time[v]) {
            out.active[v] = 1;
            out.temperature[v] = m.is_held(v) ? m.held_temperature[v] : t_dep;
        }
    }
}

}  // namespace detail

/// Advances the thermal field by dt. The source acts on active voxels of the
/// tool's layer within tool_radius of the tool axis; voxels whose activation
/// time is reached at the new time enter at the deposition temperature.
inline ThermalState thermal_step(const ThermalState& state, const DepositionModel& model,
                                 const ProcessParameters& params, const AlloyProperties& props,
                                 const std::optional<ToolPosition>& tool, double dt) {
    if (!(dt > 0)) throw ConfigError("time step must be positive");
    const double limit = stable_dt(model, props);
    if (dt > limit * (1.0 + 1e-12))
        throw ConfigError("unstable step: dt=" + std::to_string(dt) + " s exceeds " + std::to_string(limit) + " s");
    if (state.temperature.size() != model.size() || state.active.size() != model.size())
        throw ConfigError("thermal state does not match the model grid");
    ThermalState out;
    const auto mask = tool_footprint(model, state, params.tool_radius, tool);
    detail::advance_thermal(state, out, model, params, props, mask, dt, state.time + dt);
    return out;
}

/// Total enthalpy sum(rho c_p T dV) over active voxels, J (relative to 0 K).
inline double total_enthalpy(const ThermalState& s, const DepositionModel& m, const AlloyProperties& props) {
    const double volume = m.spacing * m.spacing * m.spacing;
    double sum = 0.0;
    for (std::size_t v = 0; v < m.size(); ++v)
        if (s.active[v]) sum += props.density_si() * props.specific_heat * s.temperature[v] * volume;
    return sum;
}

namespace detail {

/// Per-axis derivative over active neighbours: central where both exist,
/// one-sided where one exists, zero otherwise.
inline std::vector<std::array<double, 3>> gradient(const ThermalState& s, const DepositionModel& m) {
    std::vector<std::array<double, 3>> g(m.size(), {0.0, 0.0, 0.0});
    const std::array<std::size_t, 3> stride = {1, static_cast<std::size_t>(m.nx),
                                               static_cast<std::size_t>(m.nx) * static_cast<std::size_t>(m.ny)};
    const std::array<int, 3> extent = {m.nx, m.ny, m.nz};
    for (std::size_t v = 0; v < m.size(); ++v) {
        if (!s.active[v]) continue;
        const auto c = m.coords(v);
        for (int a = 0; a < 3; ++a) {
            const bool lo = c[a] > 0 && s.active[v - stride[a]];
            const bool hi = c[a] + 1 < extent[a] && s.active[v + stride[a]];
            const double t = s.temperature[v];
            if (lo && hi)
                g[v][a] = (s.temperature[v + stride[a]] - s.temperature[v - stride[a]]) / (2.0 * m.spacing);
            else if (hi)
                g[v][a] = (s.temperature[v + stride[a]] - t) / m.spacing;
            else if (lo)
                g[v][a] = (t - s.temperature[v - stride[a]]) / m.spacing;
        }
    }
    return g;
}

}  // namespace detail

/// |grad T| per voxel, K/m. Zero for inactive voxels.
inline std::vector<double> temperature_gradient(const ThermalState& s, const DepositionModel& m) {
    const auto g = detail::gradient(s, m);
    std::vector<double> out(g.size());
    for (std::size_t v = 0; v < g.size(); ++v) out[v] = std::sqrt(g[v][0] * g[v][0] + g[v][1] * g[v][1] + g[v][2] * g[v][2]);
    return out;
}

/// Heat flux vector -k grad T per voxel, W/m^2.
inline std::vector<std::array<double, 3>> heat_flux(const ThermalState& s, const DepositionModel& m,
                                                    const AlloyProperties& props) {
    auto g = detail::gradient(s, m);
    for (std::size_t v = 0; v < g.size(); ++v) {
        const double k = props.k_at(s.temperature[v]);
        for (auto& c : g[v]) c = c == 0.0 ? 0.0 : -k * c;
    }
    return g;
}

}  // namespace afsd
