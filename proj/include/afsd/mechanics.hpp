#pragma once

// Quasi-static per-voxel stress estimate.
//
// Each active voxel carries an equibiaxial in-plane stress from constrained
// thermal contraction (free along the build direction) plus an in-plane shear
// from the tool contact while it sits under the tool. Perfect plasticity with a
// temperature-softened yield stress caps the von Mises stress by radial return.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "afsd/deposition.hpp"
#include "afsd/error.hpp"
#include "afsd/materials.hpp"

namespace afsd {

/// Yield stress in MPa at temperature temp_k, falling linearly from the
/// reference value at reference_temp to zero at the solidus.
inline double yield_stress(double temp_k, const AlloyProperties& props) {
    const double t_ref = props.reference_temp + kKelvinOffset;
    const double t_sol = props.solidus() + kKelvinOffset;
    const double f = std::clamp(1.0 - (temp_k - t_ref) / (t_sol - t_ref), 0.0, 1.0);
    return props.sigma_y_ref() * f;
}

/// Contact shear stress in MPa: longitudinal force over the tool area plus the
/// rotational torque over a uniform-pressure circular contact, M / (2/3 pi r^3).
inline double shear_traction(const ProcessParameters& p) {
    if (!(p.tool_radius > 0)) throw ConfigError("tool_radius must be positive");
    const double r = p.tool_radius;
    const double tau_long = p.shear_translation / (std::numbers::pi * r * r);
    const double tau_rot = p.shear_rotational / (2.0 / 3.0 * std::numbers::pi * r * r * r);
    return (tau_long + tau_rot) * 1e-6;
}

/// von Mises stress of sigma11 = sigma22 = s, sigma33 = 0 with in-plane shear tau.
inline double von_mises(double sigma_inplane, double tau) {
    return std::sqrt(sigma_inplane * sigma_inplane + 3.0 * tau * tau);
}

inline double log_strain_of_stretch(double stretch) {
    if (!(stretch > 0)) throw ConfigError("stretch must be positive");
    return std::log(stretch);
}

struct MechanicalState {
    std::vector<double> sigma_vm;          // MPa
    std::vector<double> sigma_inplane;     // MPa, signed, tensile positive
    std::vector<double> sigma_shear;       // MPa, in-plane shear after return mapping
    std::vector<double> peeq;              // accumulated equivalent plastic strain
    std::vector<double> log_strain;
    std::vector<double> stress_free_temp;  // K, temperature at activation
    std::vector<double> plastic_inplane;   // in-plane plastic strain offset
    std::vector<std::uint8_t> initialized;

    bool operator==(const MechanicalState&) const = default;

    explicit MechanicalState(std::size_t n = 0)
        : sigma_vm(n, 0.0),
          sigma_inplane(n, 0.0),
          sigma_shear(n, 0.0),
          peeq(n, 0.0),
          log_strain(n, 0.0),
          stress_free_temp(n, 0.0),
          plastic_inplane(n, 0.0),
          initialized(n, 0) {}

    [[nodiscard]] std::size_t size() const { return sigma_vm.size(); }
};

/// Zero-stress state whose stress-free temperature is the current temperature
/// of every active voxel.
inline MechanicalState initial_mechanics(const ThermalState& thermal) {
    MechanicalState m(thermal.temperature.size());
    for (std::size_t v = 0; v < m.size(); ++v) {
        if (thermal.active[v]) {
            m.stress_free_temp[v] = thermal.temperature[v];
            m.initialized[v] = 1;
        }
    }
    return m;
}

/// Updates stresses of every active voxel from the current temperature.
/// tau (MPa) acts on voxels flagged in under_tool. Voxels activated since the
/// previous update take their current temperature as stress-free reference.
inline MechanicalState mechanical_update(MechanicalState mech, const ThermalState& thermal,
                                         const std::vector<std::uint8_t>& under_tool, double tau,
                                         const AlloyProperties& props) {
    const std::size_t n = thermal.temperature.size();
    if (mech.size() != n || under_tool.size() != n)
        throw ConfigError("mechanical and thermal states refer to different grids");
    const double nu = props.nu();
    for (std::size_t v = 0; v < n; ++v) {
        if (!thermal.active[v]) continue;
        const double t = thermal.temperature[v];
        if (!mech.initialized[v]) {
            mech.stress_free_temp[v] = t;
            mech.initialized[v] = 1;
        }
        const double e = props.e_mpa_at(t);
        const double thermal_strain = props.alpha_at(t) * (mech.stress_free_temp[v] - t);
        const double trial = e * (thermal_strain - mech.plastic_inplane[v]) / (1.0 - nu);
        const double shear = under_tool[v] ? tau : 0.0;
        const double vm_trial = von_mises(trial, shear);
        const double sy = yield_stress(t, props);

        if (vm_trial > sy) {
            mech.peeq[v] += (vm_trial - sy) / e;
            const double scale = sy / vm_trial;
            mech.sigma_inplane[v] = trial * scale;
            mech.sigma_shear[v] = shear * scale;
            mech.sigma_vm[v] = sy;
            mech.plastic_inplane[v] = thermal_strain - mech.sigma_inplane[v] * (1.0 - nu) / e;
        } else {
            mech.sigma_inplane[v] = trial;
            mech.sigma_shear[v] = shear;
            mech.sigma_vm[v] = vm_trial;
        }
        mech.log_strain[v] = std::log1p(std::abs(thermal_strain) + mech.peeq[v]);

        if (!std::isfinite(mech.sigma_vm[v]) || !std::isfinite(mech.log_strain[v]) || !std::isfinite(mech.peeq[v]))
            throw RuntimeFailure("mechanics diverged at voxel " + std::to_string(v));
    }
    return mech;
}

}  // namespace afsd
