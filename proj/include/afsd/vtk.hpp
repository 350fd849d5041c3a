#pragma once

// Legacy VTK (ASCII, STRUCTURED_POINTS) writer. Voxel values are written as
// point data in x-fastest order, one value or vector per line.

#include <array>
#include <string>
#include <vector>

#include "afsd/dataset.hpp"
#include "afsd/deposition.hpp"
#include "afsd/error.hpp"
#include "afsd/simulation.hpp"

namespace afsd::vtk {

struct ScalarField {
    std::string name;
    std::vector<double> values;
};

struct VectorField {
    std::string name;
    std::vector<std::array<double, 3>> values;
};

struct Grid {
    int nx = 0, ny = 0, nz = 0;
    double spacing = 1.0;
};

inline std::string write_structured_points(const Grid& grid, const std::vector<ScalarField>& scalars,
                                           const std::vector<VectorField>& vectors,
                                           const std::string& title = "afsd fields") {
    const auto n = static_cast<std::size_t>(grid.nx) * static_cast<std::size_t>(grid.ny) *
                   static_cast<std::size_t>(grid.nz);
    for (const auto& f : scalars)
        if (f.values.size() != n) throw ConfigError("dimension mismatch in field " + f.name);
    for (const auto& f : vectors)
        if (f.values.size() != n) throw ConfigError("dimension mismatch in field " + f.name);

    const auto num = [](double v) { return format_number(v == 0.0 ? 0.0 : v); };  // no "-0"
    std::string out;
    out += "# vtk DataFile Version 3.0\n";
    out += title + "\n";
    out += "ASCII\n";
    out += "DATASET STRUCTURED_POINTS\n";
    out += "DIMENSIONS " + std::to_string(grid.nx) + " " + std::to_string(grid.ny) + " " + std::to_string(grid.nz) + "\n";
    // voxel centres
    const std::string half = num(0.5 * grid.spacing);
    out += "ORIGIN " + half + " " + half + " " + half + "\n";
    const std::string h = num(grid.spacing);
    out += "SPACING " + h + " " + h + " " + h + "\n";
    out += "POINT_DATA " + std::to_string(n) + "\n";
    for (const auto& f : scalars) {
        out += "SCALARS " + f.name + " double 1\nLOOKUP_TABLE default\n";
        for (double v : f.values) out += num(v) + "\n";
    }
    for (const auto& f : vectors) {
        out += "VECTORS " + f.name + " double\n";
        for (const auto& v : f.values) out += num(v[0]) + " " + num(v[1]) + " " + num(v[2]) + "\n";
    }
    return out;
}

/// Fields exported for a simulation: T [K], ACTIVE, GRADT [K/m], SIGMA_VM [MPa],
/// LE, PEEQ and the HFL vector [W/m^2].
inline std::string export_fields(const FieldState& f, const DepositionModel& m) {
    std::vector<double> active(f.active.begin(), f.active.end());
    return write_structured_points({m.nx, m.ny, m.nz, m.spacing},
                                   {{"T", f.temperature},
                                    {"ACTIVE", active},
                                    {"GRADT", f.gradt},
                                    {"SIGMA_VM", f.sigma_vm},
                                    {"LE", f.log_strain},
                                    {"PEEQ", f.peeq}},
                                   {{"HFL", f.heat_flux}});
}

}  // namespace afsd::vtk
