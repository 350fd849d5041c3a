#pragma once

#include <array>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "afsd/config.hpp"
#include "afsd/deposition.hpp"
#include "afsd/materials.hpp"

namespace afsd::test {

inline AlloyProperties handbook(Alloy a = Alloy::AA2024) { return default_config().resolve(a); }

/// Small wall used by most simulation tests: 2 layers, short track.
inline Geometry small_geometry() {
    Geometry g;
    g.nx = 12;
    g.ny = 6;
    g.nz = 4;
    g.spacing = 2e-3;
    g.substrate_layers = 2;
    g.wall_layers = 2;
    g.wall_width = 2;
    g.wall_length = 8;
    g.traverse_speed = 8e-3;
    g.interlayer_dwell = 0.5;
    return g;
}

inline ProcessParameters small_process() {
    ProcessParameters p;
    p.tool_radius = 3e-3;
    p.end_dwell = 0.5;
    return p;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("afsd_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Minimal reader for the ASCII structured-points files the tool writes.
struct VtkFile {
    int nx = 0, ny = 0, nz = 0;
    std::map<std::string, std::vector<double>> scalars;
    std::map<std::string, std::vector<std::array<double, 3>>> vectors;
};

inline VtkFile read_vtk(const std::string& text) {
    VtkFile f;
    std::istringstream in(text);
    std::string word;
    std::size_t n = 0;
    while (in >> word) {
        if (word == "DIMENSIONS") {
            in >> f.nx >> f.ny >> f.nz;
        } else if (word == "POINT_DATA") {
            in >> n;
        } else if (word == "SCALARS") {
            std::string name, type, lookup, table;
            int comps = 0;
            in >> name >> type >> comps >> lookup >> table;
            auto& v = f.scalars[name];
            v.resize(n);
            for (auto& x : v) in >> x;
        } else if (word == "VECTORS") {
            std::string name, type;
            in >> name >> type;
            auto& v = f.vectors[name];
            v.resize(n);
            for (auto& x : v) in >> x[0] >> x[1] >> x[2];
        }
    }
    if (!in.eof()) throw std::runtime_error("vtk parse failure");
    return f;
}

/// Runs a shell command, returning its exit status.
inline int run(const std::string& cmd) {
    const int status = std::system(cmd.c_str());
    if (status == -1) return -1;
    return WIFEXITED(status) ? WEXITSTATUS(status) : 128;
}

}  // namespace afsd::test
