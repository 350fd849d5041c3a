#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "afsd/error.hpp"

namespace afsd {

inline constexpr double kKelvinOffset = 273.15;

enum class Alloy { AA2024, AA5083, AA5086, AA7075, AA6061 };

inline constexpr std::array<Alloy, 5> kAllAlloys = {Alloy::AA2024, Alloy::AA5083, Alloy::AA5086,
                                                     Alloy::AA7075, Alloy::AA6061};

inline std::string_view to_string(Alloy a) {
    switch (a) {
        case Alloy::AA2024: return "AA2024";
        case Alloy::AA5083: return "AA5083";
        case Alloy::AA5086: return "AA5086";
        case Alloy::AA7075: return "AA7075";
        case Alloy::AA6061: return "AA6061";
    }
    return "?";
}

inline Alloy parse_alloy(std::string_view name) {
    for (auto a : kAllAlloys)
        if (to_string(a) == name) return a;
    std::string valid;
    for (auto a : kAllAlloys) {
        if (!valid.empty()) valid += ", ";
        valid += to_string(a);
    }
    throw ConfigError("unknown alloy '" + std::string(name) + "' (valid: " + valid + ")");
}

/// Material constants for one alloy. Temperatures in degrees Celsius.
///
/// Elastic modulus, density and specific heat come from the built-in table;
/// the remaining constants have no tabulated source and must be supplied
/// through an overlay before the record can drive a simulation.
struct AlloyProperties {
    Alloy name = Alloy::AA2024;
    double elastic_modulus = 0.0;  // GPa
    double density = 0.0;          // g/cm^3
    double specific_heat = 0.0;    // J/(kg K)
    std::optional<double> thermal_conductivity;  // W/(m K)
    std::optional<double> cte;                   // 1/K
    std::optional<double> poisson_ratio;
    std::optional<double> yield_stress_ref;  // MPa at reference_temp
    std::optional<double> solidus_temp;      // C
    double reference_temp = 25.0;            // C

    /// Optional linear temperature coefficients, relative change per kelvin
    /// away from reference_temp. Empty means constant properties.
    std::map<std::string, double> temperature_coefficients;

    bool operator==(const AlloyProperties&) const = default;

    [[nodiscard]] std::vector<std::string> missing_fields() const {
        std::vector<std::string> out;
        if (!thermal_conductivity) out.emplace_back("thermal_conductivity");
        if (!cte) out.emplace_back("cte");
        if (!poisson_ratio) out.emplace_back("poisson_ratio");
        if (!yield_stress_ref) out.emplace_back("yield_stress_ref");
        if (!solidus_temp) out.emplace_back("solidus_temp");
        return out;
    }
    [[nodiscard]] bool complete() const { return missing_fields().empty(); }

    // Accessors for complete records; throw when a constant is unset.
    [[nodiscard]] double k() const { return require(thermal_conductivity, "thermal_conductivity"); }
    [[nodiscard]] double alpha() const { return require(cte, "cte"); }
    [[nodiscard]] double nu() const { return require(poisson_ratio, "poisson_ratio"); }
    [[nodiscard]] double sigma_y_ref() const { return require(yield_stress_ref, "yield_stress_ref"); }
    [[nodiscard]] double solidus() const { return require(solidus_temp, "solidus_temp"); }

    [[nodiscard]] double density_si() const { return density * 1000.0; }          // kg/m^3
    [[nodiscard]] double elastic_modulus_mpa() const { return elastic_modulus * 1000.0; }

    /// base * (1 + c * (T - T_ref)), floored at 1% of base. T in kelvin.
    [[nodiscard]] double scaled(std::string_view field, double base, double temp_k) const {
        auto it = temperature_coefficients.find(std::string(field));
        if (it == temperature_coefficients.end() || it->second == 0.0) return base;
        const double f = 1.0 + it->second * (temp_k - (reference_temp + kKelvinOffset));
        return base * std::max(f, 0.01);
    }
    [[nodiscard]] double k_at(double temp_k) const { return scaled("thermal_conductivity", k(), temp_k); }
    [[nodiscard]] double cp_at(double temp_k) const { return scaled("specific_heat", specific_heat, temp_k); }
    [[nodiscard]] double e_mpa_at(double temp_k) const {
        return scaled("elastic_modulus", elastic_modulus_mpa(), temp_k);
    }
    [[nodiscard]] double alpha_at(double temp_k) const { return scaled("cte", alpha(), temp_k); }

    [[nodiscard]] bool temperature_dependent() const {
        return std::any_of(temperature_coefficients.begin(), temperature_coefficients.end(),
                           [](const auto& kv) { return kv.second != 0.0; });
    }

private:
    static double require(const std::optional<double>& v, const char* field) {
        if (!v) throw ConfigError(std::string("missing field: ") + field);
        return *v;
    }
};

/// Table values for elastic modulus, density and specific heat.
inline AlloyProperties builtin_alloy(Alloy name) {
    AlloyProperties p;
    p.name = name;
    switch (name) {
        case Alloy::AA2024: p.elastic_modulus = 73.1; p.density = 2.78; p.specific_heat = 875; break;
        case Alloy::AA5083: p.elastic_modulus = 72.0; p.density = 2.66; p.specific_heat = 880; break;
        case Alloy::AA5086: p.elastic_modulus = 70.0; p.density = 2.66; p.specific_heat = 880; break;
        case Alloy::AA7075: p.elastic_modulus = 71.7; p.density = 2.81; p.specific_heat = 960; break;
        case Alloy::AA6061: p.elastic_modulus = 68.9; p.density = 2.70; p.specific_heat = 896; break;
    }
    return p;
}

inline AlloyProperties builtin_alloy(std::string_view name) { return builtin_alloy(parse_alloy(name)); }

/// Partial property map applied on top of a base record.
struct PropertyOverlay {
    std::map<std::string, double> values;
    std::map<std::string, double> temperature_coefficients;

    bool operator==(const PropertyOverlay&) const = default;
};

inline constexpr std::array<std::string_view, 4> kTemperatureDependentFields = {
    "elastic_modulus", "specific_heat", "thermal_conductivity", "cte"};

/// Applies overlay to base and validates the result. The result must be complete.
inline AlloyProperties with_overrides(const AlloyProperties& base, const PropertyOverlay& overlay) {
    AlloyProperties out = base;
    for (const auto& [key, value] : overlay.values) {
        if (!std::isfinite(value)) throw ConfigError(key + " must be finite");
        if (key == "elastic_modulus") out.elastic_modulus = value;
        else if (key == "density") out.density = value;
        else if (key == "specific_heat") out.specific_heat = value;
        else if (key == "thermal_conductivity") out.thermal_conductivity = value;
        else if (key == "cte") out.cte = value;
        else if (key == "poisson_ratio") out.poisson_ratio = value;
        else if (key == "yield_stress_ref") out.yield_stress_ref = value;
        else if (key == "solidus_temp") out.solidus_temp = value;
        else if (key == "reference_temp") out.reference_temp = value;
        else throw ConfigError("unknown property field: " + key);

        if (key == "poisson_ratio") {
            if (!(value > 0.0 && value < 0.5)) throw ConfigError("poisson_ratio out of range (0, 0.5)");
        } else if (key != "reference_temp" && !(value > 0.0)) {
            throw ConfigError(key + " must be strictly positive");
        }
    }
    for (const auto& [key, c] : overlay.temperature_coefficients) {
        if (std::find(kTemperatureDependentFields.begin(), kTemperatureDependentFields.end(), key) ==
            kTemperatureDependentFields.end())
            throw ConfigError("temperature coefficient not supported for field: " + key);
        if (!std::isfinite(c)) throw ConfigError("temperature coefficient for " + key + " must be finite");
        out.temperature_coefficients[key] = c;
    }

    if (const auto missing = out.missing_fields(); !missing.empty()) {
        std::string msg = "missing field: ";
        for (std::size_t i = 0; i < missing.size(); ++i) msg += (i ? ", " : "") + missing[i];
        throw ConfigError(msg);
    }
    if (!(out.elastic_modulus > 0 && out.density > 0 && out.specific_heat > 0))
        throw ConfigError("tabulated properties must be strictly positive");
    if (!(*out.solidus_temp > out.reference_temp))
        throw ConfigError("solidus_temp must exceed reference_temp");
    return out;
}

}  // namespace afsd
