#pragma once

#include <cmath>
#include <span>

#include "afsd/error.hpp"

namespace afsd::ml {

struct Metrics {
    double mse = 0.0;
    double rmse = 0.0;
    double mae = 0.0;
    double r2 = 0.0;
};

inline double mean_squared_error(std::span<const double> y_true, std::span<const double> y_pred) {
    if (y_true.empty() || y_true.size() != y_pred.size())
        throw ConfigError("metrics need equal, nonzero lengths");
    double sse = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const double e = y_pred[i] - y_true[i];
        sse += e * e;
    }
    return sse / static_cast<double>(y_true.size());
}

/// RMSE, MAE and the coefficient of determination. Throws on a constant y_true,
/// for which R^2 is undefined.
inline Metrics compute_metrics(std::span<const double> y_true, std::span<const double> y_pred) {
    if (y_true.empty() || y_true.size() != y_pred.size())
        throw ConfigError("metrics need equal, nonzero lengths");
    const auto n = static_cast<double>(y_true.size());
    double mean = 0.0;
    for (double v : y_true) mean += v;
    mean /= n;
    double sse = 0.0, sae = 0.0, sst = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const double e = y_pred[i] - y_true[i];
        sse += e * e;
        sae += std::abs(e);
        const double d = y_true[i] - mean;
        sst += d * d;
    }
    if (sst == 0.0) throw ConfigError("degenerate target: zero variance, R^2 undefined");
    Metrics m;
    m.mse = sse / n;
    m.rmse = std::sqrt(m.mse);
    m.mae = sae / n;
    m.r2 = 1.0 - sse / sst;
    return m;
}

}  // namespace afsd::ml
