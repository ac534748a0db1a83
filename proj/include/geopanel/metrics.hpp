#pragma once

#include <optional>
#include <span>
#include <string>

#include "geopanel/core.hpp"

namespace geopanel::evaluation {

double mse(std::span<const double> y, std::span<const double> yhat);
double rmse(std::span<const double> y, std::span<const double> yhat);
double mae(std::span<const double> y, std::span<const double> yhat);

/// A metric value, or the reason it is undefined for this sample.
struct Refusable {
    std::optional<double> value;
    std::string refusal;
};

/// Percent. Refused when any |y| <= zero_tol.
Refusable mape(std::span<const double> y, std::span<const double> yhat, double zero_tol = 1e-9);

struct KgeResult {
    std::optional<double> kge;
    std::optional<double> r;
    std::optional<double> beta;
    std::optional<double> gamma;
    std::string refusal;
};

/// Kling-Gupta efficiency with population moments. Refused for fewer than
/// two points, zero variance or zero mean on either side.
KgeResult kge(std::span<const double> y, std::span<const double> yhat);

/// Every metric whose preconditions hold; refusals recorded otherwise.
Metrics score(std::span<const double> y, std::span<const double> yhat);

}  // namespace geopanel::evaluation
