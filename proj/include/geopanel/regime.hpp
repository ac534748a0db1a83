#pragma once

#include <array>
#include <cstddef>
#include <span>

#include "geopanel/core.hpp"

namespace geopanel::regime {

struct RegimeConfig {
    std::size_t short_window = 5;
    std::size_t long_window = 20;
    double epsilon = 1e-8;

    void validate() const;
};

/// Population variance of the short trailing window over that of the long one.
double variance_ratio(std::span<const double> x, std::size_t t, std::size_t short_window,
                      std::size_t long_window, double epsilon);

/// Lengths of three contiguous segments covering n points; lengths differ by
/// at most one and earlier segments take the remainder.
std::array<std::size_t, 3> stage_lengths(std::size_t n);

struct StageStats {
    std::array<double, 3> means;
    double change_12;
    double change_23;
    double stage_id;
};

/// Stage statistics over the history x[0..t], t >= 5.
StageStats stage_stats(std::span<const double> x, std::size_t t, double epsilon);

}  // namespace geopanel::regime
