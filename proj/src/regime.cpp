#include "geopanel/regime.hpp"

#include <cmath>
#include <stdexcept>

#include "geopanel/temporal.hpp"

namespace geopanel::regime {

void RegimeConfig::validate() const {
    if (short_window < 2) throw ConfigError("regime.short_window must be >= 2");
    if (short_window >= long_window)
        throw ConfigError("regime.short_window must be smaller than regime.long_window");
    if (!(epsilon > 0.0)) throw ConfigError("regime.epsilon must be > 0");
}

double variance_ratio(std::span<const double> x, std::size_t t, std::size_t short_window,
                      std::size_t long_window, double epsilon) {
    if (short_window >= long_window) throw std::invalid_argument("short window must be < long window");
    if (t >= x.size() || t + 1 < long_window)
        throw std::invalid_argument("variance ratio needs t >= long_window - 1");
    const auto s = temporal::describe(x.subspan(t + 1 - short_window, short_window)).var;
    const auto l = temporal::describe(x.subspan(t + 1 - long_window, long_window)).var;
    return s / (l + epsilon);
}

std::array<std::size_t, 3> stage_lengths(std::size_t n) {
    const std::size_t base = n / 3;
    const std::size_t extra = n % 3;
    return {base + (extra > 0 ? 1 : 0), base + (extra > 1 ? 1 : 0), base};
}

StageStats stage_stats(std::span<const double> x, std::size_t t, double epsilon) {
    if (t < 5 || t >= x.size()) throw std::invalid_argument("stage statistics need t >= 5");
    const auto lengths = stage_lengths(t + 1);
    StageStats out{};
    std::size_t start = 0;
    for (std::size_t k = 0; k < 3; ++k) {
        out.means[k] = temporal::describe(x.subspan(start, lengths[k])).mean;
        start += lengths[k];
    }
    out.change_12 = (out.means[1] - out.means[0]) / (std::abs(out.means[0]) + epsilon);
    out.change_23 = (out.means[2] - out.means[1]) / (std::abs(out.means[1]) + epsilon);
    out.stage_id = 3.0;
    return out;
}

}  // namespace geopanel::regime
