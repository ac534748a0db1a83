#include "geopanel/temporal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace geopanel::temporal {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

std::span<const double> window_of(std::span<const double> x, std::size_t t, std::size_t w) {
    require(w >= 1, "window must be positive");
    require(t < x.size(), "time index beyond series");
    require(t + 1 >= w, "window not yet defined at this index (t < w-1)");
    return x.subspan(t + 1 - w, w);
}

}  // namespace

TemporalFeatureConfig TemporalFeatureConfig::defaults(Frequency f) {
    TemporalFeatureConfig c;
    switch (f) {
        case Frequency::hourly:
            c.lags = {1, 2, 3, 7};
            c.windows = {6, 12, 24};
            c.seasonal_periods = {24.0, 168.0};
            break;
        case Frequency::daily:
            c.lags = {1, 2, 3, 7};
            c.windows = {3, 7, 14};
            c.seasonal_periods = {7.0, 365.25};
            break;
        case Frequency::monthly:
            c.lags = {1, 2, 3, 12};
            c.windows = {3, 6, 12};
            c.seasonal_periods = {12.0};
            break;
    }
    return c;
}

void TemporalFeatureConfig::validate() const {
    if (lags.empty()) throw ConfigError("temporal.lags must not be empty");
    for (auto k : lags)
        if (k < 1) throw ConfigError("temporal.lags entries must be >= 1");
    if (windows.empty()) throw ConfigError("temporal.windows must not be empty");
    for (auto w : windows)
        if (w < 2) throw ConfigError("temporal.windows entries must be >= 2");
    if (!(epsilon > 0.0)) throw ConfigError("temporal.epsilon must be > 0");
    if (trend_degree != 1 && trend_degree != 2) throw ConfigError("temporal.trend_degree must be 1 or 2");
    if (!(peak_percentile > 0.0 && peak_percentile < 100.0))
        throw ConfigError("temporal.peak_percentile must be in (0, 100)");
    for (double p : seasonal_periods)
        if (!(p > 0.0) || !std::isfinite(p)) throw ConfigError("temporal.seasonal_periods must be > 0");
}

double lag(std::span<const double> x, std::size_t t, std::size_t k) {
    require(k >= 1, "lag must be >= 1");
    require(t < x.size() && t >= k, "lag not defined at this index");
    return x[t - k];
}

WindowStats describe(std::span<const double> v) {
    require(!v.empty(), "empty sample");
    const double x0 = v[0];
    double offset = 0.0;
    double lo = v[0];
    double hi = v[0];
    for (double e : v) {
        offset += e - x0;
        lo = std::min(lo, e);
        hi = std::max(hi, e);
    }
    const double n = static_cast<double>(v.size());
    const double mean = x0 + offset / n;
    double ss = 0.0;
    for (double e : v) ss += (e - mean) * (e - mean);
    return WindowStats{mean, std::sqrt(ss / n), lo, hi, ss / n};
}

WindowStats rolling_stats(std::span<const double> x, std::size_t t, std::size_t w) {
    require(w >= 2, "rolling window must be >= 2");
    return describe(window_of(x, t, w));
}

double diff1(std::span<const double> x, std::size_t t) {
    require(t >= 1 && t < x.size(), "diff_1 needs t >= 1");
    return x[t] - x[t - 1];
}

double diff2(std::span<const double> x, std::size_t t) {
    require(t >= 2 && t < x.size(), "diff_2 needs t >= 2");
    return (x[t] - x[t - 1]) - (x[t - 1] - x[t - 2]);
}

double coeff_variation(std::span<const double> x, std::size_t t, std::size_t w, double epsilon) {
    const WindowStats s = describe(window_of(x, t, w));
    return s.std / (s.mean + epsilon);
}

double percentile(std::span<const double> values, double p) {
    require(!values.empty(), "percentile of empty sample");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double pos = p * static_cast<double>(sorted.size() - 1) / 100.0;
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

double iqr(std::span<const double> x, std::size_t t, std::size_t w) {
    const auto win = window_of(x, t, w);
    return percentile(win, 75.0) - percentile(win, 25.0);
}

Cumulative cumulative(std::span<const double> x, std::size_t t, std::size_t w, double epsilon) {
    const auto win = window_of(x, t, w);
    double sum = 0.0;
    for (double v : win) sum += v;
    return Cumulative{sum, x[t] / (sum + epsilon)};
}

Seasonal seasonal_encoding(std::size_t t, double period) {
    require(period > 0.0, "seasonal period must be > 0");
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(t) / period;
    return Seasonal{std::sin(angle), std::cos(angle)};
}

Trend trend(std::span<const double> x, std::size_t t, std::size_t w, int degree) {
    require(degree == 1 || degree == 2, "trend degree must be 1 or 2");
    require(w >= static_cast<std::size_t>(degree) + 2, "trend window must be >= degree + 2");
    const auto win = window_of(x, t, w);
    const double centre = static_cast<double>(w - 1) / 2.0;
    const double last = static_cast<double>(w - 1) - centre;

    if (degree == 1) {
        const double mean = describe(win).mean;
        double sxy = 0.0;
        double sxx = 0.0;
        for (std::size_t i = 0; i < w; ++i) {
            const double u = static_cast<double>(i) - centre;
            sxy += u * (win[i] - mean);
            sxx += u * u;
        }
        const double slope = sxy / sxx;
        return Trend{slope, mean + slope * last};
    }

    Eigen::MatrixXd design(static_cast<Eigen::Index>(w), 3);
    Eigen::VectorXd y(static_cast<Eigen::Index>(w));
    for (std::size_t i = 0; i < w; ++i) {
        const double u = static_cast<double>(i) - centre;
        const auto r = static_cast<Eigen::Index>(i);
        design(r, 0) = 1.0;
        design(r, 1) = u;
        design(r, 2) = u * u;
        y(r) = win[i];
    }
    const Eigen::Vector3d c = design.colPivHouseholderQr().solve(y);
    return Trend{c(2), c(0) + c(1) * last + c(2) * last * last};
}

CyclicStats cyclic_group_stats(std::span<const double> x, std::span<const int> units,
                               std::size_t t, double epsilon) {
    require(t < x.size() && t < units.size(), "time index beyond series");
    std::vector<double> prior;
    for (std::size_t j = 0; j < t; ++j)
        if (units[j] == units[t]) prior.push_back(x[j]);
    if (prior.size() < 2) return CyclicStats{x[t], 0.0, 0.0};
    const WindowStats s = describe(prior);
    return CyclicStats{s.mean, s.std, (x[t] - s.mean) / (s.std + epsilon)};
}

bool is_peak(std::span<const double> x, std::size_t j, std::size_t w, double q) {
    require(j >= 1 && j + 1 < x.size(), "peak needs both neighbors");
    if (!(x[j - 1] < x[j] && x[j] >= x[j + 1])) return false;
    const std::size_t start = j + 1 >= w ? j + 1 - w : 0;
    return x[j] > percentile(x.subspan(start, j - start + 1), q);
}

PeakFeatures peak_features(std::span<const double> x, std::size_t t, std::size_t w, double q) {
    require(t >= 2 && t < x.size(), "peak features need t >= 2");
    require(w >= 2, "peak window must be >= 2");
    const auto history = x.first(t + 1);
    const bool latest = is_peak(history, t - 1, w, q);
    double steps = static_cast<double>(w);
    const std::size_t lowest = t + 1 > w ? std::max<std::size_t>(1, t + 1 - w) : 1;
    for (std::size_t j = t - 1; j >= lowest; --j) {
        if (is_peak(history, j, w, q)) {
            steps = static_cast<double>(t - j);
            break;
        }
        if (j == lowest) break;
    }
    return PeakFeatures{latest ? 1.0 : 0.0, steps};
}

WindowDynamics window_dynamics(std::span<const double> x, std::size_t t, std::size_t w,
                               double epsilon) {
    const WindowStats now = rolling_stats(x, t, w);
    double dir = 0.0;
    if (t >= w) {
        const double before = rolling_stats(x, t - 1, w).mean;
        dir = now.mean > before ? 1.0 : (now.mean < before ? -1.0 : 0.0);
    }
    return WindowDynamics{(x[t] - now.mean) / (now.std + epsilon), dir,
                          (x[t] - now.min) / (now.max - now.min + epsilon)};
}

}  // namespace geopanel::temporal
