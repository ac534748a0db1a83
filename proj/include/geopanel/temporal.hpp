#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "geopanel/core.hpp"

/// Per-station temporal features. Every function evaluates a single time
/// index `t` and reads only `x[0..t]`, so a column built from these is causal
/// by construction. Windows are trailing and include `t`; standard
/// deviations are population (divide by n).
namespace geopanel::temporal {

struct TemporalFeatureConfig {
    std::vector<std::size_t> lags;
    std::vector<std::size_t> windows;
    double epsilon = 1e-8;
    int trend_degree = 1;
    double peak_percentile = 70.0;
    std::vector<double> seasonal_periods;

    static TemporalFeatureConfig defaults(Frequency f);
    void validate() const;
};

struct WindowStats {
    double mean;
    double std;
    double min;
    double max;
    double var;
};

double lag(std::span<const double> x, std::size_t t, std::size_t k);

/// Mean and population standard deviation of a sample. The mean is
/// accumulated as offsets from the first element so a constant sample has
/// zero deviation exactly.
WindowStats describe(std::span<const double> values);
WindowStats rolling_stats(std::span<const double> x, std::size_t t, std::size_t w);

double diff1(std::span<const double> x, std::size_t t);
double diff2(std::span<const double> x, std::size_t t);

double coeff_variation(std::span<const double> x, std::size_t t, std::size_t w, double epsilon);

/// p-th percentile (0..100) by linear interpolation between order
/// statistics at zero-based position p(n-1)/100.
double percentile(std::span<const double> values, double p);
double iqr(std::span<const double> x, std::size_t t, std::size_t w);

struct Cumulative {
    double sum;
    double ratio;
};
Cumulative cumulative(std::span<const double> x, std::size_t t, std::size_t w, double epsilon);

struct Seasonal {
    double sin;
    double cos;
};
Seasonal seasonal_encoding(std::size_t t, double period);

struct Trend {
    double leading;  // slope for degree 1, quadratic coefficient for degree 2
    double fitted;   // fitted value at the window's last position
};
Trend trend(std::span<const double> x, std::size_t t, std::size_t w, int degree);

struct CyclicStats {
    double mean;
    double std;
    double anomaly;
};
/// Expanding statistics over earlier rows sharing `units[t]`.
CyclicStats cyclic_group_stats(std::span<const double> x, std::span<const int> units,
                               std::size_t t, double epsilon);

/// True when j is a local maximum (strict on the left) above the q-th
/// percentile of the trailing window ending at j. Reads x[j+1].
bool is_peak(std::span<const double> x, std::size_t j, std::size_t w, double q);

struct PeakFeatures {
    double is_peak;          // 1 when t-1 is a peak
    double steps_since_peak;  // capped at w
};
PeakFeatures peak_features(std::span<const double> x, std::size_t t, std::size_t w, double q);

struct WindowDynamics {
    double zscore;
    double trend_dir;
    double relpos;
};
WindowDynamics window_dynamics(std::span<const double> x, std::size_t t, std::size_t w,
                               double epsilon);

}  // namespace geopanel::temporal
