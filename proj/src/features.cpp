#include "geopanel/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace geopanel::features {

FeatureConfig FeatureConfig::defaults(Frequency f) {
    FeatureConfig c;
    c.temporal = temporal::TemporalFeatureConfig::defaults(f);
    return c;
}

void FeatureConfig::validate(std::size_t station_count) const {
    temporal.validate();
    regime.validate();
    spatial.validate(station_count);
}

FeatureFrame::FeatureFrame(std::vector<std::string> names, std::vector<std::size_t> first_valid,
                           std::vector<std::string> station_ids, std::size_t row_begin,
                           std::size_t row_end)
    : names_(std::move(names)),
      first_valid_(std::move(first_valid)),
      station_ids_(std::move(station_ids)),
      row_begin_(row_begin),
      row_end_(row_end) {
    if (names_.size() != first_valid_.size()) throw std::invalid_argument("first_valid size mismatch");
    if (row_end_ < row_begin_) throw std::invalid_argument("row range is reversed");
    values_.assign(station_ids_.size(),
                   std::vector<double>((row_end_ - row_begin_) * names_.size(),
                                       std::numeric_limits<double>::quiet_NaN()));
}

std::size_t FeatureFrame::warmup() const {
    std::size_t w = 0;
    for (auto f : first_valid_) w = std::max(w, f);
    return w;
}

double& FeatureFrame::at(std::size_t station, std::size_t t, std::size_t f) {
    return values_.at(station).at((t - row_begin_) * names_.size() + f);
}

double FeatureFrame::at(std::size_t station, std::size_t t, std::size_t f) const {
    return values_.at(station).at((t - row_begin_) * names_.size() + f);
}

std::size_t FeatureFrame::index_of(const std::string& name) const {
    for (std::size_t f = 0; f < names_.size(); ++f)
        if (names_[f] == name) return f;
    throw std::out_of_range("no feature named " + name);
}

void FeatureFrame::add_column(std::string name, std::size_t first_valid,
                              const std::vector<double>& values) {
    const std::size_t rows = row_end_ - row_begin_;
    if (values.size() != rows * station_ids_.size())
        throw std::invalid_argument("added column has wrong size");
    const std::size_t old_f = names_.size();
    for (std::size_t s = 0; s < station_ids_.size(); ++s) {
        std::vector<double> widened;
        widened.reserve(rows * (old_f + 1));
        for (std::size_t r = 0; r < rows; ++r) {
            widened.insert(widened.end(), values_[s].begin() + static_cast<std::ptrdiff_t>(r * old_f),
                           values_[s].begin() + static_cast<std::ptrdiff_t>((r + 1) * old_f));
            widened.push_back(values[s * rows + r]);
        }
        values_[s] = std::move(widened);
    }
    names_.push_back(std::move(name));
    first_valid_.push_back(first_valid);
}

namespace {

bool emits_trend(std::size_t w, int degree) { return w >= static_cast<std::size_t>(degree) + 2; }

std::vector<std::string> calendar_names(Frequency f) {
    switch (f) {
        case Frequency::hourly: return {"cal_hour", "cal_dow"};
        case Frequency::daily: return {"cal_dow", "cal_month"};
        case Frequency::monthly: return {"cal_month"};
    }
    return {};
}

double calendar_value(const std::string& name, Timestamp ts) {
    if (name == "cal_hour") return cyclic_unit(ts, Frequency::hourly);
    if (name == "cal_dow") return cyclic_unit(ts, Frequency::daily);
    return cyclic_unit(ts, Frequency::monthly);
}

struct Column {
    std::string name;
    std::size_t first_valid;
};

std::vector<Column> columns(Frequency f, const FeatureConfig& c) {
    std::vector<Column> out;
    const auto& tc = c.temporal;
    for (auto k : tc.lags) out.push_back({"lag_" + std::to_string(k), k});
    for (auto w : tc.windows) {
        const std::string sw = std::to_string(w);
        for (const char* stem : {"rollmean_", "rollstd_", "rollmin_", "rollmax_", "cv_", "iqr_",
                                 "cumsum_", "cumratio_"})
            out.push_back({stem + sw, w - 1});
        if (emits_trend(w, tc.trend_degree)) {
            out.push_back({"trend_slope_" + sw, w - 1});
            out.push_back({"trend_fit_" + sw, w - 1});
        }
        for (const char* stem : {"zscore_", "trend_dir_", "relpos_"}) out.push_back({stem + sw, w - 1});
    }
    out.push_back({"diff_1", 1});
    out.push_back({"diff_2", 2});
    for (double p : tc.seasonal_periods) {
        out.push_back({"sin_" + format_real(p), 0});
        out.push_back({"cos_" + format_real(p), 0});
    }
    out.push_back({"cyc_mean", 0});
    out.push_back({"cyc_std", 0});
    out.push_back({"cyc_anom", 0});
    out.push_back({"is_peak", 2});
    out.push_back({"steps_since_peak", 2});

    out.push_back({"var_ratio", c.regime.long_window - 1});
    for (const char* name : {"stage1_mean", "stage2_mean", "stage3_mean", "stage_change_12",
                             "stage_change_23", "stage_id"})
        out.push_back({name, 5});

    out.push_back({"dwavg", 0});
    for (std::size_t r = 1; r <= c.spatial.k_nearest; ++r) {
        out.push_back({"nn" + std::to_string(r) + "_val", 0});
        out.push_back({"nn" + std::to_string(r) + "_wval", 0});
    }
    out.push_back({"grad_nn1", c.spatial.gradient_window - 1});
    out.push_back({"grad_all", c.spatial.gradient_window - 1});
    if (f == Frequency::hourly) {
        out.push_back({"region_mean", 0});
        out.push_back({"region_std", 0});
        out.push_back({"sync_dev", 0});
    } else {
        for (auto w : c.spatial.cross_windows) {
            const std::string sw = std::to_string(w);
            out.push_back({"xmean_" + sw, w - 1});
            out.push_back({"xstd_" + sw, w - 1});
            out.push_back({"xcorr_" + sw, w - 1});
        }
    }
    if (c.calendar) {
        for (auto& name : calendar_names(f)) out.push_back({name, 0});
    }

    std::set<std::string> seen;
    for (const auto& col : out)
        if (!seen.insert(col.name).second)
            throw ConfigError("feature configuration produces duplicate column " + col.name);
    return out;
}

std::size_t peak_window(const temporal::TemporalFeatureConfig& c) {
    return *std::max_element(c.windows.begin(), c.windows.end());
}

}  // namespace

std::vector<std::string> feature_names(Frequency f, const FeatureConfig& config) {
    std::vector<std::string> names;
    for (auto& c : columns(f, config)) names.push_back(c.name);
    return names;
}

std::size_t warmup_rows(Frequency f, const FeatureConfig& config) {
    std::size_t w = 0;
    for (const auto& c : columns(f, config)) w = std::max(w, c.first_valid);
    return w;
}

spatial::SpatialContext make_context(const Panel& panel, const DistanceMatrix& distances,
                                     const spatial::SpatialConfig& config) {
    const double sigma = config.sigma.value_or(spatial::median_distance(distances));
    if (!(sigma > 0.0))
        throw DataError("kernel sigma resolved to 0 (coincident stations); set spatial.sigma");
    return spatial::SpatialContext(panel.station_ids(), distances,
                                   spatial::kernel_weights(distances, sigma, config.kernel));
}

FeatureFrame compute_features(const Panel& panel, const spatial::SpatialContext& ctx,
                              const FeatureConfig& config, std::size_t row_begin,
                              std::size_t row_end) {
    if (!panel.fully_observed()) throw DataError("features require a fully observed (imputed) panel");
    if (row_end > panel.rows() || row_begin > row_end) throw std::invalid_argument("bad feature row range");
    if (ctx.size() != panel.stations()) throw DataError("spatial context does not match panel");

    const Frequency freq = panel.frequency();
    const auto cols = columns(freq, config);
    std::vector<std::string> names;
    std::vector<std::size_t> first_valid;
    for (const auto& c : cols) {
        names.push_back(c.name);
        first_valid.push_back(c.first_valid);
    }
    FeatureFrame frame(names, first_valid, panel.station_ids(), row_begin, row_end);

    const auto& tc = config.temporal;
    const auto& rc = config.regime;
    const auto& sc = config.spatial;
    const double eps = tc.epsilon;
    const std::size_t pw = peak_window(tc);

    std::vector<int> units(row_end);
    for (std::size_t t = 0; t < row_end; ++t) units[t] = cyclic_unit(panel.timestamps()[t], freq);

    std::vector<double> cross(panel.stations());
    for (std::size_t t = row_begin; t < row_end; ++t) {
        for (std::size_t s = 0; s < panel.stations(); ++s) cross[s] = panel.value(t, s);
        for (std::size_t s = 0; s < panel.stations(); ++s) {
            const auto x = panel.series(s).first(t + 1);
            std::size_t f = 0;
            auto put = [&](double v) {
                frame.at(s, t, f) = v;
                ++f;
            };
            auto skip = [&](std::size_t n) { f += n; };
            auto ready = [&](std::size_t fv) { return t >= fv; };

            for (auto k : tc.lags) ready(k) ? put(temporal::lag(x, t, k)) : skip(1);
            for (auto w : tc.windows) {
                const bool trend = emits_trend(w, tc.trend_degree);
                if (!ready(w - 1)) {
                    skip(8 + (trend ? 2 : 0) + 3);
                    continue;
                }
                const auto rs = temporal::rolling_stats(x, t, w);
                put(rs.mean);
                put(rs.std);
                put(rs.min);
                put(rs.max);
                put(temporal::coeff_variation(x, t, w, eps));
                put(temporal::iqr(x, t, w));
                const auto cum = temporal::cumulative(x, t, w, eps);
                put(cum.sum);
                put(cum.ratio);
                if (trend) {
                    const auto tr = temporal::trend(x, t, w, tc.trend_degree);
                    put(tr.leading);
                    put(tr.fitted);
                }
                const auto dyn = temporal::window_dynamics(x, t, w, eps);
                put(dyn.zscore);
                put(dyn.trend_dir);
                put(dyn.relpos);
            }
            ready(1) ? put(temporal::diff1(x, t)) : skip(1);
            ready(2) ? put(temporal::diff2(x, t)) : skip(1);
            for (double p : tc.seasonal_periods) {
                const auto se = temporal::seasonal_encoding(t, p);
                put(se.sin);
                put(se.cos);
            }
            const auto cyc = temporal::cyclic_group_stats(x, units, t, eps);
            put(cyc.mean);
            put(cyc.std);
            put(cyc.anomaly);
            if (ready(2)) {
                const auto pk = temporal::peak_features(x, t, pw, tc.peak_percentile);
                put(pk.is_peak);
                put(pk.steps_since_peak);
            } else {
                skip(2);
            }

            ready(rc.long_window - 1)
                ? put(regime::variance_ratio(x, t, rc.short_window, rc.long_window, rc.epsilon))
                : skip(1);
            if (ready(5)) {
                const auto st = regime::stage_stats(x, t, rc.epsilon);
                put(st.means[0]);
                put(st.means[1]);
                put(st.means[2]);
                put(st.change_12);
                put(st.change_23);
                put(st.stage_id);
            } else {
                skip(6);
            }

            put(spatial::distance_weighted_average(cross, ctx, s));
            for (const auto& nv : spatial::nearest_station_values(cross, ctx, s, sc.k_nearest)) {
                put(nv.value);
                put(nv.weighted);
            }
            if (ready(sc.gradient_window - 1)) {
                const auto g = spatial::spatial_gradient(panel, ctx, s, t, sc.gradient_window);
                put(g.nn1);
                put(g.all);
            } else {
                skip(2);
            }
            if (freq == Frequency::hourly) {
                const auto sy = spatial::regional_synchronicity(cross, ctx, s, eps);
                put(sy.region_mean);
                put(sy.region_std);
                put(sy.sync_dev);
            } else {
                for (auto w : sc.cross_windows) {
                    if (!ready(w - 1)) {
                        skip(3);
                        continue;
                    }
                    const auto cs = spatial::cross_station_stats(panel, ctx, s, t, w);
                    put(cs.mean);
                    put(cs.std);
                    put(cs.corr);
                }
            }
            if (config.calendar) {
                for (const auto& name : calendar_names(freq))
                    put(calendar_value(name, panel.timestamps()[t]));
            }
            if (f != names.size()) throw std::logic_error("feature writer and schema disagree");
        }
    }
    return frame;
}

}  // namespace geopanel::features
