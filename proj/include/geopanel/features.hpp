#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "geopanel/core.hpp"
#include "geopanel/regime.hpp"
#include "geopanel/spatial.hpp"
#include "geopanel/temporal.hpp"

namespace geopanel::features {

struct FeatureConfig {
    temporal::TemporalFeatureConfig temporal;
    regime::RegimeConfig regime;
    spatial::SpatialConfig spatial;
    /// Calendar columns (hour/day-of-week/month) merged into the schema.
    bool calendar = true;

    static FeatureConfig defaults(Frequency f);
    void validate(std::size_t station_count) const;
};

/// Feature values for a contiguous block of rows [row_begin, row_end) of
/// every station. Feature f is defined for t >= first_valid[f]; cells below
/// that hold NaN and never reach a FeatureTable.
class FeatureFrame {
public:
    FeatureFrame(std::vector<std::string> names, std::vector<std::size_t> first_valid,
                 std::vector<std::string> station_ids, std::size_t row_begin, std::size_t row_end);

    const std::vector<std::string>& names() const noexcept { return names_; }
    const std::vector<std::size_t>& first_valid() const noexcept { return first_valid_; }
    const std::vector<std::string>& station_ids() const noexcept { return station_ids_; }
    std::size_t row_begin() const noexcept { return row_begin_; }
    std::size_t row_end() const noexcept { return row_end_; }
    std::size_t features() const noexcept { return names_.size(); }
    /// First row at which every feature is defined.
    std::size_t warmup() const;

    double& at(std::size_t station, std::size_t t, std::size_t f);
    double at(std::size_t station, std::size_t t, std::size_t f) const;
    std::size_t index_of(const std::string& name) const;

    /// Appends a column (values indexed by station then row).
    void add_column(std::string name, std::size_t first_valid, const std::vector<double>& values);

private:
    std::vector<std::string> names_;
    std::vector<std::size_t> first_valid_;
    std::vector<std::string> station_ids_;
    std::size_t row_begin_;
    std::size_t row_end_;
    // per station: (row_end - row_begin) x features, row-major
    std::vector<std::vector<double>> values_;
};

/// Computes every feature family for rows [row_begin, row_end) of a fully
/// observed panel. Values at row t depend on panel rows 0..t only.
FeatureFrame compute_features(const Panel& panel, const spatial::SpatialContext& ctx,
                              const FeatureConfig& config, std::size_t row_begin,
                              std::size_t row_end);

/// Schema emitted by compute_features for the given frequency.
std::vector<std::string> feature_names(Frequency f, const FeatureConfig& config);

/// First row at which every feature is defined.
std::size_t warmup_rows(Frequency f, const FeatureConfig& config);

/// Builds the spatial context (distances, kernel weights with resolved sigma).
spatial::SpatialContext make_context(const Panel& panel, const DistanceMatrix& distances,
                                     const spatial::SpatialConfig& config);

using FeatureFunction =
    std::function<FeatureFrame(const Panel&, std::size_t row_begin, std::size_t row_end)>;

}  // namespace geopanel::features
