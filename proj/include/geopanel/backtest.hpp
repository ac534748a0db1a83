#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "geopanel/core.hpp"
#include "geopanel/forecast.hpp"
#include "geopanel/ingest.hpp"

namespace geopanel::evaluation {

enum class SplitMode { tail_holdout, rolling_origin };

std::string_view to_string(SplitMode m);
SplitMode parse_split_mode(std::string_view text);

struct SplitSpec {
    SplitMode mode = SplitMode::tail_holdout;
    std::size_t horizon = 12;
    double holdout_fraction = 0.2;
    std::size_t n_origins = 3;
    std::optional<std::size_t> origin_stride;  // defaults to horizon

    void validate() const;
};

/// Train on rows [0, origin], test on (origin, origin + horizon].
struct Split {
    std::size_t origin;
    std::size_t horizon;
};

/// Origins in ascending order. Throws DataError when the panel cannot hold
/// the evaluated span within holdout_fraction of its rows, or when the first
/// origin leaves fewer than the minimum training rows after warm-up.
std::vector<Split> plan_splits(std::size_t rows, std::size_t warmup, const SplitSpec& spec);

struct OriginForecast {
    std::size_t origin;
    ForecastSet forecast;
    /// Held-out truth per station (panel order); NaN where the raw panel is missing.
    std::vector<std::vector<double>> observed;
};

struct BacktestResult {
    MetricReport report;
    std::vector<OriginForecast> origins;
    assembly::SelectionReport selection;  // from the last origin
};

/// Scores per-station and pooled metrics for each origin and averages them
/// (unweighted) across origins. Averaged RMSE is recomputed as sqrt of the
/// averaged MSE so RMSE^2 == MSE holds in every report.
MetricReport score_origins(const std::vector<std::string>& station_ids,
                           const std::vector<OriginForecast>& origins);

/// For each origin: impute the raw rows [0, origin] only, forecast `horizon`
/// steps recursively and score against the raw observed cells after origin.
BacktestResult backtest(const Panel& raw, const DistanceMatrix& distances,
                        const ingest::IngestConfig& ingest_config,
                        const forecasting::PipelineConfig& pipeline,
                        const forecasting::Backend& backend, const SplitSpec& split,
                        std::uint64_t seed, const std::string& config_digest = "");

}  // namespace geopanel::evaluation
