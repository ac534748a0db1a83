#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "geopanel/assembly.hpp"
#include "geopanel/backends.hpp"
#include "geopanel/core.hpp"
#include "geopanel/features.hpp"
#include "geopanel/spatial.hpp"

namespace geopanel::forecasting {

struct PipelineConfig {
    features::FeatureConfig features;
    assembly::SelectionConfig selection;
    bool select = true;
    /// Independent model per station instead of one pooled model.
    bool per_station = false;

    static PipelineConfig defaults(Frequency f);
};

/// Minimum training rows per station required before fitting.
inline constexpr std::size_t kMinTrainingRows = 30;

struct TrainingData {
    spatial::SpatialContext context;
    FeatureTable full;           // every assembled column
    assembly::Selection selection;  // selected columns (full copy when selection is off)
};

/// Features, one-step-ahead training table and column selection for a fully
/// observed history.
TrainingData prepare_training(const Panel& history, const DistanceMatrix& distances,
                              const PipelineConfig& config);

struct ForecastResult {
    ForecastSet forecast;
    assembly::SelectionReport selection;
};

/// Fits once on the history, then advances all stations jointly one step at
/// a time: features at each new frontier are computed from the history
/// extended with the previous steps' predictions.
ForecastResult recursive_forecast(const Panel& history, const DistanceMatrix& distances,
                                  const PipelineConfig& config, const Backend& backend,
                                  std::size_t horizon, std::uint64_t seed,
                                  const std::string& config_digest = "");

}  // namespace geopanel::forecasting
