#include "geopanel/forecast.hpp"

#include <algorithm>
#include <map>
#include <memory>

namespace geopanel::forecasting {

PipelineConfig PipelineConfig::defaults(Frequency f) {
    PipelineConfig c;
    c.features = features::FeatureConfig::defaults(f);
    return c;
}

TrainingData prepare_training(const Panel& history, const DistanceMatrix& distances,
                              const PipelineConfig& config) {
    config.features.validate(history.stations());
    if (config.select) config.selection.validate();
    if (!history.fully_observed()) throw DataError("forecasting needs an imputed (fully observed) panel");

    auto ctx = features::make_context(history, distances, config.features.spatial);
    const auto frame = features::compute_features(history, ctx, config.features, 0, history.rows());
    const std::size_t warm = frame.warmup();
    if (history.rows() < warm + 1 + kMinTrainingRows)
        throw DataError("panel has " + std::to_string(history.rows()) + " rows; need at least " +
                        std::to_string(warm + 1 + kMinTrainingRows) + " (warm-up " +
                        std::to_string(warm) + " + " + std::to_string(kMinTrainingRows) +
                        " training rows + 1)");
    FeatureTable full = assembly::assemble(history, frame, 1);
    assembly::Selection selection =
        config.select ? assembly::select_features(full, config.selection)
                      : assembly::Selection{full, assembly::SelectionReport{full.schema(), {}, {}}};
    return TrainingData{std::move(ctx), std::move(full), std::move(selection)};
}

ForecastResult recursive_forecast(const Panel& history, const DistanceMatrix& distances,
                                  const PipelineConfig& config, const Backend& backend,
                                  std::size_t horizon, std::uint64_t seed,
                                  const std::string& config_digest) {
    if (horizon < 1) throw DataError("forecast horizon must be >= 1");
    TrainingData training = prepare_training(history, distances, config);
    const FeatureTable& train = training.selection.table;
    const auto& kept = training.selection.report.kept;

    std::unique_ptr<FittedModel> pooled;
    std::map<std::string, std::unique_ptr<FittedModel>> by_station;
    try {
        if (config.per_station) {
            std::map<std::string, std::vector<std::size_t>> rows;
            for (std::size_t r = 0; r < train.rows(); ++r) rows[train.keys()[r].station].push_back(r);
            for (const auto& [station, idx] : rows)
                by_station[station] = backend.fit(train.select_rows(idx), seed);
        } else {
            pooled = backend.fit(train, seed);
        }
    } catch (const BackendError&) {
        throw;
    } catch (const SchemaMismatch&) {
        throw;
    } catch (const DataError&) {
        throw;
    } catch (const std::exception& e) {
        throw BackendError(std::string("backend fit failed: ") + e.what(), 0);
    }

    std::map<std::string, std::size_t> column_of;
    for (std::size_t s = 0; s < history.stations(); ++s) column_of[history.station_ids()[s]] = s;

    Panel extended = history;
    std::vector<std::vector<double>> predicted(history.stations());
    std::vector<Timestamp> stamps;
    for (std::size_t step = 0; step < horizon; ++step) {
        const std::size_t t = extended.rows() - 1;
        std::vector<double> next(history.stations());
        try {
            const auto frame = features::compute_features(extended, training.context, config.features, t, t + 1);
            const FeatureTable query = assembly::frontier_rows(frame, t).select_columns(kept);
            std::vector<double> values;
            if (config.per_station) {
                for (std::size_t r = 0; r < query.rows(); ++r) {
                    const auto it = by_station.find(query.keys()[r].station);
                    if (it == by_station.end())
                        throw BackendError("no model fitted for station " + query.keys()[r].station);
                    values.push_back(it->second->predict(query.select_rows({r})).front());
                }
            } else {
                values = pooled->predict(query);
            }
            for (std::size_t r = 0; r < query.rows(); ++r)
                next.at(column_of.at(query.keys()[r].station)) = values[r];
        } catch (const BackendError& e) {
            throw BackendError(std::string(e.what()) + " (after " + std::to_string(step) + " completed steps)",
                               step);
        } catch (const SchemaMismatch&) {
            throw;
        } catch (const std::exception& e) {
            throw BackendError(std::string("forecast step failed: ") + e.what() + " (after " +
                                   std::to_string(step) + " completed steps)",
                               step);
        }
        for (std::size_t s = 0; s < next.size(); ++s) predicted[s].push_back(next[s]);
        extended = extended.with_row(next);
        stamps.push_back(extended.timestamps().back());
    }

    std::vector<StationForecast> stations;
    for (std::size_t s = 0; s < history.stations(); ++s)
        stations.push_back({history.station_ids()[s], std::move(predicted[s])});
    return ForecastResult{ForecastSet(horizon, backend.id(), config_digest, std::move(stamps), std::move(stations)),
                          training.selection.report};
}

}  // namespace geopanel::forecasting
