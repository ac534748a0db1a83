#include "geopanel/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "geopanel/metrics.hpp"

namespace geopanel::evaluation {

std::string_view to_string(SplitMode m) {
    return m == SplitMode::rolling_origin ? "rolling_origin" : "tail_holdout";
}

SplitMode parse_split_mode(std::string_view text) {
    if (text == "tail_holdout") return SplitMode::tail_holdout;
    if (text == "rolling_origin") return SplitMode::rolling_origin;
    throw ConfigError("unknown split mode '" + std::string(text) + "'");
}

void SplitSpec::validate() const {
    if (horizon < 1) throw ConfigError("split.horizon must be >= 1");
    if (!(holdout_fraction > 0.0 && holdout_fraction <= 0.5))
        throw ConfigError("split.holdout_fraction must be in (0, 0.5]");
    if (n_origins < 1) throw ConfigError("split.n_origins must be >= 1");
    if (origin_stride && *origin_stride < 1) throw ConfigError("split.origin_stride must be >= 1");
}

std::vector<Split> plan_splits(std::size_t rows, std::size_t warmup, const SplitSpec& spec) {
    spec.validate();
    const std::size_t h = spec.horizon;
    const std::size_t stride = spec.origin_stride.value_or(h);
    const std::size_t n = spec.mode == SplitMode::tail_holdout ? 1 : spec.n_origins;
    const std::size_t back = (n - 1) * stride;
    if (rows < h + 1 + back) throw DataError("infeasible split: panel too short for the requested horizon/origins");
    const std::size_t last = rows - h - 1;
    const std::size_t first = last - back;
    const std::size_t span = back + h;
    if (static_cast<double>(span) > spec.holdout_fraction * static_cast<double>(rows))
        throw DataError("infeasible split: evaluated span of " + std::to_string(span) + " rows exceeds " +
                        "holdout_fraction " + format_real(spec.holdout_fraction) + " of " +
                        std::to_string(rows) + " rows");
    if (first < warmup + forecasting::kMinTrainingRows)
        throw DataError("infeasible split: first origin leaves " +
                        std::to_string(first > warmup ? first - warmup : 0) + " training rows (need " +
                        std::to_string(forecasting::kMinTrainingRows) + " after warm-up " +
                        std::to_string(warmup) + ")");
    std::vector<Split> out;
    for (std::size_t k = 0; k < n; ++k) out.push_back(Split{first + k * stride, h});
    return out;
}

namespace {

struct Sample {
    std::vector<double> y;
    std::vector<double> yhat;
};

Metrics average(const std::vector<Metrics>& items) {
    Metrics out;
    const double k = static_cast<double>(items.size());
    double mse_sum = 0.0, mae_sum = 0.0;
    for (const auto& m : items) {
        out.n += m.n;
        mse_sum += m.mse;
        mae_sum += m.mae;
    }
    out.mse = mse_sum / k;
    out.rmse = std::sqrt(out.mse);
    out.mae = mae_sum / k;

    auto mean_of = [&](auto field, const std::string& refusal_of_first, std::string& refusal_out)
        -> std::optional<double> {
        double acc = 0.0;
        for (const auto& m : items) {
            const std::optional<double>& v = m.*field;
            if (!v) {
                refusal_out = refusal_of_first;
                return std::nullopt;
            }
            acc += *v;
        }
        return acc / k;
    };
    std::string mape_refusal;
    for (const auto& m : items)
        if (!m.mape) {
            mape_refusal = m.mape_refusal;
            break;
        }
    std::string kge_refusal;
    for (const auto& m : items)
        if (!m.kge) {
            kge_refusal = m.kge_refusal;
            break;
        }
    out.mape = mean_of(&Metrics::mape, mape_refusal, out.mape_refusal);
    out.kge = mean_of(&Metrics::kge, kge_refusal, out.kge_refusal);
    std::string ignored;
    if (out.kge) {
        out.r = mean_of(&Metrics::r, "", ignored);
        out.beta = mean_of(&Metrics::beta, "", ignored);
        out.gamma = mean_of(&Metrics::gamma, "", ignored);
    }
    return out;
}

}  // namespace

MetricReport score_origins(const std::vector<std::string>& station_ids,
                           const std::vector<OriginForecast>& origins) {
    if (origins.empty()) throw DataError("no forecast origins to score");
    std::vector<std::size_t> order(station_ids.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return station_ids[a] < station_ids[b]; });

    MetricReport report;
    std::map<std::string, std::vector<Metrics>> per_station;
    std::vector<Metrics> pooled_items;
    for (const auto& o : origins) {
        OriginMetrics om;
        om.origin = o.origin;
        Sample pooled;
        for (std::size_t s : order) {
            const auto& id = station_ids[s];
            const auto& pred = o.forecast.predictions(id);
            const auto& obs = o.observed.at(s);
            Sample sample;
            for (std::size_t h = 0; h < pred.size(); ++h) {
                if (std::isnan(obs[h])) continue;
                sample.y.push_back(obs[h]);
                sample.yhat.push_back(pred[h]);
            }
            if (sample.y.empty())
                throw DataError("station " + id + " has no observed values in the test window after origin " +
                                std::to_string(o.origin));
            const Metrics m = score(sample.y, sample.yhat);
            om.stations.push_back({id, m});
            per_station[id].push_back(m);
            pooled.y.insert(pooled.y.end(), sample.y.begin(), sample.y.end());
            pooled.yhat.insert(pooled.yhat.end(), sample.yhat.begin(), sample.yhat.end());
        }
        om.pooled = score(pooled.y, pooled.yhat);
        pooled_items.push_back(om.pooled);
        report.origins.push_back(std::move(om));
    }
    for (std::size_t s : order) report.stations.push_back({station_ids[s], average(per_station[station_ids[s]])});
    report.pooled = average(pooled_items);
    return report;
}

BacktestResult backtest(const Panel& raw, const DistanceMatrix& distances,
                        const ingest::IngestConfig& ingest_config,
                        const forecasting::PipelineConfig& pipeline,
                        const forecasting::Backend& backend, const SplitSpec& split,
                        std::uint64_t seed, const std::string& config_digest) {
    const std::size_t warm = features::warmup_rows(raw.frequency(), pipeline.features);
    const auto splits = plan_splits(raw.rows(), warm, split);

    BacktestResult result;
    for (const auto& sp : splits) {
        const Panel train_raw = raw.truncated(sp.origin + 1);
        const Panel history = ingest::impute(train_raw, distances, ingest_config).panel;
        auto fr = forecasting::recursive_forecast(history, distances, pipeline, backend, sp.horizon, seed,
                                                  config_digest);
        std::vector<std::vector<double>> observed(raw.stations());
        for (std::size_t s = 0; s < raw.stations(); ++s) {
            for (std::size_t h = 1; h <= sp.horizon; ++h) {
                const std::size_t t = sp.origin + h;
                observed[s].push_back(raw.observed(t, s) ? raw.value(t, s)
                                                         : std::numeric_limits<double>::quiet_NaN());
            }
        }
        result.selection = std::move(fr.selection);
        result.origins.push_back(OriginForecast{sp.origin, std::move(fr.forecast), std::move(observed)});
    }
    result.report = score_origins(raw.station_ids(), result.origins);
    return result;
}

}  // namespace geopanel::evaluation
