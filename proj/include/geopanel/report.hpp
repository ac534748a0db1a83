#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "geopanel/backtest.hpp"
#include "geopanel/core.hpp"

namespace geopanel::evaluation {

struct ReportInputs {
    const MetricReport& report;
    const std::vector<OriginForecast>& origins;
    /// Raw panel the backtest ran on; supplies timestamps and history tails.
    const Panel& raw;
    std::string backend_id;
    std::string config_digest;
    /// Rows of history before the first origin written to plotdata.json.
    std::size_t history_tail = 48;
};

std::string metrics_json(const MetricReport& report, const std::string& backend_id,
                         const std::string& config_digest);
MetricReport parse_metrics_json(const std::string& text);
std::string metrics_csv(const MetricReport& report);
/// Timestamp, observed (empty when missing) and predicted for every origin in turn.
std::string forecast_csv(const std::string& station, std::size_t station_index,
                         const std::vector<OriginForecast>& origins, Frequency frequency);
std::string plotdata_json(const ReportInputs& in);

/// Saved forecasts recovered from plotdata.json.
struct SavedForecasts {
    std::string backend_id;
    std::string config_digest;
    Frequency frequency = Frequency::daily;
    std::vector<std::string> station_ids;
    std::vector<OriginForecast> origins;
};

SavedForecasts parse_plotdata(const std::string& text);

/// Writes metrics.json, metrics.csv, forecast_<station>.csv and plotdata.json.
/// Returns the written paths.
std::vector<std::filesystem::path> emit_report(const std::filesystem::path& outdir,
                                               const ReportInputs& in);

/// Writes `text` to `path`; failures raise Error naming the path.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace geopanel::evaluation
