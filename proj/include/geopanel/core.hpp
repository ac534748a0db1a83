#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace geopanel {

// Error hierarchy. The CLI maps each family to its own exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class ParseError : public DataError {
public:
    ParseError(const std::string& message, std::size_t row)
        : DataError(message), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class BackendError : public Error {
public:
    BackendError(const std::string& message, std::size_t completed_steps = 0)
        : Error(message), completed_steps_(completed_steps) {}
    std::size_t completed_steps() const noexcept { return completed_steps_; }

private:
    std::size_t completed_steps_;
};

class SchemaMismatch : public Error {
public:
    using Error::Error;
};

enum class CoordMode { euclidean_meters, lonlat_degrees };
enum class Frequency { hourly, daily, monthly };

std::string_view to_string(Frequency f);
Frequency parse_frequency(std::string_view text);

// ---------------------------------------------------------------------------
// Time grid
// ---------------------------------------------------------------------------

/// Seconds since 1970-01-01T00:00:00, timezone-naive.
using Timestamp = std::int64_t;

struct CivilTime {
    int year = 1970;
    int month = 1;
    int day = 1;
    int hour = 0;
    int minute = 0;
    int second = 0;
};

CivilTime to_civil(Timestamp ts);
Timestamp from_civil(const CivilTime& c);

/// Accepts `YYYY-MM-DD`, `YYYY-MM-DDTHH:MM[:SS]` and the same with a space separator.
std::optional<Timestamp> parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp ts, Frequency f);

/// Moves `steps` grid units forward (or backward when negative). Monthly steps
/// keep the day-of-month and time-of-day.
Timestamp advance(Timestamp ts, Frequency f, std::int64_t steps);

/// Cyclic unit of a timestamp: hour-of-day, day-of-week (Monday = 0) or month-of-year (0..11).
int cyclic_unit(Timestamp ts, Frequency f);
int cyclic_unit_count(Frequency f);

// ---------------------------------------------------------------------------
// Stations
// ---------------------------------------------------------------------------

struct Station {
    std::string id;
    double x = 0.0;
    double y = 0.0;
};

class StationSet {
public:
    StationSet(std::vector<Station> stations, CoordMode mode);

    std::size_t size() const noexcept { return stations_.size(); }
    const Station& operator[](std::size_t i) const { return stations_.at(i); }
    CoordMode mode() const noexcept { return mode_; }
    std::vector<std::string> ids() const;
    std::optional<std::size_t> index_of(std::string_view id) const;
    const std::vector<Station>& stations() const noexcept { return stations_; }

private:
    std::vector<Station> stations_;
    CoordMode mode_;
};

// ---------------------------------------------------------------------------
// Panel
// ---------------------------------------------------------------------------

/// Time-aligned observations, one column per station. Values are stored
/// station-major so each station's series is a contiguous span. Cells
/// whose mask entry is false are missing; their stored value is 0 and must
/// not be read as data.
class Panel {
public:
    Panel(std::vector<Timestamp> timestamps, Frequency frequency,
          std::vector<std::string> station_ids, std::vector<double> values,
          std::vector<std::uint8_t> mask);

    /// Fully observed panel built from per-station series.
    static Panel from_series(std::vector<Timestamp> timestamps, Frequency frequency,
                             std::vector<std::string> station_ids,
                             const std::vector<std::vector<double>>& series);

    std::size_t rows() const noexcept { return timestamps_.size(); }
    std::size_t stations() const noexcept { return station_ids_.size(); }
    Frequency frequency() const noexcept { return frequency_; }
    const std::vector<Timestamp>& timestamps() const noexcept { return timestamps_; }
    const std::vector<std::string>& station_ids() const noexcept { return station_ids_; }

    double value(std::size_t t, std::size_t s) const { return values_[s * rows() + t]; }
    bool observed(std::size_t t, std::size_t s) const { return mask_[s * rows() + t] != 0; }
    std::span<const double> series(std::size_t s) const;
    std::span<const std::uint8_t> series_mask(std::size_t s) const;
    std::size_t observed_count(std::size_t s) const;
    bool fully_observed() const;

    /// First `n` rows.
    Panel truncated(std::size_t n) const;
    /// Copy with one fully observed row appended at the next grid instant.
    Panel with_row(std::span<const double> row) const;

    bool operator==(const Panel& other) const = default;

private:
    std::vector<Timestamp> timestamps_;
    Frequency frequency_;
    std::vector<std::string> station_ids_;
    std::vector<double> values_;
    std::vector<std::uint8_t> mask_;
};

// ---------------------------------------------------------------------------
// Distances and weights
// ---------------------------------------------------------------------------

class DistanceMatrix {
public:
    DistanceMatrix(std::size_t n, std::vector<double> meters);

    std::size_t size() const noexcept { return n_; }
    double operator()(std::size_t i, std::size_t j) const { return d_[i * n_ + j]; }
    /// Off-diagonal upper-triangle entries.
    std::vector<double> off_diagonal() const;

private:
    std::size_t n_;
    std::vector<double> d_;
};

class KernelWeights {
public:
    KernelWeights(std::size_t n, std::vector<double> w, double sigma);

    std::size_t size() const noexcept { return n_; }
    double operator()(std::size_t i, std::size_t j) const { return w_[i * n_ + j]; }
    double sigma() const noexcept { return sigma_; }

private:
    std::size_t n_;
    std::vector<double> w_;
    double sigma_;
};

// ---------------------------------------------------------------------------
// Feature tables
// ---------------------------------------------------------------------------

enum class RowRole : std::uint8_t { train, holdout, query };

struct RowKey {
    std::string station;
    std::size_t time_index = 0;
    bool operator==(const RowKey&) const = default;
};

/// Tabular representation handed to regression backends: one row per
/// (station, time) with a fixed, ordered schema of finite features and an
/// optional target column.
class FeatureTable {
public:
    FeatureTable() = default;
    FeatureTable(std::vector<std::string> schema, std::vector<RowKey> keys,
                 std::vector<double> data, std::vector<double> target,
                 std::vector<RowRole> roles);

    std::size_t rows() const noexcept { return keys_.size(); }
    std::size_t cols() const noexcept { return schema_.size(); }
    const std::vector<std::string>& schema() const noexcept { return schema_; }
    const std::vector<RowKey>& keys() const noexcept { return keys_; }
    const std::vector<RowRole>& roles() const noexcept { return roles_; }
    bool has_target() const noexcept { return !target_.empty(); }
    const std::vector<double>& target() const noexcept { return target_; }
    const std::vector<double>& data() const noexcept { return data_; }

    double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
    std::span<const double> row(std::size_t r) const;
    std::vector<double> column(std::size_t c) const;
    std::optional<std::size_t> column_index(std::string_view name) const;

    /// Projection onto `names`, in that order. Throws SchemaMismatch on unknown names.
    FeatureTable select_columns(const std::vector<std::string>& names) const;
    /// Rows whose index is listed, in that order.
    FeatureTable select_rows(const std::vector<std::size_t>& indices) const;
    FeatureTable without_target() const;

private:
    std::vector<std::string> schema_;
    std::vector<RowKey> keys_;
    std::vector<double> data_;
    std::vector<double> target_;
    std::vector<RowRole> roles_;
};

// ---------------------------------------------------------------------------
// Forecasts and reports
// ---------------------------------------------------------------------------

struct StationForecast {
    std::string station;
    std::vector<double> predicted;
    bool operator==(const StationForecast&) const = default;
};

class ForecastSet {
public:
    ForecastSet(std::size_t horizon, std::string backend_id, std::string config_digest,
                std::vector<Timestamp> timestamps, std::vector<StationForecast> stations);

    std::size_t horizon() const noexcept { return horizon_; }
    const std::string& backend_id() const noexcept { return backend_id_; }
    const std::string& config_digest() const noexcept { return config_digest_; }
    const std::vector<Timestamp>& timestamps() const noexcept { return timestamps_; }
    const std::vector<StationForecast>& stations() const noexcept { return stations_; }
    const std::vector<double>& predictions(std::string_view station) const;

    bool operator==(const ForecastSet&) const = default;

private:
    std::size_t horizon_;
    std::string backend_id_;
    std::string config_digest_;
    std::vector<Timestamp> timestamps_;
    std::vector<StationForecast> stations_;
};

/// Metric values for one station (or the pooled sample). A disengaged
/// optional is a refusal; the matching `*_refusal` string says why.
struct Metrics {
    std::size_t n = 0;
    double mse = 0.0;
    double rmse = 0.0;
    double mae = 0.0;
    std::optional<double> mape;
    std::optional<double> kge;
    std::optional<double> r;
    std::optional<double> beta;
    std::optional<double> gamma;
    std::string mape_refusal;
    std::string kge_refusal;

    bool operator==(const Metrics&) const = default;
};

struct StationMetrics {
    std::string station;
    Metrics metrics;
    bool operator==(const StationMetrics&) const = default;
};

struct OriginMetrics {
    std::size_t origin = 0;  // last training row index
    std::vector<StationMetrics> stations;
    Metrics pooled;
    bool operator==(const OriginMetrics&) const = default;
};

struct MetricReport {
    std::vector<StationMetrics> stations;
    Metrics pooled;
    std::vector<OriginMetrics> origins;
    bool operator==(const MetricReport&) const = default;
};

// ---------------------------------------------------------------------------
// Configuration digest
// ---------------------------------------------------------------------------

/// Canonical JSON text: object keys sorted, every number rendered as a
/// double with 17 significant digits.
std::string canonical_json(const nlohmann::json& config);

/// 16 lowercase hex digits of FNV-1a/64 over canonical_json(config).
std::string config_digest(const nlohmann::json& config);

/// JSON text with object keys sorted, floating-point numbers rendered with
/// 17 significant digits and non-finite numbers as null.
std::string to_json_text(const nlohmann::json& value, int indent = 2);

/// Shortest round-tripping decimal rendering of a double.
std::string format_real(double v);
/// `%.17g` rendering used by report files.
std::string format_real17(double v);

}  // namespace geopanel
