#include "geopanel/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>

namespace geopanel {

std::string_view to_string(Frequency f) {
    switch (f) {
        case Frequency::hourly: return "hourly";
        case Frequency::daily: return "daily";
        case Frequency::monthly: return "monthly";
    }
    return "daily";
}

Frequency parse_frequency(std::string_view text) {
    if (text == "hourly") return Frequency::hourly;
    if (text == "daily") return Frequency::daily;
    if (text == "monthly") return Frequency::monthly;
    throw ConfigError("unknown frequency '" + std::string(text) + "' (expected hourly|daily|monthly)");
}

// ---------------------------------------------------------------------------
// Civil calendar (proleptic Gregorian, H. Hinnant's algorithms)
// ---------------------------------------------------------------------------

namespace {

constexpr std::int64_t kSecondsPerDay = 86400;

std::int64_t days_from_civil(std::int64_t y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const std::int64_t yoe = y - era * 400;
    const std::int64_t doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const std::int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + doe - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const std::int64_t doe = z - era * 146097;
    const std::int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const std::int64_t mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
    y = static_cast<int>(yoe + era * 400 + (m <= 2));
}

int days_in_month(int y, int m) {
    static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2) {
        const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
        return leap ? 29 : 28;
    }
    return kDays[m - 1];
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

bool parse_int(std::string_view s, int& out) {
    if (s.empty()) return false;
    for (char c : s)
        if (c < '0' || c > '9') return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

CivilTime to_civil(Timestamp ts) {
    const std::int64_t days = floor_div(ts, kSecondsPerDay);
    std::int64_t rem = ts - days * kSecondsPerDay;
    CivilTime c;
    civil_from_days(days, c.year, c.month, c.day);
    c.hour = static_cast<int>(rem / 3600);
    rem %= 3600;
    c.minute = static_cast<int>(rem / 60);
    c.second = static_cast<int>(rem % 60);
    return c;
}

Timestamp from_civil(const CivilTime& c) {
    return days_from_civil(c.year, c.month, c.day) * kSecondsPerDay + c.hour * 3600 +
           c.minute * 60 + c.second;
}

std::optional<Timestamp> parse_timestamp(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
        text.remove_suffix(1);
    if (!text.empty() && text.back() == 'Z') text.remove_suffix(1);
    if (text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    CivilTime c;
    if (!parse_int(text.substr(0, 4), c.year) || !parse_int(text.substr(5, 2), c.month) ||
        !parse_int(text.substr(8, 2), c.day))
        return std::nullopt;
    if (c.month < 1 || c.month > 12 || c.day < 1 || c.day > days_in_month(c.year, c.month))
        return std::nullopt;
    if (text.size() > 10) {
        if (text[10] != 'T' && text[10] != ' ') return std::nullopt;
        const auto clock = text.substr(11);
        if (clock.size() != 5 && clock.size() != 8) return std::nullopt;
        if (clock[2] != ':') return std::nullopt;
        if (!parse_int(clock.substr(0, 2), c.hour) || !parse_int(clock.substr(3, 2), c.minute))
            return std::nullopt;
        if (clock.size() == 8) {
            if (clock[5] != ':' || !parse_int(clock.substr(6, 2), c.second)) return std::nullopt;
        }
        if (c.hour > 23 || c.minute > 59 || c.second > 59) return std::nullopt;
    }
    return from_civil(c);
}

std::string format_timestamp(Timestamp ts, Frequency f) {
    const CivilTime c = to_civil(ts);
    char buf[32];
    if (f == Frequency::hourly || c.hour != 0 || c.minute != 0 || c.second != 0) {
        std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d", c.year, c.month, c.day,
                      c.hour, c.minute, c.second);
    } else {
        std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", c.year, c.month, c.day);
    }
    return buf;
}

Timestamp advance(Timestamp ts, Frequency f, std::int64_t steps) {
    switch (f) {
        case Frequency::hourly: return ts + steps * 3600;
        case Frequency::daily: return ts + steps * kSecondsPerDay;
        case Frequency::monthly: {
            CivilTime c = to_civil(ts);
            const std::int64_t months = static_cast<std::int64_t>(c.year) * 12 + (c.month - 1) + steps;
            c.year = static_cast<int>(floor_div(months, 12));
            c.month = static_cast<int>(months - static_cast<std::int64_t>(c.year) * 12) + 1;
            c.day = std::min(c.day, days_in_month(c.year, c.month));
            return from_civil(c);
        }
    }
    return ts;
}

int cyclic_unit(Timestamp ts, Frequency f) {
    switch (f) {
        case Frequency::hourly: return to_civil(ts).hour;
        case Frequency::daily: {
            // 1970-01-01 was a Thursday (Monday = 0 -> Thursday = 3).
            const std::int64_t days = floor_div(ts, kSecondsPerDay);
            return static_cast<int>(((days + 3) % 7 + 7) % 7);
        }
        case Frequency::monthly: return to_civil(ts).month - 1;
    }
    return 0;
}

int cyclic_unit_count(Frequency f) {
    switch (f) {
        case Frequency::hourly: return 24;
        case Frequency::daily: return 7;
        case Frequency::monthly: return 12;
    }
    return 1;
}

// ---------------------------------------------------------------------------
// StationSet
// ---------------------------------------------------------------------------

StationSet::StationSet(std::vector<Station> stations, CoordMode mode)
    : stations_(std::move(stations)), mode_(mode) {
    std::set<std::string> seen;
    for (const auto& s : stations_) {
        if (s.id.empty()) throw DataError("station id must be nonempty");
        if (!std::isfinite(s.x) || !std::isfinite(s.y))
            throw DataError("station " + s.id + " has non-finite coordinates");
        if (!seen.insert(s.id).second) throw DataError("duplicate station id " + s.id);
    }
}

std::vector<std::string> StationSet::ids() const {
    std::vector<std::string> out;
    out.reserve(stations_.size());
    for (const auto& s : stations_) out.push_back(s.id);
    return out;
}

std::optional<std::size_t> StationSet::index_of(std::string_view id) const {
    for (std::size_t i = 0; i < stations_.size(); ++i)
        if (stations_[i].id == id) return i;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Panel
// ---------------------------------------------------------------------------

Panel::Panel(std::vector<Timestamp> timestamps, Frequency frequency,
             std::vector<std::string> station_ids, std::vector<double> values,
             std::vector<std::uint8_t> mask)
    : timestamps_(std::move(timestamps)),
      frequency_(frequency),
      station_ids_(std::move(station_ids)),
      values_(std::move(values)),
      mask_(std::move(mask)) {
    const std::size_t cells = timestamps_.size() * station_ids_.size();
    if (values_.size() != cells || mask_.size() != cells)
        throw DataError("panel matrix size does not match timestamps x stations");
    for (std::size_t t = 1; t < timestamps_.size(); ++t) {
        if (timestamps_[t] != advance(timestamps_[t - 1], frequency_, 1))
            throw DataError("panel timestamps are not on a uniform " +
                            std::string(to_string(frequency_)) + " grid at row " +
                            std::to_string(t));
    }
    for (std::size_t i = 0; i < cells; ++i) {
        if (mask_[i] && !std::isfinite(values_[i]))
            throw DataError("observed panel cell is not finite");
        if (!mask_[i]) values_[i] = 0.0;
    }
}

Panel Panel::from_series(std::vector<Timestamp> timestamps, Frequency frequency,
                         std::vector<std::string> station_ids,
                         const std::vector<std::vector<double>>& series) {
    const std::size_t rows = timestamps.size();
    if (series.size() != station_ids.size())
        throw DataError("series count does not match station count");
    std::vector<double> values;
    values.reserve(rows * series.size());
    for (const auto& s : series) {
        if (s.size() != rows) throw DataError("series length does not match timestamps");
        values.insert(values.end(), s.begin(), s.end());
    }
    std::vector<std::uint8_t> mask(values.size(), 1);
    return Panel(std::move(timestamps), frequency, std::move(station_ids), std::move(values),
                 std::move(mask));
}

std::span<const double> Panel::series(std::size_t s) const {
    return std::span<const double>(values_).subspan(s * rows(), rows());
}

std::span<const std::uint8_t> Panel::series_mask(std::size_t s) const {
    return std::span<const std::uint8_t>(mask_).subspan(s * rows(), rows());
}

std::size_t Panel::observed_count(std::size_t s) const {
    const auto m = series_mask(s);
    return static_cast<std::size_t>(std::count(m.begin(), m.end(), std::uint8_t{1}));
}

bool Panel::fully_observed() const {
    return std::all_of(mask_.begin(), mask_.end(), [](std::uint8_t m) { return m != 0; });
}

Panel Panel::truncated(std::size_t n) const {
    n = std::min(n, rows());
    std::vector<double> values;
    std::vector<std::uint8_t> mask;
    values.reserve(n * stations());
    mask.reserve(n * stations());
    for (std::size_t s = 0; s < stations(); ++s) {
        const auto v = series(s);
        const auto m = series_mask(s);
        values.insert(values.end(), v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n));
        mask.insert(mask.end(), m.begin(), m.begin() + static_cast<std::ptrdiff_t>(n));
    }
    return Panel(std::vector<Timestamp>(timestamps_.begin(),
                                        timestamps_.begin() + static_cast<std::ptrdiff_t>(n)),
                 frequency_, station_ids_, std::move(values), std::move(mask));
}

Panel Panel::with_row(std::span<const double> row) const {
    if (row.size() != stations()) throw DataError("appended row width does not match stations");
    if (rows() == 0) throw DataError("cannot extend an empty panel");
    std::vector<Timestamp> ts = timestamps_;
    ts.push_back(advance(ts.back(), frequency_, 1));
    std::vector<double> values;
    std::vector<std::uint8_t> mask;
    values.reserve((rows() + 1) * stations());
    mask.reserve((rows() + 1) * stations());
    for (std::size_t s = 0; s < stations(); ++s) {
        const auto v = series(s);
        const auto m = series_mask(s);
        values.insert(values.end(), v.begin(), v.end());
        values.push_back(row[s]);
        mask.insert(mask.end(), m.begin(), m.end());
        mask.push_back(1);
    }
    return Panel(std::move(ts), frequency_, station_ids_, std::move(values), std::move(mask));
}

// ---------------------------------------------------------------------------
// Distances and weights
// ---------------------------------------------------------------------------

DistanceMatrix::DistanceMatrix(std::size_t n, std::vector<double> meters)
    : n_(n), d_(std::move(meters)) {
    if (d_.size() != n_ * n_) throw DataError("distance matrix has wrong size");
    for (std::size_t i = 0; i < n_; ++i) {
        if (d_[i * n_ + i] != 0.0) throw DataError("distance matrix diagonal must be zero");
        for (std::size_t j = 0; j < n_; ++j) {
            const double v = d_[i * n_ + j];
            if (!std::isfinite(v) || v < 0.0) throw DataError("distance must be finite and >= 0");
            if (v != d_[j * n_ + i]) throw DataError("distance matrix must be symmetric");
        }
    }
}

std::vector<double> DistanceMatrix::off_diagonal() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = i + 1; j < n_; ++j) out.push_back(d_[i * n_ + j]);
    return out;
}

KernelWeights::KernelWeights(std::size_t n, std::vector<double> w, double sigma)
    : n_(n), w_(std::move(w)), sigma_(sigma) {
    if (w_.size() != n_ * n_) throw DataError("kernel weight matrix has wrong size");
    if (!(sigma_ > 0.0) || !std::isfinite(sigma_)) throw ConfigError("kernel sigma must be > 0");
    for (std::size_t i = 0; i < n_; ++i) {
        if (w_[i * n_ + i] != 1.0) throw DataError("kernel weight diagonal must be 1");
        for (std::size_t j = 0; j < n_; ++j) {
            const double v = w_[i * n_ + j];
            if (!(v >= 0.0 && v <= 1.0)) throw DataError("kernel weights must lie in [0, 1]");
            if (v != w_[j * n_ + i]) throw DataError("kernel weights must be symmetric");
        }
    }
}

// ---------------------------------------------------------------------------
// FeatureTable
// ---------------------------------------------------------------------------

FeatureTable::FeatureTable(std::vector<std::string> schema, std::vector<RowKey> keys,
                           std::vector<double> data, std::vector<double> target,
                           std::vector<RowRole> roles)
    : schema_(std::move(schema)),
      keys_(std::move(keys)),
      data_(std::move(data)),
      target_(std::move(target)),
      roles_(std::move(roles)) {
    std::set<std::string> names(schema_.begin(), schema_.end());
    if (names.size() != schema_.size()) throw SchemaMismatch("feature names must be unique");
    if (data_.size() != keys_.size() * schema_.size())
        throw SchemaMismatch("feature table data does not match rows x schema");
    if (!target_.empty() && target_.size() != keys_.size())
        throw SchemaMismatch("target length does not match row count");
    if (roles_.empty()) roles_.assign(keys_.size(), RowRole::train);
    if (roles_.size() != keys_.size()) throw SchemaMismatch("row roles do not match row count");
    for (double v : data_)
        if (!std::isfinite(v)) throw DataError("feature table contains a non-finite value");
    for (double v : target_)
        if (!std::isfinite(v)) throw DataError("feature table target contains a non-finite value");
}

std::span<const double> FeatureTable::row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols(), cols());
}

std::vector<double> FeatureTable::column(std::size_t c) const {
    std::vector<double> out(rows());
    for (std::size_t r = 0; r < rows(); ++r) out[r] = at(r, c);
    return out;
}

std::optional<std::size_t> FeatureTable::column_index(std::string_view name) const {
    for (std::size_t c = 0; c < schema_.size(); ++c)
        if (schema_[c] == name) return c;
    return std::nullopt;
}

FeatureTable FeatureTable::select_columns(const std::vector<std::string>& names) const {
    std::vector<std::size_t> idx;
    idx.reserve(names.size());
    for (const auto& n : names) {
        auto c = column_index(n);
        if (!c) throw SchemaMismatch("unknown feature column '" + n + "'");
        idx.push_back(*c);
    }
    std::vector<double> data;
    data.reserve(rows() * idx.size());
    for (std::size_t r = 0; r < rows(); ++r)
        for (std::size_t c : idx) data.push_back(at(r, c));
    return FeatureTable(names, keys_, std::move(data), target_, roles_);
}

FeatureTable FeatureTable::select_rows(const std::vector<std::size_t>& indices) const {
    std::vector<RowKey> keys;
    std::vector<double> data;
    std::vector<double> target;
    std::vector<RowRole> roles;
    for (std::size_t r : indices) {
        keys.push_back(keys_.at(r));
        const auto rw = row(r);
        data.insert(data.end(), rw.begin(), rw.end());
        if (has_target()) target.push_back(target_[r]);
        roles.push_back(roles_[r]);
    }
    return FeatureTable(schema_, std::move(keys), std::move(data), std::move(target),
                        std::move(roles));
}

FeatureTable FeatureTable::without_target() const {
    return FeatureTable(schema_, keys_, data_, {}, roles_);
}

// ---------------------------------------------------------------------------
// ForecastSet
// ---------------------------------------------------------------------------

ForecastSet::ForecastSet(std::size_t horizon, std::string backend_id, std::string config_digest,
                         std::vector<Timestamp> timestamps, std::vector<StationForecast> stations)
    : horizon_(horizon),
      backend_id_(std::move(backend_id)),
      config_digest_(std::move(config_digest)),
      timestamps_(std::move(timestamps)),
      stations_(std::move(stations)) {
    if (horizon_ == 0) throw DataError("forecast horizon must be positive");
    if (timestamps_.size() != horizon_) throw DataError("forecast timestamps do not match horizon");
    for (const auto& s : stations_) {
        if (s.predicted.size() != horizon_)
            throw DataError("forecast for station " + s.station + " does not match horizon");
        for (double v : s.predicted)
            if (!std::isfinite(v))
                throw BackendError("non-finite prediction for station " + s.station);
    }
}

const std::vector<double>& ForecastSet::predictions(std::string_view station) const {
    for (const auto& s : stations_)
        if (s.station == station) return s.predicted;
    throw DataError("no forecast for station " + std::string(station));
}

// ---------------------------------------------------------------------------
// Digest
// ---------------------------------------------------------------------------

std::string format_real(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string format_real17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

void write_canonical(const nlohmann::json& j, std::string& out) {
    switch (j.type()) {
        case nlohmann::json::value_t::object: {
            out += '{';
            bool first = true;
            // nlohmann::json objects are std::map backed, so iteration is key-sorted.
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ',';
                first = false;
                out += nlohmann::json(it.key()).dump();
                out += ':';
                write_canonical(it.value(), out);
            }
            out += '}';
            break;
        }
        case nlohmann::json::value_t::array: {
            out += '[';
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) out += ',';
                write_canonical(j[i], out);
            }
            out += ']';
            break;
        }
        case nlohmann::json::value_t::number_integer:
        case nlohmann::json::value_t::number_unsigned:
        case nlohmann::json::value_t::number_float:
            out += format_real17(j.get<double>());
            break;
        default:
            out += j.dump();
            break;
    }
}

void write_pretty(const nlohmann::json& j, std::string& out, int indent, int depth) {
    const auto newline = [&](int d) {
        if (indent < 0) return;
        out += '\n';
        out.append(static_cast<std::size_t>(indent * d), ' ');
    };
    switch (j.type()) {
        case nlohmann::json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                break;
            }
            out += '{';
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ',';
                first = false;
                newline(depth + 1);
                out += nlohmann::json(it.key()).dump();
                out += indent < 0 ? ":" : ": ";
                write_pretty(it.value(), out, indent, depth + 1);
            }
            newline(depth);
            out += '}';
            break;
        }
        case nlohmann::json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                break;
            }
            // Arrays of scalars stay on one line.
            const bool flat = std::all_of(j.begin(), j.end(), [](const nlohmann::json& e) {
                return !e.is_object() && !e.is_array();
            });
            out += '[';
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) out += flat ? ", " : ",";
                if (!flat) newline(depth + 1);
                write_pretty(j[i], out, indent, depth + 1);
            }
            if (!flat) newline(depth);
            out += ']';
            break;
        }
        case nlohmann::json::value_t::number_float: {
            const double v = j.get<double>();
            out += std::isfinite(v) ? format_real(v) : "null";
            break;
        }
        default:
            out += j.dump();
            break;
    }
}

}  // namespace

std::string to_json_text(const nlohmann::json& value, int indent) {
    std::string out;
    write_pretty(value, out, indent, 0);
    out += '\n';
    return out;
}

std::string canonical_json(const nlohmann::json& config) {
    std::string out;
    write_canonical(config, out);
    return out;
}

std::string config_digest(const nlohmann::json& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical_json(config)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace geopanel
