#include "geopanel/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace geopanel::ingest {

std::string_view to_string(Imputation m) {
    switch (m) {
        case Imputation::linear: return "linear";
        case Imputation::knn: return "knn";
        case Imputation::linear_then_knn: return "linear_then_knn";
    }
    return "linear";
}

Imputation parse_imputation(std::string_view text) {
    if (text == "linear") return Imputation::linear;
    if (text == "knn") return Imputation::knn;
    if (text == "linear_then_knn") return Imputation::linear_then_knn;
    throw ConfigError("unknown imputation method '" + std::string(text) + "'");
}

std::string_view to_string(FillMethod m) {
    switch (m) {
        case FillMethod::linear: return "linear";
        case FillMethod::flat: return "flat";
        case FillMethod::knn: return "knn";
    }
    return "linear";
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
    if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF &&
        static_cast<unsigned char>(text[1]) == 0xBB && static_cast<unsigned char>(text[2]) == 0xBF)
        text.remove_prefix(3);
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return lines;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t end = line.find(',', start);
        if (end == std::string_view::npos) {
            fields.push_back(trim(line.substr(start)));
            break;
        }
        fields.push_back(trim(line.substr(start, end - start)));
        start = end + 1;
    }
    return fields;
}

std::optional<double> parse_real(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

/// Grid index of `ts` relative to `anchor`, or nullopt when off-grid.
std::optional<std::int64_t> grid_index(Timestamp anchor, Timestamp ts, Frequency f) {
    switch (f) {
        case Frequency::hourly:
        case Frequency::daily: {
            const std::int64_t step = f == Frequency::hourly ? 3600 : 86400;
            const std::int64_t diff = ts - anchor;
            if (diff % step != 0) return std::nullopt;
            return diff / step;
        }
        case Frequency::monthly: {
            const CivilTime a = to_civil(anchor);
            const CivilTime b = to_civil(ts);
            const std::int64_t months =
                (static_cast<std::int64_t>(b.year) - a.year) * 12 + (b.month - a.month);
            if (advance(anchor, f, months) != ts) return std::nullopt;
            return months;
        }
    }
    return std::nullopt;
}

}  // namespace

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

StationSet parse_stations(std::string_view csv_text) {
    const auto lines = split_lines(csv_text);
    if (lines.empty() || trim(lines[0]).empty()) throw ParseError("stations file is empty", 1);
    const auto header = split_fields(lines[0]);
    if (header.size() != 3 || header[0] != "station_id")
        throw ParseError("stations header must be station_id,x,y or station_id,lon,lat", 1);
    CoordMode mode;
    if (header[1] == "x" && header[2] == "y") {
        mode = CoordMode::euclidean_meters;
    } else if (header[1] == "lon" && header[2] == "lat") {
        mode = CoordMode::lonlat_degrees;
    } else {
        throw ParseError("stations header must be station_id,x,y or station_id,lon,lat", 1);
    }

    std::vector<Station> stations;
    std::set<std::string> seen;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::size_t row = i + 1;
        if (trim(lines[i]).empty()) continue;
        const auto fields = split_fields(lines[i]);
        if (fields.size() != 3)
            throw ParseError("expected 3 fields at row " + std::to_string(row), row);
        const std::string id(fields[0]);
        if (id.empty()) throw ParseError("empty station id at row " + std::to_string(row), row);
        const auto x = parse_real(fields[1]);
        const auto y = parse_real(fields[2]);
        if (!x || !y)
            throw ParseError("non-numeric coordinate for station " + id + " at row " +
                                 std::to_string(row),
                             row);
        if (mode == CoordMode::lonlat_degrees && (std::abs(*y) > 90.0 || std::abs(*x) > 360.0))
            throw ParseError("coordinate out of range for station " + id + " at row " +
                                 std::to_string(row),
                             row);
        if (!seen.insert(id).second)
            throw ParseError("duplicate station id " + id + " at row " + std::to_string(row), row);
        stations.push_back(Station{id, *x, *y});
    }
    if (stations.size() < 2)
        throw ParseError("stations file must list at least 2 stations", lines.size());
    return StationSet(std::move(stations), mode);
}

Panel parse_panel(std::string_view csv_text, Frequency frequency, const StationSet& stations) {
    const auto lines = split_lines(csv_text);
    if (lines.empty() || trim(lines[0]).empty()) throw ParseError("panel file is empty", 1);
    const auto header = split_fields(lines[0]);
    if (header.size() < 2) throw ParseError("panel header needs a timestamp and station columns", 1);

    // file column -> station index
    std::vector<std::size_t> column_station;
    std::vector<bool> covered(stations.size(), false);
    for (std::size_t c = 1; c < header.size(); ++c) {
        const auto idx = stations.index_of(header[c]);
        if (!idx) throw ParseError("unknown station column " + std::string(header[c]), 1);
        if (covered[*idx])
            throw ParseError("duplicate station column " + std::string(header[c]), 1);
        covered[*idx] = true;
        column_station.push_back(*idx);
    }
    for (std::size_t s = 0; s < stations.size(); ++s)
        if (!covered[s]) throw ParseError("panel has no column for station " + stations[s].id, 1);

    struct Row {
        std::int64_t index;
        std::vector<std::optional<double>> cells;
    };
    std::vector<Row> parsed;
    std::optional<Timestamp> anchor;
    std::optional<std::int64_t> previous;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::size_t row = i + 1;
        if (trim(lines[i]).empty()) continue;
        auto fields = split_fields(lines[i]);
        if (fields.size() != header.size())
            throw ParseError("expected " + std::to_string(header.size()) + " fields at row " +
                                 std::to_string(row),
                             row);
        const auto ts = parse_timestamp(fields[0]);
        if (!ts)
            throw ParseError("unparseable timestamp '" + std::string(fields[0]) + "' at row " +
                                 std::to_string(row),
                             row);
        if (!anchor) anchor = *ts;
        const auto index = grid_index(*anchor, *ts, frequency);
        if (!index)
            throw ParseError("timestamp " + std::string(fields[0]) + " at row " +
                                 std::to_string(row) + " is off the " +
                                 std::string(to_string(frequency)) + " grid",
                             row);
        if (previous && *index <= *previous)
            throw ParseError("timestamps must be strictly increasing (row " + std::to_string(row) +
                                 ")",
                             row);
        previous = *index;
        Row r{*index, std::vector<std::optional<double>>(stations.size())};
        for (std::size_t c = 1; c < fields.size(); ++c) {
            if (fields[c].empty()) continue;
            const auto v = parse_real(fields[c]);
            if (!v)
                throw ParseError("non-numeric value '" + std::string(fields[c]) + "' at row " +
                                     std::to_string(row),
                                 row);
            r.cells[column_station[c - 1]] = *v;
        }
        parsed.push_back(std::move(r));
    }
    if (parsed.empty()) throw ParseError("panel has no data rows", 1);

    const std::size_t n_rows = static_cast<std::size_t>(parsed.back().index) + 1;
    const std::size_t n_st = stations.size();
    std::vector<Timestamp> timestamps(n_rows);
    for (std::size_t t = 0; t < n_rows; ++t)
        timestamps[t] = advance(*anchor, frequency, static_cast<std::int64_t>(t));
    std::vector<double> values(n_rows * n_st, 0.0);
    std::vector<std::uint8_t> mask(n_rows * n_st, 0);
    for (const auto& r : parsed) {
        for (std::size_t s = 0; s < n_st; ++s) {
            if (!r.cells[s]) continue;
            const std::size_t cell = s * n_rows + static_cast<std::size_t>(r.index);
            values[cell] = *r.cells[s];
            mask[cell] = 1;
        }
    }
    return Panel(std::move(timestamps), frequency, stations.ids(), std::move(values),
                 std::move(mask));
}

std::string serialize_panel(const Panel& panel) {
    std::string out = "timestamp";
    for (const auto& id : panel.station_ids()) {
        out += ',';
        out += id;
    }
    out += '\n';
    for (std::size_t t = 0; t < panel.rows(); ++t) {
        out += format_timestamp(panel.timestamps()[t], panel.frequency());
        for (std::size_t s = 0; s < panel.stations(); ++s) {
            out += ',';
            if (panel.observed(t, s)) out += format_real17(panel.value(t, s));
        }
        out += '\n';
    }
    return out;
}

DistanceMatrix compute_distances(const StationSet& stations) {
    const std::size_t n = stations.size();
    if (n < 2) throw DataError("distance computation needs at least 2 stations");
    constexpr double kEarthRadius = 6371000.0;
    constexpr double kDeg = std::numbers::pi / 180.0;
    std::vector<double> d(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const Station& a = stations[i];
            const Station& b = stations[j];
            double dist = 0.0;
            if (stations.mode() == CoordMode::euclidean_meters) {
                dist = std::hypot(a.x - b.x, a.y - b.y);
            } else {
                const double phi1 = a.y * kDeg;
                const double phi2 = b.y * kDeg;
                const double dphi = (b.y - a.y) * kDeg;
                const double dlambda = (b.x - a.x) * kDeg;
                const double s1 = std::sin(dphi / 2.0);
                const double s2 = std::sin(dlambda / 2.0);
                const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
                dist = 2.0 * kEarthRadius * std::asin(std::min(1.0, std::sqrt(h)));
            }
            d[i * n + j] = dist;
            d[j * n + i] = dist;
        }
    }
    return DistanceMatrix(n, std::move(d));
}

namespace {

struct Grid {
    std::size_t rows;
    std::size_t stations;
    std::vector<double> values;  // station-major
    std::vector<std::uint8_t> filled;
    std::vector<std::uint8_t> original;
    std::map<std::pair<std::size_t, std::size_t>, FillMethod> methods;  // (station, t)

    double& at(std::size_t t, std::size_t s) { return values[s * rows + t]; }
    bool is_filled(std::size_t t, std::size_t s) const { return filled[s * rows + t] != 0; }
    bool is_original(std::size_t t, std::size_t s) const { return original[s * rows + t] != 0; }
    void fill(std::size_t t, std::size_t s, double v, FillMethod m) {
        values[s * rows + t] = v;
        filled[s * rows + t] = 1;
        methods[{s, t}] = m;
    }
};

/// Linear interpolation from original observations. With `max_gap`, only
/// interior gaps no longer than it are bridged and edge gaps are left alone.
void fill_linear(Grid& g, std::size_t s, std::optional<std::size_t> max_gap) {
    std::vector<std::size_t> obs;
    for (std::size_t t = 0; t < g.rows; ++t)
        if (g.is_original(t, s)) obs.push_back(t);
    const double first = g.at(obs.front(), s);
    const double last = g.at(obs.back(), s);
    for (std::size_t t = 0; t < g.rows; ++t) {
        if (g.is_filled(t, s)) continue;
        if (t < obs.front()) {
            if (!max_gap) g.fill(t, s, first, FillMethod::flat);
            continue;
        }
        if (t > obs.back()) {
            if (!max_gap) g.fill(t, s, last, FillMethod::flat);
            continue;
        }
        const auto next = std::upper_bound(obs.begin(), obs.end(), t);
        const std::size_t hi = *next;
        const std::size_t lo = *(next - 1);
        if (max_gap && hi - lo - 1 > *max_gap) continue;
        const double a = g.at(lo, s);
        const double b = g.at(hi, s);
        const double frac = static_cast<double>(t - lo) / static_cast<double>(hi - lo);
        g.fill(t, s, a + (b - a) * frac, FillMethod::linear);
    }
}

void fill_knn(Grid& g, std::size_t s, const DistanceMatrix& distances,
              const std::vector<std::string>& ids, std::size_t k) {
    std::vector<std::size_t> order;
    for (std::size_t j = 0; j < g.stations; ++j)
        if (j != s) order.push_back(j);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (distances(s, a) != distances(s, b)) return distances(s, a) < distances(s, b);
        return ids[a] < ids[b];
    });
    for (std::size_t t = 0; t < g.rows; ++t) {
        if (g.is_filled(t, s)) continue;
        std::vector<double> neighbors;
        for (std::size_t j : order) {
            if (neighbors.size() == k) break;
            if (g.is_original(t, j)) neighbors.push_back(g.at(t, j));
        }
        if (neighbors.empty()) continue;
        // v0 + mean of offsets: exact when all neighbor values coincide.
        const double v0 = neighbors.front();
        double offset = 0.0;
        for (double v : neighbors) offset += v - v0;
        g.fill(t, s, v0 + offset / static_cast<double>(neighbors.size()), FillMethod::knn);
    }
}

}  // namespace

ImputationResult impute(const Panel& panel, const DistanceMatrix& distances,
                        const IngestConfig& config) {
    const std::size_t n_st = panel.stations();
    const std::size_t n_rows = panel.rows();
    for (std::size_t s = 0; s < n_st; ++s) {
        if (panel.observed_count(s) < 2)
            throw DataError("station " + panel.station_ids()[s] +
                            " has fewer than 2 observed values; cannot impute");
    }
    const bool uses_knn = config.imputation != Imputation::linear;
    if (uses_knn) {
        if (distances.size() != n_st)
            throw DataError("distance matrix does not match panel stations");
        if (config.knn_k == 0 || config.knn_k >= n_st)
            throw ConfigError("knn_k must be in [1, station count)");
    }

    Grid g{n_rows, n_st, {}, {}, {}, {}};
    g.values.resize(n_rows * n_st);
    g.filled.resize(n_rows * n_st);
    for (std::size_t s = 0; s < n_st; ++s) {
        for (std::size_t t = 0; t < n_rows; ++t) {
            g.values[s * n_rows + t] = panel.value(t, s);
            g.filled[s * n_rows + t] = panel.observed(t, s) ? 1 : 0;
        }
    }
    g.original = g.filled;

    const auto ids = panel.station_ids();
    for (std::size_t s = 0; s < n_st; ++s) {
        switch (config.imputation) {
            case Imputation::linear:
                fill_linear(g, s, std::nullopt);
                break;
            case Imputation::knn:
                fill_knn(g, s, distances, ids, config.knn_k);
                fill_linear(g, s, std::nullopt);
                break;
            case Imputation::linear_then_knn:
                fill_linear(g, s, config.max_gap_for_linear.value_or(n_rows));
                fill_knn(g, s, distances, ids, config.knn_k);
                fill_linear(g, s, std::nullopt);
                break;
        }
    }

    std::vector<FilledCell> audit;
    audit.reserve(g.methods.size());
    for (const auto& [key, method] : g.methods)
        audit.push_back(FilledCell{key.second, ids[key.first], method, g.at(key.second, key.first)});
    std::vector<std::uint8_t> mask(n_rows * n_st, 1);
    return ImputationResult{
        Panel(panel.timestamps(), panel.frequency(), ids, std::move(g.values), std::move(mask)),
        std::move(audit)};
}

}  // namespace geopanel::ingest
