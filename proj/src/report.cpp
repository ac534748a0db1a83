#include "geopanel/report.hpp"

#include <cmath>
#include <fstream>

namespace geopanel::evaluation {

using nlohmann::json;

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

json metrics_to_json(const Metrics& m) {
    json j;
    j["n"] = m.n;
    j["mse"] = m.mse;
    j["rmse"] = m.rmse;
    j["mae"] = m.mae;
    j["mape"] = optional_number(m.mape);
    j["kge"] = optional_number(m.kge);
    j["r"] = optional_number(m.r);
    j["beta"] = optional_number(m.beta);
    j["gamma"] = optional_number(m.gamma);
    if (!m.mape_refusal.empty()) j["mape_refusal"] = m.mape_refusal;
    if (!m.kge_refusal.empty()) j["kge_refusal"] = m.kge_refusal;
    return j;
}

Metrics metrics_from_json(const json& j) {
    Metrics m;
    m.n = j.at("n").get<std::size_t>();
    m.mse = j.at("mse").get<double>();
    m.rmse = j.at("rmse").get<double>();
    m.mae = j.at("mae").get<double>();
    m.mape = read_optional(j, "mape");
    m.kge = read_optional(j, "kge");
    m.r = read_optional(j, "r");
    m.beta = read_optional(j, "beta");
    m.gamma = read_optional(j, "gamma");
    m.mape_refusal = j.value("mape_refusal", std::string{});
    m.kge_refusal = j.value("kge_refusal", std::string{});
    return m;
}

json stations_to_json(const std::vector<StationMetrics>& stations) {
    json out = json::object();
    for (const auto& s : stations) out[s.station] = metrics_to_json(s.metrics);
    return out;
}

std::vector<StationMetrics> stations_from_json(const json& j) {
    std::vector<StationMetrics> out;
    for (auto it = j.begin(); it != j.end(); ++it) out.push_back({it.key(), metrics_from_json(it.value())});
    return out;
}

std::string csv_cell(const std::optional<double>& v) { return v ? format_real17(*v) : "n/a"; }

void csv_row(std::string& out, const std::string& label, const Metrics& m) {
    out += label + ',' + std::to_string(m.n) + ',' + format_real17(m.mse) + ',' + format_real17(m.rmse) + ',' +
           format_real17(m.mae) + ',' + csv_cell(m.mape) + ',' + csv_cell(m.kge) + ',' + csv_cell(m.r) + ',' +
           csv_cell(m.beta) + ',' + csv_cell(m.gamma) + '\n';
}

json series_json(const std::vector<double>& v) {
    json out = json::array();
    for (double x : v) out.push_back(std::isnan(x) ? json(nullptr) : json(x));
    return out;
}

std::vector<double> series_from_json(const json& j) {
    std::vector<double> out;
    for (const auto& e : j) out.push_back(e.is_null() ? std::nan("") : e.get<double>());
    return out;
}

json timestamps_json(const std::vector<Timestamp>& ts, Frequency f) {
    json out = json::array();
    for (Timestamp t : ts) out.push_back(format_timestamp(t, f));
    return out;
}

json parse_json_text(const std::string& text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed ") + what + ": " + e.what());
    }
}

}  // namespace

std::string metrics_json(const MetricReport& report, const std::string& backend_id,
                         const std::string& config_digest) {
    json j;
    j["backend_id"] = backend_id;
    j["config_digest"] = config_digest;
    j["stations"] = stations_to_json(report.stations);
    j["pooled"] = metrics_to_json(report.pooled);
    json origins = json::array();
    for (const auto& o : report.origins) {
        origins.push_back({{"origin", o.origin},
                           {"stations", stations_to_json(o.stations)},
                           {"pooled", metrics_to_json(o.pooled)}});
    }
    j["origins"] = std::move(origins);
    return to_json_text(j);
}

MetricReport parse_metrics_json(const std::string& text) {
    const json j = parse_json_text(text, "metrics.json");
    try {
        MetricReport r;
        r.stations = stations_from_json(j.at("stations"));
        r.pooled = metrics_from_json(j.at("pooled"));
        for (const auto& o : j.at("origins")) {
            OriginMetrics om;
            om.origin = o.at("origin").get<std::size_t>();
            om.stations = stations_from_json(o.at("stations"));
            om.pooled = metrics_from_json(o.at("pooled"));
            r.origins.push_back(std::move(om));
        }
        return r;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed metrics.json: ") + e.what());
    }
}

std::string metrics_csv(const MetricReport& report) {
    std::string out = "station,n,mse,rmse,mae,mape,kge,r,beta,gamma\n";
    for (const auto& s : report.stations) csv_row(out, s.station, s.metrics);
    csv_row(out, "pooled", report.pooled);
    return out;
}

std::string forecast_csv(const std::string& station, std::size_t station_index,
                         const std::vector<OriginForecast>& origins, Frequency frequency) {
    std::string out = "timestamp,observed,predicted\n";
    for (const auto& o : origins) {
        const auto& pred = o.forecast.predictions(station);
        const auto& obs = o.observed.at(station_index);
        const auto& ts = o.forecast.timestamps();
        for (std::size_t h = 0; h < pred.size(); ++h) {
            out += format_timestamp(ts[h], frequency) + ',';
            if (!std::isnan(obs[h])) out += format_real17(obs[h]);
            out += ',' + format_real17(pred[h]) + '\n';
        }
    }
    return out;
}

std::string plotdata_json(const ReportInputs& in) {
    const Panel& raw = in.raw;
    const Frequency f = raw.frequency();
    json j;
    j["backend_id"] = in.backend_id;
    j["config_digest"] = in.config_digest;
    j["frequency"] = std::string(to_string(f));
    j["stations"] = raw.station_ids();

    const std::size_t end = in.origins.empty() ? raw.rows() : in.origins.front().origin + 1;
    const std::size_t begin = end > in.history_tail ? end - in.history_tail : 0;
    json history;
    history["timestamps"] = timestamps_json({raw.timestamps().begin() + begin, raw.timestamps().begin() + end}, f);
    json values = json::object();
    for (std::size_t s = 0; s < raw.stations(); ++s) {
        std::vector<double> v;
        for (std::size_t t = begin; t < end; ++t) v.push_back(raw.observed(t, s) ? raw.value(t, s) : std::nan(""));
        values[raw.station_ids()[s]] = series_json(v);
    }
    history["values"] = std::move(values);
    j["history"] = std::move(history);

    json origins = json::array();
    for (const auto& o : in.origins) {
        json oj;
        oj["origin"] = o.origin;
        oj["horizon"] = o.forecast.horizon();
        oj["timestamps"] = timestamps_json(o.forecast.timestamps(), f);
        json observed = json::object();
        json predicted = json::object();
        for (std::size_t s = 0; s < raw.stations(); ++s) {
            const auto& id = raw.station_ids()[s];
            observed[id] = series_json(o.observed.at(s));
            predicted[id] = series_json(o.forecast.predictions(id));
        }
        oj["observed"] = std::move(observed);
        oj["predicted"] = std::move(predicted);
        origins.push_back(std::move(oj));
    }
    j["origins"] = std::move(origins);
    return to_json_text(j);
}

SavedForecasts parse_plotdata(const std::string& text) {
    const json j = parse_json_text(text, "plotdata.json");
    try {
        SavedForecasts out;
        out.backend_id = j.at("backend_id").get<std::string>();
        out.config_digest = j.at("config_digest").get<std::string>();
        out.frequency = parse_frequency(j.at("frequency").get<std::string>());
        out.station_ids = j.at("stations").get<std::vector<std::string>>();
        for (const auto& oj : j.at("origins")) {
            std::vector<Timestamp> ts;
            for (const auto& t : oj.at("timestamps")) {
                const auto parsed = parse_timestamp(t.get<std::string>());
                if (!parsed) throw DataError("malformed plotdata.json: bad timestamp " + t.get<std::string>());
                ts.push_back(*parsed);
            }
            std::vector<StationForecast> preds;
            std::vector<std::vector<double>> observed;
            for (const auto& id : out.station_ids) {
                preds.push_back({id, series_from_json(oj.at("predicted").at(id))});
                observed.push_back(series_from_json(oj.at("observed").at(id)));
            }
            out.origins.push_back(OriginForecast{
                oj.at("origin").get<std::size_t>(),
                ForecastSet(oj.at("horizon").get<std::size_t>(), out.backend_id, out.config_digest,
                            std::move(ts), std::move(preds)),
                std::move(observed)});
        }
        return out;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed plotdata.json: ") + e.what());
    }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw DataError("write failed: " + path.string());
}

std::vector<std::filesystem::path> emit_report(const std::filesystem::path& outdir,
                                               const ReportInputs& in) {
    std::error_code ec;
    std::filesystem::create_directories(outdir, ec);
    if (ec) throw DataError("cannot create output directory " + outdir.string() + ": " + ec.message());
    std::vector<std::filesystem::path> written;
    auto put = [&](const std::string& name, const std::string& text) {
        const auto path = outdir / name;
        write_text(path, text);
        written.push_back(path);
    };
    put("metrics.json", metrics_json(in.report, in.backend_id, in.config_digest));
    put("metrics.csv", metrics_csv(in.report));
    const auto& ids = in.raw.station_ids();
    for (std::size_t s = 0; s < ids.size(); ++s)
        put("forecast_" + ids[s] + ".csv", forecast_csv(ids[s], s, in.origins, in.raw.frequency()));
    put("plotdata.json", plotdata_json(in));
    return written;
}

}  // namespace geopanel::evaluation
