#include "commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "geopanel/assembly.hpp"
#include "geopanel/backtest.hpp"
#include "geopanel/features.hpp"
#include "geopanel/forecast.hpp"
#include "geopanel/ingest.hpp"
#include "geopanel/report.hpp"

namespace geopanel::cli {

namespace fs = std::filesystem;

namespace {

RunConfig load(const CommonOptions& opts) {
    const nlohmann::json file = opts.config ? load_config_file(*opts.config) : nlohmann::json::object();
    return resolve_config(file, opts.overrides, std::getenv("GEOPANEL_BRIDGE_CMD"));
}

struct Inputs {
    StationSet stations;
    Panel raw;
    DistanceMatrix distances;
};

Inputs read_inputs(const RunConfig& c) {
    if (c.paths.stations.empty()) throw ConfigError("no stations file given (paths.stations or --stations)");
    if (c.paths.panel.empty()) throw ConfigError("no panel file given (paths.panel or --panel)");
    auto with_path = [](const std::string& path, auto&& parse) {
        try {
            return parse(ingest::read_file(path));
        } catch (const ParseError& e) {
            throw ParseError(path + ": " + e.what(), e.row());
        }
    };
    StationSet stations = with_path(c.paths.stations, [](const std::string& text) { return ingest::parse_stations(text); });
    Panel raw = with_path(c.paths.panel, [&](const std::string& text) {
        return ingest::parse_panel(text, c.frequency, stations);
    });
    if (c.ingest.knn_k >= stations.size())
        throw ConfigError("ingest.knn_k must be smaller than the station count (" + std::to_string(stations.size()) + ")");
    c.pipeline.features.validate(stations.size());
    DistanceMatrix distances = ingest::compute_distances(stations);
    return Inputs{std::move(stations), std::move(raw), std::move(distances)};
}

std::string table_csv(const FeatureTable& table, const Panel& panel) {
    std::string out = "station,time_index,timestamp";
    for (const auto& name : table.schema()) out += ',' + name;
    if (table.has_target()) out += ",target";
    out += '\n';
    for (std::size_t r = 0; r < table.rows(); ++r) {
        const auto& key = table.keys()[r];
        out += key.station + ',' + std::to_string(key.time_index) + ',' +
               format_timestamp(panel.timestamps()[key.time_index], panel.frequency());
        for (std::size_t c = 0; c < table.cols(); ++c) out += ',' + format_real17(table.at(r, c));
        if (table.has_target()) out += ',' + format_real17(table.target()[r]);
        out += '\n';
    }
    return out;
}

}  // namespace

int cmd_run(const CommonOptions& opts, std::ostream& out) {
    const RunConfig c = load(opts);
    const std::string digest = c.digest();
    std::ostringstream log;
    log << "config_digest " << digest << '\n';

    const Inputs in = read_inputs(c);
    log << "stations " << in.stations.size() << '\n' << "rows " << in.raw.rows() << '\n';
    for (std::size_t s = 0; s < in.raw.stations(); ++s)
        log << "observed " << in.raw.station_ids()[s] << ' ' << in.raw.observed_count(s) << '/' << in.raw.rows() << '\n';

    const auto backend = forecasting::make_backend(c.backend, c.default_period());
    log << "backend " << backend->id() << '\n';
    const auto result = evaluation::backtest(in.raw, in.distances, c.ingest, c.pipeline, *backend, c.split, c.seed, digest);
    for (const auto& o : result.origins) log << "origin " << o.origin << " horizon " << o.forecast.horizon() << '\n';
    log << "selected_features " << result.selection.kept.size() << '\n';

    const fs::path outdir = c.paths.outdir;
    const evaluation::ReportInputs report{result.report, result.origins, in.raw, backend->id(), digest};
    evaluation::emit_report(outdir, report);
    evaluation::write_text(outdir / "selection_report.json", to_json_text(result.selection.to_json()));
    nlohmann::json snapshot = c.to_json();
    snapshot["config_digest"] = digest;
    evaluation::write_text(outdir / "resolved_config.json", to_json_text(snapshot));
    log << "pooled_rmse " << format_real17(result.report.pooled.rmse) << '\n';
    evaluation::write_text(outdir / "run.log", log.str());

    out << "pooled RMSE " << format_real17(result.report.pooled.rmse) << " (" << backend->id() << ", "
        << result.origins.size() << " origin(s)); artifacts in " << outdir.string() << '\n';
    return 0;
}

int cmd_features(const CommonOptions& opts, const std::optional<std::string>& out_path, std::ostream& out) {
    const RunConfig c = load(opts);
    const Inputs in = read_inputs(c);
    const Panel panel = ingest::impute(in.raw, in.distances, c.ingest).panel;
    const auto training = forecasting::prepare_training(panel, in.distances, c.pipeline);

    const fs::path full_path = out_path ? fs::path(*out_path) : fs::path(c.paths.outdir) / "features.csv";
    fs::path selected_path = full_path;
    selected_path.replace_filename(full_path.stem().string() + "_selected" + full_path.extension().string());
    if (full_path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(full_path.parent_path(), ec);
        if (ec) throw DataError("cannot create directory " + full_path.parent_path().string() + ": " + ec.message());
    }
    evaluation::write_text(full_path, table_csv(training.full, panel));
    evaluation::write_text(selected_path, table_csv(training.selection.table, panel));
    evaluation::write_text(full_path.parent_path() / "selection_report.json",
                           to_json_text(training.selection.report.to_json()));
    out << training.full.cols() << " columns -> " << full_path.string() << '\n'
        << training.selection.table.cols() << " columns after selection -> " << selected_path.string() << '\n';
    return 0;
}

int cmd_audit(const CommonOptions& opts, std::size_t probes, bool inject_leak, std::ostream& out) {
    const RunConfig c = load(opts);
    if (probes < 1) throw ConfigError("--probes must be >= 1");
    const Inputs in = read_inputs(c);
    const Panel panel = ingest::impute(in.raw, in.distances, c.ingest).panel;
    const auto& fc = c.pipeline.features;
    const DistanceMatrix& distances = in.distances;
    features::FeatureFunction pipeline = [&](const Panel& p, std::size_t begin, std::size_t end) {
        const auto ctx = features::make_context(p, distances, fc.spatial);
        return features::compute_features(p, ctx, fc, begin, end);
    };
    if (inject_leak) pipeline = assembly::with_centered_leak(pipeline);
    const auto report = assembly::causality_audit(pipeline, panel, probes, c.seed);
    for (const auto& v : report.violations)
        out << "VIOLATION station=" << v.station << " t=" << v.t << " feature=" << v.feature
            << " full=" << format_real17(v.full_value) << " truncated=" << format_real17(v.truncated_value) << '\n';
    out << report.probes << " probes, " << report.violations.size() << " violation(s)\n";
    return report.passed() ? 0 : 1;
}

int cmd_report(const std::string& dir, const std::optional<std::string>& out_dir, std::ostream& out) {
    const fs::path src = dir;
    const auto saved = evaluation::parse_plotdata(ingest::read_file((src / "plotdata.json").string()));
    const auto report = evaluation::score_origins(saved.station_ids, saved.origins);
    const fs::path dst = out_dir ? fs::path(*out_dir) : src;
    std::error_code ec;
    fs::create_directories(dst, ec);
    if (ec) throw DataError("cannot create output directory " + dst.string() + ": " + ec.message());
    evaluation::write_text(dst / "metrics.json", evaluation::metrics_json(report, saved.backend_id, saved.config_digest));
    evaluation::write_text(dst / "metrics.csv", evaluation::metrics_csv(report));
    for (std::size_t s = 0; s < saved.station_ids.size(); ++s) {
        const auto& id = saved.station_ids[s];
        evaluation::write_text(dst / ("forecast_" + id + ".csv"),
                               evaluation::forecast_csv(id, s, saved.origins, saved.frequency));
    }
    out << "re-rendered " << saved.origins.size() << " origin(s) into " << dst.string() << '\n';
    return 0;
}

}  // namespace geopanel::cli
