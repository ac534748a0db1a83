#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "geopanel/core.hpp"

namespace {

void add_common(CLI::App& cmd, geopanel::cli::CommonOptions& opts) {
    auto& o = opts.overrides;
    cmd.add_option("--config", opts.config, "JSON run configuration");
    cmd.add_option("--stations", o.stations, "stations CSV");
    cmd.add_option("--panel", o.panel, "wide panel CSV");
    cmd.add_option("--frequency", o.frequency, "hourly|daily|monthly");
    cmd.add_option("--backend", o.backend, "ridge|knn|naive|seasonal_naive|external");
    cmd.add_option("--horizon", o.horizon, "forecast horizon in steps");
    cmd.add_option("--seed", o.seed, "random seed");
    cmd.add_option("--outdir", o.outdir, "output directory");
    cmd.add_flag("--per-station", o.per_station, "fit one model per station");
}

}  // namespace

int main(int argc, char** argv) {
    using namespace geopanel;
    CLI::App app{"Multi-station spatiotemporal forecasting toolkit"};
    app.require_subcommand(1);

    cli::CommonOptions run_opts, feat_opts, audit_opts;
    auto* run = app.add_subcommand("run", "backtest the configured pipeline and write reports");
    add_common(*run, run_opts);

    auto* feat = app.add_subcommand("features", "write the assembled feature tables as CSV");
    add_common(*feat, feat_opts);
    std::optional<std::string> feat_out;
    feat->add_option("--out", feat_out, "CSV path for the pre-selection table");

    auto* audit = app.add_subcommand("audit", "check that features never read future rows");
    add_common(*audit, audit_opts);
    long long probes = 1000;
    bool inject_leak = false;
    audit->add_option("--probes", probes, "random (station, t, feature) probes");
    audit->add_flag("--inject-leak", inject_leak, "add a future-reading column (test hook)");

    auto* report = app.add_subcommand("report", "re-render reports from saved forecasts");
    std::string report_dir;
    std::optional<std::string> report_out;
    report->add_option("--outdir", report_dir, "directory holding plotdata.json")->required();
    report->add_option("--out", report_out, "destination directory (default: --outdir)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*run) return cli::cmd_run(run_opts, std::cout);
        if (*feat) return cli::cmd_features(feat_opts, feat_out, std::cout);
        if (*audit) {
            if (probes < 1) throw ConfigError("--probes must be >= 1");
            return cli::cmd_audit(audit_opts, static_cast<std::size_t>(probes), inject_leak, std::cout);
        }
        if (*report) return cli::cmd_report(report_dir, report_out, std::cout);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const BackendError& e) {
        std::cerr << "backend error: " << e.what() << " (completed steps: " << e.completed_steps() << ")\n";
        return 4;
    } catch (const SchemaMismatch& e) {
        std::cerr << "backend error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 5;
    }
    return 5;
}
