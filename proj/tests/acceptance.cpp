// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "frame_oracle.hpp"
#include "geopanel/assembly.hpp"
#include "geopanel/backtest.hpp"
#include "geopanel/features.hpp"
#include "geopanel/ingest.hpp"
#include "geopanel/metrics.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace geopanel;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

bool run_criterion(const std::string& name, double budget_seconds, const std::function<Outcome()>& body) {
    const auto start = Clock::now();
    Outcome out;
    try {
        out = body();
    } catch (const std::exception& e) {
        out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (budget_seconds > 0 && secs > budget_seconds) {
        out.pass = false;
        out.detail += " (over the " + format_real(budget_seconds) + " s budget)";
    }
    char timing[32];
    std::snprintf(timing, sizeof timing, "%.2f s", secs);
    std::cout << (out.pass ? "PASS " : "FAIL ") << name << ": " << out.detail << " [" << timing << "]"
              << std::endl;
    return out.pass;
}

// ---------------------------------------------------------------------------

Outcome metric_oracle() {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> len(2, 500);
    std::uniform_real_distribution<double> u(-100, 300);
    std::uniform_real_distribution<double> pos(0.5, 50);
    std::size_t compared = 0, bad = 0;
    std::string first;
    auto expect = [&](bool ok, const std::string& what) {
        ++compared;
        if (!ok && bad++ == 0) first = what;
    };
    for (int pair = 0; pair < 1000; ++pair) {
        const std::size_t n = len(rng);
        std::vector<double> y(n), p(n);
        const bool positive = pair % 2 == 0;  // half the pairs keep MAPE and KGE defined
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = positive ? pos(rng) : u(rng);
            p[i] = positive ? pos(rng) : y[i] + 0.5 * u(rng);
        }
        const auto m = evaluation::score(y, p);
        const std::string tag = "pair " + std::to_string(pair);
        expect(oracle::close_rel(m.mse, oracle::mse(y, p), 1e-10), tag + " mse");
        expect(oracle::close_rel(m.rmse, std::sqrt(oracle::mse(y, p)), 1e-10), tag + " rmse");
        expect(oracle::close_rel(m.mae, oracle::mae(y, p), 1e-10), tag + " mae");
        const auto om = oracle::mape(y, p);
        expect(static_cast<bool>(m.mape) == static_cast<bool>(om), tag + " mape definedness");
        if (m.mape && om) expect(oracle::close_rel(*m.mape, *om, 1e-10), tag + " mape");
        const auto ok = oracle::kge(y, p);
        expect(static_cast<bool>(m.kge) == static_cast<bool>(ok), tag + " kge definedness");
        if (m.kge && ok) {
            expect(oracle::close_rel(*m.kge, ok->kge, 1e-10), tag + " kge");
            expect(oracle::close_rel(*m.r, ok->r, 1e-10), tag + " r");
            expect(oracle::close_rel(*m.beta, ok->beta, 1e-10), tag + " beta");
            expect(oracle::close_rel(*m.gamma, ok->gamma, 1e-10), tag + " gamma");
        }
        expect(m.mae <= m.rmse + 1e-12, tag + " mae <= rmse");
        if (positive) {
            std::vector<double> twice(y);
            for (double& v : twice) v *= 2;
            expect(std::fabs(*evaluation::kge(y, y).kge - 1.0) <= 1e-12, tag + " kge(y,y)");
            expect(std::fabs(*evaluation::kge(y, twice).kge) <= 1e-12, tag + " kge(y,2y)");
        }
    }
    return {bad == 0, std::to_string(compared) + " comparisons on 1000 pairs, " + std::to_string(bad) +
                          " mismatches" + (first.empty() ? "" : " (first: " + first + ")")};
}

Outcome feature_oracle() {
    std::mt19937_64 rng(99);
    const Frequency freqs[] = {Frequency::hourly, Frequency::daily, Frequency::monthly};
    const auto stations = synth::five_stations();
    const auto distances = ingest::compute_distances(stations);
    std::size_t cells = 0, bad = 0, series = 0;
    std::string first;
    for (int trial = 0; trial < 200; ++trial) {
        const Frequency f = freqs[trial % 3];
        const std::size_t n = 24 + rng() % 41;
        std::vector<std::vector<double>> values;
        for (std::size_t s = 0; s < 5; ++s) values.push_back(synth::random_series(n, rng(), -30, 60));
        series += 5;
        const Panel panel = synth::panel_of(values, f, stations.ids());
        auto cfg = features::FeatureConfig::defaults(f);
        if (trial % 4 == 1) cfg.temporal.trend_degree = 2;
        if (trial % 5 == 2) cfg.spatial.sigma = 2500.0;
        const auto ctx = features::make_context(panel, distances, cfg.spatial);
        const auto frame = features::compute_features(panel, ctx, cfg, 0, panel.rows());
        const auto check = oracle::check_frame(panel, distances, cfg, frame, 1e-12);
        cells += check.cells;
        if (check.mismatches > 0 && bad == 0) first = check.first;
        bad += check.mismatches;
    }
    return {bad == 0 && cells > 0, std::to_string(cells) + " cells over " + std::to_string(series) +
                                       " random series, " + std::to_string(bad) + " mismatches" +
                                       (first.empty() ? "" : " (first: " + first + ")")};
}

Outcome causality() {
    synth::Spec spec;
    spec.steps = 400;
    spec.frequency = Frequency::daily;
    spec.period = 7;
    spec.seed = 8;
    const auto data = synth::make(spec);
    const auto cfg = features::FeatureConfig::defaults(Frequency::daily);
    const features::FeatureFunction pipeline = [&](const Panel& p, std::size_t begin, std::size_t end) {
        const auto ctx = features::make_context(p, data.distances, cfg.spatial);
        return features::compute_features(p, ctx, cfg, begin, end);
    };
    const auto clean = assembly::causality_audit(pipeline, data.panel, 1000, 1);
    const auto leaky = assembly::causality_audit(assembly::with_centered_leak(pipeline), data.panel, 1000, 1);
    return {clean.passed() && !leaky.passed(),
            "clean pipeline " + std::to_string(clean.violations.size()) + "/1000 mismatches; centered mutant " +
                std::to_string(leaky.violations.size()) + "/1000 flagged"};
}

Outcome imputation() {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> coef(-10, 10);
    std::bernoulli_distribution drop(0.35);
    const auto stations = synth::five_stations();
    const auto distances = ingest::compute_distances(stations);
    const auto ids = stations.ids();
    double worst_linear = 0.0, worst_knn = 0.0;
    std::size_t filled_linear = 0, filled_knn = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 20 + rng() % 80;
        std::vector<std::vector<double>> truth(5, std::vector<double>(n));
        for (auto& s : truth) {
            const double a = coef(rng), b = coef(rng);
            for (std::size_t t = 0; t < n; ++t) s[t] = a + b * static_cast<double>(t);
        }
        std::vector<double> values;
        std::vector<std::uint8_t> mask;
        for (const auto& s : truth) {
            for (std::size_t t = 0; t < n; ++t) {
                const bool missing = t > 0 && t + 1 < n && drop(rng);
                values.push_back(missing ? 0.0 : s[t]);
                mask.push_back(missing ? 0 : 1);
            }
        }
        const Panel raw(synth::grid(Frequency::daily, n), Frequency::daily, ids, values, mask);
        const auto filled = ingest::impute(raw, distances, ingest::IngestConfig{}).panel;
        for (std::size_t s = 0; s < 5; ++s)
            for (std::size_t t = 0; t < n; ++t)
                if (!raw.observed(t, s)) {
                    ++filled_linear;
                    worst_linear = std::max(worst_linear, std::fabs(filled.value(t, s) - truth[s][t]));
                }

        // one shared signal, each time step missing at no more than two stations
        std::vector<double> signal = synth::random_series(n, rng(), -40, 40);
        std::vector<double> shared;
        std::vector<std::uint8_t> shared_mask(5 * n, 1);
        for (std::size_t s = 0; s < 5; ++s) shared.insert(shared.end(), signal.begin(), signal.end());
        for (std::size_t t = 0; t < n; ++t) {
            shared_mask[(rng() % 5) * n + t] = drop(rng) ? 0 : 1;
            shared_mask[(rng() % 5) * n + t] = drop(rng) ? 0 : 1;
        }
        for (std::size_t i = 0; i < shared.size(); ++i)
            if (!shared_mask[i]) shared[i] = 0.0;
        const Panel knn_raw(synth::grid(Frequency::daily, n), Frequency::daily, ids, shared, shared_mask);
        ingest::IngestConfig knn;
        knn.imputation = ingest::Imputation::knn;
        knn.knn_k = 2;
        const auto knn_filled = ingest::impute(knn_raw, distances, knn).panel;
        for (std::size_t s = 0; s < 5; ++s)
            for (std::size_t t = 0; t < n; ++t)
                if (!knn_raw.observed(t, s)) {
                    ++filled_knn;
                    worst_knn = std::max(worst_knn, std::fabs(knn_filled.value(t, s) - signal[t]));
                }
    }
    char buf[200];
    std::snprintf(buf, sizeof buf, "linear: %zu cells, max error %.3g; knn: %zu cells, max error %.3g",
                  filled_linear, worst_linear, filled_knn, worst_knn);
    return {worst_linear <= 1e-12 && worst_knn <= 1e-12 && filled_linear > 0 && filled_knn > 0,
            buf};
}

Outcome benchmark() {
    std::string detail;
    bool pass = true;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        synth::Spec spec;
        spec.steps = 500;
        spec.period = 12;
        spec.frequency = Frequency::monthly;
        spec.seed = seed;
        const auto data = synth::make(spec);
        const auto pipeline = forecasting::PipelineConfig::defaults(Frequency::monthly);
        evaluation::SplitSpec split;
        split.mode = evaluation::SplitMode::tail_holdout;
        split.horizon = 24;
        ingest::IngestConfig ingest_cfg;
        ingest_cfg.frequency = Frequency::monthly;
        auto rmse = [&](const forecasting::Backend& b) {
            return evaluation::backtest(data.panel, data.distances, ingest_cfg, pipeline, b, split, seed)
                .report.pooled.rmse;
        };
        const double ridge = rmse(forecasting::RidgeBackend(1.0));
        const double seasonal = rmse(forecasting::SeasonalNaiveBackend(12));
        const double naive = rmse(forecasting::NaiveBackend());
        const double gain_s = 1.0 - ridge / seasonal;
        const double gain_n = 1.0 - ridge / naive;
        const bool ok = gain_s >= 0.10 && gain_n >= 0.25;
        pass = pass && ok;
        char buf[160];
        std::snprintf(buf, sizeof buf, "%sseed %llu ridge %.3f vs seasonal %.3f (-%.0f%%) naive %.3f (-%.0f%%)",
                      detail.empty() ? "" : "; ", static_cast<unsigned long long>(seed), ridge, seasonal,
                      100 * gain_s, naive, 100 * gain_n);
        detail += buf;
    }
    return {pass, detail};
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(GEOPANEL_EXE) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("missing artifact " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism() {
    const fs::path dir = fs::path(TEST_SCRATCH_DIR) / "acceptance_determinism";
    fs::remove_all(dir);
    synth::Spec spec;
    spec.steps = 240;
    spec.missing_fraction = 0.03;
    spec.seed = 21;
    synth::write_fixture(synth::make(spec), dir);
    std::ofstream(dir / "config.json") << R"({"frequency": "monthly", "split": {"horizon": 12}})";
    std::vector<std::string> metrics, features, selected;
    for (const char* run : {"a", "b"}) {
        const fs::path out = dir / run;
        const std::string flags = "--config " + (dir / "config.json").string() + " --stations " +
                                  (dir / "stations.csv").string() + " --panel " + (dir / "panel.csv").string() +
                                  " --outdir " + out.string();
        if (run_cli("run " + flags) != 0) return {false, "run command failed"};
        if (run_cli("features " + flags) != 0) return {false, "features command failed"};
        metrics.push_back(slurp(out / "metrics.json"));
        features.push_back(slurp(out / "features.csv"));
        selected.push_back(slurp(out / "features_selected.csv"));
    }
    const bool same = metrics[0] == metrics[1] && features[0] == features[1] && selected[0] == selected[1];
    return {same, std::string("metrics.json ") + (metrics[0] == metrics[1] ? "identical" : "DIFFERS") +
                      ", features.csv " + (features[0] == features[1] ? "identical" : "DIFFERS") +
                      ", features_selected.csv " + (selected[0] == selected[1] ? "identical" : "DIFFERS")};
}

Outcome selection() {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0, 1);
    const std::size_t n = 200;
    std::vector<std::string> schema{"constant", "copy_a", "copy_b", "noise", "partial"};
    std::vector<RowKey> keys;
    std::vector<double> data, target;
    for (std::size_t r = 0; r < n; ++r) {
        const double y = g(rng);
        const double noise = g(rng);
        keys.push_back({"S", r});
        target.push_back(y);
        // copy_a and copy_b duplicate the target signal
        data.insert(data.end(), {7.0, y, y, noise, 0.5 * y + g(rng)});
    }
    const FeatureTable table(schema, keys, data, target, {});
    assembly::SelectionConfig cfg;
    cfg.always_keep = {};
    cfg.min_target_corr = 0.2;
    const auto a = assembly::select_features(table, cfg);
    const auto b = assembly::select_features(table, cfg);

    bool redundant = false, constant_dropped = false, constant_r0 = false;
    for (const auto& d : a.report.dropped) {
        if (d.name == "copy_b" && d.reason_text() == "redundant_with:copy_a") redundant = true;
        if (d.name == "constant" && d.reason == assembly::DropReason::low_target_corr) constant_dropped = true;
    }
    for (const auto& [name, r] : a.report.target_corrs)
        if (name == "constant" && r == 0.0) constant_r0 = true;
    const bool deterministic = a.report.to_json() == b.report.to_json() && a.table.schema() == b.table.schema() &&
                             a.table.data() == b.table.data();
    const bool kept_ok = a.report.kept == std::vector<std::string>{"copy_a", "partial"};
    return {redundant && constant_dropped && constant_r0 && deterministic && kept_ok,
            std::string("duplicate ") + (redundant ? "pruned as redundant" : "NOT pruned") + ", constant " +
                (constant_dropped && constant_r0 ? "dropped with r=0" : "NOT dropped with r=0") + ", order " +
                (deterministic ? "deterministic" : "NOT deterministic") + ", kept " +
                (kept_ok ? "{copy_a, partial}" : "unexpected")};
}

}  // namespace

int main() {
    fs::create_directories(TEST_SCRATCH_DIR);
    bool all = true;
    all &= run_criterion("metric_oracle", 5, metric_oracle);
    all &= run_criterion("feature_oracle", 30, feature_oracle);
    all &= run_criterion("causality_audit", 60, causality);
    all &= run_criterion("imputation_exactness", 0, imputation);
    all &= run_criterion("synthetic_benchmark", 120, benchmark);
    all &= run_criterion("determinism", 0, determinism);
    all &= run_criterion("selection", 0, selection);
    std::cout << (all ? "ALL PASS" : "SOME CRITERIA FAILED") << std::endl;
    return all ? 0 : 1;
}
