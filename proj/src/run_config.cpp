#include "geopanel/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace geopanel::cli {

using nlohmann::json;

namespace {

bool nonnegative_integer(const json& v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

/// Typed access to one config object, rejecting keys nobody asked about.
class Section {
public:
    Section(const json& parent, std::string name) : name_(std::move(name)) {
        if (!parent.contains(name_)) return;
        const json& j = parent.at(name_);
        if (!j.is_object()) throw ConfigError(name_ + " must be an object");
        node_ = &j;
    }
    Section(const json& root, std::string name, bool) : node_(&root), name_(std::move(name)) {}

    template <class T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!node_ || !node_->contains(key)) return;
        const json& v = node_->at(key);
        try {
            if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
                if (!nonnegative_integer(v)) throw ConfigError(path(key) + " must be a nonnegative integer");
            } else if constexpr (std::is_same_v<T, int>) {
                if (!v.is_number_integer()) throw ConfigError(path(key) + " must be an integer");
            } else if constexpr (std::is_same_v<T, double>) {
                if (!v.is_number()) throw ConfigError(path(key) + " must be a number");
            } else if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) throw ConfigError(path(key) + " must be a boolean");
            } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
                if (!v.is_array() || !std::all_of(v.begin(), v.end(), nonnegative_integer))
                    throw ConfigError(path(key) + " must be an array of nonnegative integers");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) throw ConfigError(path(key) + " must be a string");
            }
            out = v.get<T>();
        } catch (const json::exception&) {
            throw ConfigError(path(key) + " has the wrong type");
        }
    }

    template <class T>
    void get_optional(const char* key, std::optional<T>& out) {
        seen_.insert(key);
        if (!node_ || !node_->contains(key)) return;
        if (node_->at(key).is_null()) {
            out.reset();
            return;
        }
        T v{};
        get(key, v);
        out = v;
    }

    template <class E, class Parse>
    void get_enum(const char* key, E& out, Parse parse) {
        std::string text;
        get(key, text);
        if (node_ && node_->contains(key)) out = parse(text);
    }

    void mark(const char* key) { seen_.insert(key); }

    void finish() const {
        if (!node_) return;
        for (auto it = node_->begin(); it != node_->end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError("unknown config key " + path(it.key().c_str()));
    }

private:
    std::string path(const char* key) const { return name_.empty() ? key : name_ + "." + key; }

    const json* node_ = nullptr;
    std::string name_;
    std::set<std::string> seen_;
};

assembly::CorrelationMethod parse_method(std::string_view text) {
    if (text == "pearson") return assembly::CorrelationMethod::pearson;
    if (text == "spearman") return assembly::CorrelationMethod::spearman;
    throw ConfigError("unknown selection.method '" + std::string(text) + "' (expected pearson|spearman)");
}

std::string_view method_name(assembly::CorrelationMethod m) {
    return m == assembly::CorrelationMethod::spearman ? "spearman" : "pearson";
}

template <class T>
json opt(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

}  // namespace

json RunConfig::to_json() const {
    const auto& t = pipeline.features.temporal;
    const auto& r = pipeline.features.regime;
    const auto& sp = pipeline.features.spatial;
    const auto& sel = pipeline.selection;
    return json{
        {"paths", {{"stations", paths.stations}, {"panel", paths.panel}, {"outdir", paths.outdir}}},
        {"frequency", std::string(to_string(frequency))},
        {"ingest",
         {{"imputation", std::string(ingest::to_string(ingest.imputation))},
          {"knn_k", ingest.knn_k},
          {"max_gap_for_linear", opt(ingest.max_gap_for_linear)}}},
        {"temporal",
         {{"lags", t.lags},
          {"windows", t.windows},
          {"epsilon", t.epsilon},
          {"trend_degree", t.trend_degree},
          {"peak_percentile", t.peak_percentile},
          {"seasonal_periods", t.seasonal_periods},
          {"calendar", pipeline.features.calendar}}},
        {"regime", {{"short_window", r.short_window}, {"long_window", r.long_window}, {"epsilon", r.epsilon}}},
        {"spatial",
         {{"sigma", opt(sp.sigma)},
          {"k_nearest", sp.k_nearest},
          {"gradient_window", sp.gradient_window},
          {"sync_window", sp.sync_window},
          {"cross_windows", sp.cross_windows},
          {"kernel", std::string(spatial::to_string(sp.kernel))}}},
        {"selection",
         {{"enabled", pipeline.select},
          {"min_target_corr", sel.min_target_corr},
          {"redundancy_corr", sel.redundancy_corr},
          {"max_features", sel.max_features},
          {"always_keep", sel.always_keep},
          {"method", std::string(method_name(sel.method))}}},
        {"backend",
         {{"id", std::string(forecasting::to_string(backend.id))},
          {"lambda", backend.lambda},
          {"k", backend.k},
          {"weighting", std::string(forecasting::to_string(backend.weighting))},
          {"period", opt(backend.period)},
          {"command", backend.command},
          {"timeout_seconds", backend.timeout_seconds}}},
        {"split",
         {{"mode", std::string(evaluation::to_string(split.mode))},
          {"horizon", split.horizon},
          {"holdout_fraction", split.holdout_fraction},
          {"n_origins", split.n_origins},
          {"origin_stride", opt(split.origin_stride)}}},
        {"per_station", pipeline.per_station},
        {"seed", seed},
    };
}

std::string RunConfig::digest() const {
    json j = to_json();
    j.erase("paths");
    return config_digest(j);
}

std::size_t RunConfig::default_period() const {
    const auto& periods = pipeline.features.temporal.seasonal_periods;
    if (periods.empty()) return 1;
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(periods.front())));
}

json load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return json::parse(buf.str());
    } catch (const json::exception& e) {
        throw ConfigError("malformed config file " + path + ": " + e.what());
    }
}

RunConfig resolve_config(const json& file, const Overrides& overrides, const char* bridge_command) {
    if (!file.is_object()) throw ConfigError("config must be a JSON object");
    RunConfig c;
    Section root(file, "", true);

    std::string freq = "daily";
    root.get("frequency", freq);
    if (overrides.frequency) freq = *overrides.frequency;
    c.frequency = parse_frequency(freq);
    c.ingest.frequency = c.frequency;
    c.pipeline = forecasting::PipelineConfig::defaults(c.frequency);

    Section paths(file, "paths");
    paths.get("stations", c.paths.stations);
    paths.get("panel", c.paths.panel);
    paths.get("outdir", c.paths.outdir);
    paths.finish();

    Section ing(file, "ingest");
    ing.get_enum("imputation", c.ingest.imputation, ingest::parse_imputation);
    ing.get("knn_k", c.ingest.knn_k);
    ing.get_optional("max_gap_for_linear", c.ingest.max_gap_for_linear);
    ing.finish();

    auto& t = c.pipeline.features.temporal;
    Section tem(file, "temporal");
    tem.get("lags", t.lags);
    tem.get("windows", t.windows);
    tem.get("epsilon", t.epsilon);
    tem.get("trend_degree", t.trend_degree);
    tem.get("peak_percentile", t.peak_percentile);
    tem.get("seasonal_periods", t.seasonal_periods);
    tem.get("calendar", c.pipeline.features.calendar);
    tem.finish();

    auto& r = c.pipeline.features.regime;
    Section reg(file, "regime");
    reg.get("short_window", r.short_window);
    reg.get("long_window", r.long_window);
    reg.get("epsilon", r.epsilon);
    reg.finish();

    auto& sp = c.pipeline.features.spatial;
    Section spa(file, "spatial");
    spa.get_optional("sigma", sp.sigma);
    spa.get("k_nearest", sp.k_nearest);
    spa.get("gradient_window", sp.gradient_window);
    spa.get("sync_window", sp.sync_window);
    spa.get("cross_windows", sp.cross_windows);
    spa.get_enum("kernel", sp.kernel, spatial::parse_kernel);
    spa.finish();

    auto& sel = c.pipeline.selection;
    Section selc(file, "selection");
    selc.get("enabled", c.pipeline.select);
    selc.get("min_target_corr", sel.min_target_corr);
    selc.get("redundancy_corr", sel.redundancy_corr);
    selc.get("max_features", sel.max_features);
    selc.get("always_keep", sel.always_keep);
    selc.get_enum("method", sel.method, parse_method);
    selc.finish();

    Section be(file, "backend");
    be.get_enum("id", c.backend.id, forecasting::parse_backend_id);
    be.get("lambda", c.backend.lambda);
    be.get("k", c.backend.k);
    be.get_enum("weighting", c.backend.weighting, forecasting::parse_knn_weighting);
    be.get_optional("period", c.backend.period);
    be.get("command", c.backend.command);
    be.get("timeout_seconds", c.backend.timeout_seconds);
    be.finish();

    Section spl(file, "split");
    spl.get_enum("mode", c.split.mode, evaluation::parse_split_mode);
    spl.get("horizon", c.split.horizon);
    spl.get("holdout_fraction", c.split.holdout_fraction);
    spl.get("n_origins", c.split.n_origins);
    spl.get_optional("origin_stride", c.split.origin_stride);
    spl.finish();

    root.get("per_station", c.pipeline.per_station);
    root.get("seed", c.seed);
    for (const char* key : {"paths", "ingest", "temporal", "regime", "spatial", "selection", "backend", "split"})
        root.mark(key);
    root.finish();

    if (overrides.stations) c.paths.stations = *overrides.stations;
    if (overrides.panel) c.paths.panel = *overrides.panel;
    if (overrides.outdir) c.paths.outdir = *overrides.outdir;
    if (overrides.backend) c.backend.id = forecasting::parse_backend_id(*overrides.backend);
    if (overrides.horizon) c.split.horizon = *overrides.horizon;
    if (overrides.seed) c.seed = *overrides.seed;
    if (overrides.per_station) c.pipeline.per_station = true;
    if (bridge_command && *bridge_command) c.backend.command = bridge_command;

    if (c.ingest.knn_k < 1) throw ConfigError("ingest.knn_k must be >= 1");
    if (c.ingest.max_gap_for_linear && *c.ingest.max_gap_for_linear < 1)
        throw ConfigError("ingest.max_gap_for_linear must be >= 1");
    t.validate();
    r.validate();
    if (c.pipeline.select) sel.validate();
    c.backend.validate();
    c.split.validate();
    return c;
}

}  // namespace geopanel::cli
