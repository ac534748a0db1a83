#include "geopanel/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "geopanel/spatial.hpp"

namespace geopanel::assembly {

namespace {

std::vector<std::size_t> stations_by_id(const std::vector<std::string>& ids) {
    std::vector<std::size_t> order(ids.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
    return order;
}

void append_row(const features::FeatureFrame& frame, std::size_t s, std::size_t t,
                const std::vector<std::size_t>& order, std::vector<double>& data) {
    for (std::size_t f = 0; f < frame.features(); ++f) data.push_back(frame.at(s, t, f));
    for (std::size_t o : order) data.push_back(o == s ? 1.0 : 0.0);
}

}  // namespace

std::vector<std::string> table_schema(const features::FeatureFrame& frame) {
    std::vector<std::string> schema = frame.names();
    for (std::size_t o : stations_by_id(frame.station_ids()))
        schema.push_back("station_" + frame.station_ids()[o]);
    return schema;
}

FeatureTable assemble(const Panel& panel, const features::FeatureFrame& frame,
                      std::size_t horizon) {
    if (horizon < 1) throw std::invalid_argument("target horizon must be >= 1");
    if (frame.station_ids() != panel.station_ids()) throw DataError("feature frame does not match panel");
    const std::size_t first = std::max(frame.warmup(), frame.row_begin());
    const std::size_t limit = std::min(frame.row_end(), panel.rows() > horizon ? panel.rows() - horizon : 0);
    const auto order = stations_by_id(frame.station_ids());

    std::vector<RowKey> keys;
    std::vector<double> data;
    std::vector<double> target;
    for (std::size_t s : order) {
        for (std::size_t t = first; t < limit; ++t) {
            keys.push_back(RowKey{frame.station_ids()[s], t});
            append_row(frame, s, t, order, data);
            target.push_back(panel.value(t + horizon, s));
        }
    }
    if (keys.empty()) throw DataError("feature table is empty after dropping warm-up rows");
    return FeatureTable(table_schema(frame), std::move(keys), std::move(data), std::move(target), {});
}

FeatureTable frontier_rows(const features::FeatureFrame& frame, std::size_t t) {
    if (t < frame.warmup() || t < frame.row_begin() || t >= frame.row_end())
        throw std::invalid_argument("frontier row is outside the defined feature range");
    const auto order = stations_by_id(frame.station_ids());
    std::vector<RowKey> keys;
    std::vector<double> data;
    for (std::size_t s : order) {
        keys.push_back(RowKey{frame.station_ids()[s], t});
        append_row(frame, s, t, order, data);
    }
    std::vector<RowRole> roles(keys.size(), RowRole::query);
    return FeatureTable(table_schema(frame), std::move(keys), std::move(data), {}, std::move(roles));
}

// ---------------------------------------------------------------------------
// Selection
// ---------------------------------------------------------------------------

void SelectionConfig::validate() const {
    if (!(min_target_corr >= 0.0 && min_target_corr < 1.0))
        throw ConfigError("selection.min_target_corr must be in [0, 1)");
    if (!(redundancy_corr > 0.0 && redundancy_corr <= 1.0))
        throw ConfigError("selection.redundancy_corr must be in (0, 1]");
    if (!(min_target_corr < redundancy_corr))
        throw ConfigError("selection.min_target_corr must be below selection.redundancy_corr");
    if (max_features < 1) throw ConfigError("selection.max_features must be >= 1");
}

std::string DroppedFeature::reason_text() const {
    switch (reason) {
        case DropReason::low_target_corr: return "low_target_corr";
        case DropReason::redundant: return "redundant_with:" + blocker;
        case DropReason::overflow: return "overflow";
    }
    return "";
}

nlohmann::json SelectionReport::to_json() const {
    nlohmann::json j;
    j["kept"] = kept;
    j["dropped"] = nlohmann::json::array();
    for (const auto& d : dropped) j["dropped"].push_back({{"name", d.name}, {"reason", d.reason_text()}});
    nlohmann::json corrs = nlohmann::json::object();
    for (const auto& [name, r] : target_corrs) corrs[name] = r;
    j["target_corrs"] = corrs;
    return j;
}

bool glob_match(std::string_view pattern, std::string_view name) {
    std::size_t p = 0, n = 0, star = std::string_view::npos, mark = 0;
    while (n < name.size()) {
        if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == name[n])) {
            ++p;
            ++n;
        } else if (p < pattern.size() && pattern[p] == '*') {
            star = p++;
            mark = n;
        } else if (star != std::string_view::npos) {
            p = star + 1;
            n = ++mark;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '*') ++p;
    return p == pattern.size();
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

}  // namespace

Selection select_features(const FeatureTable& table, const SelectionConfig& config,
                          const RowObserver& observer) {
    config.validate();
    if (!table.has_target()) throw DataError("feature selection needs a target column");

    std::vector<std::size_t> train_rows;
    for (std::size_t r = 0; r < table.rows(); ++r)
        if (table.roles()[r] == RowRole::train) train_rows.push_back(r);
    if (train_rows.size() < 10) throw DataError("feature selection needs at least 10 training rows");

    const std::size_t n_cols = table.cols();
    std::vector<std::vector<double>> cols(n_cols, std::vector<double>(train_rows.size()));
    std::vector<double> target(train_rows.size());
    for (std::size_t i = 0; i < train_rows.size(); ++i) {
        const std::size_t r = train_rows[i];
        if (observer) observer(r);
        for (std::size_t c = 0; c < n_cols; ++c) cols[c][i] = table.at(r, c);
        target[i] = table.target()[r];
    }
    if (config.method == CorrelationMethod::spearman) {
        for (auto& c : cols) c = ranks(c);
        target = ranks(target);
    }

    const auto& schema = table.schema();
    auto protected_name = [&](const std::string& name) {
        return std::any_of(config.always_keep.begin(), config.always_keep.end(),
                           [&](const std::string& g) { return glob_match(g, name); });
    };

    SelectionReport report;
    std::vector<double> corr(n_cols);
    for (std::size_t c = 0; c < n_cols; ++c) {
        corr[c] = std::abs(spatial::pearson(cols[c], target));
        report.target_corrs.emplace_back(schema[c], corr[c]);
    }

    std::vector<std::size_t> candidates;
    for (std::size_t c = 0; c < n_cols; ++c) {
        if (corr[c] < config.min_target_corr && !protected_name(schema[c]))
            report.dropped.push_back({schema[c], DropReason::low_target_corr, ""});
        else
            candidates.push_back(c);
    }
    auto by_strength = [&](std::size_t a, std::size_t b) {
        if (corr[a] != corr[b]) return corr[a] > corr[b];
        return schema[a] < schema[b];
    };
    std::sort(candidates.begin(), candidates.end(), by_strength);

    std::vector<std::size_t> survivors;
    for (std::size_t c : candidates) {
        std::optional<std::size_t> blocker;
        for (std::size_t k : survivors) {
            if (std::abs(spatial::pearson(cols[c], cols[k])) > config.redundancy_corr) {
                blocker = k;
                break;
            }
        }
        if (blocker)
            report.dropped.push_back({schema[c], DropReason::redundant, schema[*blocker]});
        else
            survivors.push_back(c);
    }

    std::vector<std::size_t> kept;
    std::size_t n_protected = 0;
    for (std::size_t c : survivors)
        if (protected_name(schema[c])) ++n_protected;
    std::size_t budget = config.max_features > n_protected ? config.max_features - n_protected : 0;
    for (std::size_t c : survivors) {  // survivors are already in descending-|r| order
        if (protected_name(schema[c])) {
            kept.push_back(c);
        } else if (budget > 0) {
            kept.push_back(c);
            --budget;
        } else {
            report.dropped.push_back({schema[c], DropReason::overflow, ""});
        }
    }
    std::sort(kept.begin(), kept.end());
    for (std::size_t c : kept) report.kept.push_back(schema[c]);
    if (report.kept.empty()) throw DataError("feature selection kept no features");

    return Selection{table.select_columns(report.kept), std::move(report)};
}

// ---------------------------------------------------------------------------
// Causality audit
// ---------------------------------------------------------------------------

AuditReport causality_audit(const features::FeatureFunction& pipeline, const Panel& panel,
                            std::size_t probes, std::uint64_t seed) {
    if (probes < 1) throw ConfigError("causality audit needs at least one probe");
    if (panel.rows() < 1) throw DataError("causality audit needs a nonempty panel");
    const features::FeatureFrame full = pipeline(panel, 0, panel.rows());
    const std::size_t warm = full.warmup();
    if (warm >= panel.rows()) throw DataError("panel is too short for any feature to be defined");

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick_station(0, panel.stations() - 1);
    std::uniform_int_distribution<std::size_t> pick_t(0, panel.rows() - 1);
    std::uniform_int_distribution<std::size_t> pick_feature(0, full.features() - 1);

    AuditReport report;
    report.probes = probes;
    for (std::size_t p = 0; p < probes; ++p) {
        const std::size_t s = pick_station(rng);
        std::size_t t = pick_t(rng);
        std::size_t f = pick_feature(rng);
        while (t < full.first_valid()[f]) {
            t = pick_t(rng);
            f = pick_feature(rng);
        }
        const features::FeatureFrame cut = pipeline(panel.truncated(t + 1), t, t + 1);
        const std::size_t fc = cut.index_of(full.names()[f]);
        const double a = full.at(s, t, f);
        const double b = cut.at(s, t, fc);
        const bool same = a == b || (std::isnan(a) && std::isnan(b));
        if (!same) report.violations.push_back({panel.station_ids()[s], t, full.names()[f], a, b});
    }
    return report;
}

features::FeatureFunction with_centered_leak(features::FeatureFunction base, std::size_t window) {
    return [base = std::move(base), window](const Panel& panel, std::size_t begin, std::size_t end) {
        features::FeatureFrame frame = base(panel, begin, end);
        const std::size_t half = window / 2;
        const std::size_t rows = end - begin;
        std::vector<double> col(rows * panel.stations());
        for (std::size_t s = 0; s < panel.stations(); ++s) {
            const auto x = panel.series(s);
            for (std::size_t t = begin; t < end; ++t) {
                const std::size_t lo = t >= half ? t - half : 0;
                const std::size_t hi = std::min(panel.rows() - 1, t + half);
                double sum = 0.0;
                for (std::size_t u = lo; u <= hi; ++u) sum += x[u];
                col[s * rows + (t - begin)] = sum / static_cast<double>(hi - lo + 1);
            }
        }
        frame.add_column("leak_centered_mean", 0, col);
        return frame;
    };
}

}  // namespace geopanel::assembly
