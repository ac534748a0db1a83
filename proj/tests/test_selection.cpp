#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "geopanel/assembly.hpp"
#include "synthetic.hpp"

using namespace geopanel;
using namespace geopanel::assembly;

namespace {

/// Columns given by name; rows default to training rows.
FeatureTable make_table(const std::vector<std::pair<std::string, std::vector<double>>>& cols,
                        const std::vector<double>& target, std::vector<RowRole> roles = {}) {
    const std::size_t n = target.size();
    std::vector<std::string> schema;
    std::vector<double> data(n * cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c) {
        schema.push_back(cols[c].first);
        for (std::size_t r = 0; r < n; ++r) data[r * cols.size() + c] = cols[c].second[r];
    }
    std::vector<RowKey> keys;
    for (std::size_t r = 0; r < n; ++r) keys.push_back({"S", r});
    if (roles.empty()) roles.assign(n, RowRole::train);
    return FeatureTable(schema, keys, data, target, roles);
}

const DroppedFeature* find_drop(const SelectionReport& rep, const std::string& name) {
    for (const auto& d : rep.dropped)
        if (d.name == name) return &d;
    return nullptr;
}

double corr_of(const SelectionReport& rep, const std::string& name) {
    for (const auto& [n, r] : rep.target_corrs)
        if (n == name) return r;
    return -1;
}

}  // namespace

TEST_CASE("duplicated target feature is pruned as redundant") {
    const auto y = synth::random_series(200, 1);
    const auto noise = synth::random_series(200, 2);
    std::vector<double> partial(200);
    for (std::size_t i = 0; i < 200; ++i) partial[i] = y[i] + 2 * noise[i];
    const auto table = make_table({{"copy_b", y}, {"copy_a", y}, {"partial", partial}}, y);
    const auto sel = select_features(table, SelectionConfig{});
    CHECK(sel.report.kept == std::vector<std::string>{"copy_a", "partial"});
    const auto* d = find_drop(sel.report, "copy_b");
    REQUIRE(d);
    CHECK(d->reason == DropReason::redundant);
    CHECK(d->reason_text() == "redundant_with:copy_a");
    CHECK(sel.table.schema() == sel.report.kept);
}

TEST_CASE("constant feature is dropped with r = 0") {
    const auto y = synth::random_series(50, 3);
    const auto table = make_table({{"flat", std::vector<double>(50, 4.2)}, {"signal", y}}, y);
    const auto sel = select_features(table, SelectionConfig{});
    CHECK(corr_of(sel.report, "flat") == 0.0);
    REQUIRE(find_drop(sel.report, "flat"));
    CHECK(find_drop(sel.report, "flat")->reason_text() == "low_target_corr");
}

TEST_CASE("orthogonal feature has exactly zero correlation and is dropped") {
    // Target alternates in blocks of two, the feature alternates every row:
    // their centered inner product is exactly zero.
    const std::size_t n = 10000;
    std::vector<double> y(n), f(n), lagged(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = (i / 2) % 2 ? 1.0 : -1.0;
        f[i] = i % 2 ? 1.0 : -1.0;
        lagged[i] = y[i] * 0.5 + f[i] * 0.1;
    }
    const auto table = make_table({{"noise", f}, {"useful", lagged}}, y);
    const auto sel = select_features(table, SelectionConfig{});
    CHECK(corr_of(sel.report, "noise") == 0.0);
    CHECK(find_drop(sel.report, "noise")->reason == DropReason::low_target_corr);
    CHECK(sel.report.kept == std::vector<std::string>{"useful"});
}

TEST_CASE("always_keep bypasses the weak-correlation and overflow steps but not redundancy") {
    const auto y = synth::random_series(100, 5);
    const auto noise = synth::random_series(100, 6);
    std::vector<std::pair<std::string, std::vector<double>>> cols{{"lag_1", noise}, {"sin_12", y}, {"cos_12", y}};
    for (int k = 0; k < 5; ++k) {
        std::vector<double> c(100);
        const auto e = synth::random_series(100, 100 + k);
        for (std::size_t i = 0; i < 100; ++i) c[i] = y[i] + (1.0 + k) * e[i];
        cols.push_back({"f" + std::to_string(k), c});
    }
    SelectionConfig cfg;
    cfg.max_features = 3;
    const auto sel = select_features(make_table(cols, y), cfg);
    const auto& kept = sel.report.kept;
    CHECK(std::count(kept.begin(), kept.end(), "lag_1") == 1);
    CHECK(find_drop(sel.report, "sin_12")->reason_text() == "redundant_with:cos_12");
    std::size_t overflow = 0;
    for (const auto& d : sel.report.dropped) overflow += d.reason == DropReason::overflow;
    CHECK(overflow > 0);
    CHECK(kept.size() <= cfg.max_features + 2);
}

TEST_CASE("selection report partitions the schema and is deterministic") {
    synth::Spec spec;
    spec.steps = 150;
    std::mt19937_64 rng(9);
    std::vector<std::pair<std::string, std::vector<double>>> cols;
    const auto y = synth::random_series(150, 10);
    for (int c = 0; c < 30; ++c) {
        std::vector<double> v = synth::random_series(150, rng());
        const double mix = static_cast<double>(c % 5) / 4.0;
        for (std::size_t i = 0; i < 150; ++i) v[i] = mix * y[i] + (1 - mix) * v[i];
        cols.push_back({"c" + std::to_string(c), v});
    }
    SelectionConfig cfg;
    cfg.max_features = 10;
    const auto table = make_table(cols, y);
    const auto a = select_features(table, cfg);
    const auto b = select_features(table, cfg);
    CHECK(a.report.kept == b.report.kept);
    CHECK(a.report.to_json() == b.report.to_json());
    std::set<std::string> names(a.report.kept.begin(), a.report.kept.end());
    CHECK(names.size() == a.report.kept.size());
    for (const auto& d : a.report.dropped) CHECK(names.insert(d.name).second);
    CHECK(names.size() == table.cols());
    // kept follows schema order
    std::vector<std::string> order;
    for (const auto& n : table.schema())
        if (std::find(a.report.kept.begin(), a.report.kept.end(), n) != a.report.kept.end()) order.push_back(n);
    CHECK(order == a.report.kept);
}

TEST_CASE("selection only reads training rows") {
    const auto y = synth::random_series(60, 11);
    const auto f = synth::random_series(60, 12);
    std::vector<RowRole> roles(60, RowRole::train);
    for (std::size_t r = 40; r < 60; ++r) roles[r] = RowRole::holdout;
    std::vector<double> poisoned = f;
    const auto table = make_table({{"f", f}, {"y", y}}, y, roles);
    std::vector<std::size_t> seen;
    const auto sel = select_features(table, SelectionConfig{}, [&](std::size_t r) { seen.push_back(r); });
    CHECK(seen.size() == 40);
    CHECK(std::all_of(seen.begin(), seen.end(), [](std::size_t r) { return r < 40; }));
    // changing holdout values cannot change the decision
    for (std::size_t r = 40; r < 60; ++r) poisoned[r] = 1e6 * y[r];
    const auto sel2 = select_features(make_table({{"f", poisoned}, {"y", y}}, y, roles), SelectionConfig{});
    CHECK(sel2.report.kept == sel.report.kept);
    CHECK(sel2.report.target_corrs == sel.report.target_corrs);
}

TEST_CASE("selection preconditions") {
    const auto y = synth::random_series(9, 1);
    CHECK_THROWS_AS(select_features(make_table({{"a", y}}, y), SelectionConfig{}), DataError);
    SelectionConfig bad;
    bad.min_target_corr = 0.96;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = SelectionConfig{};
    bad.max_features = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("spearman selection") {
    std::vector<double> x(50), y(50);
    for (std::size_t i = 0; i < 50; ++i) {
        x[i] = static_cast<double>(i);
        y[i] = std::exp(0.3 * static_cast<double>(i));
    }
    SelectionConfig cfg;
    cfg.method = CorrelationMethod::spearman;
    const auto sel = select_features(make_table({{"x", x}}, y), cfg);
    CHECK(corr_of(sel.report, "x") == doctest::Approx(1.0));
}

TEST_CASE("glob matching") {
    CHECK(glob_match("lag_*", "lag_12"));
    CHECK_FALSE(glob_match("lag_*", "xlag_1"));
    CHECK(glob_match("s?n_*", "sin_24"));
    CHECK(glob_match("*", ""));
    CHECK(glob_match("*_12", "cos_12"));
    CHECK_FALSE(glob_match("cos_1", "cos_12"));
}
