#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "geopanel/report.hpp"
#include "synthetic.hpp"

using namespace geopanel;
using namespace geopanel::evaluation;

namespace {

struct Fixture {
    Panel raw;
    std::vector<OriginForecast> origins;
    MetricReport report;
};

Fixture make_fixture(bool zero_observation = false) {
    std::vector<std::vector<double>> series;
    for (std::size_t s = 0; s < 5; ++s) {
        std::vector<double> x(60);
        for (std::size_t t = 0; t < 60; ++t) x[t] = 1.0 + static_cast<double>(s) + 0.1 * static_cast<double>(t % 7);
        series.push_back(x);
    }
    if (zero_observation) series[2][55] = 0.0;
    auto raw = synth::panel_of(series, Frequency::daily, {"e", "d", "c", "b", "a"});
    const std::size_t origin = 49, h = 10;
    std::vector<StationForecast> st;
    std::vector<std::vector<double>> observed(5);
    for (std::size_t s = 0; s < 5; ++s) {
        std::vector<double> p;
        for (std::size_t k = 1; k <= h; ++k) {
            p.push_back(raw.value(origin + k, s) + 0.25 * static_cast<double>(k % 3));
            observed[s].push_back(raw.value(origin + k, s));
        }
        st.push_back({raw.station_ids()[s], p});
    }
    observed[0][3] = std::numeric_limits<double>::quiet_NaN();
    std::vector<Timestamp> stamps(raw.timestamps().begin() + origin + 1, raw.timestamps().begin() + origin + 1 + h);
    std::vector<OriginForecast> origins;
    origins.push_back({origin, ForecastSet(h, "ridge", "0123456789abcdef", stamps, st), observed});
    auto report = score_origins(raw.station_ids(), origins);
    return {std::move(raw), std::move(origins), std::move(report)};
}

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::path(TEST_SCRATCH_DIR) / name;
    std::filesystem::remove_all(p);
    return p;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("metrics csv has one row per station plus pooled") {
    const auto f = make_fixture();
    const auto csv = metrics_csv(f.report);
    std::istringstream in(csv);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    REQUIRE(lines.size() == 7);
    CHECK(lines[0] == "station,n,mse,rmse,mae,mape,kge,r,beta,gamma");
    CHECK(lines[1].rfind("a,", 0) == 0);
    CHECK(lines[5].rfind("e,9,", 0) == 0);
    CHECK(lines[6].rfind("pooled,49,", 0) == 0);
}

TEST_CASE("metrics json round trip") {
    const auto f = make_fixture();
    const auto text = metrics_json(f.report, "ridge", "0123456789abcdef");
    const auto j = nlohmann::json::parse(text);
    CHECK(j["backend_id"] == "ridge");
    CHECK(j["config_digest"] == "0123456789abcdef");
    CHECK(j["stations"].size() == 5);
    CHECK(j["pooled"]["n"] == 49);
    CHECK(parse_metrics_json(text) == f.report);
    CHECK_THROWS_AS(parse_metrics_json("{\"stations\": 3}"), DataError);
    CHECK_THROWS_AS(parse_metrics_json("not json"), DataError);
}

TEST_CASE("refused metrics render as null and n/a") {
    const auto f = make_fixture(true);
    const auto j = nlohmann::json::parse(metrics_json(f.report, "ridge", ""));
    const auto& c = j["stations"]["c"];
    CHECK(c["mape"].is_null());
    CHECK(c["mape_refusal"].is_string());
    CHECK(j["stations"]["a"].find("mape_refusal") == j["stations"]["a"].end());
    CHECK(j["pooled"]["mape"].is_null());
    const auto csv = metrics_csv(f.report);
    CHECK(csv.find("\nc,10,") != std::string::npos);
    const auto line_start = csv.find("\nc,");
    const auto line = csv.substr(line_start + 1, csv.find('\n', line_start + 1) - line_start - 1);
    CHECK(line.find("n/a") != std::string::npos);
    CHECK(parse_metrics_json(metrics_json(f.report, "ridge", "")) == f.report);
}

TEST_CASE("forecast csv") {
    const auto f = make_fixture();
    const auto csv = forecast_csv("e", 0, f.origins, Frequency::daily);
    std::istringstream in(csv);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    REQUIRE(lines.size() == 11);
    CHECK(lines[0] == "timestamp,observed,predicted");
    CHECK(lines[4].find(",,") != std::string::npos);
}

TEST_CASE("plotdata round trip") {
    const auto f = make_fixture();
    ReportInputs in{f.report, f.origins, f.raw, "ridge", "0123456789abcdef", 20};
    const auto text = plotdata_json(in);
    const auto j = nlohmann::json::parse(text);
    CHECK(j["history"]["timestamps"].size() == 20);
    CHECK(j["origins"][0]["horizon"] == 10);
    const auto saved = parse_plotdata(text);
    CHECK(saved.backend_id == "ridge");
    CHECK(saved.frequency == Frequency::daily);
    CHECK(saved.station_ids == f.raw.station_ids());
    REQUIRE(saved.origins.size() == 1);
    CHECK(saved.origins[0].origin == 49);
    CHECK(saved.origins[0].forecast == f.origins[0].forecast);
    CHECK(std::isnan(saved.origins[0].observed[0][3]));
    CHECK(score_origins(saved.station_ids, saved.origins) == f.report);
}

TEST_CASE("emit_report writes every artifact") {
    const auto f = make_fixture();
    const auto dir = scratch("report_emit");
    ReportInputs in{f.report, f.origins, f.raw, "ridge", "0123456789abcdef"};
    const auto written = emit_report(dir, in);
    CHECK(written.size() == 3 + 5);
    for (const char* name : {"metrics.json", "metrics.csv", "plotdata.json", "forecast_a.csv", "forecast_e.csv"})
        CHECK(std::filesystem::exists(dir / name));
    CHECK(slurp(dir / "metrics.csv") == metrics_csv(f.report));
}

TEST_CASE("write failures name the path") {
    const auto dir = scratch("report_fail");
    const auto bad = dir / "missing" / "deeper" / "x.json";
    try {
        write_text(bad, "{}");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find(bad.string()) != std::string::npos);
    }
}
