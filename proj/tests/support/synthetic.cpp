#include "synthetic.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "geopanel/ingest.hpp"
#include "geopanel/spatial.hpp"

namespace synth {

using namespace geopanel;

StationSet five_stations() {
    return StationSet({{"S1", 0.0, 0.0},
                       {"S2", 10000.0, 0.0},
                       {"S3", 0.0, 12000.0},
                       {"S4", 15000.0, 14000.0},
                       {"S5", 30000.0, 5000.0}},
                      CoordMode::euclidean_meters);
}

Timestamp start_time(Frequency f) {
    CivilTime c;
    c.year = f == Frequency::monthly ? 1980 : 2020;
    return from_civil(c);
}

std::vector<Timestamp> grid(Frequency f, std::size_t n) {
    std::vector<Timestamp> ts;
    const Timestamp t0 = start_time(f);
    for (std::size_t i = 0; i < n; ++i) ts.push_back(advance(t0, f, static_cast<std::int64_t>(i)));
    return ts;
}

Panel panel_of(const std::vector<std::vector<double>>& series, Frequency f, std::vector<std::string> ids) {
    if (ids.empty())
        for (std::size_t s = 0; s < series.size(); ++s) ids.push_back(std::string(1, static_cast<char>('A' + s)));
    return Panel::from_series(grid(f, series.at(0).size()), f, std::move(ids), series);
}

Dataset make(const Spec& spec) {
    StationSet stations = five_stations();
    DistanceMatrix distances = ingest::compute_distances(stations);
    const std::size_t n = stations.size();
    const double sigma = spatial::median_distance(distances);

    Eigen::MatrixXd cov(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) cov(i, j) = std::exp(-distances(i, j) / sigma);
    const Eigen::MatrixXd mix = cov.llt().matrixL();

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
    const double phase = phase_dist(rng);

    std::vector<double> values(n * spec.steps);
    std::vector<std::uint8_t> mask(n * spec.steps, 1);
    Eigen::VectorXd z(n);
    for (std::size_t t = 0; t < spec.steps; ++t) {
        for (std::size_t i = 0; i < n; ++i) z(i) = normal(rng);
        const Eigen::VectorXd e = mix * z;
        const double season =
            spec.amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / spec.period + phase);
        for (std::size_t i = 0; i < n; ++i) {
            const double offset = 20.0 + 3.0 * static_cast<double>(i);
            values[i * spec.steps + t] = offset + season + spec.noise * e(i);
        }
    }
    if (spec.missing_fraction > 0.0) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (unit(rng) < spec.missing_fraction) {
                mask[i] = 0;
                values[i] = 0.0;
            }
        }
    }
    Panel panel(grid(spec.frequency, spec.steps), spec.frequency, stations.ids(), std::move(values), std::move(mask));
    return Dataset{std::move(stations), std::move(panel), std::move(distances)};
}

void write_fixture(const Dataset& data, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream st(dir / "stations.csv");
    st << "station_id,x,y\n";
    for (const auto& s : data.stations.stations()) st << s.id << ',' << format_real(s.x) << ',' << format_real(s.y) << '\n';
    std::ofstream pn(dir / "panel.csv");
    pn << ingest::serialize_panel(data.panel);
}

std::vector<double> random_series(std::size_t n, std::uint64_t seed, double lo, double hi) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> out(n);
    for (auto& v : out) v = d(rng);
    return out;
}

}  // namespace synth
