#include "geopanel/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "geopanel/temporal.hpp"

namespace geopanel::spatial {

std::string_view to_string(Kernel k) {
    return k == Kernel::gaussian ? "gaussian" : "exponential";
}

Kernel parse_kernel(std::string_view text) {
    if (text == "exponential") return Kernel::exponential;
    if (text == "gaussian") return Kernel::gaussian;
    throw ConfigError("unknown kernel '" + std::string(text) + "'");
}

void SpatialConfig::validate(std::size_t station_count) const {
    if (station_count < 2) throw ConfigError("spatial features need at least 2 stations");
    if (sigma && !(*sigma > 0.0)) throw ConfigError("spatial.sigma must be > 0");
    if (k_nearest < 1 || k_nearest >= station_count)
        throw ConfigError("spatial.k_nearest must be in [1, station count)");
    if (gradient_window < 1) throw ConfigError("spatial.gradient_window must be >= 1");
    if (sync_window < 1) throw ConfigError("spatial.sync_window must be >= 1");
    for (auto w : cross_windows)
        if (w < 2) throw ConfigError("spatial.cross_windows entries must be >= 2");
}

double median_distance(const DistanceMatrix& distances) {
    auto d = distances.off_diagonal();
    if (d.empty()) throw DataError("median distance needs at least 2 stations");
    std::sort(d.begin(), d.end());
    const std::size_t n = d.size();
    return n % 2 ? d[n / 2] : 0.5 * (d[n / 2 - 1] + d[n / 2]);
}

KernelWeights kernel_weights(const DistanceMatrix& distances, double sigma, Kernel kernel) {
    if (!(sigma > 0.0)) throw ConfigError("kernel sigma must be > 0");
    const std::size_t n = distances.size();
    std::vector<double> w(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double d = distances(i, j);
            w[i * n + j] = kernel == Kernel::exponential ? std::exp(-d / sigma)
                                                         : std::exp(-(d * d) / (2.0 * sigma * sigma));
        }
    }
    return KernelWeights(n, std::move(w), sigma);
}

SpatialContext::SpatialContext(std::vector<std::string> ids, DistanceMatrix distances,
                               KernelWeights weights)
    : ids_(std::move(ids)), distances_(std::move(distances)), weights_(std::move(weights)) {
    const std::size_t n = ids_.size();
    if (distances_.size() != n || weights_.size() != n)
        throw DataError("spatial context sizes disagree");
    id_order_.resize(n);
    std::iota(id_order_.begin(), id_order_.end(), std::size_t{0});
    std::sort(id_order_.begin(), id_order_.end(),
              [&](std::size_t a, std::size_t b) { return ids_[a] < ids_[b]; });
    ranked_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j : id_order_)
            if (j != i) ranked_[i].push_back(j);
        std::stable_sort(ranked_[i].begin(), ranked_[i].end(), [&](std::size_t a, std::size_t b) {
            return distances_(i, a) < distances_(i, b);
        });
    }
}

double distance_weighted_average(std::span<const double> values_at_t, const SpatialContext& ctx,
                                 std::size_t target) {
    double total = 0.0;
    std::optional<double> base;
    for (std::size_t j : ctx.id_order()) {
        if (j == target) continue;
        if (!base) base = values_at_t[j];
        total += ctx.weights()(target, j);
    }
    if (!base) throw std::invalid_argument("distance-weighted average needs a neighbor");
    const bool uniform = total < 1e-12;
    double acc = 0.0;
    double count = 0.0;
    for (std::size_t j : ctx.id_order()) {
        if (j == target) continue;
        const double w = uniform ? 1.0 : ctx.weights()(target, j) / total;
        acc += w * (values_at_t[j] - *base);
        count += 1.0;
    }
    return uniform ? *base + acc / count : *base + acc;
}

std::vector<NeighborValue> nearest_station_values(std::span<const double> values_at_t,
                                                  const SpatialContext& ctx, std::size_t target,
                                                  std::size_t k) {
    const auto& ranked = ctx.neighbors(target);
    if (k > ranked.size()) throw std::invalid_argument("not enough neighbor stations");
    std::vector<NeighborValue> out;
    for (std::size_t r = 0; r < k; ++r) {
        const std::size_t j = ranked[r];
        out.push_back({j, values_at_t[j], ctx.weights()(target, j) * values_at_t[j]});
    }
    return out;
}

Gradient spatial_gradient(const Panel& panel, const SpatialContext& ctx, std::size_t target,
                          std::size_t t, std::size_t w) {
    if (t + 1 < w || t >= panel.rows()) throw std::invalid_argument("gradient needs t >= w-1");
    auto rollmean = [&](std::size_t s) {
        return temporal::describe(panel.series(s).subspan(t + 1 - w, w)).mean;
    };
    const double own = rollmean(target);
    const double nn1 = rollmean(ctx.neighbors(target).front());
    std::vector<double> others;
    for (std::size_t j : ctx.id_order())
        if (j != target) others.push_back(rollmean(j));
    return Gradient{own - nn1, own - temporal::describe(others).mean};
}

Synchronicity regional_synchronicity(std::span<const double> values_at_t,
                                     const SpatialContext& ctx, std::size_t target,
                                     double epsilon) {
    if (ctx.size() < 2) throw std::invalid_argument("synchronicity needs at least 2 stations");
    std::vector<double> all;
    for (std::size_t j : ctx.id_order()) all.push_back(values_at_t[j]);
    const auto s = temporal::describe(all);
    return Synchronicity{s.mean, s.std, (values_at_t[target] - s.mean) / (s.std + epsilon)};
}

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) throw std::invalid_argument("pearson needs equal nonempty samples");
    const auto [amin, amax] = std::minmax_element(a.begin(), a.end());
    const auto [bmin, bmax] = std::minmax_element(b.begin(), b.end());
    if (*amin == *amax || *bmin == *bmax) return 0.0;
    const double ma = temporal::describe(a).mean;
    const double mb = temporal::describe(b).mean;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

CrossStats cross_station_stats(const Panel& panel, const SpatialContext& ctx, std::size_t target,
                               std::size_t t, std::size_t w) {
    if (t + 1 < w || t >= panel.rows()) throw std::invalid_argument("cross-station stats need t >= w-1");
    std::vector<double> regional(w);
    std::vector<double> loo(w);
    std::vector<double> own(w);
    std::vector<double> all;
    std::vector<double> others;
    for (std::size_t k = 0; k < w; ++k) {
        const std::size_t u = t + 1 - w + k;
        all.clear();
        others.clear();
        for (std::size_t j : ctx.id_order()) {
            all.push_back(panel.value(u, j));
            if (j != target) others.push_back(panel.value(u, j));
        }
        regional[k] = temporal::describe(all).mean;
        loo[k] = temporal::describe(others).mean;
        own[k] = panel.value(u, target);
    }
    const auto s = temporal::describe(regional);
    return CrossStats{s.mean, s.std, pearson(own, loo)};
}

}  // namespace geopanel::spatial
