#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geopanel/core.hpp"

namespace geopanel::spatial {

enum class Kernel { exponential, gaussian };

std::string_view to_string(Kernel k);
Kernel parse_kernel(std::string_view text);

struct SpatialConfig {
    std::optional<double> sigma;  // meters; median off-diagonal distance when unset
    std::size_t k_nearest = 2;
    std::size_t gradient_window = 3;
    std::size_t sync_window = 6;
    std::vector<std::size_t> cross_windows{3, 7};
    Kernel kernel = Kernel::exponential;

    void validate(std::size_t station_count) const;
};

double median_distance(const DistanceMatrix& distances);

/// exp(-d/sigma) by default; exp(-d^2/(2 sigma^2)) for the gaussian kernel.
KernelWeights kernel_weights(const DistanceMatrix& distances, double sigma,
                             Kernel kernel = Kernel::exponential);

/// Immutable per-panel geometry shared by the spatial feature functions.
/// Aggregates iterate stations in ascending id order so results do not
/// depend on the order stations were supplied in.
class SpatialContext {
public:
    SpatialContext(std::vector<std::string> ids, DistanceMatrix distances, KernelWeights weights);

    std::size_t size() const noexcept { return ids_.size(); }
    const DistanceMatrix& distances() const noexcept { return distances_; }
    const KernelWeights& weights() const noexcept { return weights_; }
    const std::vector<std::string>& ids() const noexcept { return ids_; }
    /// All station indices sorted by id.
    const std::vector<std::size_t>& id_order() const noexcept { return id_order_; }
    /// Stations other than i, ascending distance then id.
    const std::vector<std::size_t>& neighbors(std::size_t i) const { return ranked_.at(i); }

private:
    std::vector<std::string> ids_;
    DistanceMatrix distances_;
    KernelWeights weights_;
    std::vector<std::size_t> id_order_;
    std::vector<std::vector<std::size_t>> ranked_;
};

/// Kernel-weighted mean of the other stations' values at one instant, with
/// self excluded and weights renormalized.
double distance_weighted_average(std::span<const double> values_at_t, const SpatialContext& ctx,
                                 std::size_t target);

struct NeighborValue {
    std::size_t station;
    double value;
    double weighted;
};
std::vector<NeighborValue> nearest_station_values(std::span<const double> values_at_t,
                                                  const SpatialContext& ctx, std::size_t target,
                                                  std::size_t k);

struct Gradient {
    double nn1;
    double all;
};
Gradient spatial_gradient(const Panel& panel, const SpatialContext& ctx, std::size_t target,
                          std::size_t t, std::size_t w);

struct Synchronicity {
    double region_mean;
    double region_std;
    double sync_dev;
};
Synchronicity regional_synchronicity(std::span<const double> values_at_t,
                                     const SpatialContext& ctx, std::size_t target,
                                     double epsilon);

struct CrossStats {
    double mean;
    double std;
    double corr;
};
CrossStats cross_station_stats(const Panel& panel, const SpatialContext& ctx, std::size_t target,
                               std::size_t t, std::size_t w);

/// Pearson correlation; 0 when either side is constant.
double pearson(std::span<const double> a, std::span<const double> b);

}  // namespace geopanel::spatial
