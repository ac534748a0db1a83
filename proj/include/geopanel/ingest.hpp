#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "geopanel/core.hpp"

namespace geopanel::ingest {

enum class Imputation { linear, knn, linear_then_knn };

std::string_view to_string(Imputation m);
Imputation parse_imputation(std::string_view text);

struct IngestConfig {
    Frequency frequency = Frequency::daily;
    Imputation imputation = Imputation::linear;
    std::size_t knn_k = 3;
    /// Longest interior gap (in steps) that linear interpolation may bridge
    /// before KNN is tried. Only consulted by linear_then_knn.
    std::optional<std::size_t> max_gap_for_linear;
};

enum class FillMethod { linear, flat, knn };
std::string_view to_string(FillMethod m);

struct FilledCell {
    std::size_t time_index;
    std::string station;
    FillMethod method;
    double value;
};

struct ImputationResult {
    Panel panel;
    std::vector<FilledCell> audit;
};

/// Header `station_id,x,y` (planar meters) or `station_id,lon,lat` (degrees).
StationSet parse_stations(std::string_view csv_text);

/// Wide CSV: first column an ISO-8601 timestamp, one column per station id.
/// Empty cells are missing. Grid instants absent from the file are inserted
/// as fully missing rows. Columns are reordered to match `stations`.
Panel parse_panel(std::string_view csv_text, Frequency frequency, const StationSet& stations);

/// Inverse of parse_panel; values are rendered with 17 significant digits.
std::string serialize_panel(const Panel& panel);

/// Planar distance for projected coordinates, haversine (R = 6,371,000 m) for lon/lat.
DistanceMatrix compute_distances(const StationSet& stations);

ImputationResult impute(const Panel& panel, const DistanceMatrix& distances,
                        const IngestConfig& config);

std::string read_file(const std::string& path);

}  // namespace geopanel::ingest
