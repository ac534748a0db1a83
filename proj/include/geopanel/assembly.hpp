#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "geopanel/core.hpp"
#include "geopanel/features.hpp"

namespace geopanel::assembly {

/// Training table: one row per (station, t) where every feature is defined
/// and t + horizon is inside the panel; target is the station's value at
/// t + horizon. Stations appear in ascending id order and each row carries
/// `station_<id>` one-hot columns.
FeatureTable assemble(const Panel& panel, const features::FeatureFrame& frame,
                      std::size_t horizon);

/// Target-free rows for every station at time index t (the forecast frontier).
FeatureTable frontier_rows(const features::FeatureFrame& frame, std::size_t t);

/// Full schema (features followed by one-hot station columns).
std::vector<std::string> table_schema(const features::FeatureFrame& frame);

// ---------------------------------------------------------------------------
// Correlation-based selection
// ---------------------------------------------------------------------------

enum class CorrelationMethod { pearson, spearman };

struct SelectionConfig {
    double min_target_corr = 0.05;
    double redundancy_corr = 0.95;
    std::size_t max_features = 60;
    std::vector<std::string> always_keep{"lag_*", "sin_*", "cos_*"};
    CorrelationMethod method = CorrelationMethod::pearson;

    void validate() const;
};

enum class DropReason { low_target_corr, redundant, overflow };

struct DroppedFeature {
    std::string name;
    DropReason reason;
    std::string blocker;  // set for redundant drops

    /// `low_target_corr`, `redundant_with:<name>` or `overflow`.
    std::string reason_text() const;
};

struct SelectionReport {
    std::vector<std::string> kept;
    std::vector<DroppedFeature> dropped;
    std::vector<std::pair<std::string, double>> target_corrs;  // |r|, schema order

    nlohmann::json to_json() const;
};

struct Selection {
    FeatureTable table;
    SelectionReport report;
};

/// Invoked with the index of every row whose values selection reads.
using RowObserver = std::function<void(std::size_t)>;

/// Filters features on the table's training rows only: drop weak target
/// correlation, prune redundancy in descending-|r| order, cap the count.
/// `always_keep` globs bypass the first and last steps.
Selection select_features(const FeatureTable& table, const SelectionConfig& config,
                          const RowObserver& observer = {});

/// Shell-style glob with `*` and `?`.
bool glob_match(std::string_view pattern, std::string_view name);

// ---------------------------------------------------------------------------
// Causality audit
// ---------------------------------------------------------------------------

struct AuditViolation {
    std::string station;
    std::size_t t;
    std::string feature;
    double full_value;
    double truncated_value;
};

struct AuditReport {
    std::size_t probes = 0;
    std::vector<AuditViolation> violations;
    bool passed() const noexcept { return violations.empty(); }
};

/// Recomputes `probes` random (station, t, feature) cells on the panel
/// truncated after t and requires bit-identical values.
AuditReport causality_audit(const features::FeatureFunction& pipeline, const Panel& panel,
                            std::size_t probes, std::uint64_t seed);

/// Wraps a pipeline with a centered (future-reading) rolling mean column.
/// Exists to check that the audit catches leakage.
features::FeatureFunction with_centered_leak(features::FeatureFunction base,
                                             std::size_t window = 5);

}  // namespace geopanel::assembly
