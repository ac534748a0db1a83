#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "geopanel/backends.hpp"
#include "geopanel/backtest.hpp"
#include "geopanel/forecast.hpp"
#include "geopanel/ingest.hpp"

namespace geopanel::cli {

struct Paths {
    std::string stations;
    std::string panel;
    std::string outdir = "out";
};

/// Everything a run needs, with every default made explicit.
struct RunConfig {
    Paths paths;
    Frequency frequency = Frequency::daily;
    ingest::IngestConfig ingest;
    forecasting::PipelineConfig pipeline;
    forecasting::BackendSpec backend;
    evaluation::SplitSpec split;
    std::uint64_t seed = 42;

    /// Resolved snapshot, paths included.
    nlohmann::json to_json() const;
    /// Digest of the snapshot without `paths`, so relocating inputs or
    /// output does not change it.
    std::string digest() const;
    /// First seasonal period, rounded; used by seasonal_naive when the backend leaves it unset.
    std::size_t default_period() const;
};

/// Command-line values. Engaged fields win over the config file.
struct Overrides {
    std::optional<std::string> stations;
    std::optional<std::string> panel;
    std::optional<std::string> outdir;
    std::optional<std::string> frequency;
    std::optional<std::string> backend;
    std::optional<std::size_t> horizon;
    std::optional<std::uint64_t> seed;
    bool per_station = false;
};

/// Parses a config file; a missing or malformed file is a ConfigError.
nlohmann::json load_config_file(const std::string& path);

/// Layers built-in defaults (frequency dependent), the config file and the
/// overrides, then validates. `bridge_command` (from GEOPANEL_BRIDGE_CMD)
/// replaces the external backend command when set. Unknown keys are errors.
RunConfig resolve_config(const nlohmann::json& file, const Overrides& overrides,
                         const char* bridge_command = nullptr);

}  // namespace geopanel::cli
