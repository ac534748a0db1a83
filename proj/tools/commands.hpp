#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>

#include "geopanel/run_config.hpp"

namespace geopanel::cli {

struct CommonOptions {
    std::optional<std::string> config;
    Overrides overrides;
};

int cmd_run(const CommonOptions& opts, std::ostream& out);
int cmd_features(const CommonOptions& opts, const std::optional<std::string>& out_path, std::ostream& out);
int cmd_audit(const CommonOptions& opts, std::size_t probes, bool inject_leak, std::ostream& out);
/// Re-scores the forecasts saved in `<dir>/plotdata.json` and rewrites the
/// metric and per-station forecast files into `out_dir` (default `dir`).
int cmd_report(const std::string& dir, const std::optional<std::string>& out_dir, std::ostream& out);

}  // namespace geopanel::cli
