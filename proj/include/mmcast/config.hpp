#pragma once

// Run configuration for the command-line pipeline, read from JSON.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "mmcast/bde.hpp"
#include "mmcast/ckde.hpp"
#include "mmcast/combiner.hpp"
#include "mmcast/data.hpp"
#include "mmcast/sbl.hpp"

namespace mmcast {

struct RunConfig {
  std::string data_path;
  int zone = 1;
  std::vector<int> horizons;  // 1..24 when not configured
  SplitBoundaries split = default_split_boundaries();
  std::size_t lags = kDefaultLags;
  SblFitConfig sbl;
  CkdeFitConfig ckde;
  SpotFitConfig bde;
  EmConfig em;
  PsoConfig pso;
  std::string output_dir = "mmcast_out";
  bool refine = true;
};

/// Parses "1-3,5,8" into a sorted list without duplicates; every entry must
/// lie in 1..24.
std::vector<int> parse_horizon_list(const std::string& text);

/// Relative paths in the document are resolved against `base_dir`.
/// Throws ConfigError for unknown keys or bad values; the data file itself is
/// only opened when the pipeline loads it.
RunConfig config_from_json(const nlohmann::json& j, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);
nlohmann::json config_to_json(const RunConfig& config);

struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  bool no_refine = false;
  std::optional<std::vector<int>> horizons;
  std::optional<std::string> data_path;
  std::optional<std::string> output_dir;
};

void apply_overrides(RunConfig& config, const ConfigOverrides& overrides);

/// Checks the invariants that do not depend on the file system.
void validate_config(const RunConfig& config);

}  // namespace mmcast
