#pragma once

// Seeded synthetic wind-farm records in the ingestion format: an
// autocorrelated wind speed with a diurnal cycle, noisy weather forecasts of
// it, and power from a logistic power curve with heteroscedastic
// autocorrelated noise.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mmcast/data.hpp"

namespace mmcast {

struct SyntheticConfig {
  std::uint64_t seed = 1;
  int zone = 1;
  TimePoint start = parse_timestamp("20120101 01:00");
  std::size_t hours = 366 * 24;  // calendar year 2012
  double missing_fraction = 0.0;   // share of targets blanked at random
};

std::vector<RawRecord> generate_synthetic(const SyntheticConfig& config = {});

/// Noise-free power curve of the generator.
double synthetic_power_curve(double speed);

}  // namespace mmcast
