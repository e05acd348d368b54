#include "mmcast/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mmcast/error.hpp"
#include "mmcast/special.hpp"

namespace mmcast {

namespace {

constexpr double kTwoPi = 2.0 * special::kPi;

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  return a < 0.0 ? a + kTwoPi : a;
}

}  // namespace

double synthetic_power_curve(double speed) { return 1.0 / (1.0 + std::exp(-(speed - 8.0) / 1.4)); }

std::vector<RawRecord> generate_synthetic(const SyntheticConfig& config) {
  if (!(config.missing_fraction >= 0.0 && config.missing_fraction < 1.0)) {
    throw ConfigError("synthetic: missing_fraction must lie in [0,1)");
  }
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const double phi = 0.97;
  const double anomaly_sd = 3.0;
  double anomaly = anomaly_sd * normal(rng);
  double direction = kTwoPi * unit(rng);
  double noise = 0.0;

  std::vector<RawRecord> out;
  out.reserve(config.hours);
  for (std::size_t t = 0; t < config.hours; ++t) {
    const TimePoint ts = config.start + std::chrono::hours(static_cast<long>(t));
    const auto day_time = std::chrono::hh_mm_ss(ts - std::chrono::floor<std::chrono::days>(ts));
    const double hour = static_cast<double>(day_time.hours().count());

    anomaly = phi * anomaly + anomaly_sd * std::sqrt(1.0 - phi * phi) * normal(rng);
    direction = wrap_angle(direction + 0.15 * normal(rng));
    const double diurnal = 1.5 * std::sin(kTwoPi * (hour - 9.0) / 24.0);
    const double speed = std::max(0.0, 7.5 + diurnal + anomaly);

    // Weather forecasts of the hour: truth plus independent errors.
    const double speed100 = std::max(0.0, speed + 0.9 * normal(rng));
    const double dir100 = wrap_angle(direction + 0.2 * normal(rng));
    const double speed10 = std::max(0.0, 0.75 * speed + 0.8 * normal(rng));
    const double dir10 = wrap_angle(direction + 0.25 * normal(rng));

    const double curve = synthetic_power_curve(speed);
    const double spread = 0.02 + 0.3 * curve * (1.0 - curve);
    noise = 0.8 * noise + std::sqrt(1.0 - 0.64) * spread * normal(rng);
    const double power = std::clamp(curve + noise, 0.0, 1.0);

    RawRecord r;
    r.timestamp = ts;
    r.zone = config.zone;
    if (unit(rng) >= config.missing_fraction) r.target = power;
    r.u10 = speed10 * std::cos(dir10);
    r.v10 = speed10 * std::sin(dir10);
    r.u100 = speed100 * std::cos(dir100);
    r.v100 = speed100 * std::sin(dir100);
    out.push_back(r);
  }
  return out;
}

}  // namespace mmcast
