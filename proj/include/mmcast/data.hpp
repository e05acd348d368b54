#pragma once

// Ingestion of hourly wind-farm records and construction of lag-feature
// samples, splits and scalers.

#include <array>
#include <chrono>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mmcast {

using TimePoint = std::chrono::sys_seconds;

/// Parses "YYYYMMDD H:00" or "YYYYMMDD HH:00".
TimePoint parse_timestamp(std::string_view text);
std::string format_timestamp(TimePoint t);

struct RawRecord {
  TimePoint timestamp;
  int zone = 0;
  std::optional<double> target;  // normalized power, absent when missing
  double u10 = 0.0;
  double v10 = 0.0;
  double u100 = 0.0;
  double v100 = 0.0;
};

struct WindVector {
  double speed;  // m/s
  double angle;  // radians in [0, 2pi)
};

/// Magnitude and direction of (u, v); u = v = 0 maps to angle 0.
WindVector wind_transform(double u, double v);

/// Reads the CSV ingestion format (header TIMESTAMP,ZONEID,TARGETVAR,U10,V10,U100,V100).
/// Throws ParseError for malformed rows, DataError for out-of-range targets
/// and for timestamps that do not strictly increase within a zone.
std::vector<RawRecord> parse_records(std::istream& in);
std::vector<RawRecord> load_records(const std::string& path);
void write_records(std::ostream& out, std::span<const RawRecord> records);

std::vector<RawRecord> select_zone(std::span<const RawRecord> records, int zone);

inline constexpr std::size_t kDefaultLags = 3;
inline constexpr std::size_t kWeatherFeatures = 4;

/// Names of the feature columns for `lags` power lags.
std::vector<std::string> feature_names(std::size_t lags = kDefaultLags);

struct Sample {
  std::vector<double> features;  // [y(t0), ..., y(t0-lags+1), V10(t), theta10(t), V100(t), theta100(t)]
  double target = 0.0;           // y(t)
  TimePoint issue_time;          // t0
  int horizon = 1;               // t - t0 in hours
};

struct SampleSet {
  std::vector<Sample> samples;
  std::size_t candidates = 0;  // issue times with a complete window inside the record range
  std::size_t skipped = 0;     // candidates dropped for missing lags, target, or weather
};

/// One sample per issue time t0 whose lag window and target hour t0+horizon
/// are present. Records must belong to one zone and be time ordered.
SampleSet build_samples(std::span<const RawRecord> records, int horizon, std::size_t lags = kDefaultLags);

/// Features for issue time t0 without requiring the target; empty when the
/// lags or the weather forecast at t0+horizon are missing.
std::optional<std::vector<double>> build_features(std::span<const RawRecord> records, TimePoint issue_time,
                                                  int horizon, std::size_t lags = kDefaultLags);

/// Sample autocorrelation for lags 0..max_lag.
std::vector<double> autocorrelation(std::span<const double> series, std::size_t max_lag);

/// Pearson correlation.
double cross_correlation(std::span<const double> a, std::span<const double> b);

struct SplitBoundaries {
  TimePoint train_a_end;                    // issue_time <= this -> A
  TimePoint train_b_end;                    // <= this -> B
  std::optional<TimePoint> validation_end;  // <= this -> validation; later samples excluded
};

/// Day/month reading of the reference split: A to 1 May, B to 1 June,
/// validation to 1 July 2012.
SplitBoundaries default_split_boundaries();

struct DatasetSplit {
  std::vector<Sample> train_a;
  std::vector<Sample> train_b;
  std::vector<Sample> validation;
  std::size_t excluded = 0;
};

/// Throws ConfigError for unordered boundaries or an empty partition.
DatasetSplit split_dataset(std::span<const Sample> samples, const SplitBoundaries& boundaries);

/// Per-feature standardization with training-set A statistics.
class FeatureScaler {
 public:
  FeatureScaler() = default;
  FeatureScaler(std::vector<double> location, std::vector<double> scale);

  /// Throws DataError naming the first constant feature.
  static FeatureScaler fit(std::span<const Sample> samples);

  std::vector<double> apply(std::span<const double> features) const;
  Sample apply(const Sample& s) const;
  std::vector<Sample> apply(std::span<const Sample> samples) const;

  const std::vector<double>& location() const noexcept { return location_; }
  const std::vector<double>& scale() const noexcept { return scale_; }
  std::size_t dimension() const noexcept { return location_.size(); }

 private:
  std::vector<double> location_;
  std::vector<double> scale_;
};

}  // namespace mmcast
