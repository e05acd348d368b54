#pragma once

// Accuracy of predictive expectations (MAE, RMSE) and probabilistic quality
// (reliability, sharpness, CRPS) over a set of forecasts, per horizon and
// averaged across horizons.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "mmcast/density.hpp"

namespace mmcast {

/// Nominal coverage rates 0.1, 0.2, ..., 0.9.
std::vector<double> nominal_rates();

/// Both in percent of capacity. Throw DomainError on empty or mismatched input.
double mae_percent(std::span<const double> expectations, std::span<const double> observations);
double rmse_percent(std::span<const double> expectations, std::span<const double> observations);

/// Coverage of the central (1 - 2 alpha) intervals minus nominal, in percent.
/// Boundary hits count as covered.
double reliability_bias(std::span<const PredictiveDensity> densities, std::span<const double> observations,
                        double alpha);

/// Mean width of the central (1 - 2 alpha) intervals.
double sharpness(std::span<const PredictiveDensity> densities, double alpha);

double crps_average(std::span<const PredictiveDensity> densities, std::span<const double> observations);

struct HorizonScore {
  int horizon;
  double value;
};

std::vector<HorizonScore> crps_by_horizon(std::span<const PredictiveDensity> densities,
                                          std::span<const double> observations, std::span<const int> horizons);

struct RateMetrics {
  double nominal = 0.0;
  double reliability_bias = 0.0;  // percent, signed
  double sharpness = 0.0;
};

struct HorizonMetrics {
  int horizon = 0;
  std::size_t count = 0;
  double mae = 0.0;
  double rmse = 0.0;
  double crps = 0.0;
  std::vector<RateMetrics> rates;
};

struct EvaluationReport {
  std::string model;
  double mae = 0.0;   // unweighted mean over horizons
  double rmse = 0.0;
  double crps = 0.0;
  double mean_absolute_reliability = 0.0;  // mean |bias| over horizons and rates
  std::vector<RateMetrics> rates;          // per-rate means over horizons
  std::vector<HorizonMetrics> horizons;
};

/// Forecasts of one model over an evaluation set.
struct ForecastSet {
  std::vector<PredictiveDensity> densities;
  std::vector<double> observations;
  std::vector<int> horizons;
  /// Optional CDFs on `grid` (points x samples); computed when empty.
  Eigen::MatrixXd grid_cdfs;
  UniformGrid grid;
};

EvaluationReport build_report(const std::string& model, const ForecastSet& forecasts);

/// Report from per-horizon metrics: unweighted means across horizons.
EvaluationReport assemble_report(const std::string& model, std::vector<HorizonMetrics> horizons);

nlohmann::json report_to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const nlohmann::json& j);

/// Flat comma-separated table. Fields containing commas, quotes or newlines
/// are quoted with doubled inner quotes.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

void write_csv(std::ostream& out, const Table& table);
/// Throws ParseError on unbalanced quotes or ragged rows.
Table read_csv(std::istream& in);

/// Formats a double with round-trip precision.
std::string format_number(double v);

Table comparison_table(std::span<const EvaluationReport> reports);
Table reliability_by_rate_table(std::span<const EvaluationReport> reports);
Table sharpness_by_rate_table(std::span<const EvaluationReport> reports);
Table crps_by_horizon_table(std::span<const EvaluationReport> reports);
Table reliability_by_horizon_table(std::span<const EvaluationReport> reports);
Table sharpness_by_horizon_table(std::span<const EvaluationReport> reports);

}  // namespace mmcast
