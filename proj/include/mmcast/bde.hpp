#pragma once

// Beta-distribution member: a spot forecaster gives the conditional
// expectation and a shared variance completes the Beta shape by moment
// matching.

#include <cstddef>
#include <memory>
#include <optional>
#include <span>

#include <Eigen/Dense>

#include "mmcast/density.hpp"

namespace mmcast {

inline constexpr double kSpotClamp = 1e-3;

/// Point forecaster behind the Beta member.
class SpotForecaster {
 public:
  virtual ~SpotForecaster() = default;
  /// Unclamped point forecast.
  virtual double raw_predict(std::span<const double> x) const = 0;
  virtual std::size_t dimension() const = 0;
};

/// Gaussian-kernel ridge regression on centered targets.
class KernelRidgeForecaster final : public SpotForecaster {
 public:
  KernelRidgeForecaster(Eigen::MatrixXd centers, Eigen::VectorXd coefficients, double target_mean, double width,
                        double lambda);

  double raw_predict(std::span<const double> x) const override;
  std::size_t dimension() const override { return static_cast<std::size_t>(centers_.cols()); }

  const Eigen::MatrixXd& centers() const noexcept { return centers_; }
  const Eigen::VectorXd& coefficients() const noexcept { return coefficients_; }
  double target_mean() const noexcept { return target_mean_; }
  double width() const noexcept { return width_; }
  double lambda() const noexcept { return lambda_; }

 private:
  Eigen::MatrixXd centers_;
  Eigen::VectorXd coefficients_;
  double target_mean_;
  double width_;
  double lambda_;
};

struct SpotFitConfig {
  std::optional<double> kernel_width;  // median pairwise distance when unset
  double lambda = 1e-3;
};

/// Solves (K + lambda I) c = y - mean(y). Throws NumericalError if the system
/// stays singular after one jitter retry.
KernelRidgeForecaster spot_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const SpotFitConfig& config = {});

/// Clamps a raw point forecast to [1e-3, 1 - 1e-3].
double clamp_expectation(double raw) noexcept;

double spot_predict(const SpotForecaster& spot, std::span<const double> x);

struct BetaShape {
  double alpha;
  double beta;
};

/// Moment matching; the variance is clamped to 0.999 mu (1 - mu) first.
BetaShape beta_shape_from_moments(double mu, double variance);

struct BdeModel {
  std::shared_ptr<const SpotForecaster> spot;
  double variance = 0.0;

  BdeModel with_variance(double v) const { return {spot, v}; }
};

BetaDensity bde_density(double mu, double variance);
BetaDensity bde_predict(const BdeModel& model, std::span<const double> x);

}  // namespace mmcast
