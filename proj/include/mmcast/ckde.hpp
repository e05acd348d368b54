#pragma once

// Conditional kernel density estimation: the predictive density of the target
// is a Gaussian mixture over training targets, weighted by product-Gaussian
// proximity of the query to each training feature vector.

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mmcast/density.hpp"

namespace mmcast {

/// 1.06 * sd * n^(-1/5) with the sample standard deviation.
double silverman_bandwidth(std::span<const double> values);

struct CkdeFitConfig {
  std::optional<std::vector<double>> feature_bandwidths;  // Silverman per dimension when unset
  std::optional<double> target_bandwidth;                 // Silverman on the targets when unset
};

struct CkdeModel {
  Eigen::MatrixXd training_features;  // one scaled feature vector per row
  std::shared_ptr<const std::vector<double>> training_targets;
  std::vector<double> feature_bandwidths;
  double target_bandwidth = 0.0;

  std::size_t size() const noexcept { return static_cast<std::size_t>(training_features.rows()); }
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(training_features.cols()); }
};

/// Throws DataError naming the first constant feature dimension.
CkdeModel ckde_fit(const Eigen::MatrixXd& features, std::span<const double> targets, const CkdeFitConfig& config = {});

/// Normalized kernel weights over the training points.
std::vector<double> kernel_weights(const CkdeModel& model, std::span<const double> x);

GaussianMixtureDensity ckde_predict(const CkdeModel& model, std::span<const double> x);

/// Weights for every row of `queries` (size x queries.rows()).
Eigen::MatrixXd kernel_weight_matrix(const CkdeModel& model, const Eigen::MatrixXd& queries);

}  // namespace mmcast
