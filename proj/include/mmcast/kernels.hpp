#pragma once

// Data-parallel kernels behind the member models, the combiner and the
// evaluation. Each kernel in `mmcast::kernels` runs its outer loop under
// OpenMP; `mmcast::kernels::reference` holds the serial implementation the
// tests compare against. Every output element is produced by one thread
// with a fixed inner order, so results do not depend on the thread count.

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mmcast/density.hpp"

namespace mmcast::kernels {

/// K(i, j) = exp(-|a_i - b_j|^2 / (2 width^2)) over the rows of a and b.
Eigen::MatrixXd gaussian_gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double width);

/// Normalized product-Gaussian weights of each training row for each query
/// row (train.rows() x queries.rows()). A query whose kernel values all fall
/// below the smallest normal double puts weight 1 on its nearest training
/// row in the bandwidth-scaled metric.
Eigen::MatrixXd product_kernel_weights(const Eigen::MatrixXd& train, const Eigen::MatrixXd& queries,
                                       std::span<const double> bandwidths);

/// T(g, m) = Phi((grid_g - center_m) / bandwidth).
Eigen::MatrixXd normal_cdf_table(std::span<const double> centers, double bandwidth, const UniformGrid& grid);

/// Mixture CDFs on the grid for each weight column: table * weights, with a
/// fixed column blocking.
Eigen::MatrixXd mixture_grid_cdfs(const Eigen::MatrixXd& table, const Eigen::MatrixXd& weights);

/// Column n holds cdf_at(densities[n], grid_g).
Eigen::MatrixXd grid_cdfs(std::span<const PredictiveDensity> densities, const UniformGrid& grid);

std::vector<double> cdfs_at(std::span<const PredictiveDensity> densities, std::span<const double> y);
std::vector<double> pdfs_at(std::span<const PredictiveDensity> densities, std::span<const double> y);

/// CRPS of each column of `cdfs` against its observation.
std::vector<double> grid_crps_batch(const UniformGrid& grid, const Eigen::MatrixXd& cdfs,
                                    std::span<const double> cdf_obs, std::span<const double> obs);

namespace reference {

Eigen::MatrixXd gaussian_gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double width);
Eigen::MatrixXd product_kernel_weights(const Eigen::MatrixXd& train, const Eigen::MatrixXd& queries,
                                       std::span<const double> bandwidths);
Eigen::MatrixXd normal_cdf_table(std::span<const double> centers, double bandwidth, const UniformGrid& grid);
/// Direct sum over centers, independent of the tabulated route.
Eigen::MatrixXd mixture_grid_cdfs(std::span<const double> centers, double bandwidth, const Eigen::MatrixXd& weights,
                                  const UniformGrid& grid);
Eigen::MatrixXd grid_cdfs(std::span<const PredictiveDensity> densities, const UniformGrid& grid);
std::vector<double> cdfs_at(std::span<const PredictiveDensity> densities, std::span<const double> y);
std::vector<double> pdfs_at(std::span<const PredictiveDensity> densities, std::span<const double> y);
std::vector<double> grid_crps_batch(const UniformGrid& grid, const Eigen::MatrixXd& cdfs,
                                    std::span<const double> cdf_obs, std::span<const double> obs);

}  // namespace reference

}  // namespace mmcast::kernels
