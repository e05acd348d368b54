#pragma once

// Sparse Bayesian kernel regression: Gaussian-kernel bases plus a bias, a
// zero-mean Gaussian prior with one precision per basis, and evidence
// maximization that prunes bases whose precision diverges.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mmcast/density.hpp"

namespace mmcast {

struct SblFitConfig {
  std::optional<double> kernel_width;  // median pairwise distance when unset
  int max_iterations = 500;
  double tolerance = 1e-6;    // on the largest relative hyperparameter change
  double alpha_max = 1e12;    // pruning threshold
  std::size_t max_centers = 400;  // candidate kernel centers, evenly strided; 0 keeps every input
};

struct SblModel {
  Eigen::MatrixXd relevance_inputs;  // one retained kernel center per row
  bool has_bias = true;              // basis 0 is the constant when set
  Eigen::VectorXd posterior_mean;
  Eigen::MatrixXd posterior_cov;
  Eigen::VectorXd alpha;  // prior precisions of the retained bases
  double noise_variance = 0.0;
  double kernel_width = 0.0;
  std::vector<double> evidence_trace;  // log marginal likelihood per accepted iteration
  int iterations = 0;
  bool converged = false;

  std::size_t basis_count() const noexcept { return static_cast<std::size_t>(posterior_mean.size()); }
  Eigen::VectorXd basis(std::span<const double> x) const;
};

double gaussian_kernel(std::span<const double> x1, std::span<const double> x2, double width);

/// Median Euclidean distance over row pairs; rows are strided down to at most
/// `max_rows` first.
double median_pairwise_distance(const Eigen::MatrixXd& x, std::size_t max_rows = 3000);

struct SblPosterior {
  Eigen::MatrixXd covariance;  // (noise^-2 Phi^T Phi + A)^-1
  Eigen::VectorXd mean;        // noise^-2 Sigma Phi^T y
};

/// Posterior over the weights for fixed hyperparameters. Throws
/// NumericalError if the system stays singular after one jitter retry.
SblPosterior sbl_posterior(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y, const Eigen::VectorXd& alpha,
                           double noise_variance);

/// Log marginal likelihood log N(y | 0, noise I + Phi A^-1 Phi^T).
double sbl_log_evidence(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y, const Eigen::VectorXd& alpha,
                        double noise_variance);

/// Design matrix [1, K(x_n, c_1), ...] (bias column optional).
Eigen::MatrixXd sbl_design(const Eigen::MatrixXd& x, const Eigen::MatrixXd& centers, double width, bool bias);

SblModel sbl_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const SblFitConfig& config = {});

/// Gaussian with mean mu^T phi(x) and variance noise + phi^T Sigma phi.
GaussianDensity sbl_predict(const SblModel& model, std::span<const double> x);

}  // namespace mmcast
