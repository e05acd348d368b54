#include "mmcast/bde.hpp"

#include <algorithm>
#include <cmath>

#include "mmcast/error.hpp"
#include "mmcast/kernels.hpp"
#include "mmcast/sbl.hpp"

namespace mmcast {

KernelRidgeForecaster::KernelRidgeForecaster(Eigen::MatrixXd centers, Eigen::VectorXd coefficients, double target_mean,
                                             double width, double lambda)
    : centers_(std::move(centers)),
      coefficients_(std::move(coefficients)),
      target_mean_(target_mean),
      width_(width),
      lambda_(lambda) {
  if (centers_.rows() != coefficients_.size()) throw DomainError("kernel ridge: size mismatch");
  if (!(width_ > 0.0) || !(lambda_ > 0.0)) throw DomainError("kernel ridge: width and lambda must be > 0");
}

double KernelRidgeForecaster::raw_predict(std::span<const double> x) const {
  if (static_cast<Eigen::Index>(x.size()) != centers_.cols()) throw DomainError("spot_predict: dimension mismatch");
  const double inv = 1.0 / (2.0 * width_ * width_);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < centers_.rows(); ++i) {
    double d2 = 0.0;
    for (Eigen::Index c = 0; c < centers_.cols(); ++c) {
      const double diff = x[static_cast<std::size_t>(c)] - centers_(i, c);
      d2 += diff * diff;
    }
    acc += coefficients_(i) * std::exp(-d2 * inv);
  }
  return target_mean_ + acc;
}

KernelRidgeForecaster spot_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const SpotFitConfig& config) {
  if (x.rows() == 0) throw DomainError("spot_fit: no samples");
  if (x.rows() != y.size()) throw DomainError("spot_fit: size mismatch");
  if (!(config.lambda > 0.0)) throw ConfigError("bde: lambda must be > 0");
  double width = 1.0;
  if (config.kernel_width) {
    width = *config.kernel_width;
  } else if (x.rows() >= 2) {
    width = median_pairwise_distance(x);
  }
  if (!(width > 0.0)) throw ConfigError("bde: kernel width must be > 0");

  const double mean = y.mean();
  Eigen::MatrixXd k = kernels::gaussian_gram(x, x, width);
  k.diagonal().array() += config.lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) {
    k.diagonal().array() += 1e-10 * std::max(1.0, k.diagonal().mean());
    llt.compute(k);
    if (llt.info() != Eigen::Success) throw NumericalError("spot_fit: kernel system is singular");
  }
  Eigen::VectorXd c = llt.solve((y.array() - mean).matrix());
  return KernelRidgeForecaster(x, std::move(c), mean, width, config.lambda);
}

double clamp_expectation(double raw) noexcept {
  if (std::isnan(raw)) return 0.5;
  return std::clamp(raw, kSpotClamp, 1.0 - kSpotClamp);
}

double spot_predict(const SpotForecaster& spot, std::span<const double> x) {
  return clamp_expectation(spot.raw_predict(x));
}

BetaShape beta_shape_from_moments(double mu, double variance) {
  if (!(mu > 0.0 && mu < 1.0)) throw DomainError("beta_shape_from_moments: mean must lie in (0,1)");
  if (!(variance > 0.0)) throw DomainError("beta_shape_from_moments: variance must be > 0");
  const double cap = mu * (1.0 - mu);
  const double v = std::min(variance, 0.999 * cap);
  const double common = (cap - v) / v;
  return {mu * common, (1.0 - mu) * common};
}

BetaDensity bde_density(double mu, double variance) {
  const BetaShape s = beta_shape_from_moments(mu, variance);
  return BetaDensity(s.alpha, s.beta);
}

BetaDensity bde_predict(const BdeModel& model, std::span<const double> x) {
  if (!model.spot) throw DomainError("bde_predict: model has no spot forecaster");
  return bde_density(spot_predict(*model.spot, x), model.variance);
}

}  // namespace mmcast
