#include "mmcast/ckde.hpp"

#include <cmath>
#include <string>

#include "mmcast/error.hpp"
#include "mmcast/kernels.hpp"

namespace mmcast {

namespace {

double sample_sd(std::span<const double> v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

double silverman_bandwidth(std::span<const double> values) {
  if (values.size() < 2) throw DomainError("silverman_bandwidth: need at least two values");
  const double sd = sample_sd(values);
  if (!(sd > 0.0)) throw DataError("silverman_bandwidth: values are constant");
  return 1.06 * sd * std::pow(static_cast<double>(values.size()), -0.2);
}

CkdeModel ckde_fit(const Eigen::MatrixXd& features, std::span<const double> targets, const CkdeFitConfig& config) {
  if (features.rows() == 0) throw DomainError("ckde_fit: no samples");
  if (static_cast<std::size_t>(features.rows()) != targets.size()) throw DomainError("ckde_fit: size mismatch");
  CkdeModel model;
  model.training_features = features;
  model.training_targets = std::make_shared<const std::vector<double>>(targets.begin(), targets.end());
  const auto dims = static_cast<std::size_t>(features.cols());
  if (config.feature_bandwidths) {
    if (config.feature_bandwidths->size() != dims) throw ConfigError("ckde: feature bandwidth count mismatch");
    for (double h : *config.feature_bandwidths) {
      if (!(h > 0.0)) throw ConfigError("ckde: feature bandwidths must be > 0");
    }
    model.feature_bandwidths = *config.feature_bandwidths;
  } else {
    model.feature_bandwidths.resize(dims);
    std::vector<double> column(static_cast<std::size_t>(features.rows()));
    for (std::size_t c = 0; c < dims; ++c) {
      for (Eigen::Index r = 0; r < features.rows(); ++r) column[static_cast<std::size_t>(r)] = features(r, static_cast<Eigen::Index>(c));
      try {
        model.feature_bandwidths[c] = silverman_bandwidth(column);
      } catch (const DataError&) {
        throw DataError("ckde: feature dimension " + std::to_string(c) + " is constant");
      } catch (const DomainError&) {
        throw DomainError("ckde: need at least two samples for Silverman bandwidths");
      }
    }
  }
  if (config.target_bandwidth) {
    if (!(*config.target_bandwidth > 0.0)) throw ConfigError("ckde: target bandwidth must be > 0");
    model.target_bandwidth = *config.target_bandwidth;
  } else {
    try {
      model.target_bandwidth = silverman_bandwidth(targets);
    } catch (const DataError&) {
      throw DataError("ckde: targets are constant");
    }
  }
  return model;
}

Eigen::MatrixXd kernel_weight_matrix(const CkdeModel& model, const Eigen::MatrixXd& queries) {
  if (static_cast<std::size_t>(queries.cols()) != model.dimension()) {
    throw DomainError("ckde: feature dimension mismatch");
  }
  return kernels::product_kernel_weights(model.training_features, queries, model.feature_bandwidths);
}

std::vector<double> kernel_weights(const CkdeModel& model, std::span<const double> x) {
  if (x.size() != model.dimension()) throw DomainError("ckde: feature dimension mismatch");
  const Eigen::MatrixXd q = Eigen::Map<const Eigen::RowVectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::MatrixXd w = kernels::reference::product_kernel_weights(model.training_features, q, model.feature_bandwidths);
  return {w.data(), w.data() + w.size()};
}

GaussianMixtureDensity ckde_predict(const CkdeModel& model, std::span<const double> x) {
  return GaussianMixtureDensity(model.training_targets, kernel_weights(model, x), model.target_bandwidth);
}

}  // namespace mmcast
