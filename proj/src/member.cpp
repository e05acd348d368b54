#include "mmcast/member.hpp"

#include <algorithm>
#include <optional>

#include "mmcast/error.hpp"
#include "mmcast/kernels.hpp"
#include "mmcast/parallel.hpp"

namespace mmcast {

namespace {

std::span<const double> row_span(const Eigen::MatrixXd& x, Eigen::Index r, std::vector<double>& buffer) {
  buffer.resize(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index c = 0; c < x.cols(); ++c) buffer[static_cast<std::size_t>(c)] = x(r, c);
  return buffer;
}

PredictiveDensity truncated(PredictiveDensity d) {
  return truncate_renormalize(std::make_shared<const PredictiveDensity>(std::move(d)));
}

// Components below 1e-17 of the largest weight are dropped; their total
// mass is at most n * 1e-17 of the largest weight, invisible at every tolerance
// used downstream, and evaluation cost falls with the retained count.
constexpr double kMixturePruneRatio = 1e-17;

GaussianMixtureDensity pruned_mixture(const CkdeModel& model, const double* weights, std::size_t n) {
  const double cutoff = kMixturePruneRatio * *std::max_element(weights, weights + n);
  const std::vector<double>& targets = *model.training_targets;
  std::vector<double> centers;
  std::vector<double> kept;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (weights[i] > cutoff) {
      centers.push_back(targets[i]);
      kept.push_back(weights[i]);
      sum += weights[i];
    }
  }
  for (double& w : kept) w /= sum;
  return GaussianMixtureDensity(std::move(centers), std::move(kept), model.target_bandwidth);
}

}  // namespace

Eigen::MatrixXd feature_matrix(std::span<const Sample> samples) {
  if (samples.empty()) return {};
  const auto dims = static_cast<Eigen::Index>(samples.front().features.size());
  Eigen::MatrixXd x(static_cast<Eigen::Index>(samples.size()), dims);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (static_cast<Eigen::Index>(samples[i].features.size()) != dims) {
      throw DataError("samples have inconsistent feature dimensions");
    }
    for (Eigen::Index c = 0; c < dims; ++c) x(static_cast<Eigen::Index>(i), c) = samples[i].features[static_cast<std::size_t>(c)];
  }
  return x;
}

std::vector<double> target_values(std::span<const Sample> samples) {
  std::vector<double> y;
  y.reserve(samples.size());
  for (const auto& s : samples) y.push_back(s.target);
  return y;
}

std::vector<int> horizons_of(std::span<const Sample> samples) {
  std::vector<int> h;
  h.reserve(samples.size());
  for (const auto& s : samples) h.push_back(s.horizon);
  return h;
}

std::vector<PredictiveDensity> Member::predict_batch(const Eigen::MatrixXd& x, double variance) const {
  std::vector<std::optional<PredictiveDensity>> slots(static_cast<std::size_t>(x.rows()));
  parallel_for(x.rows(), true, [&](std::ptrdiff_t r) {
    std::vector<double> buffer;
    slots[static_cast<std::size_t>(r)].emplace(predict(row_span(x, r, buffer), variance));
  });
  std::vector<PredictiveDensity> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

Eigen::MatrixXd Member::grid_cdfs(const Eigen::MatrixXd& /*x*/, std::span<const PredictiveDensity> predictions,
                                  const UniformGrid& grid) const {
  return kernels::grid_cdfs(predictions, grid);
}

std::vector<double> Member::expectations(const Eigen::MatrixXd& /*x*/) const {
  throw DomainError(name() + ": member does not use the shared variance");
}

PredictiveDensity Member::density_from_expectation(double /*expectation*/, double /*variance*/) const {
  throw DomainError(name() + ": member does not use the shared variance");
}

PredictiveDensity SblMember::predict(std::span<const double> x, double /*variance*/) const {
  return truncated(sbl_predict(model_, x));
}

PredictiveDensity CkdeMember::predict(std::span<const double> x, double /*variance*/) const {
  const std::vector<double> w = kernel_weights(model_, x);
  return truncated(pruned_mixture(model_, w.data(), w.size()));
}

std::vector<PredictiveDensity> CkdeMember::predict_batch(const Eigen::MatrixXd& x, double /*variance*/) const {
  const Eigen::MatrixXd w = kernel_weight_matrix(model_, x);
  std::vector<std::optional<PredictiveDensity>> slots(static_cast<std::size_t>(x.rows()));
  parallel_for(x.rows(), true, [&](std::ptrdiff_t q) {
    slots[static_cast<std::size_t>(q)].emplace(
        truncated(pruned_mixture(model_, w.col(q).data(), static_cast<std::size_t>(w.rows()))));
  });
  std::vector<PredictiveDensity> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

Eigen::MatrixXd CkdeMember::grid_cdfs(const Eigen::MatrixXd& x, std::span<const PredictiveDensity> predictions,
                                      const UniformGrid& grid) const {
  if (grid.lower != 0.0 || grid.upper != 1.0) return Member::grid_cdfs(x, predictions, grid);
  const Eigen::MatrixXd table = kernels::normal_cdf_table(*model_.training_targets, model_.target_bandwidth, grid);
  Eigen::MatrixXd cdfs = kernels::mixture_grid_cdfs(table, kernel_weight_matrix(model_, x));
  const Eigen::Index last = cdfs.rows() - 1;
  for (Eigen::Index n = 0; n < cdfs.cols(); ++n) {
    const double f0 = cdfs(0, n);
    const double mass = cdfs(last, n) - f0;
    if (!(mass > kMinTruncationMass)) throw DegenerateError("ckde: negligible mass on [0,1]");
    for (Eigen::Index g = 0; g <= last; ++g) cdfs(g, n) = std::clamp((cdfs(g, n) - f0) / mass, 0.0, 1.0);
    cdfs(0, n) = 0.0;
    cdfs(last, n) = 1.0;
  }
  return cdfs;
}

PredictiveDensity BdeMember::predict(std::span<const double> x, double variance) const {
  return bde_density(spot_predict(*spot_, x), variance);
}

std::vector<double> BdeMember::expectations(const Eigen::MatrixXd& x) const {
  std::vector<double> mu(static_cast<std::size_t>(x.rows()));
  parallel_for(x.rows(), true, [&](std::ptrdiff_t r) {
    std::vector<double> buffer;
    mu[static_cast<std::size_t>(r)] = spot_predict(*spot_, row_span(x, r, buffer));
  });
  return mu;
}

PredictiveDensity BdeMember::density_from_expectation(double expectation, double variance) const {
  return bde_density(expectation, variance);
}

}  // namespace mmcast
