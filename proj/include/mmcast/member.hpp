#pragma once

// Uniform interface over the member forecasters as seen by the combiner and
// the evaluation: every member maps a scaled feature vector to a predictive
// density on [0,1].

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mmcast/bde.hpp"
#include "mmcast/ckde.hpp"
#include "mmcast/data.hpp"
#include "mmcast/density.hpp"
#include "mmcast/sbl.hpp"

namespace mmcast {

/// Feature vectors of `samples` as matrix rows.
Eigen::MatrixXd feature_matrix(std::span<const Sample> samples);
std::vector<double> target_values(std::span<const Sample> samples);
std::vector<int> horizons_of(std::span<const Sample> samples);

class Member {
 public:
  virtual ~Member() = default;

  virtual std::string name() const = 0;

  /// True when the density depends on the combiner-owned shared variance.
  /// Such members build their density from a variance-free expectation.
  virtual bool uses_shared_variance() const noexcept { return false; }

  /// Predictive density on [0,1]; `variance` is ignored unless the member
  /// uses the shared variance.
  virtual PredictiveDensity predict(std::span<const double> x, double variance) const = 0;

  /// One prediction per row of x.
  virtual std::vector<PredictiveDensity> predict_batch(const Eigen::MatrixXd& x, double variance) const;

  /// CDFs of `predictions` (made from the rows of x) on a grid over [0,1].
  virtual Eigen::MatrixXd grid_cdfs(const Eigen::MatrixXd& x, std::span<const PredictiveDensity> predictions,
                                    const UniformGrid& grid) const;

  /// Variance-free expectations; only meaningful for shared-variance members.
  virtual std::vector<double> expectations(const Eigen::MatrixXd& x) const;

  /// Density from an expectation and the shared variance.
  virtual PredictiveDensity density_from_expectation(double expectation, double variance) const;
};

class SblMember final : public Member {
 public:
  explicit SblMember(SblModel model) : model_(std::move(model)) {}
  std::string name() const override { return "sbl"; }
  PredictiveDensity predict(std::span<const double> x, double variance) const override;
  const SblModel& model() const noexcept { return model_; }

 private:
  SblModel model_;
};

/// Truncated conditional mixture. Components whose weight is below 1e-17 of
/// the largest are dropped from the returned mixture.
class CkdeMember final : public Member {
 public:
  explicit CkdeMember(CkdeModel model) : model_(std::move(model)) {}
  std::string name() const override { return "ckde"; }
  PredictiveDensity predict(std::span<const double> x, double variance) const override;
  std::vector<PredictiveDensity> predict_batch(const Eigen::MatrixXd& x, double variance) const override;
  /// Tabulated kernel CDFs times the weight matrix, then truncation.
  Eigen::MatrixXd grid_cdfs(const Eigen::MatrixXd& x, std::span<const PredictiveDensity> predictions,
                            const UniformGrid& grid) const override;
  const CkdeModel& model() const noexcept { return model_; }

 private:
  CkdeModel model_;
};

class BdeMember final : public Member {
 public:
  explicit BdeMember(std::shared_ptr<const KernelRidgeForecaster> spot) : spot_(std::move(spot)) {}
  std::string name() const override { return "bde"; }
  bool uses_shared_variance() const noexcept override { return true; }
  PredictiveDensity predict(std::span<const double> x, double variance) const override;
  std::vector<double> expectations(const Eigen::MatrixXd& x) const override;
  PredictiveDensity density_from_expectation(double expectation, double variance) const override;
  const KernelRidgeForecaster& spot() const noexcept { return *spot_; }
  const std::shared_ptr<const KernelRidgeForecaster>& shared_spot() const noexcept { return spot_; }

 private:
  std::shared_ptr<const KernelRidgeForecaster> spot_;
};

}  // namespace mmcast
