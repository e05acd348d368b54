#pragma once

// Predictive densities over normalized power and the operations every
// module shares: evaluation, integration, quantiles, intervals and CRPS.

#include <cstddef>
#include <memory>
#include <span>
#include <utility>
#include <variant>
#include <vector>

namespace mmcast {

class PredictiveDensity;

class GaussianDensity {
 public:
  GaussianDensity(double mean, double variance);

  double mean() const noexcept { return mean_; }
  double variance() const noexcept { return variance_; }
  double sd() const noexcept { return sd_; }

 private:
  double mean_;
  double variance_;
  double sd_;
};

class BetaDensity {
 public:
  BetaDensity(double alpha, double beta);

  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }
  /// log B(alpha, beta), cached for grid evaluation.
  double log_beta() const noexcept { return log_beta_; }

 private:
  double alpha_;
  double beta_;
  double log_beta_;
};

/// Equal-bandwidth Gaussian kernels at `centers`. Centers are shared so that
/// many conditional densities over one training set do not copy it.
class GaussianMixtureDensity {
 public:
  GaussianMixtureDensity(std::vector<double> centers, std::vector<double> weights, double bandwidth);
  GaussianMixtureDensity(std::shared_ptr<const std::vector<double>> centers, std::vector<double> weights,
                         double bandwidth);

  std::span<const double> centers() const noexcept { return *centers_; }
  std::span<const double> weights() const noexcept { return weights_; }
  double bandwidth() const noexcept { return bandwidth_; }
  const std::shared_ptr<const std::vector<double>>& shared_centers() const noexcept { return centers_; }

 private:
  std::shared_ptr<const std::vector<double>> centers_;
  std::vector<double> weights_;
  double bandwidth_;
};

class CombinedDensity {
 public:
  struct Member {
    double weight;
    std::shared_ptr<const PredictiveDensity> density;
  };

  explicit CombinedDensity(std::vector<Member> members);
  CombinedDensity(std::span<const double> weights, std::vector<PredictiveDensity> densities);

  std::span<const Member> members() const noexcept { return members_; }

 private:
  std::vector<Member> members_;
};

/// Inner density restricted to [0,1] and rescaled to unit mass.
class TruncatedDensity {
 public:
  /// Throws DegenerateError when the inner mass on [0,1] is at most 1e-6.
  explicit TruncatedDensity(std::shared_ptr<const PredictiveDensity> inner);

  const PredictiveDensity& inner() const noexcept { return *inner_; }
  const std::shared_ptr<const PredictiveDensity>& shared_inner() const noexcept { return inner_; }
  static constexpr double lower() noexcept { return 0.0; }
  static constexpr double upper() noexcept { return 1.0; }
  double normalization() const noexcept { return normalization_; }

 private:
  std::shared_ptr<const PredictiveDensity> inner_;
  double normalization_;
};

enum class DensityKind { gaussian, beta, mixture, combined, truncated };

class PredictiveDensity {
 public:
  using Variant = std::variant<GaussianDensity, BetaDensity, GaussianMixtureDensity, CombinedDensity, TruncatedDensity>;

  PredictiveDensity(GaussianDensity d) : value_(std::move(d)) {}
  PredictiveDensity(BetaDensity d) : value_(std::move(d)) {}
  PredictiveDensity(GaussianMixtureDensity d) : value_(std::move(d)) {}
  PredictiveDensity(CombinedDensity d) : value_(std::move(d)) {}
  PredictiveDensity(TruncatedDensity d) : value_(std::move(d)) {}

  const Variant& value() const noexcept { return value_; }
  DensityKind kind() const noexcept { return static_cast<DensityKind>(value_.index()); }

  template <class T>
  const T* get_if() const noexcept {
    return std::get_if<T>(&value_);
  }

 private:
  Variant value_;
};

struct Interval {
  double lower;
  double upper;
};

/// Uniform integration grid; the CRPS default is 2001 points on [0,1].
struct UniformGrid {
  double lower = 0.0;
  double upper = 1.0;
  std::size_t points = 2001;

  double step() const noexcept { return (upper - lower) / static_cast<double>(points - 1); }
  double at(std::size_t i) const noexcept {
    return i + 1 == points ? upper : lower + static_cast<double>(i) * step();
  }
};

inline constexpr std::size_t kDefaultCrpsGridPoints = 2001;
inline constexpr double kQuantileTolerance = 1e-8;
inline constexpr int kQuantileMaxIterations = 200;
inline constexpr double kMinTruncationMass = 1e-6;

double pdf_at(const PredictiveDensity& d, double y);
double cdf_at(const PredictiveDensity& d, double y);

/// Mass of d on [a, b].
double interval_mass(const PredictiveDensity& d, double a, double b);

/// Bracketed search (false position with bisection steps) on the support
/// until |cdf - p| <= 1e-8, at most 200 evaluations.
double quantile(const PredictiveDensity& d, double p);

/// Same search restricted to a bracket known to contain the p-quantile.
double quantile_in_bracket(const PredictiveDensity& d, double p, double lower, double upper);

/// Same search started from a tabulated CDF of d on `grid`; falls back to
/// quantile() when the table does not bracket p.
double quantile_on_grid(const PredictiveDensity& d, double p, const UniformGrid& grid, std::span<const double> cdf);

double mean_of(const PredictiveDensity& d);
double variance_of(const PredictiveDensity& d);

/// Interval holding all but a negligible tail of d (Gaussian tails cut at 40 sd).
Interval support_of(const PredictiveDensity& d);

Interval central_interval(const PredictiveDensity& d, double nominal);

TruncatedDensity truncate_renormalize(const PredictiveDensity& d);
TruncatedDensity truncate_renormalize(std::shared_ptr<const PredictiveDensity> d);

/// CRPS, closed form for GaussianDensity and grid integration otherwise.
double crps_single(const PredictiveDensity& d, double y_obs);

/// CRPS by trapezoid integration on a uniform grid that covers [0,1] and
/// the effective support of d, with the observation inserted as a node.
double crps_grid(const PredictiveDensity& d, double y_obs, std::size_t grid_points = kDefaultCrpsGridPoints);

double crps_gaussian_closed_form(const GaussianDensity& d, double y_obs);

/// Integration range used by crps_grid.
Interval crps_range(const PredictiveDensity& d);

std::vector<double> cdf_on_grid(const PredictiveDensity& d, const UniformGrid& grid);

/// Trapezoid integral of (Fa - H)(Fb - H) over the grid, where H is the unit
/// step at y_obs and the observation is an extra node. Fa_obs and Fb_obs are
/// the CDF values at y_obs. With Fa = Fb it is the CRPS.
double deviation_inner_product(const UniformGrid& grid, std::span<const double> fa, double fa_obs,
                               std::span<const double> fb, double fb_obs, double y_obs);

double grid_crps(const UniformGrid& grid, std::span<const double> cdf, double cdf_obs, double y_obs);

}  // namespace mmcast
