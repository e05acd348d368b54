#pragma once

// Multi-model combination: EM estimation of the member weights and the shared
// Beta variance, CRPS refinement by particle swarm, and combined prediction.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mmcast/density.hpp"
#include "mmcast/member.hpp"

namespace mmcast {

inline constexpr double kDensityFloor = 1e-300;
/// Observations are moved this far inside [0,1] before density evaluation,
/// where Beta densities with a shape below 1 are unbounded.
inline constexpr double kObservationMargin = 1e-6;

/// Member predictions over one sample set, cached for the combiner.
struct MemberPanel {
  std::vector<std::shared_ptr<const Member>> members;
  Eigen::MatrixXd features;
  std::vector<double> targets;
  /// Fixed members: their predictions; empty for shared-variance members.
  std::vector<std::vector<PredictiveDensity>> predictions;
  /// Fixed members: predictive means; shared-variance members: expectations.
  std::vector<std::vector<double>> means;
  /// Fixed members: floored pdf at each target; empty otherwise.
  std::vector<std::vector<double>> fixed_pdfs;

  std::size_t size() const noexcept { return targets.size(); }
  std::size_t member_count() const noexcept { return members.size(); }
  bool has_shared_variance() const;
};

MemberPanel build_panel(std::vector<std::shared_ptr<const Member>> members, const Eigen::MatrixXd& features,
                        std::span<const double> targets);

/// p_k(y_n), floored at 1e-300.
double member_density_at(const Member& member, std::span<const double> x, double y, double variance);

/// N x K matrix of floored member densities at the targets.
Eigen::MatrixXd density_matrix(const MemberPanel& panel, double variance);

/// z(n, k) = w_k p(n, k) / sum_j w_j p(n, j).
Eigen::MatrixXd responsibilities(const Eigen::MatrixXd& densities, std::span<const double> weights);

double log_likelihood(const Eigen::MatrixXd& densities, std::span<const double> weights);

enum class VarianceMode {
  all_members,       // residuals of every member, weighted by responsibility
  variance_members,  // only members that use the shared variance
  fixed,             // variance held at its initial value
};

VarianceMode parse_variance_mode(const std::string& text);
std::string to_string(VarianceMode mode);

struct EmConfig {
  double tolerance = 1e-6;
  int max_iterations = 200;
  VarianceMode variance_mode = VarianceMode::all_members;
  std::optional<std::vector<double>> initial_weights;  // uniform when unset
  std::optional<double> initial_variance;              // spot residual variance when unset
};

struct EmResult {
  std::vector<double> weights;
  double variance = 0.0;
  std::vector<double> trace;  // log-likelihood at every iterate, starting point included
  int iterations = 0;
  bool converged = false;
  int weight_only_steps = 0;  // steps where the variance update was rejected
};

/// Mean squared residual of the shared-variance members' expectations, or
/// 1e-2 when no member uses the shared variance.
double initial_shared_variance(const MemberPanel& panel);

EmResult em_fit(const MemberPanel& panel, const EmConfig& config = {});

struct PsoConfig {
  int swarm_size = 30;
  int iterations = 100;
  double inertia = 0.72;
  double cognitive = 1.49;
  double social = 1.49;
  double weight_radius = 0.2;    // box half-width per weight coordinate
  double variance_radius = 0.5;  // multiplicative half-width on the variance
  std::uint64_t seed = 20120501;
  int variance_nodes = 13;  // interpolation nodes for the variance-dependent terms
};

struct PsoResult {
  std::vector<double> position;
  double value = 0.0;
  int evaluations = 0;
};

/// Minimizes f over the box [lower, upper]. Each seed occupies one particle.
PsoResult particle_swarm_minimize(const std::function<double(std::span<const double>)>& f,
                                  std::span<const double> lower, std::span<const double> upper,
                                  std::span<const std::vector<double>> seeds, const PsoConfig& config);

/// Mean CRPS of the combined density over the panel, exact on the grid.
class CrpsObjective {
 public:
  CrpsObjective(const MemberPanel& panel, const UniformGrid& grid = {});
  /// Q(k, l) = mean_n integral of (F_k - H)(F_l - H), so that the mean CRPS
  /// of the combination is w^T Q w.
  Eigen::MatrixXd gram(double variance) const;
  double value(std::span<const double> weights, double variance) const;
  const UniformGrid& grid() const noexcept { return grid_; }

 private:
  const MemberPanel& panel_;
  UniformGrid grid_;
  std::vector<Eigen::MatrixXd> fixed_cdfs_;  // empty for shared-variance members
  std::vector<std::vector<double>> fixed_cdf_obs_;
  Eigen::MatrixXd fixed_gram_;
};

struct RefineResult {
  std::vector<double> weights;
  double variance = 0.0;
  double crps_before = 0.0;  // at the EM solution
  double crps_after = 0.0;   // at the returned solution
  bool improved = false;
  int evaluations = 0;
};

/// Maps unconstrained coordinates to the simplex by normalizing their
/// non-negative parts; an all-zero input maps to `fallback`.
std::vector<double> project_to_simplex(std::span<const double> raw, std::span<const double> fallback);

RefineResult crps_refine(const MemberPanel& panel, std::span<const double> em_weights, double em_variance,
                         const PsoConfig& config = {}, const UniformGrid& grid = {});

struct MmcModel {
  std::vector<std::shared_ptr<const Member>> members;
  std::vector<double> weights;
  double variance = 0.0;
  std::vector<double> trace;
  bool refined = false;
};

CombinedDensity mmc_predict(const MmcModel& model, std::span<const double> x);

}  // namespace mmcast
