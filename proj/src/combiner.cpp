#include "mmcast/combiner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "mmcast/error.hpp"
#include "mmcast/kernels.hpp"
#include "mmcast/parallel.hpp"

namespace mmcast {

namespace {

constexpr double kVarianceFloor = 1e-10;

double observation_for_density(double y) { return std::clamp(y, kObservationMargin, 1.0 - kObservationMargin); }

double floored(double p) { return std::isfinite(p) ? std::max(p, kDensityFloor) : kDensityFloor; }

void check_simplex(std::span<const double> w, std::size_t k, const char* what) {
  if (w.size() != k) throw ConfigError(std::string(what) + ": expected " + std::to_string(k) + " weights");
  double sum = 0.0;
  for (double v : w) {
    if (!(v >= 0.0)) throw ConfigError(std::string(what) + ": weights must be non-negative");
    sum += v;
  }
  if (std::fabs(sum - 1.0) > 1e-9) throw ConfigError(std::string(what) + ": weights must sum to 1");
}

std::vector<double> shared_pdfs(const MemberPanel& panel, std::size_t k, double variance) {
  const Member& m = *panel.members[k];
  std::vector<double> out(panel.size());
  parallel_for(static_cast<std::ptrdiff_t>(panel.size()), true, [&](std::ptrdiff_t n) {
    const auto i = static_cast<std::size_t>(n);
    const PredictiveDensity d = m.density_from_expectation(panel.means[k][i], variance);
    out[i] = floored(pdf_at(d, observation_for_density(panel.targets[i])));
  });
  return out;
}

}  // namespace

bool MemberPanel::has_shared_variance() const {
  return std::any_of(members.begin(), members.end(), [](const auto& m) { return m->uses_shared_variance(); });
}

MemberPanel build_panel(std::vector<std::shared_ptr<const Member>> members, const Eigen::MatrixXd& features,
                        std::span<const double> targets) {
  if (members.empty()) throw DomainError("build_panel: no members");
  if (static_cast<std::size_t>(features.rows()) != targets.size()) throw DomainError("build_panel: size mismatch");
  if (targets.empty()) throw DomainError("build_panel: no samples");
  MemberPanel panel;
  panel.members = std::move(members);
  panel.features = features;
  panel.targets.assign(targets.begin(), targets.end());
  const std::size_t k_count = panel.members.size();
  panel.predictions.resize(k_count);
  panel.means.resize(k_count);
  panel.fixed_pdfs.resize(k_count);
  const auto n = static_cast<std::ptrdiff_t>(targets.size());
  for (std::size_t k = 0; k < k_count; ++k) {
    const Member& m = *panel.members[k];
    if (m.uses_shared_variance()) {
      panel.means[k] = m.expectations(features);
      continue;
    }
    panel.predictions[k] = m.predict_batch(features, 0.0);
    panel.means[k].resize(targets.size());
    panel.fixed_pdfs[k].resize(targets.size());
    parallel_for(n, true, [&](std::ptrdiff_t i) {
      const auto s = static_cast<std::size_t>(i);
      const PredictiveDensity& d = panel.predictions[k][s];
      panel.means[k][s] = mean_of(d);
      panel.fixed_pdfs[k][s] = floored(pdf_at(d, observation_for_density(panel.targets[s])));
    });
  }
  return panel;
}

double member_density_at(const Member& member, std::span<const double> x, double y, double variance) {
  return floored(pdf_at(member.predict(x, variance), observation_for_density(y)));
}

Eigen::MatrixXd density_matrix(const MemberPanel& panel, double variance) {
  const auto n = static_cast<Eigen::Index>(panel.size());
  Eigen::MatrixXd p(n, static_cast<Eigen::Index>(panel.member_count()));
  for (std::size_t k = 0; k < panel.member_count(); ++k) {
    const std::vector<double> col =
        panel.members[k]->uses_shared_variance() ? shared_pdfs(panel, k, variance) : panel.fixed_pdfs[k];
    for (Eigen::Index i = 0; i < n; ++i) p(i, static_cast<Eigen::Index>(k)) = col[static_cast<std::size_t>(i)];
  }
  return p;
}

Eigen::MatrixXd responsibilities(const Eigen::MatrixXd& densities, std::span<const double> weights) {
  if (static_cast<std::size_t>(densities.cols()) != weights.size()) throw DomainError("responsibilities: size mismatch");
  Eigen::MatrixXd z(densities.rows(), densities.cols());
  for (Eigen::Index n = 0; n < densities.rows(); ++n) {
    double total = 0.0;
    for (Eigen::Index k = 0; k < densities.cols(); ++k) {
      z(n, k) = weights[static_cast<std::size_t>(k)] * densities(n, k);
      total += z(n, k);
    }
    if (total > 0.0) {
      z.row(n) /= total;
    } else {
      for (Eigen::Index k = 0; k < densities.cols(); ++k) z(n, k) = weights[static_cast<std::size_t>(k)];
    }
  }
  return z;
}

double log_likelihood(const Eigen::MatrixXd& densities, std::span<const double> weights) {
  if (static_cast<std::size_t>(densities.cols()) != weights.size()) throw DomainError("log_likelihood: size mismatch");
  double total = 0.0;
  for (Eigen::Index n = 0; n < densities.rows(); ++n) {
    double mix = 0.0;
    for (Eigen::Index k = 0; k < densities.cols(); ++k) mix += weights[static_cast<std::size_t>(k)] * densities(n, k);
    total += std::log(std::max(mix, kDensityFloor));
  }
  return total;
}

VarianceMode parse_variance_mode(const std::string& text) {
  if (text == "all_members") return VarianceMode::all_members;
  if (text == "variance_members") return VarianceMode::variance_members;
  if (text == "fixed") return VarianceMode::fixed;
  throw ConfigError("unknown variance mode '" + text + "' (expected all_members, variance_members or fixed)");
}

std::string to_string(VarianceMode mode) {
  switch (mode) {
    case VarianceMode::all_members:
      return "all_members";
    case VarianceMode::variance_members:
      return "variance_members";
    case VarianceMode::fixed:
      return "fixed";
  }
  return "all_members";
}

double initial_shared_variance(const MemberPanel& panel) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < panel.member_count(); ++k) {
    if (!panel.members[k]->uses_shared_variance()) continue;
    for (std::size_t n = 0; n < panel.size(); ++n) {
      const double r = panel.targets[n] - panel.means[k][n];
      sum += r * r;
    }
    count += panel.size();
  }
  if (count == 0) return 1e-2;
  return std::max(sum / static_cast<double>(count), kVarianceFloor);
}

EmResult em_fit(const MemberPanel& panel, const EmConfig& config) {
  const std::size_t k_count = panel.member_count();
  if (k_count < 2) throw DomainError("em_fit: need at least two members");
  if (panel.size() == 0) throw DomainError("em_fit: no samples");
  if (!(config.tolerance > 0.0) || config.max_iterations < 0) throw ConfigError("em: invalid tolerance or max_iterations");

  std::vector<double> w = config.initial_weights ? *config.initial_weights
                                                 : std::vector<double>(k_count, 1.0 / static_cast<double>(k_count));
  check_simplex(w, k_count, "em initial weights");
  double variance = config.initial_variance ? *config.initial_variance : initial_shared_variance(panel);
  if (!(variance > 0.0)) throw ConfigError("em: initial variance must be > 0");
  variance = std::max(variance, kVarianceFloor);

  const bool shared = panel.has_shared_variance();
  const auto n_count = static_cast<Eigen::Index>(panel.size());
  Eigen::MatrixXd p = density_matrix(panel, variance);
  double ll = log_likelihood(p, w);
  if (!std::isfinite(ll)) throw NumericalError("em: log-likelihood is not finite");

  EmResult result;
  result.trace.push_back(ll);
  for (int it = 0; it < config.max_iterations; ++it) {
    const Eigen::MatrixXd z = responsibilities(p, w);

    std::vector<double> w_new(k_count, 0.0);
    for (std::size_t k = 0; k < k_count; ++k) {
      double acc = 0.0;
      for (Eigen::Index n = 0; n < n_count; ++n) acc += z(n, static_cast<Eigen::Index>(k));
      w_new[k] = acc / static_cast<double>(n_count);
    }
    double wsum = 0.0;
    for (double v : w_new) wsum += v;
    for (double& v : w_new) v /= wsum;

    double var_new = variance;
    if (config.variance_mode != VarianceMode::fixed) {
      double num = 0.0;
      double den = 0.0;
      for (Eigen::Index n = 0; n < n_count; ++n) {
        const double y = panel.targets[static_cast<std::size_t>(n)];
        for (std::size_t k = 0; k < k_count; ++k) {
          if (config.variance_mode == VarianceMode::variance_members && !panel.members[k]->uses_shared_variance()) {
            continue;
          }
          const double r = y - panel.means[k][static_cast<std::size_t>(n)];
          num += z(n, static_cast<Eigen::Index>(k)) * r * r;
          den += z(n, static_cast<Eigen::Index>(k));
        }
      }
      if (config.variance_mode == VarianceMode::all_members) {
        var_new = num / static_cast<double>(n_count);
      } else if (den > 0.0) {
        var_new = num / den;
      }
      var_new = std::max(var_new, kVarianceFloor);
    }

    Eigen::MatrixXd p_new = (shared && var_new != variance) ? density_matrix(panel, var_new) : p;
    double ll_new = log_likelihood(p_new, w_new);
    if (!std::isfinite(ll_new)) throw NumericalError("em: log-likelihood is not finite");
    if (ll_new < ll && var_new != variance) {
      // The residual variance is not the likelihood maximizer for the Beta
      // member; keep the variance and take the weight step, which cannot
      // decrease the likelihood.
      var_new = variance;
      p_new = p;
      ll_new = log_likelihood(p_new, w_new);
      ++result.weight_only_steps;
    }

    double change = std::fabs(var_new - variance) / variance;
    for (std::size_t k = 0; k < k_count; ++k) change = std::max(change, std::fabs(w_new[k] - w[k]));

    w = std::move(w_new);
    variance = var_new;
    p = std::move(p_new);
    ll = ll_new;
    result.trace.push_back(ll);
    result.iterations = it + 1;
    if (change <= config.tolerance) {
      result.converged = true;
      break;
    }
  }
  result.weights = std::move(w);
  result.variance = variance;
  return result;
}

PsoResult particle_swarm_minimize(const std::function<double(std::span<const double>)>& f,
                                  std::span<const double> lower, std::span<const double> upper,
                                  std::span<const std::vector<double>> seeds, const PsoConfig& config) {
  const std::size_t dims = lower.size();
  if (upper.size() != dims || dims == 0) throw DomainError("pso: bad bounds");
  for (std::size_t d = 0; d < dims; ++d) {
    if (!(lower[d] <= upper[d])) throw DomainError("pso: lower bound above upper bound");
  }
  if (config.swarm_size < 1 || config.iterations < 0) throw ConfigError("pso: swarm size must be >= 1");

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto swarm = static_cast<std::size_t>(std::max<int>(config.swarm_size, static_cast<int>(seeds.size())));

  std::vector<std::vector<double>> pos(swarm, std::vector<double>(dims));
  std::vector<std::vector<double>> vel(swarm, std::vector<double>(dims));
  for (std::size_t i = 0; i < swarm; ++i) {
    for (std::size_t d = 0; d < dims; ++d) {
      const double range = upper[d] - lower[d];
      if (i < seeds.size()) {
        if (seeds[i].size() != dims) throw DomainError("pso: seed dimension mismatch");
        pos[i][d] = std::clamp(seeds[i][d], lower[d], upper[d]);
      } else {
        pos[i][d] = lower[d] + unit(rng) * range;
      }
      vel[i][d] = (2.0 * unit(rng) - 1.0) * range;
    }
  }

  PsoResult result;
  std::vector<std::vector<double>> best_pos = pos;
  std::vector<double> best_val(swarm);
  std::size_t global = 0;
  for (std::size_t i = 0; i < swarm; ++i) {
    best_val[i] = f(pos[i]);
    ++result.evaluations;
    if (best_val[i] < best_val[global]) global = i;
  }

  for (int it = 0; it < config.iterations; ++it) {
    for (std::size_t i = 0; i < swarm; ++i) {
      for (std::size_t d = 0; d < dims; ++d) {
        const double range = upper[d] - lower[d];
        const double r1 = unit(rng);
        const double r2 = unit(rng);
        double v = config.inertia * vel[i][d] + config.cognitive * r1 * (best_pos[i][d] - pos[i][d]) +
                   config.social * r2 * (best_pos[global][d] - pos[i][d]);
        v = std::clamp(v, -range, range);
        double x = pos[i][d] + v;
        if (x < lower[d]) {
          x = lower[d];
          v = 0.0;
        } else if (x > upper[d]) {
          x = upper[d];
          v = 0.0;
        }
        pos[i][d] = x;
        vel[i][d] = v;
      }
      const double val = f(pos[i]);
      ++result.evaluations;
      if (val < best_val[i]) {
        best_val[i] = val;
        best_pos[i] = pos[i];
        if (val < best_val[global]) global = i;
      }
    }
  }
  result.position = best_pos[global];
  result.value = best_val[global];
  return result;
}

CrpsObjective::CrpsObjective(const MemberPanel& panel, const UniformGrid& grid) : panel_(panel), grid_(grid) {
  if (grid_.lower != 0.0 || grid_.upper != 1.0 || grid_.points < 2) {
    throw DomainError("crps objective: grid must cover [0,1]");
  }
  const std::size_t k_count = panel.member_count();
  fixed_cdfs_.resize(k_count);
  fixed_cdf_obs_.resize(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    if (panel.members[k]->uses_shared_variance()) continue;
    fixed_cdfs_[k] = panel.members[k]->grid_cdfs(panel.features, panel.predictions[k], grid_);
    fixed_cdf_obs_[k] = kernels::cdfs_at(panel.predictions[k], panel.targets);
  }
  fixed_gram_ = gram(1.0);
}

Eigen::MatrixXd CrpsObjective::gram(double variance) const {
  const std::size_t k_count = panel_.member_count();
  const std::size_t n_count = panel_.size();
  const bool first = fixed_gram_.size() == 0;

  std::vector<Eigen::MatrixXd> shared_cdfs(k_count);
  std::vector<std::vector<double>> shared_obs(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    if (first || !panel_.members[k]->uses_shared_variance()) continue;
    std::vector<PredictiveDensity> d;
    d.reserve(n_count);
    for (std::size_t n = 0; n < n_count; ++n) {
      d.push_back(panel_.members[k]->density_from_expectation(panel_.means[k][n], variance));
    }
    shared_cdfs[k] = kernels::grid_cdfs(d, grid_);
    shared_obs[k] = kernels::cdfs_at(d, panel_.targets);
  }

  // Pairs that need computing: everything on the first call, otherwise only
  // pairs touching a shared-variance member.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t k = 0; k < k_count; ++k) {
    for (std::size_t l = k; l < k_count; ++l) {
      const bool varying = panel_.members[k]->uses_shared_variance() || panel_.members[l]->uses_shared_variance();
      if (first ? !varying : varying) pairs.emplace_back(k, l);
    }
  }
  Eigen::MatrixXd terms(static_cast<Eigen::Index>(n_count), static_cast<Eigen::Index>(pairs.size()));
  parallel_for(static_cast<std::ptrdiff_t>(n_count), true, [&](std::ptrdiff_t n) {
    const auto s = static_cast<std::size_t>(n);
    auto column = [&](std::size_t k) {
      const Eigen::MatrixXd& m = panel_.members[k]->uses_shared_variance() ? shared_cdfs[k] : fixed_cdfs_[k];
      return std::span<const double>(m.col(n).data(), grid_.points);
    };
    auto obs = [&](std::size_t k) {
      return panel_.members[k]->uses_shared_variance() ? shared_obs[k][s] : fixed_cdf_obs_[k][s];
    };
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto [k, l] = pairs[p];
      terms(n, static_cast<Eigen::Index>(p)) =
          deviation_inner_product(grid_, column(k), obs(k), column(l), obs(l), panel_.targets[s]);
    }
  });

  Eigen::MatrixXd q = first ? Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k_count), static_cast<Eigen::Index>(k_count))
                            : fixed_gram_;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    double acc = 0.0;
    for (std::size_t n = 0; n < n_count; ++n) acc += terms(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    const auto [k, l] = pairs[p];
    q(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = acc / static_cast<double>(n_count);
    q(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) = acc / static_cast<double>(n_count);
  }
  return q;
}

double CrpsObjective::value(std::span<const double> weights, double variance) const {
  if (weights.size() != panel_.member_count()) throw DomainError("crps objective: weight count mismatch");
  const Eigen::MatrixXd q = panel_.has_shared_variance() ? gram(variance) : fixed_gram_;
  const Eigen::Map<const Eigen::VectorXd> w(weights.data(), static_cast<Eigen::Index>(weights.size()));
  return w.dot(q * w);
}

std::vector<double> project_to_simplex(std::span<const double> raw, std::span<const double> fallback) {
  std::vector<double> w(raw.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < raw.size(); ++k) {
    w[k] = std::max(raw[k], 0.0);
    sum += w[k];
  }
  if (!(sum > 0.0) || !std::isfinite(sum)) return {fallback.begin(), fallback.end()};
  for (double& v : w) v /= sum;
  return w;
}

RefineResult crps_refine(const MemberPanel& panel, std::span<const double> em_weights, double em_variance,
                         const PsoConfig& config, const UniformGrid& grid) {
  const std::size_t k_count = panel.member_count();
  check_simplex(em_weights, k_count, "crps_refine");
  if (!(em_variance > 0.0)) throw DomainError("crps_refine: variance must be > 0");
  if (!(config.weight_radius >= 0.0) || !(config.variance_radius >= 0.0 && config.variance_radius < 1.0)) {
    throw ConfigError("pso: radii must be non-negative and the variance radius below 1");
  }

  const CrpsObjective objective(panel, grid);
  RefineResult result;
  result.weights.assign(em_weights.begin(), em_weights.end());
  result.variance = em_variance;
  result.crps_before = objective.value(em_weights, em_variance);
  result.crps_after = result.crps_before;
  if (config.iterations <= 0 || config.swarm_size <= 0) return result;

  const bool shared = panel.has_shared_variance();
  const double v_lo = (1.0 - config.variance_radius) * em_variance;
  const double v_hi = (1.0 + config.variance_radius) * em_variance;

  // The variance-dependent entries of Q are smooth in log variance and are
  // interpolated between exact nodes; the winner is re-scored exactly.
  const Eigen::MatrixXd q_fixed = objective.gram(em_variance);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> varying;
  std::vector<boost::math::interpolators::cardinal_cubic_b_spline<double>> splines;
  double t0 = 0.0;
  double t1 = 0.0;
  if (shared && v_hi > v_lo) {
    if (config.variance_nodes < 5) throw ConfigError("pso: variance_nodes must be >= 5");
    for (std::size_t k = 0; k < k_count; ++k) {
      for (std::size_t l = k; l < k_count; ++l) {
        if (panel.members[k]->uses_shared_variance() || panel.members[l]->uses_shared_variance()) {
          varying.emplace_back(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l));
        }
      }
    }
    const auto nodes = static_cast<std::size_t>(config.variance_nodes);
    t0 = std::log(v_lo);
    t1 = std::log(v_hi);
    const double step = (t1 - t0) / static_cast<double>(nodes - 1);
    std::vector<std::vector<double>> values(varying.size(), std::vector<double>(nodes));
    for (std::size_t j = 0; j < nodes; ++j) {
      const double t = j + 1 == nodes ? t1 : t0 + static_cast<double>(j) * step;
      const Eigen::MatrixXd q = objective.gram(std::exp(t));
      for (std::size_t e = 0; e < varying.size(); ++e) values[e][j] = q(varying[e].first, varying[e].second);
    }
    for (const auto& v : values) splines.emplace_back(v.data(), v.size(), t0, step);
  }

  auto surrogate = [&](std::span<const double> w, double variance) {
    Eigen::MatrixXd q = q_fixed;
    if (!splines.empty()) {
      const double t = std::clamp(std::log(variance), t0, t1);
      for (std::size_t e = 0; e < varying.size(); ++e) {
        const double v = splines[e](t);
        q(varying[e].first, varying[e].second) = v;
        q(varying[e].second, varying[e].first) = v;
      }
    }
    const Eigen::Map<const Eigen::VectorXd> wv(w.data(), static_cast<Eigen::Index>(w.size()));
    return wv.dot(q * wv);
  };

  std::vector<double> lower(k_count + 1);
  std::vector<double> upper(k_count + 1);
  for (std::size_t k = 0; k < k_count; ++k) {
    lower[k] = std::max(0.0, em_weights[k] - config.weight_radius);
    upper[k] = std::min(1.0, em_weights[k] + config.weight_radius);
  }
  lower[k_count] = shared ? v_lo : em_variance;
  upper[k_count] = shared ? v_hi : em_variance;
  std::vector<double> seed(em_weights.begin(), em_weights.end());
  seed.push_back(em_variance);
  const std::vector<std::vector<double>> seeds{seed};

  const auto decode_weights = [&](std::span<const double> pos) {
    return project_to_simplex(pos.subspan(0, k_count), em_weights);
  };
  const PsoResult pso = particle_swarm_minimize(
      [&](std::span<const double> pos) { return surrogate(decode_weights(pos), pos[k_count]); }, lower, upper, seeds,
      config);
  result.evaluations = pso.evaluations;

  const std::vector<double> w_best = decode_weights(pso.position);
  const double v_best = pso.position[k_count];
  const double exact = objective.value(w_best, v_best);
  if (exact < result.crps_before) {
    result.weights = w_best;
    result.variance = v_best;
    result.crps_after = exact;
    result.improved = true;
  }
  return result;
}

CombinedDensity mmc_predict(const MmcModel& model, std::span<const double> x) {
  if (model.members.size() != model.weights.size()) throw DomainError("mmc_predict: weight count mismatch");
  std::vector<CombinedDensity::Member> parts;
  parts.reserve(model.members.size());
  for (std::size_t k = 0; k < model.members.size(); ++k) {
    parts.push_back({model.weights[k], std::make_shared<const PredictiveDensity>(model.members[k]->predict(x, model.variance))});
  }
  return CombinedDensity(std::move(parts));
}

}  // namespace mmcast
