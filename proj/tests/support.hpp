#pragma once

// Test fixtures: members whose predictions are read straight off a feature
// column, and small seeded panels built from them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mmcast/bde.hpp"
#include "mmcast/combiner.hpp"
#include "mmcast/member.hpp"

namespace mmcast::testing {

/// Truncated Gaussian with mean x[column] and a fixed spread.
class ColumnGaussianMember final : public Member {
 public:
  ColumnGaussianMember(std::size_t column, double sd) : column_(column), sd_(sd) {}
  std::string name() const override { return "gauss" + std::to_string(column_); }
  PredictiveDensity predict(std::span<const double> x, double) const override {
    auto inner = std::make_shared<const PredictiveDensity>(GaussianDensity(x[column_], sd_ * sd_));
    return PredictiveDensity(truncate_renormalize(std::move(inner)));
  }

 private:
  std::size_t column_;
  double sd_;
};

/// Beta member whose expectation is x[column] and whose variance is shared.
class ColumnBetaMember final : public Member {
 public:
  explicit ColumnBetaMember(std::size_t column) : column_(column) {}
  std::string name() const override { return "beta" + std::to_string(column_); }
  bool uses_shared_variance() const noexcept override { return true; }
  PredictiveDensity predict(std::span<const double> x, double variance) const override {
    return density_from_expectation(clamp_expectation(x[column_]), variance);
  }
  std::vector<double> expectations(const Eigen::MatrixXd& x) const override {
    std::vector<double> out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)] = clamp_expectation(x(i, static_cast<Eigen::Index>(column_)));
    return out;
  }
  PredictiveDensity density_from_expectation(double e, double variance) const override {
    return bde_density(e, variance);
  }

 private:
  std::size_t column_;
};

struct PanelData {
  Eigen::MatrixXd features;  // column k is member k's point forecast
  std::vector<double> targets;
};

/// Targets in (0.05, 0.95) and three point forecasts of differing quality.
inline PanelData synthetic_panel_data(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.05, 0.95);
  std::normal_distribution<double> n01;
  PanelData d;
  d.features.resize(static_cast<Eigen::Index>(n), 3);
  for (std::size_t i = 0; i < n; ++i) {
    const double y = unit(rng);
    const auto r = static_cast<Eigen::Index>(i);
    d.features(r, 0) = y + 0.05 * n01(rng);
    d.features(r, 1) = y + 0.08 + 0.10 * n01(rng);
    d.features(r, 2) = y + 0.07 * n01(rng);
    d.targets.push_back(y);
  }
  return d;
}

/// Two forecasts 0.3 apart; each target sits near the first with
/// probability `share`, otherwise near the second, so the likelihood peaks
/// inside the simplex rather than at a vertex.
inline PanelData two_source_panel_data(std::size_t n, std::uint64_t seed, double share) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.2, 0.5);
  std::bernoulli_distribution first(share);
  std::normal_distribution<double> n01;
  PanelData d;
  d.features.resize(static_cast<Eigen::Index>(n), 2);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    d.features(r, 0) = unit(rng);
    d.features(r, 1) = d.features(r, 0) + 0.3;
    d.targets.push_back(d.features(r, first(rng) ? 0 : 1) + 0.05 * n01(rng));
  }
  return d;
}

inline std::vector<std::shared_ptr<const Member>> three_members() {
  return {std::make_shared<ColumnGaussianMember>(0, 0.06), std::make_shared<ColumnGaussianMember>(1, 0.12),
          std::make_shared<ColumnBetaMember>(2)};
}

inline MemberPanel synthetic_panel(std::size_t n, std::uint64_t seed) {
  const auto d = synthetic_panel_data(n, seed);
  return build_panel(three_members(), d.features, d.targets);
}

/// Beta moments straight from the shapes.
inline double beta_mean(const BetaShape& s) { return s.alpha / (s.alpha + s.beta); }
inline double beta_var(const BetaShape& s) {
  const double t = s.alpha + s.beta;
  return s.alpha * s.beta / (t * t * (t + 1.0));
}

/// Draws from a Beta density or a truncated Gaussian without using the
/// library's cdf or quantile code.
inline double draw(const PredictiveDensity& d, std::mt19937_64& rng) {
  if (const auto* b = d.get_if<BetaDensity>()) {
    std::gamma_distribution<double> ga(b->alpha(), 1.0), gb(b->beta(), 1.0);
    const double x = ga(rng);
    return x / (x + gb(rng));
  }
  if (const auto* t = d.get_if<TruncatedDensity>()) {
    const auto* g = t->inner().get_if<GaussianDensity>();
    if (g == nullptr) throw std::invalid_argument("draw: unsupported truncated inner density");
    std::normal_distribution<double> n(g->mean(), g->sd());
    while (true) {
      const double y = n(rng);
      if (y >= 0.0 && y <= 1.0) return y;
    }
  }
  throw std::invalid_argument("draw: unsupported density kind");
}

/// Forecast densities of mixed kinds with varying location and spread.
inline std::vector<PredictiveDensity> varied_densities(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<PredictiveDensity> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double m = 0.1 + 0.8 * unit(rng);
    const double v = (0.002 + 0.03 * unit(rng)) * 4.0 * m * (1.0 - m);
    if (i % 2 == 0) {
      out.emplace_back(bde_density(m, v));
    } else {
      out.emplace_back(truncate_renormalize(GaussianDensity(m, v)));
    }
  }
  return out;
}

/// Fresh empty directory under the system temp directory, removed on exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("mmcast_" + tag + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::string str(const std::string& leaf = "") const { return leaf.empty() ? path_.string() : (path_ / leaf).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace mmcast::testing
