#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "doctest.h"
#include "mmcast/density.hpp"
#include "mmcast/density_io.hpp"
#include "mmcast/error.hpp"

using namespace mmcast;

namespace {

std::shared_ptr<const PredictiveDensity> share(PredictiveDensity d) {
  return std::make_shared<const PredictiveDensity>(std::move(d));
}

PredictiveDensity truncated(PredictiveDensity d) { return PredictiveDensity(truncate_renormalize(share(std::move(d)))); }

// One density of every kind, all supported on [0,1] after truncation.
std::vector<PredictiveDensity> zoo() {
  std::vector<PredictiveDensity> out;
  out.emplace_back(truncated(GaussianDensity(0.3, 0.02)));
  out.emplace_back(BetaDensity(2.5, 4.0));
  out.emplace_back(BetaDensity(0.7, 0.9));
  out.emplace_back(truncated(GaussianMixtureDensity({0.1, 0.45, 0.8}, {0.2, 0.5, 0.3}, 0.05)));
  out.emplace_back(CombinedDensity(std::vector<CombinedDensity::Member>{
      {0.3, share(truncated(GaussianDensity(0.6, 0.01)))},
      {0.7, share(BetaDensity(3.0, 2.0))}}));
  return out;
}

double trapezoid_pdf(const PredictiveDensity& d, std::size_t points) {
  const UniformGrid g{0.0, 1.0, points};
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < points; ++i) {
    const double a = pdf_at(d, g.at(i));
    const double b = pdf_at(d, g.at(i + 1));
    if (std::isfinite(a) && std::isfinite(b)) s += 0.5 * (a + b) * g.step();
  }
  return s;
}

}  // namespace

TEST_CASE("pdf values") {
  CHECK(pdf_at(GaussianDensity(0.0, 1.0), 0.0) == doctest::Approx(0.39894).epsilon(1e-5));
  CHECK(pdf_at(BetaDensity(1.0, 1.0), 0.3) == doctest::Approx(1.0));
  const CombinedDensity two_uniform(std::vector<CombinedDensity::Member>{{0.5, share(BetaDensity(1.0, 1.0))},
                                                                         {0.5, share(BetaDensity(1.0, 1.0))}});
  CHECK(pdf_at(two_uniform, 0.7) == doctest::Approx(1.0));
  CHECK_THROWS_AS(pdf_at(BetaDensity(1.0, 1.0), std::nan("")), DomainError);
  CHECK_THROWS_AS(cdf_at(GaussianDensity(0.0, 1.0), INFINITY), DomainError);
}

TEST_CASE("cdf values") {
  CHECK(cdf_at(BetaDensity(1.0, 1.0), 0.25) == doctest::Approx(0.25));
  CHECK(cdf_at(GaussianDensity(0.0, 1.0), 0.0) == doctest::Approx(0.5));
  CHECK(cdf_at(BetaDensity(2.0, 2.0), 0.5) == doctest::Approx(0.5));
  for (const auto& d : zoo()) {
    CHECK(cdf_at(d, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cdf_at(d, 0.0) == doctest::Approx(0.0).epsilon(1e-12));
    double prev = 0.0;
    for (double y = 0.0; y <= 1.0; y += 0.01) {
      const double f = cdf_at(d, y);
      CHECK(f >= prev - 1e-15);
      prev = f;
    }
  }
}

TEST_CASE("quantile examples") {
  CHECK(quantile(BetaDensity(1.0, 1.0), 0.9) == doctest::Approx(0.9).epsilon(1e-8));
  CHECK(quantile(GaussianDensity(0.5, 0.01), 0.5) == doctest::Approx(0.5).epsilon(1e-8));
  const GaussianMixtureDensity symmetric({0.2, 0.8}, {0.5, 0.5}, 0.05);
  CHECK(quantile(symmetric, 0.5) == doctest::Approx(0.5).epsilon(1e-8));
  CHECK_THROWS_AS(quantile(BetaDensity(1.0, 1.0), 0.0), DomainError);
  CHECK_THROWS_AS(quantile(BetaDensity(1.0, 1.0), 1.0), DomainError);
}

TEST_CASE("quantile round-trips the cdf on every kind") {
  for (const auto& d : zoo()) {
    for (int i = 1; i <= 99; ++i) {
      const double p = i / 100.0;
      CHECK(std::fabs(cdf_at(d, quantile(d, p)) - p) <= kQuantileTolerance);
    }
  }
}

TEST_CASE("quantile on a tabulated grid agrees with the direct search") {
  const UniformGrid grid;
  for (const auto& d : zoo()) {
    const auto table = cdf_on_grid(d, grid);
    for (double p : {0.05, 0.3, 0.5, 0.77, 0.95}) {
      const double q = quantile_on_grid(d, p, grid, table);
      CHECK(std::fabs(cdf_at(d, q) - p) <= kQuantileTolerance);
    }
  }
}

TEST_CASE("quantile stays finite on near-degenerate beta shapes") {
  const BetaDensity spiky(1e-3, 0.999);
  const double q = quantile(spiky, 0.95);
  CHECK(q >= 0.0);
  CHECK(q <= 1.0);
  CHECK(cdf_at(spiky, q) >= 0.95 - kQuantileTolerance);
}

TEST_CASE("moments") {
  const CombinedDensity c(std::vector<CombinedDensity::Member>{{0.5, share(GaussianDensity(0.2, 0.01))},
                                                               {0.5, share(GaussianDensity(0.4, 0.01))}});
  CHECK(mean_of(c) == doctest::Approx(0.3).epsilon(1e-14));
  // law of total variance: 0.01 + 0.25 * 0.2^2
  CHECK(variance_of(c) == doctest::Approx(0.01 + 0.01).epsilon(1e-12));
  CHECK(mean_of(BetaDensity(2.0, 2.0)) == doctest::Approx(0.5));
  CHECK(variance_of(BetaDensity(2.0, 2.0)) == doctest::Approx(0.05).epsilon(1e-14));
  const GaussianMixtureDensity m({0.1, 0.3}, {0.5, 0.5}, 0.02);
  CHECK(mean_of(m) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(variance_of(m) == doctest::Approx(0.02 * 0.02 + 0.01).epsilon(1e-12));
}

TEST_CASE("truncated moments match numerical integration") {
  for (const auto& d : zoo()) {
    const UniformGrid g{0.0, 1.0, 200001};
    double m = 0.0;
    double prev_cdf = 0.0;
    // E[Y] = 1 - integral of F on [0,1]
    double integral_f = 0.0;
    for (std::size_t i = 1; i < g.points; ++i) {
      const double f = cdf_at(d, g.at(i));
      integral_f += 0.5 * (prev_cdf + f) * g.step();
      prev_cdf = f;
    }
    m = 1.0 - integral_f;
    CHECK(mean_of(d) == doctest::Approx(m).epsilon(1e-6));
  }
}

TEST_CASE("crps examples") {
  CHECK(crps_single(GaussianDensity(0.4, 1e-10), 0.4) == doctest::Approx(0.0).epsilon(1e-5));
  // a point mass scores a quarter of the grid step under the trapezoid rule
  CHECK(crps_grid(GaussianDensity(0.4, 1e-8), 0.4) <= 0.25 * UniformGrid{}.step() + 1e-12);
  CHECK(crps_single(BetaDensity(1.0, 1.0), 0.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
  for (double y : {0.3, 0.5, 0.7}) {
    CHECK(crps_gaussian_closed_form(GaussianDensity(y, 0.01), y) == doctest::Approx(0.02337).epsilon(1e-4));
    CHECK(crps_grid(GaussianDensity(y, 0.01), y) == doctest::Approx(0.02337).epsilon(1e-3));
  }
  CHECK_THROWS_AS(crps_single(BetaDensity(2.0, 2.0), 1.2), DomainError);
  CHECK_THROWS_AS(crps_single(BetaDensity(2.0, 2.0), -0.1), DomainError);
}

TEST_CASE("gaussian crps closed form agrees with grid integration") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> mean(0.1, 0.9), var(1e-4, 0.04), obs(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const GaussianDensity d(mean(rng), var(rng));
    const double y = obs(rng);
    CHECK(std::fabs(crps_gaussian_closed_form(d, y) - crps_grid(d, y)) < 1e-4);
  }
}

TEST_CASE("crps is smallest near the median of a symmetric density") {
  const BetaDensity d(4.0, 4.0);
  double best_y = -1.0, best = 1e300;
  for (int i = 0; i <= 200; ++i) {
    const double y = i / 200.0;
    const double s = crps_single(d, y);
    if (s < best) {
      best = s;
      best_y = y;
    }
  }
  CHECK(best_y == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("grid crps with an observation node matches crps_grid") {
  const UniformGrid grid;
  for (const auto& d : zoo()) {
    const auto table = cdf_on_grid(d, grid);
    for (double y : {0.0, 0.123456, 0.5, 0.99, 1.0}) {
      CHECK(grid_crps(grid, table, cdf_at(d, y), y) == doctest::Approx(crps_grid(d, y)).epsilon(1e-9));
    }
  }
}

TEST_CASE("central intervals") {
  const auto u = central_interval(BetaDensity(1.0, 1.0), 0.8);
  CHECK(u.lower == doctest::Approx(0.1).epsilon(1e-8));
  CHECK(u.upper == doctest::Approx(0.9).epsilon(1e-8));
  const auto g = central_interval(GaussianDensity(0.5, 0.01), 0.5);
  const boost::math::normal_distribution<double> n01;
  const double z = boost::math::quantile(n01, 0.75);
  CHECK(g.lower == doctest::Approx(0.5 - 0.1 * z).epsilon(1e-8));
  CHECK(g.upper == doctest::Approx(0.5 + 0.1 * z).epsilon(1e-8));
  CHECK(g.lower == doctest::Approx(0.4326).epsilon(1e-4));
  CHECK(g.upper == doctest::Approx(0.5674).epsilon(1e-4));
  const auto narrow = central_interval(BetaDensity(3.0, 3.0), 1e-6);
  CHECK(narrow.lower == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(narrow.upper == doctest::Approx(0.5).epsilon(1e-5));
  CHECK_THROWS_AS(central_interval(BetaDensity(1.0, 1.0), 1.0), DomainError);
}

TEST_CASE("truncation") {
  const auto beta = truncate_renormalize(BetaDensity(2.0, 2.0));
  CHECK(beta.normalization() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(pdf_at(PredictiveDensity(beta), 0.3) == doctest::Approx(pdf_at(BetaDensity(2.0, 2.0), 0.3)));
  CHECK(truncate_renormalize(GaussianDensity(0.5, 1e-6)).normalization() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(truncate_renormalize(GaussianDensity(0.0, 0.04)).normalization() == doctest::Approx(0.5).epsilon(1e-6));
  CHECK_THROWS_AS(truncate_renormalize(GaussianDensity(5.0, 1e-4)), DegenerateError);
  const PredictiveDensity t(truncate_renormalize(GaussianDensity(0.05, 0.01)));
  CHECK(pdf_at(t, -0.01) == 0.0);
  CHECK(pdf_at(t, 1.01) == 0.0);
}

TEST_CASE("every density integrates to one on [0,1]") {
  for (const auto& d : zoo()) {
    if (const auto* b = d.get_if<BetaDensity>(); b && (b->alpha() < 1.0 || b->beta() < 1.0)) {
      // Unbounded at the edges; integrate the cdf instead.
      CHECK(interval_mass(d, 0.0, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
      continue;
    }
    CHECK(trapezoid_pdf(d, kDefaultCrpsGridPoints) == doctest::Approx(1.0).epsilon(1e-3));
  }
  const PredictiveDensity narrow = truncated(GaussianDensity(0.5, 1e-4));
  CHECK(trapezoid_pdf(narrow, kDefaultCrpsGridPoints) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("cdf derivative matches pdf") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> inner(0.02, 0.98);
  for (const auto& d : zoo()) {
    for (int i = 0; i < 100; ++i) {
      const double y = inner(rng);
      const double h = 1e-6;
      const double slope = (cdf_at(d, y + h) - cdf_at(d, y - h)) / (2.0 * h);
      CHECK(slope == doctest::Approx(pdf_at(d, y)).epsilon(1e-3));
    }
  }
}

TEST_CASE("combined cdf is the weighted sum of member cdfs") {
  auto a = share(BetaDensity(2.0, 5.0));
  auto b = share(truncated(GaussianDensity(0.7, 0.02)));
  auto c = share(truncated(GaussianMixtureDensity({0.2, 0.9}, {0.6, 0.4}, 0.08)));
  const CombinedDensity mix(std::vector<CombinedDensity::Member>{{0.2, a}, {0.5, b}, {0.3, c}});
  const PredictiveDensity d(mix);
  for (double y = 0.0; y <= 1.0; y += 0.005) {
    const double direct = 0.2 * cdf_at(*a, y) + 0.5 * cdf_at(*b, y) + 0.3 * cdf_at(*c, y);
    CHECK(std::fabs(cdf_at(d, y) - direct) <= 1e-12);
  }
}

TEST_CASE("constructor invariants") {
  CHECK_THROWS_AS(GaussianDensity(0.0, 0.0), DomainError);
  CHECK_THROWS_AS(BetaDensity(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(GaussianMixtureDensity({0.1, 0.2}, {0.5, 0.6}, 0.1), DomainError);
  CHECK_THROWS_AS(GaussianMixtureDensity({0.1}, {1.0}, 0.0), DomainError);
  CHECK_THROWS_AS(CombinedDensity(std::vector<CombinedDensity::Member>{{0.5, share(BetaDensity(1, 1))}}),
                  DomainError);
}

TEST_CASE("density records round-trip exactly") {
  for (const auto& d : zoo()) {
    const auto text = serialize_density(d);
    CHECK(text.find('\n') == std::string::npos);
    const auto back = parse_density(text);
    CHECK(back.kind() == d.kind());
    CHECK(serialize_density(back) == text);
    for (double y = 0.0; y <= 1.0; y += 0.05) CHECK(cdf_at(back, y) == cdf_at(d, y));
  }
  CHECK_THROWS_AS(parse_density(R"({"kind":"cauchy"})"), DataError);
  CHECK_THROWS_AS(parse_density(R"({"kind":"beta","alpha":2})"), DataError);
}
