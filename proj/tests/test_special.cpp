#include <cmath>
#include <random>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/distributions/normal.hpp>

#include "doctest.h"
#include "mmcast/error.hpp"
#include "mmcast/special.hpp"

using namespace mmcast;

TEST_CASE("normal cdf and survival agree with an independent implementation in both tails") {
  const boost::math::normal_distribution<double> n01;
  for (double z = -37.0; z <= 37.0; z += 0.37) {
    const double cdf = boost::math::cdf(n01, z);
    const double sf = boost::math::cdf(boost::math::complement(n01, z));
    CHECK(special::normal_cdf(z) == doctest::Approx(cdf).epsilon(1e-13));
    CHECK(special::normal_sf(z) == doctest::Approx(sf).epsilon(1e-13));
  }
  CHECK(special::normal_pdf(0.0) == doctest::Approx(0.3989422804014327).epsilon(1e-15));
}

TEST_CASE("log beta matches lgamma identities") {
  CHECK(special::log_beta(1.0, 1.0) == doctest::Approx(0.0));
  CHECK(special::log_beta(2.0, 2.0) == doctest::Approx(std::log(1.0 / 6.0)).epsilon(1e-14));
  CHECK(special::log_beta(0.5, 0.5) == doctest::Approx(std::log(M_PI)).epsilon(1e-14));
}

TEST_CASE("incomplete beta matches boost ibeta across shapes") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> log_shape(std::log(1e-3), std::log(500.0));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 5000; ++i) {
    const double a = std::exp(log_shape(rng));
    const double b = std::exp(log_shape(rng));
    const double x = unit(rng);
    const double ours = special::incomplete_beta(a, b, x);
    const double theirs = boost::math::ibeta(a, b, x);
    worst = std::max(worst, std::fabs(ours - theirs));
  }
  CHECK(worst < 1e-11);
}

TEST_CASE("incomplete beta closed forms and edges") {
  CHECK(special::incomplete_beta(1.0, 1.0, 0.3) == doctest::Approx(0.3).epsilon(1e-15));
  // I_x(1, 3) = 1 - (1 - x)^3
  CHECK(special::incomplete_beta(1.0, 3.0, 0.2) == doctest::Approx(1.0 - 0.8 * 0.8 * 0.8).epsilon(1e-14));
  CHECK(special::incomplete_beta(2.0, 2.0, 0.5) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(special::incomplete_beta(3.0, 4.0, 0.0) == 0.0);
  CHECK(special::incomplete_beta(3.0, 4.0, 1.0) == 1.0);
  CHECK_THROWS_AS(special::incomplete_beta(0.0, 1.0, 0.5), DomainError);
  CHECK_THROWS_AS(special::incomplete_beta(1.0, 1.0, std::nan("")), DomainError);
}
