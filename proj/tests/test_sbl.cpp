#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "mmcast/error.hpp"
#include "mmcast/sbl.hpp"

using namespace mmcast;

namespace {

Eigen::MatrixXd random_inputs(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.5, 1.5);
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = unit(rng);
  return x;
}

Eigen::VectorXd smooth_target(const Eigen::MatrixXd& x, double noise_sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_sd);
  Eigen::VectorXd y(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) y(i) = 0.5 + 0.3 * std::sin(2.0 * x(i, 0)) * std::cos(x(i, 1)) + noise(rng);
  return y;
}

std::vector<double> row(const Eigen::MatrixXd& m, Eigen::Index i) {
  std::vector<double> out(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) out[static_cast<std::size_t>(c)] = m(i, c);
  return out;
}

}  // namespace

TEST_CASE("gaussian kernel") {
  const std::vector<double> a{0.3, -1.0, 2.0};
  std::vector<double> b = a;
  CHECK(gaussian_kernel(a, b, 0.7) == 1.0);
  b[0] += 0.7 * std::sqrt(2.0);
  CHECK(gaussian_kernel(a, b, 0.7) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(gaussian_kernel(a, b, 0.7) == gaussian_kernel(b, a, 0.7));
  CHECK_THROWS_AS(gaussian_kernel(a, std::vector<double>{1.0}, 1.0), DomainError);
}

TEST_CASE("scalar posterior") {
  const Eigen::MatrixXd phi = Eigen::MatrixXd::Ones(1, 1);
  const Eigen::VectorXd y = Eigen::VectorXd::Ones(1);
  const auto post = sbl_posterior(phi, y, Eigen::VectorXd::Ones(1), 1.0);
  CHECK(post.covariance(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(post.mean(0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("small posterior and evidence match an independent solve") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> pos(0.1, 5.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 12, m = 1 + trial % 3;
    Eigen::MatrixXd phi(n, m);
    Eigen::VectorXd y(n), alpha(m);
    for (Eigen::Index i = 0; i < phi.size(); ++i) phi.data()[i] = n01(rng);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = n01(rng);
    for (Eigen::Index i = 0; i < m; ++i) alpha(i) = pos(rng);
    const double noise = pos(rng) / 10.0;

    Eigen::MatrixXd h = phi.transpose() * phi / noise;
    h.diagonal() += alpha;
    const Eigen::MatrixXd sigma = h.fullPivLu().inverse();
    const Eigen::VectorXd mu = sigma * phi.transpose() * y / noise;
    const auto post = sbl_posterior(phi, y, alpha, noise);
    CHECK((post.covariance - sigma).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((post.mean - mu).cwiseAbs().maxCoeff() < 1e-10);

    Eigen::MatrixXd c = noise * Eigen::MatrixXd::Identity(n, n) + phi * alpha.cwiseInverse().asDiagonal() * phi.transpose();
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(c);
    const double log_det = ldlt.vectorD().array().log().sum();
    const double direct = -0.5 * (n * std::log(2.0 * M_PI) + log_det + y.dot(ldlt.solve(y)));
    CHECK(sbl_log_evidence(phi, y, alpha, noise) == doctest::Approx(direct).epsilon(1e-10));
  }
}

TEST_CASE("fitted posterior satisfies the normal equations") {
  const auto x = random_inputs(300, 2, 1);
  const auto y = smooth_target(x, 0.05, 2);
  const auto model = sbl_fit(x, y);
  CHECK(model.has_bias);
  CHECK(model.basis_count() >= 2);
  const Eigen::MatrixXd phi = sbl_design(x, model.relevance_inputs, model.kernel_width, model.has_bias);
  Eigen::MatrixXd h = phi.transpose() * phi / model.noise_variance;
  h.diagonal() += model.alpha;
  const Eigen::MatrixXd should_be_identity = h * model.posterior_cov;
  const auto k = model.basis_count();
  CHECK((should_be_identity - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff() < 1e-8);
  // symmetric positive definite
  CHECK((model.posterior_cov - model.posterior_cov.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(Eigen::LLT<Eigen::MatrixXd>(model.posterior_cov).info() == Eigen::Success);
  CHECK(model.noise_variance > 0.0);
}

TEST_CASE("evidence never decreases across accepted iterations") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto x = random_inputs(150, 3, seed);
    const auto y = smooth_target(x, 0.1, seed + 100);
    const auto model = sbl_fit(x, y);
    for (std::size_t i = 1; i < model.evidence_trace.size(); ++i) {
      CHECK(model.evidence_trace[i] >= model.evidence_trace[i - 1] - 1e-8);
    }
  }
}

TEST_CASE("noiseless in-class target is recovered") {
  const auto x = random_inputs(50, 2, 7);
  const double width = 0.8;
  const auto center = row(x, 17);
  Eigen::VectorXd y(50);
  for (Eigen::Index i = 0; i < 50; ++i) y(i) = gaussian_kernel(row(x, i), center, width);
  SblFitConfig cfg;
  cfg.kernel_width = width;
  const auto model = sbl_fit(x, y, cfg);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < 50; ++i) {
    worst = std::max(worst, std::fabs(sbl_predict(model, row(x, i)).mean() - y(i)));
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("pure noise keeps the model sparse") {
  const auto x = random_inputs(200, 2, 41);
  std::mt19937_64 rng(43);
  std::normal_distribution<double> noise(0.5, 0.1);
  Eigen::VectorXd y(200);
  for (Eigen::Index i = 0; i < 200; ++i) y(i) = noise(rng);
  const auto model = sbl_fit(x, y);
  CHECK(model.relevance_inputs.rows() <= 5);
}

TEST_CASE("predictive variance") {
  const auto x = random_inputs(200, 2, 5);
  const auto y = smooth_target(x, 0.05, 6);
  const auto model = sbl_fit(x, y);
  const auto probes = random_inputs(500, 2, 9) * 2.0;
  for (Eigen::Index i = 0; i < probes.rows(); ++i) {
    CHECK(sbl_predict(model, row(probes, i)).variance() >= model.noise_variance);
  }
  // grows as the probe leaves the input box [-1.5, 1.5]^2
  double prev = 0.0;
  for (double r : {1.5, 2.0, 2.5}) {
    const double v = sbl_predict(model, std::vector<double>{r, 0.0}).variance();
    CHECK(v > prev);
    prev = v;
  }
  // far from every center only the bias remains
  const std::vector<double> far{1e3, -1e3};
  const auto d = sbl_predict(model, far);
  REQUIRE(model.has_bias);
  CHECK(d.mean() == doctest::Approx(model.posterior_mean(0)).epsilon(1e-14));
  CHECK(d.variance() == doctest::Approx(model.noise_variance + model.posterior_cov(0, 0)).epsilon(1e-14));
  CHECK_THROWS_AS(sbl_predict(model, std::vector<double>{1.0}), DomainError);
}

TEST_CASE("fit is deterministic") {
  const auto x = random_inputs(120, 3, 12);
  const auto y = smooth_target(x, 0.05, 13);
  const auto a = sbl_fit(x, y);
  const auto b = sbl_fit(x, y);
  CHECK(a.posterior_mean == b.posterior_mean);
  CHECK(a.posterior_cov == b.posterior_cov);
  CHECK(a.noise_variance == b.noise_variance);
  CHECK(a.relevance_inputs == b.relevance_inputs);
}

TEST_CASE("degenerate inputs") {
  const auto x = random_inputs(30, 2, 3);
  CHECK_THROWS_AS(sbl_fit(x, Eigen::VectorXd::Zero(30)), DegenerateError);
  CHECK_THROWS_AS(sbl_fit(x.topRows(1), Eigen::VectorXd::Ones(1)), DomainError);
  CHECK_THROWS_AS(sbl_fit(Eigen::MatrixXd::Ones(10, 2), Eigen::VectorXd::LinSpaced(10, 0.0, 1.0)), DataError);
}
