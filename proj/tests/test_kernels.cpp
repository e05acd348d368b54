#include <cmath>
#include <random>
#include <vector>

#include <omp.h>

#include "doctest.h"
#include "mmcast/density.hpp"
#include "mmcast/error.hpp"
#include "mmcast/kernels.hpp"

using namespace mmcast;
namespace ref = mmcast::kernels::reference;

namespace {

struct Inputs {
  Eigen::MatrixXd train;
  Eigen::MatrixXd queries;
  std::vector<double> bandwidths;
  std::vector<double> targets;
  std::vector<PredictiveDensity> densities;
  std::vector<double> obs;
};

Inputs make_inputs() {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Inputs in;
  in.train.resize(300, 4);
  in.queries.resize(57, 4);
  for (Eigen::Index i = 0; i < in.train.size(); ++i) in.train.data()[i] = normal(rng);
  for (Eigen::Index i = 0; i < in.queries.size(); ++i) in.queries.data()[i] = normal(rng);
  in.queries.row(0).setConstant(40.0);  // far query: exercises the nearest-row fallback
  in.bandwidths = {0.5, 0.4, 0.6, 0.45};
  for (int i = 0; i < 300; ++i) in.targets.push_back(unit(rng));
  for (int i = 0; i < 57; ++i) {
    const double m = 0.05 + 0.9 * unit(rng);
    if (i % 3 == 0) {
      in.densities.emplace_back(GaussianDensity(m, 0.005));
    } else if (i % 3 == 1) {
      in.densities.emplace_back(BetaDensity(1.0 + 6.0 * m, 1.0 + 6.0 * (1.0 - m)));
    } else {
      in.densities.emplace_back(GaussianMixtureDensity({m, 1.0 - m}, {0.4, 0.6}, 0.05));
    }
    in.obs.push_back(unit(rng));
  }
  return in;
}

// Runs body at 1, 2, 3 and 4 threads and restores the setting.
template <class F>
void at_thread_counts(F body) {
  const int saved = omp_get_max_threads();
  for (int t : {1, 2, 3, 4}) {
    omp_set_num_threads(t);
    body(t);
  }
  omp_set_num_threads(saved);
}

}  // namespace

TEST_CASE("parallel kernels equal the serial reference bit for bit") {
  const Inputs in = make_inputs();
  const UniformGrid grid{0.0, 1.0, 401};
  const auto gram = ref::gaussian_gram(in.queries, in.train, 1.1);
  const auto weights = ref::product_kernel_weights(in.train, in.queries, in.bandwidths);
  const auto table = ref::normal_cdf_table(in.targets, 0.03, grid);
  const auto cdfs = ref::grid_cdfs(in.densities, grid);
  const auto at = ref::cdfs_at(in.densities, in.obs);
  const auto pdfs = ref::pdfs_at(in.densities, in.obs);
  const auto crps = ref::grid_crps_batch(grid, cdfs, at, in.obs);
  at_thread_counts([&](int t) {
    CAPTURE(t);
    CHECK(kernels::gaussian_gram(in.queries, in.train, 1.1) == gram);
    CHECK(kernels::product_kernel_weights(in.train, in.queries, in.bandwidths) == weights);
    CHECK(kernels::normal_cdf_table(in.targets, 0.03, grid) == table);
    CHECK(kernels::grid_cdfs(in.densities, grid) == cdfs);
    CHECK(kernels::cdfs_at(in.densities, in.obs) == at);
    CHECK(kernels::pdfs_at(in.densities, in.obs) == pdfs);
    CHECK(kernels::grid_crps_batch(grid, cdfs, at, in.obs) == crps);
  });
}

TEST_CASE("tabulated mixture cdfs match the direct sum and do not depend on the thread count") {
  const Inputs in = make_inputs();
  const UniformGrid grid{0.0, 1.0, 301};
  const auto weights = ref::product_kernel_weights(in.train, in.queries, in.bandwidths);
  const auto direct = ref::mixture_grid_cdfs(in.targets, 0.03, weights, grid);
  const auto table = kernels::normal_cdf_table(in.targets, 0.03, grid);
  Eigen::MatrixXd first;
  at_thread_counts([&](int t) {
    CAPTURE(t);
    const auto tab = kernels::mixture_grid_cdfs(table, weights);
    CHECK((tab - direct).cwiseAbs().maxCoeff() < 1e-12);
    if (first.size() == 0) first = tab;
    CHECK(tab == first);
  });
}

TEST_CASE("gram entries and kernel weights") {
  Eigen::MatrixXd a(2, 2), b(1, 2);
  a << 0, 0, 1, 1;
  b << 0, 0;
  const auto k = kernels::gaussian_gram(a, b, 1.0);
  CHECK(k(0, 0) == 1.0);
  CHECK(k(1, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  const Inputs in = make_inputs();
  const auto w = kernels::product_kernel_weights(in.train, in.queries, in.bandwidths);
  for (Eigen::Index q = 0; q < w.cols(); ++q) {
    CHECK(w.col(q).minCoeff() >= 0.0);
    CHECK(std::fabs(w.col(q).sum() - 1.0) <= 1e-12);
  }
  // the far query puts all its weight on one row
  CHECK(w.col(0).maxCoeff() == 1.0);
  CHECK_THROWS_AS(kernels::gaussian_gram(a, Eigen::MatrixXd(1, 3), 1.0), DomainError);
}
