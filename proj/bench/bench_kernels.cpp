// Timings of the OpenMP kernels against their serial references on inputs
// sized like one horizon of the pipeline (training set A ~2900 rows,
// validation ~720 queries, 2001-point grid).
//
// usage: bench_kernels [repeats]   (threads via OMP_NUM_THREADS)

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <omp.h>

#include "mmcast/density.hpp"
#include "mmcast/kernels.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double best_of(int repeats, const std::function<void()>& body) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = Clock::now();
    body();
    best = std::min(best, std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
  }
  return best;
}

void report(const std::string& name, double serial_ms, double parallel_ms, double max_diff) {
  std::printf("%-24s %10.2f %10.2f %8.2fx %12.3g\n", name.c_str(), serial_ms, parallel_ms,
              serial_ms / parallel_ms, max_diff);
}

double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::max(1, std::atoi(argv[1])) : 3;
  namespace k = mmcast::kernels;
  namespace ref = mmcast::kernels::reference;

  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const Eigen::Index n_train = 2900, n_query = 720, dim = 7;
  Eigen::MatrixXd train(n_train, dim), queries(n_query, dim);
  for (Eigen::Index i = 0; i < train.size(); ++i) train.data()[i] = normal(rng);
  for (Eigen::Index i = 0; i < queries.size(); ++i) queries.data()[i] = normal(rng);
  const std::vector<double> bandwidths(dim, 0.45);

  std::vector<double> targets(n_train);
  for (double& t : targets) t = unit(rng);
  const mmcast::UniformGrid grid;

  std::vector<mmcast::PredictiveDensity> densities;
  std::vector<double> obs(n_query);
  for (Eigen::Index i = 0; i < n_query; ++i) {
    const double m = 0.1 + 0.8 * unit(rng);
    if (i % 2 == 0) {
      densities.emplace_back(mmcast::GaussianDensity(m, 0.01));
    } else {
      densities.emplace_back(mmcast::BetaDensity(1.0 + 8.0 * m, 1.0 + 8.0 * (1.0 - m)));
    }
    obs[static_cast<std::size_t>(i)] = unit(rng);
  }

  std::printf("threads=%d repeats=%d\n", omp_get_max_threads(), repeats);
  std::printf("%-24s %10s %10s %9s %12s\n", "kernel", "serial_ms", "omp_ms", "speedup", "max_diff");

  {
    Eigen::MatrixXd s, p;
    const double ts = best_of(repeats, [&] { s = ref::gaussian_gram(queries, train, 1.3); });
    const double tp = best_of(repeats, [&] { p = k::gaussian_gram(queries, train, 1.3); });
    report("gaussian_gram", ts, tp, max_abs_diff(s, p));
  }
  Eigen::MatrixXd weights;
  {
    Eigen::MatrixXd s;
    const double ts = best_of(repeats, [&] { s = ref::product_kernel_weights(train, queries, bandwidths); });
    const double tp = best_of(repeats, [&] { weights = k::product_kernel_weights(train, queries, bandwidths); });
    report("product_kernel_weights", ts, tp, max_abs_diff(s, weights));
  }
  Eigen::MatrixXd table;
  {
    Eigen::MatrixXd s;
    const double ts = best_of(repeats, [&] { s = ref::normal_cdf_table(targets, 0.04, grid); });
    const double tp = best_of(repeats, [&] { table = k::normal_cdf_table(targets, 0.04, grid); });
    report("normal_cdf_table", ts, tp, max_abs_diff(s, table));
  }
  {
    // The direct sum is slow, so both sides see a 32-query slice.
    const Eigen::MatrixXd slice = weights.leftCols(32);
    Eigen::MatrixXd s, p;
    const double ts = best_of(1, [&] { s = ref::mixture_grid_cdfs(targets, 0.04, slice, grid); });
    const double tp = best_of(repeats, [&] { p = k::mixture_grid_cdfs(table, slice); });
    report("mixture_grid_cdfs[32]", ts, tp, max_abs_diff(s, p));
  }
  Eigen::MatrixXd cdfs;
  {
    Eigen::MatrixXd s;
    const double ts = best_of(repeats, [&] { s = ref::grid_cdfs(densities, grid); });
    const double tp = best_of(repeats, [&] { cdfs = k::grid_cdfs(densities, grid); });
    report("grid_cdfs", ts, tp, max_abs_diff(s, cdfs));
  }
  {
    const std::vector<double> cdf_obs = k::cdfs_at(densities, obs);
    std::vector<double> s, p;
    const double ts = best_of(repeats, [&] { s = ref::grid_crps_batch(grid, cdfs, cdf_obs, obs); });
    const double tp = best_of(repeats, [&] { p = k::grid_crps_batch(grid, cdfs, cdf_obs, obs); });
    report("grid_crps_batch", ts, tp, max_abs_diff(s, p));
  }
  return 0;
}
