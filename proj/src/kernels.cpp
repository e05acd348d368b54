#include "mmcast/kernels.hpp"

#include <cmath>
#include <utility>
#include <limits>

#include "mmcast/error.hpp"
#include "mmcast/parallel.hpp"
#include "mmcast/special.hpp"

namespace mmcast::kernels {

namespace {

using mmcast::parallel_for;

template <class Body>
void for_each_index(std::ptrdiff_t n, bool parallel, Body&& body) {
  parallel_for(n, parallel, std::forward<Body>(body));
}

Eigen::MatrixXd gram_impl(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double width, bool parallel) {
  if (a.cols() != b.cols()) throw DomainError("gaussian_gram: dimension mismatch");
  if (!(width > 0.0)) throw DomainError("gaussian_gram: width must be > 0");
  const double inv = 1.0 / (2.0 * width * width);
  Eigen::MatrixXd k(a.rows(), b.rows());
  for_each_index(b.rows(), parallel, [&](std::ptrdiff_t j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      double d2 = 0.0;
      for (Eigen::Index c = 0; c < a.cols(); ++c) {
        const double diff = a(i, c) - b(j, c);
        d2 += diff * diff;
      }
      k(i, j) = std::exp(-d2 * inv);
    }
  });
  return k;
}

Eigen::MatrixXd weights_impl(const Eigen::MatrixXd& train, const Eigen::MatrixXd& queries,
                             std::span<const double> bandwidths, bool parallel) {
  if (train.cols() != queries.cols() || static_cast<std::size_t>(train.cols()) != bandwidths.size()) {
    throw DomainError("kernel weights: dimension mismatch");
  }
  const Eigen::Index m = train.rows();
  Eigen::MatrixXd w(m, queries.rows());
  for_each_index(queries.rows(), parallel, [&](std::ptrdiff_t q) {
    double sum = 0.0;
    double best_log = -std::numeric_limits<double>::infinity();
    Eigen::Index nearest = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
      double acc = 0.0;
      for (Eigen::Index c = 0; c < train.cols(); ++c) {
        const double z = (queries(q, c) - train(i, c)) / bandwidths[static_cast<std::size_t>(c)];
        acc += z * z;
      }
      const double log_k = -0.5 * acc;
      if (log_k > best_log) {
        best_log = log_k;
        nearest = i;
      }
      const double raw = std::exp(log_k);
      w(i, q) = raw;
      sum += raw;
    }
    if (std::exp(best_log) < std::numeric_limits<double>::min()) {
      w.col(q).setZero();
      w(nearest, q) = 1.0;
      return;
    }
    for (Eigen::Index i = 0; i < m; ++i) w(i, q) /= sum;
  });
  return w;
}

Eigen::MatrixXd table_impl(std::span<const double> centers, double bandwidth, const UniformGrid& grid,
                           bool parallel) {
  if (!(bandwidth > 0.0)) throw DomainError("normal_cdf_table: bandwidth must be > 0");
  Eigen::MatrixXd t(static_cast<Eigen::Index>(grid.points), static_cast<Eigen::Index>(centers.size()));
  for_each_index(static_cast<std::ptrdiff_t>(centers.size()), parallel, [&](std::ptrdiff_t m) {
    for (std::size_t g = 0; g < grid.points; ++g) {
      t(static_cast<Eigen::Index>(g), m) = special::normal_cdf((grid.at(g) - centers[static_cast<std::size_t>(m)]) / bandwidth);
    }
  });
  return t;
}

Eigen::MatrixXd grid_cdfs_impl(std::span<const PredictiveDensity> densities, const UniformGrid& grid,
                               bool parallel) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(grid.points), static_cast<Eigen::Index>(densities.size()));
  for_each_index(static_cast<std::ptrdiff_t>(densities.size()), parallel, [&](std::ptrdiff_t n) {
    const auto& d = densities[static_cast<std::size_t>(n)];
    for (std::size_t g = 0; g < grid.points; ++g) out(static_cast<Eigen::Index>(g), n) = cdf_at(d, grid.at(g));
  });
  return out;
}

template <class Eval>
std::vector<double> pointwise_impl(std::span<const PredictiveDensity> densities, std::span<const double> y,
                                   bool parallel, Eval eval) {
  if (densities.size() != y.size()) throw DomainError("pointwise kernel: size mismatch");
  std::vector<double> out(y.size());
  for_each_index(static_cast<std::ptrdiff_t>(y.size()), parallel,
                 [&](std::ptrdiff_t n) { out[static_cast<std::size_t>(n)] = eval(densities[static_cast<std::size_t>(n)], y[static_cast<std::size_t>(n)]); });
  return out;
}

std::vector<double> crps_batch_impl(const UniformGrid& grid, const Eigen::MatrixXd& cdfs,
                                    std::span<const double> cdf_obs, std::span<const double> obs, bool parallel) {
  if (static_cast<std::size_t>(cdfs.rows()) != grid.points || static_cast<std::size_t>(cdfs.cols()) != obs.size() ||
      cdf_obs.size() != obs.size()) {
    throw DomainError("grid_crps_batch: size mismatch");
  }
  std::vector<double> out(obs.size());
  for_each_index(static_cast<std::ptrdiff_t>(obs.size()), parallel, [&](std::ptrdiff_t n) {
    const auto i = static_cast<std::size_t>(n);
    out[i] = grid_crps(grid, std::span<const double>(cdfs.col(n).data(), grid.points), cdf_obs[i], obs[i]);
  });
  return out;
}

constexpr Eigen::Index kMixtureBlock = 64;

}  // namespace

Eigen::MatrixXd gaussian_gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double width) {
  return gram_impl(a, b, width, true);
}

Eigen::MatrixXd product_kernel_weights(const Eigen::MatrixXd& train, const Eigen::MatrixXd& queries,
                                       std::span<const double> bandwidths) {
  return weights_impl(train, queries, bandwidths, true);
}

Eigen::MatrixXd normal_cdf_table(std::span<const double> centers, double bandwidth, const UniformGrid& grid) {
  return table_impl(centers, bandwidth, grid, true);
}

Eigen::MatrixXd mixture_grid_cdfs(const Eigen::MatrixXd& table, const Eigen::MatrixXd& weights) {
  if (table.cols() != weights.rows()) throw DomainError("mixture_grid_cdfs: size mismatch");
  Eigen::MatrixXd out(table.rows(), weights.cols());
  const Eigen::Index blocks = (weights.cols() + kMixtureBlock - 1) / kMixtureBlock;
  for_each_index(blocks, true, [&](std::ptrdiff_t b) {
    const Eigen::Index c0 = b * kMixtureBlock;
    const Eigen::Index nc = std::min(kMixtureBlock, weights.cols() - c0);
    out.middleCols(c0, nc).noalias() = table * weights.middleCols(c0, nc);
  });
  return out;
}

Eigen::MatrixXd grid_cdfs(std::span<const PredictiveDensity> densities, const UniformGrid& grid) {
  return grid_cdfs_impl(densities, grid, true);
}

std::vector<double> cdfs_at(std::span<const PredictiveDensity> densities, std::span<const double> y) {
  return pointwise_impl(densities, y, true, [](const PredictiveDensity& d, double v) { return cdf_at(d, v); });
}

std::vector<double> pdfs_at(std::span<const PredictiveDensity> densities, std::span<const double> y) {
  return pointwise_impl(densities, y, true, [](const PredictiveDensity& d, double v) { return pdf_at(d, v); });
}

std::vector<double> grid_crps_batch(const UniformGrid& grid, const Eigen::MatrixXd& cdfs,
                                    std::span<const double> cdf_obs, std::span<const double> obs) {
  return crps_batch_impl(grid, cdfs, cdf_obs, obs, true);
}

namespace reference {

Eigen::MatrixXd gaussian_gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double width) {
  return gram_impl(a, b, width, false);
}

Eigen::MatrixXd product_kernel_weights(const Eigen::MatrixXd& train, const Eigen::MatrixXd& queries,
                                       std::span<const double> bandwidths) {
  return weights_impl(train, queries, bandwidths, false);
}

Eigen::MatrixXd normal_cdf_table(std::span<const double> centers, double bandwidth, const UniformGrid& grid) {
  return table_impl(centers, bandwidth, grid, false);
}

Eigen::MatrixXd mixture_grid_cdfs(std::span<const double> centers, double bandwidth, const Eigen::MatrixXd& weights,
                                  const UniformGrid& grid) {
  if (static_cast<std::size_t>(weights.rows()) != centers.size()) {
    throw DomainError("mixture_grid_cdfs: size mismatch");
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid.points), weights.cols());
  for (Eigen::Index q = 0; q < weights.cols(); ++q) {
    for (std::size_t g = 0; g < grid.points; ++g) {
      double acc = 0.0;
      for (std::size_t m = 0; m < centers.size(); ++m) {
        acc += weights(static_cast<Eigen::Index>(m), q) * special::normal_cdf((grid.at(g) - centers[m]) / bandwidth);
      }
      out(static_cast<Eigen::Index>(g), q) = acc;
    }
  }
  return out;
}

Eigen::MatrixXd grid_cdfs(std::span<const PredictiveDensity> densities, const UniformGrid& grid) {
  return grid_cdfs_impl(densities, grid, false);
}

std::vector<double> cdfs_at(std::span<const PredictiveDensity> densities, std::span<const double> y) {
  return pointwise_impl(densities, y, false, [](const PredictiveDensity& d, double v) { return cdf_at(d, v); });
}

std::vector<double> pdfs_at(std::span<const PredictiveDensity> densities, std::span<const double> y) {
  return pointwise_impl(densities, y, false, [](const PredictiveDensity& d, double v) { return pdf_at(d, v); });
}

std::vector<double> grid_crps_batch(const UniformGrid& grid, const Eigen::MatrixXd& cdfs,
                                    std::span<const double> cdf_obs, std::span<const double> obs) {
  return crps_batch_impl(grid, cdfs, cdf_obs, obs, false);
}

}  // namespace reference

}  // namespace mmcast::kernels
