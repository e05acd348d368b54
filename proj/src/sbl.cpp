#include "mmcast/sbl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mmcast/error.hpp"
#include "mmcast/kernels.hpp"
#include "mmcast/special.hpp"

namespace mmcast {

namespace {

struct PosteriorSolve {
  Eigen::MatrixXd sigma;
  Eigen::VectorXd mu;
  double log_det_sigma = 0.0;
};

// Solves with the Jacobi-scaled Hessian, which keeps the Cholesky factor well
// conditioned when precisions span many orders of magnitude.
PosteriorSolve solve_posterior(const Eigen::MatrixXd& gram, const Eigen::VectorXd& phi_t_y,
                               const Eigen::VectorXd& alpha, double beta) {
  Eigen::MatrixXd h = beta * gram;
  h.diagonal() += alpha;
  const Eigen::VectorXd d = h.diagonal().cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd hs = d.asDiagonal() * h * d.asDiagonal();
  Eigen::LLT<Eigen::MatrixXd> llt(hs);
  if (llt.info() != Eigen::Success) {
    hs.diagonal().array() += 1e-10;
    llt.compute(hs);
    if (llt.info() != Eigen::Success) throw NumericalError("sbl: posterior system is singular");
  }
  PosteriorSolve out;
  const Eigen::Index m = gram.rows();
  const Eigen::MatrixXd hs_inv = llt.solve(Eigen::MatrixXd::Identity(m, m));
  out.sigma = d.asDiagonal() * hs_inv * d.asDiagonal();
  out.sigma = 0.5 * (out.sigma + out.sigma.transpose()).eval();
  out.mu = beta * (d.asDiagonal() * llt.solve(d.asDiagonal() * phi_t_y));
  const Eigen::MatrixXd l = llt.matrixL();
  double log_det_hs = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) log_det_hs += 2.0 * std::log(l(i, i));
  const double log_det_h = log_det_hs - 2.0 * d.array().log().sum();
  out.log_det_sigma = -log_det_h;
  return out;
}

double log_evidence(std::size_t n, double noise_variance, const PosteriorSolve& post, const Eigen::VectorXd& alpha,
                    double residual_sq) {
  const double nd = static_cast<double>(n);
  const double quad = residual_sq / noise_variance + (alpha.array() * post.mu.array().square()).sum();
  return -0.5 * (nd * std::log(2.0 * special::kPi) + nd * std::log(noise_variance) - post.log_det_sigma -
                 alpha.array().log().sum() + quad);
}

Eigen::MatrixXd select(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& rows,
                       const std::vector<Eigen::Index>& cols) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(rows[i], cols[j]);
    }
  }
  return out;
}

Eigen::MatrixXd select_cols(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& cols) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(cols[j]);
  return out;
}

Eigen::VectorXd select(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(idx[i]);
  return out;
}

}  // namespace

double gaussian_kernel(std::span<const double> x1, std::span<const double> x2, double width) {
  if (x1.size() != x2.size()) throw DomainError("gaussian_kernel: dimension mismatch");
  if (!(width > 0.0)) throw DomainError("gaussian_kernel: width must be > 0");
  double d2 = 0.0;
  for (std::size_t i = 0; i < x1.size(); ++i) d2 += (x1[i] - x2[i]) * (x1[i] - x2[i]);
  return std::exp(-d2 / (2.0 * width * width));
}

double median_pairwise_distance(const Eigen::MatrixXd& x, std::size_t max_rows) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (n < 2) throw DomainError("median_pairwise_distance: need at least two rows");
  const std::size_t m = std::min(n, std::max<std::size_t>(max_rows, 2));
  std::vector<Eigen::Index> rows(m);
  for (std::size_t i = 0; i < m; ++i) rows[i] = static_cast<Eigen::Index>(i * n / m);
  std::vector<double> dist;
  dist.reserve(m * (m - 1) / 2);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) dist.push_back((x.row(rows[i]) - x.row(rows[j])).norm());
  }
  auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
  std::nth_element(dist.begin(), mid, dist.end());
  if (!(*mid > 0.0)) throw DataError("median pairwise distance is zero; cannot choose a kernel width");
  return *mid;
}

Eigen::MatrixXd sbl_design(const Eigen::MatrixXd& x, const Eigen::MatrixXd& centers, double width, bool bias) {
  const Eigen::MatrixXd k = kernels::gaussian_gram(x, centers, width);
  if (!bias) return k;
  Eigen::MatrixXd phi(x.rows(), k.cols() + 1);
  phi.col(0).setOnes();
  phi.rightCols(k.cols()) = k;
  return phi;
}

SblPosterior sbl_posterior(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y, const Eigen::VectorXd& alpha,
                           double noise_variance) {
  if (phi.rows() != y.size() || phi.cols() != alpha.size()) throw DomainError("sbl_posterior: size mismatch");
  if (!(noise_variance > 0.0)) throw DomainError("sbl_posterior: noise variance must be > 0");
  const PosteriorSolve s = solve_posterior(phi.transpose() * phi, phi.transpose() * y, alpha, 1.0 / noise_variance);
  return {s.sigma, s.mu};
}

double sbl_log_evidence(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y, const Eigen::VectorXd& alpha,
                        double noise_variance) {
  const PosteriorSolve s = solve_posterior(phi.transpose() * phi, phi.transpose() * y, alpha, 1.0 / noise_variance);
  const double r2 = (y - phi * s.mu).squaredNorm();
  return log_evidence(static_cast<std::size_t>(y.size()), noise_variance, s, alpha, r2);
}

SblModel sbl_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const SblFitConfig& config) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (n < 2) throw DomainError("sbl_fit: need at least two samples");
  if (y.size() != x.rows()) throw DomainError("sbl_fit: size mismatch");
  if (config.max_iterations < 1 || !(config.tolerance > 0.0) || !(config.alpha_max > 0.0)) {
    throw ConfigError("sbl: max_iterations, tolerance and alpha_max must be positive");
  }

  const double width = config.kernel_width ? *config.kernel_width : median_pairwise_distance(x);
  if (!(width > 0.0)) throw ConfigError("sbl: kernel width must be > 0");

  // Candidate centers: every input, or an even stride when capped.
  const std::size_t m0 = config.max_centers == 0 ? n : std::min(n, config.max_centers);
  Eigen::MatrixXd centers(static_cast<Eigen::Index>(m0), x.cols());
  for (std::size_t i = 0; i < m0; ++i) centers.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(i * n / m0));

  const Eigen::MatrixXd phi = sbl_design(x, centers, width, true);
  const Eigen::MatrixXd gram = phi.transpose() * phi;
  const Eigen::VectorXd phi_t_y = phi.transpose() * y;

  const double mean_y = y.mean();
  const double var_y = std::max((y.array() - mean_y).square().mean(), 1e-12);
  const double noise_floor = 1e-10 * var_y;

  struct State {
    std::vector<Eigen::Index> active;
    Eigen::VectorXd alpha;
    double noise = 0.0;
  };

  State state;
  state.active.resize(static_cast<std::size_t>(phi.cols()));
  for (Eigen::Index i = 0; i < phi.cols(); ++i) state.active[static_cast<std::size_t>(i)] = i;
  state.alpha = Eigen::VectorXd::Ones(phi.cols());
  state.noise = std::max(0.1 * var_y, noise_floor);

  SblModel model;
  State accepted;
  PosteriorSolve accepted_post;
  bool have_accepted = false;
  bool converged = false;

  for (int it = 0; it < config.max_iterations; ++it) {
    const Eigen::MatrixXd g = select(gram, state.active, state.active);
    const Eigen::VectorXd b = select(phi_t_y, state.active);
    const Eigen::MatrixXd phi_a = select_cols(phi, state.active);
    const PosteriorSolve post = solve_posterior(g, b, state.alpha, 1.0 / state.noise);
    const double r2 = (y - phi_a * post.mu).squaredNorm();
    const double evidence = log_evidence(n, state.noise, post, state.alpha, r2);
    if (!std::isfinite(evidence)) throw NumericalError("sbl: marginal likelihood is not finite");
    if (have_accepted && evidence < model.evidence_trace.back() - 1e-8) break;  // keep the previous state

    model.evidence_trace.push_back(evidence);
    accepted = state;
    accepted_post = post;
    have_accepted = true;
    if (converged || it + 1 == config.max_iterations) break;

    // Evidence fixed point.
    const auto m = static_cast<Eigen::Index>(state.active.size());
    State next;
    double gamma_sum = 0.0;
    double max_rel = 0.0;
    std::vector<double> next_alpha;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double gamma = std::clamp(1.0 - state.alpha(i) * post.sigma(i, i), 0.0, 1.0);
      gamma_sum += gamma;
      const double mu2 = post.mu(i) * post.mu(i);
      const double a_new = (gamma > 0.0 && mu2 > 0.0) ? gamma / mu2 : std::numeric_limits<double>::infinity();
      if (a_new > config.alpha_max) continue;
      next.active.push_back(state.active[static_cast<std::size_t>(i)]);
      next_alpha.push_back(a_new);
      max_rel = std::max(max_rel, std::fabs(a_new - state.alpha(i)) / state.alpha(i));
    }
    if (next.active.empty()) throw DegenerateError("sbl: every basis function was pruned");
    const double dof = static_cast<double>(n) - gamma_sum;
    next.noise = dof > 0.0 ? std::max(r2 / dof, noise_floor) : state.noise;
    max_rel = std::max(max_rel, std::fabs(next.noise - state.noise) / state.noise);
    next.alpha = Eigen::Map<const Eigen::VectorXd>(next_alpha.data(), static_cast<Eigen::Index>(next_alpha.size()));
    const bool pruned = next.active.size() != state.active.size();
    converged = !pruned && max_rel < config.tolerance;
    state = std::move(next);
  }

  model.has_bias = !accepted.active.empty() && accepted.active.front() == 0;
  std::vector<Eigen::Index> kernel_rows;
  for (Eigen::Index idx : accepted.active) {
    if (idx > 0) kernel_rows.push_back(idx - 1);
  }
  model.relevance_inputs.resize(static_cast<Eigen::Index>(kernel_rows.size()), x.cols());
  for (std::size_t i = 0; i < kernel_rows.size(); ++i) {
    model.relevance_inputs.row(static_cast<Eigen::Index>(i)) = centers.row(kernel_rows[i]);
  }
  model.posterior_mean = accepted_post.mu;
  model.posterior_cov = accepted_post.sigma;
  model.alpha = accepted.alpha;
  model.noise_variance = accepted.noise;
  model.kernel_width = width;
  model.iterations = static_cast<int>(model.evidence_trace.size());
  model.converged = converged;
  return model;
}

Eigen::VectorXd SblModel::basis(std::span<const double> x) const {
  if (static_cast<Eigen::Index>(x.size()) != relevance_inputs.cols() && relevance_inputs.rows() > 0) {
    throw DomainError("sbl_predict: feature dimension mismatch");
  }
  const Eigen::Index off = has_bias ? 1 : 0;
  Eigen::VectorXd phi(relevance_inputs.rows() + off);
  if (has_bias) phi(0) = 1.0;
  for (Eigen::Index i = 0; i < relevance_inputs.rows(); ++i) {
    double d2 = 0.0;
    for (Eigen::Index c = 0; c < relevance_inputs.cols(); ++c) {
      const double diff = x[static_cast<std::size_t>(c)] - relevance_inputs(i, c);
      d2 += diff * diff;
    }
    phi(i + off) = std::exp(-d2 / (2.0 * kernel_width * kernel_width));
  }
  return phi;
}

GaussianDensity sbl_predict(const SblModel& model, std::span<const double> x) {
  const Eigen::VectorXd phi = model.basis(x);
  const double mean = model.posterior_mean.dot(phi);
  const double var = model.noise_variance + std::max(phi.dot(model.posterior_cov * phi), 0.0);
  return GaussianDensity(mean, var);
}

}  // namespace mmcast
