#include "mmcast/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mmcast/error.hpp"
#include "mmcast/special.hpp"

namespace mmcast {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_finite(double y, const char* op) {
  if (!std::isfinite(y)) throw DomainError(std::string(op) + ": argument is not finite");
}

// Mass of N(mean, sd^2) on [a, b], taking the tail that avoids cancellation.
double gaussian_mass(double mean, double sd, double a, double b) {
  if (!(b > a)) return 0.0;
  const double za = (a - mean) / sd;
  const double zb = (b - mean) / sd;
  if (za > 0.0) return special::normal_sf(za) - special::normal_sf(zb);
  return special::normal_cdf(zb) - special::normal_cdf(za);
}

// Unnormalized partial moments on [a, b]: mass, E[Y 1{a<=Y<=b}], E[Y^2 1{..}].
struct PartialMoments {
  double mass = 0.0;
  double first = 0.0;
  double second = 0.0;

  PartialMoments& operator+=(const PartialMoments& o) {
    mass += o.mass;
    first += o.first;
    second += o.second;
    return *this;
  }
  PartialMoments scaled(double s) const { return {mass * s, first * s, second * s}; }
};

double phi_times(double z) {
  // z * phi(z), zero at infinity.
  return std::isfinite(z) ? z * special::normal_pdf(z) : 0.0;
}

double phi_or_zero(double z) { return std::isfinite(z) ? special::normal_pdf(z) : 0.0; }

PartialMoments gaussian_partial(double m, double s, double a, double b) {
  if (!(b > a)) return {};
  const double za = (a - m) / s;
  const double zb = (b - m) / s;
  const double mass = gaussian_mass(m, s, a, b);
  const double dphi = phi_or_zero(za) - phi_or_zero(zb);
  const double z2 = mass + phi_times(za) - phi_times(zb);
  return {mass, m * mass + s * dphi, m * m * mass + 2.0 * m * s * dphi + s * s * z2};
}

PartialMoments partial_moments(const PredictiveDensity& d, double a, double b);

PartialMoments beta_partial(const BetaDensity& d, double a, double b) {
  a = std::max(a, 0.0);
  b = std::min(b, 1.0);
  if (!(b > a)) return {};
  const double al = d.alpha();
  const double be = d.beta();
  const double s = al + be;
  auto inc = [](double p, double q, double x) { return special::incomplete_beta(p, q, x); };
  const double mass = inc(al, be, b) - inc(al, be, a);
  const double first = al / s * (inc(al + 1.0, be, b) - inc(al + 1.0, be, a));
  const double second = al * (al + 1.0) / (s * (s + 1.0)) * (inc(al + 2.0, be, b) - inc(al + 2.0, be, a));
  return {mass, first, second};
}

PartialMoments partial_moments(const PredictiveDensity& d, double a, double b) {
  return std::visit(
      Overloaded{
          [&](const GaussianDensity& g) { return gaussian_partial(g.mean(), g.sd(), a, b); },
          [&](const BetaDensity& be) { return beta_partial(be, a, b); },
          [&](const GaussianMixtureDensity& mx) {
            PartialMoments acc;
            const auto c = mx.centers();
            const auto w = mx.weights();
            for (std::size_t i = 0; i < c.size(); ++i) {
              if (w[i] == 0.0) continue;
              acc += gaussian_partial(c[i], mx.bandwidth(), a, b).scaled(w[i]);
            }
            return acc;
          },
          [&](const CombinedDensity& cd) {
            PartialMoments acc;
            for (const auto& m : cd.members()) acc += partial_moments(*m.density, a, b).scaled(m.weight);
            return acc;
          },
          [&](const TruncatedDensity& t) {
            const double lo = std::max(a, 0.0);
            const double hi = std::min(b, 1.0);
            if (!(hi > lo)) return PartialMoments{};
            return partial_moments(t.inner(), lo, hi).scaled(1.0 / t.normalization());
          },
      },
      d.value());
}

bool supported_on_unit_interval(const PredictiveDensity& d) {
  return std::visit(Overloaded{
                        [](const GaussianDensity&) { return false; },
                        [](const BetaDensity&) { return true; },
                        [](const GaussianMixtureDensity&) { return false; },
                        [](const CombinedDensity& cd) {
                          return std::all_of(cd.members().begin(), cd.members().end(), [](const auto& m) {
                            return supported_on_unit_interval(*m.density);
                          });
                        },
                        [](const TruncatedDensity&) { return true; },
                    },
                    d.value());
}

Interval widen(const Interval& a, const Interval& b) {
  return {std::min(a.lower, b.lower), std::max(a.upper, b.upper)};
}

// Tails beyond `sds` standard deviations are treated as empty.
Interval effective_support(const PredictiveDensity& d, double sds) {
  return std::visit(
      Overloaded{
          [&](const GaussianDensity& g) { return Interval{g.mean() - sds * g.sd(), g.mean() + sds * g.sd()}; },
          [](const BetaDensity&) { return Interval{0.0, 1.0}; },
          [&](const GaussianMixtureDensity& mx) {
            const auto [lo, hi] = std::minmax_element(mx.centers().begin(), mx.centers().end());
            return Interval{*lo - sds * mx.bandwidth(), *hi + sds * mx.bandwidth()};
          },
          [&](const CombinedDensity& cd) {
            Interval out = effective_support(*cd.members().front().density, sds);
            for (const auto& m : cd.members()) out = widen(out, effective_support(*m.density, sds));
            return out;
          },
          [](const TruncatedDensity&) { return Interval{0.0, 1.0}; },
      },
      d.value());
}

}  // namespace

// ---- construction ----------------------------------------------------------

GaussianDensity::GaussianDensity(double mean, double variance) : mean_(mean), variance_(variance) {
  if (!std::isfinite(mean)) throw DomainError("GaussianDensity: mean is not finite");
  if (!(variance > 0.0) || !std::isfinite(variance)) throw DomainError("GaussianDensity: variance must be > 0");
  sd_ = std::sqrt(variance);
}

BetaDensity::BetaDensity(double alpha, double beta) : alpha_(alpha), beta_(beta) {
  if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta)) {
    throw DomainError("BetaDensity: shapes must be finite and > 0");
  }
  log_beta_ = special::log_beta(alpha, beta);
}

GaussianMixtureDensity::GaussianMixtureDensity(std::vector<double> centers, std::vector<double> weights,
                                               double bandwidth)
    : GaussianMixtureDensity(std::make_shared<const std::vector<double>>(std::move(centers)), std::move(weights),
                             bandwidth) {}

GaussianMixtureDensity::GaussianMixtureDensity(std::shared_ptr<const std::vector<double>> centers,
                                               std::vector<double> weights, double bandwidth)
    : centers_(std::move(centers)), weights_(std::move(weights)), bandwidth_(bandwidth) {
  if (!centers_ || centers_->empty()) throw DomainError("GaussianMixtureDensity: no centers");
  if (centers_->size() != weights_.size()) throw DomainError("GaussianMixtureDensity: centers/weights size mismatch");
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw DomainError("GaussianMixtureDensity: bandwidth must be > 0");
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw DomainError("GaussianMixtureDensity: negative weight");
    sum += w;
  }
  if (std::fabs(sum - 1.0) > 1e-12) throw DomainError("GaussianMixtureDensity: weights do not sum to 1");
}

CombinedDensity::CombinedDensity(std::vector<Member> members) : members_(std::move(members)) {
  if (members_.empty()) throw DomainError("CombinedDensity: no members");
  double sum = 0.0;
  for (const auto& m : members_) {
    if (!m.density) throw DomainError("CombinedDensity: null member");
    if (!(m.weight >= 0.0) || m.weight > 1.0) throw DomainError("CombinedDensity: weight outside [0,1]");
    sum += m.weight;
  }
  if (std::fabs(sum - 1.0) > 1e-9) throw DomainError("CombinedDensity: weights do not sum to 1");
}

CombinedDensity::CombinedDensity(std::span<const double> weights, std::vector<PredictiveDensity> densities)
    : CombinedDensity([&] {
        if (weights.size() != densities.size()) throw DomainError("CombinedDensity: size mismatch");
        std::vector<Member> out;
        out.reserve(weights.size());
        for (std::size_t k = 0; k < weights.size(); ++k) {
          out.push_back({weights[k], std::make_shared<const PredictiveDensity>(std::move(densities[k]))});
        }
        return out;
      }()) {}

TruncatedDensity::TruncatedDensity(std::shared_ptr<const PredictiveDensity> inner) : inner_(std::move(inner)) {
  if (!inner_) throw DomainError("TruncatedDensity: null inner density");
  const double mass = interval_mass(*inner_, 0.0, 1.0);
  if (!(mass > kMinTruncationMass)) {
    throw DegenerateError("truncation: density has negligible mass on [0,1] (" + std::to_string(mass) + ")");
  }
  normalization_ = std::min(mass, 1.0);
}

TruncatedDensity truncate_renormalize(const PredictiveDensity& d) {
  return TruncatedDensity(std::make_shared<const PredictiveDensity>(d));
}

TruncatedDensity truncate_renormalize(std::shared_ptr<const PredictiveDensity> d) { return TruncatedDensity(std::move(d)); }

// ---- evaluation ------------------------------------------------------------

double pdf_at(const PredictiveDensity& d, double y) {
  require_finite(y, "pdf_at");
  return std::visit(
      Overloaded{
          [&](const GaussianDensity& g) { return special::normal_pdf((y - g.mean()) / g.sd()) / g.sd(); },
          [&](const BetaDensity& be) {
            if (y < 0.0 || y > 1.0) return 0.0;
            const double a = be.alpha();
            const double b = be.beta();
            if (y == 0.0) {
              if (a < 1.0) return std::numeric_limits<double>::infinity();
              return a == 1.0 ? std::exp(-be.log_beta()) : 0.0;
            }
            if (y == 1.0) {
              if (b < 1.0) return std::numeric_limits<double>::infinity();
              return b == 1.0 ? std::exp(-be.log_beta()) : 0.0;
            }
            return std::exp((a - 1.0) * std::log(y) + (b - 1.0) * std::log1p(-y) - be.log_beta());
          },
          [&](const GaussianMixtureDensity& mx) {
            const auto c = mx.centers();
            const auto w = mx.weights();
            const double h = mx.bandwidth();
            double acc = 0.0;
            for (std::size_t i = 0; i < c.size(); ++i) acc += w[i] * special::normal_pdf((y - c[i]) / h);
            return acc / h;
          },
          [&](const CombinedDensity& cd) {
            double acc = 0.0;
            for (const auto& m : cd.members()) acc += m.weight * pdf_at(*m.density, y);
            return acc;
          },
          [&](const TruncatedDensity& t) {
            if (y < 0.0 || y > 1.0) return 0.0;
            return pdf_at(t.inner(), y) / t.normalization();
          },
      },
      d.value());
}

double cdf_at(const PredictiveDensity& d, double y) {
  require_finite(y, "cdf_at");
  return std::visit(
      Overloaded{
          [&](const GaussianDensity& g) { return special::normal_cdf((y - g.mean()) / g.sd()); },
          [&](const BetaDensity& be) { return special::incomplete_beta(be.alpha(), be.beta(), y, be.log_beta()); },
          [&](const GaussianMixtureDensity& mx) {
            const auto c = mx.centers();
            const auto w = mx.weights();
            const double h = mx.bandwidth();
            double acc = 0.0;
            for (std::size_t i = 0; i < c.size(); ++i) acc += w[i] * special::normal_cdf((y - c[i]) / h);
            return std::min(acc, 1.0);
          },
          [&](const CombinedDensity& cd) {
            double acc = 0.0;
            for (const auto& m : cd.members()) acc += m.weight * cdf_at(*m.density, y);
            return std::min(acc, 1.0);
          },
          [&](const TruncatedDensity& t) {
            if (y <= 0.0) return 0.0;
            if (y >= 1.0) return 1.0;
            return std::clamp(interval_mass(t.inner(), 0.0, y) / t.normalization(), 0.0, 1.0);
          },
      },
      d.value());
}

double interval_mass(const PredictiveDensity& d, double a, double b) {
  if (!(b > a)) return 0.0;
  return std::visit(
      Overloaded{
          [&](const GaussianDensity& g) { return gaussian_mass(g.mean(), g.sd(), a, b); },
          [&](const BetaDensity& be) {
            const double lo = std::max(a, 0.0);
            const double hi = std::min(b, 1.0);
            if (!(hi > lo)) return 0.0;
            return special::incomplete_beta(be.alpha(), be.beta(), hi, be.log_beta()) -
                   special::incomplete_beta(be.alpha(), be.beta(), lo, be.log_beta());
          },
          [&](const GaussianMixtureDensity& mx) {
            const auto c = mx.centers();
            const auto w = mx.weights();
            double acc = 0.0;
            for (std::size_t i = 0; i < c.size(); ++i) acc += w[i] * gaussian_mass(c[i], mx.bandwidth(), a, b);
            return acc;
          },
          [&](const CombinedDensity& cd) {
            double acc = 0.0;
            for (const auto& m : cd.members()) acc += m.weight * interval_mass(*m.density, a, b);
            return acc;
          },
          [&](const TruncatedDensity& t) {
            const double lo = std::max(a, 0.0);
            const double hi = std::min(b, 1.0);
            if (!(hi > lo)) return 0.0;
            return interval_mass(t.inner(), lo, hi) / t.normalization();
          },
      },
      d.value());
}

Interval support_of(const PredictiveDensity& d) { return effective_support(d, 40.0); }

namespace {

// Illinois false position with a bisection step every third iteration, so
// the bracket at least halves every three evaluations. fa and fb are
// cdf - p at the bracket ends.
double bracketed_quantile(const PredictiveDensity& d, double p, double a, double b, double fa, double fb) {
  int side = 0;
  for (int it = 0; it < kQuantileMaxIterations; ++it) {
    double x = 0.5 * (a + b);
    if (it % 3 != 2) {
      const double secant = (a * fb - b * fa) / (fb - fa);
      if (secant > a && secant < b) x = secant;
    }
    // Adjacent doubles: the CDF jumps across p at machine resolution, so the
    // tolerance is unreachable and b is the smallest x with F(x) >= p.
    if (!(x > a && x < b)) return b;
    const double fx = cdf_at(d, x) - p;
    if (std::fabs(fx) <= kQuantileTolerance) return x;
    if (fx < 0.0) {
      a = x;
      fa = fx;
      if (side == -1) fb *= 0.5;
      side = -1;
    } else {
      b = x;
      fb = fx;
      if (side == 1) fa *= 0.5;
      side = 1;
    }
  }
  throw NumericalError("quantile: search did not reach tolerance for p=" + std::to_string(p));
}

}  // namespace

double quantile_in_bracket(const PredictiveDensity& d, double p, double lower, double upper) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile: p must lie in (0,1)");
  if (!(lower <= upper)) throw DomainError("quantile: empty bracket");
  const double fa = cdf_at(d, lower) - p;
  if (std::fabs(fa) <= kQuantileTolerance) return lower;
  const double fb = cdf_at(d, upper) - p;
  if (std::fabs(fb) <= kQuantileTolerance) return upper;
  if (fa > 0.0 || fb < 0.0) throw NumericalError("quantile: bracket does not contain p=" + std::to_string(p));
  return bracketed_quantile(d, p, lower, upper, fa, fb);
}

double quantile_on_grid(const PredictiveDensity& d, double p, const UniformGrid& grid, std::span<const double> cdf) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile: p must lie in (0,1)");
  if (cdf.size() != grid.points || grid.points < 2) throw DomainError("quantile_on_grid: table size mismatch");
  const auto it = std::lower_bound(cdf.begin(), cdf.end(), p);
  const auto i = static_cast<std::size_t>(it - cdf.begin());
  if (i > 0 && i < grid.points) {
    const double fa = cdf[i - 1] - p;
    const double fb = cdf[i] - p;
    if (fa < 0.0 && fb >= 0.0) {
      try {
        return bracketed_quantile(d, p, grid.at(i - 1), grid.at(i), fa, fb);
      } catch (const NumericalError&) {
      }
    }
  }
  return quantile(d, p);
}

double quantile(const PredictiveDensity& d, double p) {
  const Interval s = support_of(d);
  return quantile_in_bracket(d, p, s.lower, s.upper);
}

Interval central_interval(const PredictiveDensity& d, double nominal) {
  if (!(nominal > 0.0 && nominal < 1.0)) throw DomainError("central_interval: nominal must lie in (0,1)");
  const double alpha = 0.5 * (1.0 - nominal);
  double lo = quantile(d, alpha);
  double hi = quantile(d, 1.0 - alpha);
  if (lo > hi) lo = hi = 0.5 * (lo + hi);
  return {lo, hi};
}

double mean_of(const PredictiveDensity& d) {
  return std::visit(Overloaded{
                        [](const GaussianDensity& g) { return g.mean(); },
                        [](const BetaDensity& be) { return be.alpha() / (be.alpha() + be.beta()); },
                        [](const GaussianMixtureDensity& mx) {
                          double acc = 0.0;
                          for (std::size_t i = 0; i < mx.centers().size(); ++i) {
                            acc += mx.weights()[i] * mx.centers()[i];
                          }
                          return acc;
                        },
                        [](const CombinedDensity& cd) {
                          double acc = 0.0;
                          for (const auto& m : cd.members()) acc += m.weight * mean_of(*m.density);
                          return acc;
                        },
                        [](const TruncatedDensity& t) {
                          const PartialMoments pm = partial_moments(t.inner(), 0.0, 1.0);
                          return std::clamp(pm.first / pm.mass, 0.0, 1.0);
                        },
                    },
                    d.value());
}

double variance_of(const PredictiveDensity& d) {
  return std::visit(
      Overloaded{
          [](const GaussianDensity& g) { return g.variance(); },
          [](const BetaDensity& be) {
            const double s = be.alpha() + be.beta();
            return be.alpha() * be.beta() / (s * s * (s + 1.0));
          },
          [](const GaussianMixtureDensity& mx) {
            const double m = mean_of(PredictiveDensity(mx));
            double acc = 0.0;
            for (std::size_t i = 0; i < mx.centers().size(); ++i) {
              const double dc = mx.centers()[i] - m;
              acc += mx.weights()[i] * dc * dc;
            }
            return mx.bandwidth() * mx.bandwidth() + acc;
          },
          [](const CombinedDensity& cd) {
            double m = 0.0;
            for (const auto& mem : cd.members()) m += mem.weight * mean_of(*mem.density);
            double acc = 0.0;
            for (const auto& mem : cd.members()) {
              const double dm = mean_of(*mem.density) - m;
              acc += mem.weight * (variance_of(*mem.density) + dm * dm);
            }
            return acc;
          },
          [](const TruncatedDensity& t) {
            const PartialMoments pm = partial_moments(t.inner(), 0.0, 1.0);
            const double mean = pm.first / pm.mass;
            return std::max(pm.second / pm.mass - mean * mean, 0.0);
          },
      },
      d.value());
}

// ---- CRPS ------------------------------------------------------------------

double crps_gaussian_closed_form(const GaussianDensity& d, double y_obs) {
  const double z = (y_obs - d.mean()) / d.sd();
  return d.sd() * (z * (2.0 * special::normal_cdf(z) - 1.0) + 2.0 * special::normal_pdf(z) -
                   1.0 / std::sqrt(special::kPi));
}

Interval crps_range(const PredictiveDensity& d) {
  if (supported_on_unit_interval(d)) return {0.0, 1.0};
  return widen({0.0, 1.0}, effective_support(d, 10.0));
}

std::vector<double> cdf_on_grid(const PredictiveDensity& d, const UniformGrid& grid) {
  std::vector<double> out(grid.points);
  for (std::size_t i = 0; i < grid.points; ++i) out[i] = cdf_at(d, grid.at(i));
  return out;
}

double deviation_inner_product(const UniformGrid& grid, std::span<const double> fa, double fa_obs,
                               std::span<const double> fb, double fb_obs, double y_obs) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < grid.points; ++i) {
    const double a = grid.at(i);
    const double b = grid.at(i + 1);
    if (b <= y_obs) {
      acc += 0.5 * (b - a) * (fa[i] * fb[i] + fa[i + 1] * fb[i + 1]);
    } else if (a >= y_obs) {
      acc += 0.5 * (b - a) * ((fa[i] - 1.0) * (fb[i] - 1.0) + (fa[i + 1] - 1.0) * (fb[i + 1] - 1.0));
    } else {
      acc += 0.5 * (y_obs - a) * (fa[i] * fb[i] + fa_obs * fb_obs);
      acc += 0.5 * (b - y_obs) * ((fa_obs - 1.0) * (fb_obs - 1.0) + (fa[i + 1] - 1.0) * (fb[i + 1] - 1.0));
    }
  }
  return acc;
}

double grid_crps(const UniformGrid& grid, std::span<const double> cdf, double cdf_obs, double y_obs) {
  return deviation_inner_product(grid, cdf, cdf_obs, cdf, cdf_obs, y_obs);
}

double crps_grid(const PredictiveDensity& d, double y_obs, std::size_t grid_points) {
  require_finite(y_obs, "crps");
  if (y_obs < 0.0 || y_obs > 1.0) throw DomainError("crps: observation outside [0,1]");
  if (grid_points < 2) throw DomainError("crps: grid needs at least two points");
  const Interval r = crps_range(d);
  const UniformGrid grid{r.lower, r.upper, grid_points};
  const std::vector<double> f = cdf_on_grid(d, grid);
  return grid_crps(grid, f, cdf_at(d, y_obs), y_obs);
}

double crps_single(const PredictiveDensity& d, double y_obs) {
  if (const auto* g = d.get_if<GaussianDensity>()) {
    require_finite(y_obs, "crps");
    if (y_obs < 0.0 || y_obs > 1.0) throw DomainError("crps: observation outside [0,1]");
    return crps_gaussian_closed_form(*g, y_obs);
  }
  return crps_grid(d, y_obs);
}

}  // namespace mmcast
