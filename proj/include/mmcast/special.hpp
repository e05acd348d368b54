#pragma once

namespace mmcast::special {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

/// Standard normal density.
double normal_pdf(double z);

/// Standard normal CDF, accurate in both tails.
double normal_cdf(double z);

/// Upper tail 1 - normal_cdf(z) without cancellation.
double normal_sf(double z);

/// log B(a, b).
double log_beta(double a, double b);

/// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
/// `log_beta_ab` lets callers hoist log B(a, b) out of grid loops.
double incomplete_beta(double a, double b, double x, double log_beta_ab);
double incomplete_beta(double a, double b, double x);

}  // namespace mmcast::special
