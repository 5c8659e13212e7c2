#pragma once

namespace varfrac::special {

// Largest argument for which Gamma(x) is representable as a double.
// Gamma(171.6243769563027) ~ 1.797e308.
inline constexpr double kGammaOverflowThreshold = 171.6243769563027;

// Gamma(x). Throws DomainError at x = 0, -1, -2, ... and OverflowError
// for x > kGammaOverflowThreshold.
double gamma_fn(double x);

// log|Gamma(x)|; defined wherever gamma_fn is, without the overflow limit.
double log_gamma(double x);

// 1/Gamma(x), an entire function: zero at the poles of Gamma and for
// large x where Gamma overflows. Used inside kernels where the order may
// touch a band edge.
double rgamma(double x);

// B(t,u) for t, u > 0. Throws DomainError otherwise.
double beta_fn(double t, double u);

} // namespace varfrac::special
