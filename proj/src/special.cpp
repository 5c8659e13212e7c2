#include "varfrac/special.hpp"

#include <cmath>
#include <string>

#include "varfrac/error.hpp"

namespace varfrac::special {
namespace {

bool is_pole(double x) { return x <= 0.0 && x == std::floor(x); }

} // namespace

double gamma_fn(double x)
{
    if (std::isnan(x))
        throw DomainError("gamma_fn: NaN argument");
    if (is_pole(x))
        throw DomainError("gamma_fn: pole at x = " + std::to_string(x));
    if (x > kGammaOverflowThreshold)
        throw OverflowError("gamma_fn: overflow for x = " + std::to_string(x));
    return std::tgamma(x);
}

double log_gamma(double x)
{
    if (std::isnan(x))
        throw DomainError("log_gamma: NaN argument");
    if (is_pole(x))
        throw DomainError("log_gamma: pole at x = " + std::to_string(x));
    // lgamma_r leaves the global signgam untouched, so this stays reentrant.
    int sign = 0;
    return ::lgamma_r(x, &sign);
}

double rgamma(double x)
{
    if (is_pole(x) || x > kGammaOverflowThreshold)
        return 0.0;
    return 1.0 / std::tgamma(x);
}

double beta_fn(double t, double u)
{
    if (!(t > 0.0) || !(u > 0.0))
        throw DomainError("beta_fn: arguments must be positive");
    // Direct ratio while Gamma(t+u) is comfortably finite; logs beyond that.
    if (t + u < 150.0)
        return std::tgamma(t) * std::tgamma(u) / std::tgamma(t + u);
    return std::exp(log_gamma(t) + log_gamma(u) - log_gamma(t + u));
}

} // namespace varfrac::special
