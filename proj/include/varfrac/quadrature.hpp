#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "varfrac/func_approx.hpp"

namespace varfrac {

enum class SingularEnd { lo, hi, none };

struct QuadConfig {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    int panel_points = 30;
    double grading_ratio = 0.5;
    int max_panels = 60;

    // Throws InvalidArgument when a field is out of range.
    void validate() const;
};

struct QuadResult {
    double value = 0.0;
    double error = 0.0; // estimated absolute error
    int panels = 0;
};

// Integrand that also receives the exact distance from the singular end
// (from lo when singular_end is none). Kernels of the form
// |t - tau|^p should use that distance rather than recomputing t - tau.
using OffsetIntegrand = std::function<double(double tau, double offset)>;

// Integral over [lo, hi] of an integrand that may carry an algebraic
// singularity (exponent > -1) at one end.
//
// Panels are graded geometrically toward the singular end: panel k covers
// offsets [r^(k+1) L, r^k L] and is integrated with panel_points-node
// Gauss-Legendre (bisected when a lower-order check disagrees). The piece
// left between the last panel and the singular end is integrated after
// the substitution s = w v^q with q = 1/(p+1), which removes a pure s^p
// factor; p is endpoint_exponent when supplied, otherwise it is probed
// from two samples near the end. Grading stops once that remainder
// estimate agrees with the next panel plus the next remainder.
//
// Throws QuadratureBudgetExceeded past cfg.max_panels and NonFiniteValue
// if the integrand returns inf/NaN. The singular end itself is never
// sampled.
QuadResult integrate_singular(const OffsetIntegrand& integrand, double lo, double hi,
                              SingularEnd singular_end, const QuadConfig& cfg = {},
                              std::optional<double> endpoint_exponent = std::nullopt);

QuadResult integrate_singular(const ScalarFn& integrand, double lo, double hi,
                              SingularEnd singular_end, const QuadConfig& cfg = {},
                              std::optional<double> endpoint_exponent = std::nullopt);

// Panels accepted by one adaptive run, as offsets from the singular end
// (from lo when there is none) scaled by the interval length. Reapplying a
// layout to a family of nearby integrals gives results that vary smoothly
// with the family parameter, which numerical differentiation needs.
struct PanelLayout {
    std::vector<std::pair<double, double>> panels;
    double remainder = 0.0; // scaled width of the substituted end piece
    SingularEnd end = SingularEnd::none;
    int points = 30;
    // End exponent used for the remainder; probed when not supplied.
    double exponent = std::numeric_limits<double>::quiet_NaN();
};

// integrate_singular that also records its panel layout.
QuadResult integrate_singular_recorded(const OffsetIntegrand& integrand, double lo, double hi,
                                       SingularEnd singular_end, const QuadConfig& cfg,
                                       std::optional<double> endpoint_exponent, PanelLayout& layout);

// Applies a recorded layout to [lo, hi]; endpoint_exponent drives the end
// piece substitution as in integrate_singular.
double integrate_with_layout(const OffsetIntegrand& integrand, double lo, double hi,
                             const PanelLayout& layout, std::optional<double> endpoint_exponent);

// Gauss-Legendre nodes and weights on [-1, 1], cached per size.
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
const GaussRule& gauss_legendre(int points);

} // namespace varfrac
