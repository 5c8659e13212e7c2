#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "varfrac/func_approx.hpp"
#include "varfrac/operators.hpp"
#include "varfrac/quadrature.hpp"

namespace varfrac {

// Orders and weights of the i-th combined derivative; both orders lie in
// the band (i - 1, i).
struct OrderTriple {
    VarOrder alpha;
    VarOrder beta;
    CombineWeights weights;
};

// (t, x(t), combined derivatives 1..n, optional x(t - sigma)).
struct ArgumentBundle {
    double t = 0.0;
    double x = 0.0;
    std::vector<double> combined_derivs;
    std::optional<double> delayed_x;
};

using BundleFn = std::function<double(const ArgumentBundle&)>;
using TerminalFn = std::function<double(double T, double xT)>;

struct TerminalCost {
    TerminalFn phi;
    TerminalFn d1phi;
    TerminalFn d2phi;
};

struct DelaySpec {
    double sigma = 1.0;
    ScalarFn history; // prescribed x on [a - sigma, a]
};

struct VariationalProblem {
    double a = 0.0;
    double b = 1.0;
    int n = 1;
    std::vector<OrderTriple> orders;
    BundleFn lagrangian;
    // Partial derivatives of L by argument position: entry 0 is the
    // derivative in x (position 2), entry i the one in the i-th combined
    // derivative, and with a delay a final entry for x(t - sigma).
    std::vector<BundleFn> partials;
    TerminalCost terminal;
    // x(a), x'(a), ..., x^(n-1)(a); may be empty for delay problems, whose
    // initial data come from the history.
    std::vector<double> initial_values;
    std::optional<DelaySpec> delay;

    void validate() const;
    // Partial by argument position, 2 <= position <= n + 2 (n + 3 with delay).
    const BundleFn& partial(int position) const;
};

struct Candidate {
    FuncApprox curve; // on [a, b]
    double T = 1.0;
};

// Sign of the gamma2 boundary coefficient of the h^(j)(T) terms: stated is
// (-1)^(j+1), alternate is (-1)^i.
enum class TransversalitySign { stated, alternate };

struct ResidualOptions {
    QuadConfig quad;
    LocalDiffConfig diff;
    double tolerance = 1e-6;
    int grid_points = 41;
    // Composite partials are interpolated piecewise: Chebyshev points per
    // piece and the relative tolerance on the trailing coefficients.
    int partial_points = PiecewiseApprox::kDefaultPoints;
    double partial_tol = PiecewiseApprox::kDefaultTol;
    TransversalitySign sign = TransversalitySign::stated;
};

struct ConditionReport {
    std::string name;
    std::vector<double> grid;
    std::vector<double> residuals;
    double max_abs = 0.0;
    bool pass = true;
    bool reduced_accuracy = false;
};

struct ResidualReport {
    std::vector<ConditionReport> conditions;
    double functional_value = 0.0;
    double tolerance = 1e-6;
    std::map<std::string, std::string> metadata;

    bool all_pass() const;
    // Throws InvalidArgument for an unknown name.
    const ConditionReport& condition(const std::string& name) const;
};

// Throws InvalidArgument when the candidate misses the initial data or the
// history by more than 1e-9, or T lies outside (a, b].
void validate_candidate(const VariationalProblem& p, const Candidate& c);

ArgumentBundle argument_bundle(const VariationalProblem& p, const Candidate& c, double t,
                               const QuadConfig& cfg = {});

// Integral of L along the candidate over [a, T] plus the terminal cost.
double functional_value(const VariationalProblem& p, const Candidate& c, const QuadConfig& cfg = {});

// Euler-Lagrange residual on [a, T]; with a delay, the advanced term
// partial_4 L(t + sigma) is included when t + sigma <= T.
double euler_lagrange_residual_inner(const VariationalProblem& p, const Candidate& c, double t,
                                     const ResidualOptions& opts = {});
// Euler-Lagrange residual on [T, b].
double euler_lagrange_residual_outer(const VariationalProblem& p, const Candidate& c, double t,
                                     const ResidualOptions& opts = {});

// Ordered as: natural condition, the n conditions at T (j = 0..n-1), then
// the n conditions at b (j = 0..n-1). The conditions at b are zero when
// T = b.
std::vector<double> transversality_residuals(const VariationalProblem& p, const Candidate& c,
                                             const ResidualOptions& opts = {});

// Full report for a problem without delay.
ResidualReport optimality_residuals(const VariationalProblem& p, const Candidate& c,
                                    const ResidualOptions& opts = {});

// Full report for a delay problem (n = 1). metadata["branch"] is
// "sigma >= T - a" or "sigma < T - a".
ResidualReport delay_residuals(const VariationalProblem& p, const Candidate& c,
                               const ResidualOptions& opts = {});

enum class IbpSide { left, right };

struct IbpOptions {
    QuadConfig quad{1e-12, 1e-12};
    LocalDiffConfig diff;
    // For n >= 2 the adjoint integrand is not integrable at the far end;
    // both sides of the classical integration by parts are then taken up
    // to a distance truncation * (b - a) from it.
    double truncation = 1e-6;
    TransversalitySign sign = TransversalitySign::stated;
};

struct IbpResult {
    double lhs = 0.0;
    double rhs = 0.0;
    double gap = 0.0;
    double boundary = 0.0; // bracket part of rhs
};

// Fractional integration by parts:
//   left:  int y * (left Caputo x)  = int x * (right RL deriv y)
//          + [sum_k (-1)^k x^(n-1-k) d^k (right RL integral of y)]_a^b
//   right: int y * (right Caputo x) = int x * (left RL deriv y)
//          + [sum_k (-1)^(n+k) x^(n-1-k) d^k (left RL integral of y)]_a^b
// Both integral orders are n - alpha.
IbpResult ibp_check(const FuncApprox& x, const FuncApprox& y, const VarOrder& alpha, double a,
                    double b, int n, IbpSide side, const IbpOptions& opts = {});

} // namespace varfrac
