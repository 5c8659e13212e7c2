#pragma once

#include <functional>
#include <memory>
#include <string>

#include "varfrac/func_approx.hpp"
#include "varfrac/quadrature.hpp"

namespace varfrac {

using OrderFn = std::function<double(double t, double tau)>;

// Variable fractional order alpha(t, tau) whose values lie strictly inside
// the band (band_n - 1, band_n) on [lo, hi]^2.
class VarOrder {
public:
    static constexpr int kGridSize = 64;

    // Samples the order at the 64 x 64 cell midpoints of [lo, hi]^2 and
    // throws InvalidArgument if any value leaves the open band. Midpoints
    // keep orders such as t^2/2, which touch the band edge only on the
    // boundary, admissible.
    VarOrder(OrderFn fn, int band_n, double lo, double hi);

    double operator()(double t, double tau) const { return fn_(t, tau); }
    const OrderFn& fn() const { return fn_; }
    int band() const { return band_n_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }

private:
    OrderFn fn_;
    int band_n_;
    double lo_;
    double hi_;
};

struct CombineWeights {
    double gamma1 = 1.0;
    double gamma2 = 0.0;

    void validate() const;
};

struct OperatorValue {
    double value = 0.0;
    double error = 0.0;
    // Set when the RL-derivative refinement did not settle below its
    // threshold.
    bool reduced_accuracy = false;
};

// Settings for derivatives of RL integrals taken on a local Chebyshev
// interpolant.
struct LocalDiffConfig {
    int points = 129;
    double refine_threshold = 1e-6;
};

// A fractional operator already applied to its input: t -> value. Results
// are memoized behind a mutex, so copies share one cache and may be
// evaluated from several threads.
//
// Operators with a single base point (a for left, b for right) can also be
// evaluated by distance from that base. Near the base this avoids the
// rounding of t itself, which dominates once |t - base| is a few ulps of t.
class FractionalFn {
public:
    // Receives t and, for based operators, the exact distance |t - base|.
    using Evaluator = std::function<OperatorValue(double t, double distance)>;

    enum class BaseSide { none, lo, hi };

    FractionalFn(std::string name, double lo, double hi, Evaluator eval,
                 BaseSide base = BaseSide::none);

    double operator()(double t) const { return evaluate(t).value; }
    OperatorValue evaluate(double t) const;
    // Throws InvalidArgument for operators without a base.
    OperatorValue evaluate_from_base(double distance) const;

    const std::string& name() const;
    double lo() const;
    double hi() const;
    BaseSide base() const;

private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
};

FractionalFn left_caputo(const FuncApprox& x, const VarOrder& alpha, double a, int n,
                         const QuadConfig& cfg = {});
FractionalFn right_caputo(const FuncApprox& x, const VarOrder& alpha, double b, int n,
                          const QuadConfig& cfg = {});

// Caputo derivatives of a function known through its n-th derivative,
// given by distance u from the base: u -> x^(n)(a + u) (left) or
// x^(n)(b - u) (right). The derivative may carry an integrable algebraic
// singularity at the base, as for x = (t - a)^g with n - 1 < g < n; the
// kernel integral is split in half and each half graded toward its end.
FractionalFn left_caputo_from_derivative(ScalarFn nth_derivative, const VarOrder& alpha, double a,
                                         double hi, int n, const QuadConfig& cfg = {});
FractionalFn right_caputo_from_derivative(ScalarFn nth_derivative, const VarOrder& alpha, double lo,
                                          double b, int n, const QuadConfig& cfg = {});

FractionalFn left_rl_integral(const FuncApprox& x, const VarOrder& alpha, double a,
                              const QuadConfig& cfg = {});
FractionalFn right_rl_integral(const FuncApprox& x, const VarOrder& alpha, double b,
                               const QuadConfig& cfg = {});

// RL derivatives as n-th derivatives of the order-(n - alpha) RL integral.
FractionalFn left_rl_derivative(const FuncApprox& x, const VarOrder& alpha, double a, int n,
                                const QuadConfig& cfg = {}, const LocalDiffConfig& diff = {});
FractionalFn right_rl_derivative(const FuncApprox& x, const VarOrder& alpha, double b, int n,
                                 const QuadConfig& cfg = {}, const LocalDiffConfig& diff = {});
FractionalFn left_rl_derivative(const PiecewiseApprox& x, const VarOrder& alpha, double a, int n,
                                const QuadConfig& cfg = {}, const LocalDiffConfig& diff = {});
FractionalFn right_rl_derivative(const PiecewiseApprox& x, const VarOrder& alpha, double b, int n,
                                 const QuadConfig& cfg = {}, const LocalDiffConfig& diff = {});

FractionalFn combined_caputo(const FuncApprox& x, const VarOrder& alpha, const VarOrder& beta,
                             const CombineWeights& w, double a, double b, int n,
                             const QuadConfig& cfg = {});
FractionalFn combined_rl(const FuncApprox& x, const VarOrder& alpha, const VarOrder& beta,
                         const CombineWeights& w, double a, double b, int n,
                         const QuadConfig& cfg = {}, const LocalDiffConfig& diff = {});

// gamma2 * left RL derivative of order beta (base a)
//   + gamma1 * right RL derivative of order alpha with upper base T.
FractionalFn dual_operator(const FuncApprox& f, const VarOrder& alpha, const VarOrder& beta,
                           const CombineWeights& w, double a, double T, const QuadConfig& cfg = {},
                           const LocalDiffConfig& diff = {});
FractionalFn dual_operator(const PiecewiseApprox& f, const VarOrder& alpha, const VarOrder& beta,
                           const CombineWeights& w, double a, double T, const QuadConfig& cfg = {},
                           const LocalDiffConfig& diff = {});

namespace detail {

// RL integrals with an arbitrary kernel order q and integrand x, evaluated
// at distance d from the base:
//   left,  t = a + d: int_a^t (t - tau)^(q(t,tau) - 1) x(tau) / Gamma(q(t,tau)) dtau
//   right, t = b - d: int_t^b (tau - t)^(q(tau,t) - 1) x(tau) / Gamma(q(tau,t)) dtau
QuadResult rl_integral_left(const ScalarFn& x, const OrderFn& q, double a, double d,
                            const QuadConfig& cfg);
QuadResult rl_integral_right(const ScalarFn& x, const OrderFn& q, double b, double d,
                             const QuadConfig& cfg);

// The integrals above as functions of the distance, all evaluated with the
// panel layout chosen adaptively at distance d. Smooth in the distance, for
// numerical differentiation around d.
ScalarFn rl_family_left(const ScalarFn& x, const OrderFn& q, double a, double d, const QuadConfig& cfg);
ScalarFn rl_family_right(const ScalarFn& x, const OrderFn& q, double b, double d, const QuadConfig& cfg);

// k-th derivative in d, at distance d from a base, of a function F of the
// distance that is smooth for 0 < d < limit. F is sampled on Chebyshev
// points of [d/2, min(3d/2, d + (limit - d)/2)].
OperatorValue local_derivative(const ScalarFn& F, double d, int k, double limit,
                               const LocalDiffConfig& diff);

// k-th derivative at t in [lo, hi] of the Chebyshev interpolant of F on
// [lo, hi], with the nested coarse check and one doubling.
OperatorValue interval_derivative(const ScalarFn& F, double lo, double hi, double t, int k,
                                  const LocalDiffConfig& diff);

} // namespace detail

} // namespace varfrac
