#include "varfrac/operators.hpp"

#include <cmath>
#include <algorithm>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "varfrac/error.hpp"
#include "varfrac/special.hpp"

namespace varfrac {

VarOrder::VarOrder(OrderFn fn, int band_n, double lo, double hi)
    : fn_(std::move(fn)), band_n_(band_n), lo_(lo), hi_(hi)
{
    if (!fn_)
        throw InvalidArgument("VarOrder: empty order function");
    if (band_n_ < 1)
        throw InvalidArgument("VarOrder: band must be a positive integer");
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi))
        throw InvalidArgument("VarOrder: domain must satisfy lo < hi");

    const double h = (hi - lo) / kGridSize;
    for (int i = 0; i < kGridSize; ++i) {
        const double t = lo + (i + 0.5) * h;
        for (int j = 0; j < kGridSize; ++j) {
            const double tau = lo + (j + 0.5) * h;
            const double v = fn_(t, tau);
            if (!(v > band_n_ - 1 && v < band_n_))
                throw InvalidArgument("VarOrder: order " + std::to_string(v) + " at (t, tau) = (" +
                                      std::to_string(t) + ", " + std::to_string(tau) +
                                      ") leaves the band (" + std::to_string(band_n_ - 1) + ", " +
                                      std::to_string(band_n_) + ")");
        }
    }
}

void CombineWeights::validate() const
{
    if (!(gamma1 >= 0.0 && gamma1 <= 1.0 && gamma2 >= 0.0 && gamma2 <= 1.0))
        throw InvalidArgument("CombineWeights: both weights must lie in [0, 1]");
}

struct FractionalFn::Impl {
    std::string name;
    double lo;
    double hi;
    Evaluator eval;
    BaseSide base;
    std::mutex mutex;
    std::unordered_map<double, OperatorValue> memo;

    OperatorValue cached(double key, double t, double distance)
    {
        {
            std::lock_guard lock(mutex);
            if (auto it = memo.find(key); it != memo.end())
                return it->second;
        }
        const OperatorValue v = eval(t, distance);
        std::lock_guard lock(mutex);
        memo.emplace(key, v);
        return v;
    }
};

FractionalFn::FractionalFn(std::string name, double lo, double hi, Evaluator eval, BaseSide base)
    : impl_(std::make_shared<Impl>())
{
    impl_->name = std::move(name);
    impl_->lo = lo;
    impl_->hi = hi;
    impl_->eval = std::move(eval);
    impl_->base = base;
}

OperatorValue FractionalFn::evaluate(double t) const
{
    if (!(t >= impl_->lo && t <= impl_->hi))
        throw DomainError(impl_->name + ": t = " + std::to_string(t) + " outside [" +
                          std::to_string(impl_->lo) + ", " + std::to_string(impl_->hi) + "]");
    switch (impl_->base) {
    case BaseSide::lo:
        return impl_->cached(t - impl_->lo, t, t - impl_->lo);
    case BaseSide::hi:
        return impl_->cached(impl_->hi - t, t, impl_->hi - t);
    default:
        return impl_->cached(t, t, 0.0);
    }
}

OperatorValue FractionalFn::evaluate_from_base(double distance) const
{
    const double length = impl_->hi - impl_->lo;
    if (!(distance >= 0.0 && distance <= length))
        throw DomainError(impl_->name + ": distance " + std::to_string(distance) +
                          " outside [0, " + std::to_string(length) + "]");
    switch (impl_->base) {
    case BaseSide::lo:
        return impl_->cached(distance, impl_->lo + distance, distance);
    case BaseSide::hi:
        return impl_->cached(distance, impl_->hi - distance, distance);
    default:
        throw InvalidArgument(impl_->name + ": operator has no single base point");
    }
}

const std::string& FractionalFn::name() const { return impl_->name; }
double FractionalFn::lo() const { return impl_->lo; }
double FractionalFn::hi() const { return impl_->hi; }
FractionalFn::BaseSide FractionalFn::base() const { return impl_->base; }

namespace detail {

namespace {

enum class Mode { adaptive, record, replay };

struct SplitLayout {
    PanelLayout near;
    PanelLayout far;
};

QuadResult one_half(const OffsetIntegrand& integrand, double lo, double hi, SingularEnd end,
                    std::optional<double> hint, const QuadConfig& cfg, Mode mode, PanelLayout* layout)
{
    switch (mode) {
    case Mode::record:
        return integrate_singular_recorded(integrand, lo, hi, end, cfg, hint, *layout);
    case Mode::replay:
        return {integrate_with_layout(integrand, lo, hi, *layout, hint), 0.0, 0};
    default:
        return integrate_singular(integrand, lo, hi, end, cfg, hint);
    }
}

// RL kernel integral over the distance s in [0, d] from the evaluation
// point, split in half: the near half is graded toward the kernel
// singularity at s = 0, the far half toward the base, where x itself may
// be singular. integrand(s, base_offset) receives d - s as the offset.
QuadResult rl_integral(const std::function<double(double s, double base_offset)>& integrand, double edge,
                       double d, const QuadConfig& cfg, Mode mode, SplitLayout* layout)
{
    const SingularEnd end = edge >= 1.0 ? SingularEnd::none : SingularEnd::lo;
    const std::optional<double> hint = edge >= 1.0 ? std::nullopt : std::optional<double>(edge - 1.0);
    const double half = 0.5 * d;
    const OffsetIntegrand near = [&](double s, double) { return integrand(s, d - s); };
    const OffsetIntegrand far = [&](double, double offset) { return integrand(d - offset, offset); };
    QuadConfig part = cfg;
    part.abs_tol *= 0.5;
    const auto a = one_half(near, 0.0, half, end, hint, part, mode, layout ? &layout->near : nullptr);
    const auto b = one_half(far, half, d, SingularEnd::hi, std::nullopt, part, mode,
                            layout ? &layout->far : nullptr);
    return {a.value + b.value, a.error + b.error, a.panels + b.panels};
}

QuadResult left_impl(const ScalarFn& x, const OrderFn& q, double a, double d, const QuadConfig& cfg,
                     Mode mode, SplitLayout* layout)
{
    if (!(d > 0.0))
        return {};
    const double t = a + d;
    // s = t - tau is the distance from t; the offset d - s = tau - a.
    const auto integrand = [&](double s, double offset) {
        const double tau = a + offset;
        const double order = q(t, tau);
        return std::pow(s, order - 1.0) * x(tau) * special::rgamma(order);
    };
    return rl_integral(integrand, q(t, t), d, cfg, mode, layout);
}

QuadResult right_impl(const ScalarFn& x, const OrderFn& q, double b, double d, const QuadConfig& cfg,
                      Mode mode, SplitLayout* layout)
{
    if (!(d > 0.0))
        return {};
    const double t = b - d;
    const auto integrand = [&](double s, double offset) {
        const double tau = b - offset;
        const double order = q(tau, t);
        return std::pow(s, order - 1.0) * x(tau) * special::rgamma(order);
    };
    return rl_integral(integrand, q(t, t), d, cfg, mode, layout);
}

} // namespace

QuadResult rl_integral_left(const ScalarFn& x, const OrderFn& q, double a, double d,
                            const QuadConfig& cfg)
{
    return left_impl(x, q, a, d, cfg, Mode::adaptive, nullptr);
}

QuadResult rl_integral_right(const ScalarFn& x, const OrderFn& q, double b, double d,
                             const QuadConfig& cfg)
{
    return right_impl(x, q, b, d, cfg, Mode::adaptive, nullptr);
}

ScalarFn rl_family_left(const ScalarFn& x, const OrderFn& q, double a, double d, const QuadConfig& cfg)
{
    auto layout = std::make_shared<SplitLayout>();
    left_impl(x, q, a, d, cfg, Mode::record, layout.get());
    return [=](double s) { return left_impl(x, q, a, s, cfg, Mode::replay, layout.get()).value; };
}

ScalarFn rl_family_right(const ScalarFn& x, const OrderFn& q, double b, double d, const QuadConfig& cfg)
{
    auto layout = std::make_shared<SplitLayout>();
    right_impl(x, q, b, d, cfg, Mode::record, layout.get());
    return [=](double s) { return right_impl(x, q, b, s, cfg, Mode::replay, layout.get()).value; };
}

OperatorValue local_derivative(const ScalarFn& F, double d, int k, double limit,
                               const LocalDiffConfig& diff)
{
    if (!(d > 0.0))
        throw DomainError("local_derivative: evaluation point coincides with the operator base");
    // Stay clear of both the base and the end of the domain of x, where F
    // inherits any endpoint singularity of x.
    const double lo = 0.5 * d;
    const double hi = std::min(1.5 * d, d + 0.5 * std::max(limit - d, 0.0));
    if (!(hi > lo))
        throw DomainError("local_derivative: empty sampling interval");
    return interval_derivative(F, lo, hi, d, k, diff);
}

OperatorValue interval_derivative(const ScalarFn& F, double lo, double hi, double t, int k,
                                  const LocalDiffConfig& diff)
{
    if (diff.points < 5 || diff.points % 2 == 0)
        throw InvalidArgument("interval_derivative: point count must be odd and >= 5");
    if (!(hi > lo) || t < lo || t > hi)
        throw DomainError("interval_derivative: t outside the sampling interval");
    auto derivative_at = [&](const std::vector<double>& values) {
        return FuncApprox::from_values(values, lo, hi).derivative(k).eval(t);
    };

    const std::size_t fine_count = static_cast<std::size_t>(diff.points);
    const auto fine_pts = FuncApprox::chebyshev_points(fine_count, lo, hi);
    std::vector<double> fine(fine_count);
    for (std::size_t j = 0; j < fine_count; ++j)
        fine[j] = F(fine_pts[j]);
    std::vector<double> coarse;
    for (std::size_t j = 0; j < fine_count; j += 2)
        coarse.push_back(fine[j]);

    const double d_fine = derivative_at(fine);
    const double d_coarse = derivative_at(coarse);
    const double change = std::abs(d_fine - d_coarse);
    if (change <= diff.refine_threshold * std::max(1.0, std::abs(d_fine)))
        return {d_fine, change, false};

    // Double once, reusing the existing samples at even indices.
    const std::size_t finer_count = 2 * fine_count - 1;
    const auto finer_pts = FuncApprox::chebyshev_points(finer_count, lo, hi);
    std::vector<double> finer(finer_count);
    for (std::size_t j = 0; j < finer_count; ++j)
        finer[j] = (j % 2 == 0) ? fine[j / 2] : F(finer_pts[j]);
    const double d_finer = derivative_at(finer);
    const double shift = std::abs(d_finer - d_fine);
    return {d_finer, shift, shift > diff.refine_threshold * std::max(1.0, std::abs(d_finer))};
}

} // namespace detail

namespace {

using BaseSide = FractionalFn::BaseSide;

void require_band(const VarOrder& order, int n, const char* who)
{
    if (n < 1)
        throw InvalidArgument(std::string(who) + ": n must be a positive integer");
    if (order.band() != n)
        throw InvalidArgument(std::string(who) + ": order band " + std::to_string(order.band()) +
                              " does not match n = " + std::to_string(n));
}

void require_base(double lo, double hi, double base, const char* who)
{
    const double slack = 1e-12 * (hi - lo);
    if (base < lo - slack || base > hi + slack)
        throw DomainError(std::string(who) + ": base point outside the domain of x");
}

void require_base(const FuncApprox& x, double base, const char* who)
{
    require_base(x.lo(), x.hi(), base, who);
}

double sign_power(int n) { return n % 2 == 0 ? 1.0 : -1.0; }

// Inner quadratures feeding a differentiated interpolant run tighter.
QuadConfig tightened(QuadConfig cfg)
{
    cfg.abs_tol = std::max(1e-15, cfg.abs_tol * 1e-3);
    cfg.rel_tol = std::max(5e-14, cfg.rel_tol * 1e-3);
    cfg.max_panels *= 4;
    return cfg;
}

FractionalFn weighted_sum(std::string name, double lo, double hi, double w1,
                          std::optional<FractionalFn> f1, double w2, std::optional<FractionalFn> f2)
{
    return FractionalFn(std::move(name), lo, hi, [=](double t, double) {
        OperatorValue out;
        if (f1 && w1 != 0.0) {
            const auto v = f1->evaluate(t);
            out.value += w1 * v.value;
            out.error += w1 * v.error;
            out.reduced_accuracy = out.reduced_accuracy || v.reduced_accuracy;
        }
        if (f2 && w2 != 0.0) {
            const auto v = f2->evaluate(t);
            out.value += w2 * v.value;
            out.error += w2 * v.error;
            out.reduced_accuracy = out.reduced_accuracy || v.reduced_accuracy;
        }
        return out;
    });
}

} // namespace

FractionalFn left_caputo(const FuncApprox& x, const VarOrder& alpha, double a, int n,
                         const QuadConfig& cfg)
{
    require_band(alpha, n, "left_caputo");
    require_base(x, a, "left_caputo");
    cfg.validate();
    auto dx = std::make_shared<const FuncApprox>(x.derivative(n));
    const OrderFn order = alpha.fn();
    return FractionalFn(
        "left_caputo", a, x.hi(),
        [=](double t, double d) -> OperatorValue {
            if (!(d > 0.0))
                return {};
            const OffsetIntegrand integrand = [&](double s, double) {
                const double tau = t - s;
                const double al = order(t, tau);
                return std::pow(s, n - 1 - al) * dx->eval(tau) * special::rgamma(n - al);
            };
            const auto r =
                integrate_singular(integrand, 0.0, d, SingularEnd::lo, cfg, n - 1 - order(t, t));
            return {r.value, r.error, false};
        },
        BaseSide::lo);
}

FractionalFn right_caputo(const FuncApprox& x, const VarOrder& alpha, double b, int n,
                          const QuadConfig& cfg)
{
    require_band(alpha, n, "right_caputo");
    require_base(x, b, "right_caputo");
    cfg.validate();
    auto dx = std::make_shared<const FuncApprox>(x.derivative(n));
    const OrderFn order = alpha.fn();
    const double sign = sign_power(n);
    return FractionalFn(
        "right_caputo", x.lo(), b,
        [=](double t, double d) -> OperatorValue {
            if (!(d > 0.0))
                return {};
            const OffsetIntegrand integrand = [&](double s, double) {
                const double tau = t + s;
                const double al = order(tau, t);
                return std::pow(s, n - 1 - al) * dx->eval(tau) * special::rgamma(n - al);
            };
            const auto r =
                integrate_singular(integrand, 0.0, d, SingularEnd::lo, cfg, n - 1 - order(t, t));
            return {sign * r.value, r.error, false};
        },
        BaseSide::hi);
}

namespace {

// Kernel integral over s in [0, d] where s = 0 is the kernel end and s = d
// the base, split at d / 2.
OperatorValue two_ended(const std::function<double(double s, double u)>& integrand, double d,
                        double kernel_exponent, const QuadConfig& cfg)
{
    if (!(d > 0.0))
        return {};
    const double mid = d / 2;
    const OffsetIntegrand near = [&](double s, double) { return integrand(s, d - s); };
    const OffsetIntegrand far = [&](double s, double u) { return integrand(s, u); };
    const auto r1 = integrate_singular(near, 0.0, mid, SingularEnd::lo, cfg, kernel_exponent);
    const auto r2 = integrate_singular(far, mid, d, SingularEnd::hi, cfg);
    return {r1.value + r2.value, r1.error + r2.error, false};
}

} // namespace

FractionalFn left_caputo_from_derivative(ScalarFn nth_derivative, const VarOrder& alpha, double a,
                                         double hi, int n, const QuadConfig& cfg)
{
    require_band(alpha, n, "left_caputo_from_derivative");
    cfg.validate();
    if (!(a < hi))
        throw InvalidArgument("left_caputo_from_derivative: need a < hi");
    const OrderFn order = alpha.fn();
    return FractionalFn(
        "left_caputo", a, hi,
        [=](double t, double d) {
            return two_ended(
                [&](double s, double u) {
                    const double al = order(t, a + u);
                    return std::pow(s, n - 1 - al) * nth_derivative(u) * special::rgamma(n - al);
                },
                d, n - 1 - order(t, t), cfg);
        },
        BaseSide::lo);
}

FractionalFn right_caputo_from_derivative(ScalarFn nth_derivative, const VarOrder& alpha, double lo,
                                          double b, int n, const QuadConfig& cfg)
{
    require_band(alpha, n, "right_caputo_from_derivative");
    cfg.validate();
    if (!(lo < b))
        throw InvalidArgument("right_caputo_from_derivative: need lo < b");
    const OrderFn order = alpha.fn();
    const double sign = sign_power(n);
    return FractionalFn(
        "right_caputo", lo, b,
        [=](double t, double d) {
            auto v = two_ended(
                [&](double s, double u) {
                    const double al = order(b - u, t);
                    return std::pow(s, n - 1 - al) * nth_derivative(u) * special::rgamma(n - al);
                },
                d, n - 1 - order(t, t), cfg);
            v.value *= sign;
            return v;
        },
        BaseSide::hi);
}

FractionalFn left_rl_integral(const FuncApprox& x, const VarOrder& alpha, double a,
                              const QuadConfig& cfg)
{
    require_base(x, a, "left_rl_integral");
    cfg.validate();
    auto xp = std::make_shared<const FuncApprox>(x);
    const OrderFn order = alpha.fn();
    return FractionalFn(
        "left_rl_integral", a, x.hi(),
        [=](double, double d) -> OperatorValue {
            const auto r = detail::rl_integral_left([&](double tau) { return xp->eval(tau); },
                                                    order, a, d, cfg);
            return {r.value, r.error, false};
        },
        BaseSide::lo);
}

FractionalFn right_rl_integral(const FuncApprox& x, const VarOrder& alpha, double b,
                               const QuadConfig& cfg)
{
    require_base(x, b, "right_rl_integral");
    cfg.validate();
    auto xp = std::make_shared<const FuncApprox>(x);
    const OrderFn order = alpha.fn();
    return FractionalFn(
        "right_rl_integral", x.lo(), b,
        [=](double, double d) -> OperatorValue {
            const auto r = detail::rl_integral_right([&](double tau) { return xp->eval(tau); },
                                                     order, b, d, cfg);
            return {r.value, r.error, false};
        },
        BaseSide::hi);
}

namespace {

FractionalFn left_rl_derivative_of(ScalarFn xf, double x_lo, double x_hi, const VarOrder& alpha,
                                   double a, int n, const QuadConfig& cfg, const LocalDiffConfig& diff)
{
    require_band(alpha, n, "left_rl_derivative");
    require_base(x_lo, x_hi, a, "left_rl_derivative");
    cfg.validate();
    const OrderFn alpha_fn = alpha.fn();
    const OrderFn q = [alpha_fn, n](double t, double tau) { return n - alpha_fn(t, tau); };
    const QuadConfig inner = tightened(cfg);
    const double limit = x_hi - a;
    return FractionalFn(
        "left_rl_derivative", a, x_hi,
        [=](double, double d) {
            const ScalarFn F = detail::rl_family_left(xf, q, a, d, inner);
            return detail::local_derivative(F, d, n, limit, diff);
        },
        BaseSide::lo);
}

FractionalFn right_rl_derivative_of(ScalarFn xf, double x_lo, double x_hi, const VarOrder& alpha,
                                    double b, int n, const QuadConfig& cfg, const LocalDiffConfig& diff)
{
    require_band(alpha, n, "right_rl_derivative");
    require_base(x_lo, x_hi, b, "right_rl_derivative");
    cfg.validate();
    const OrderFn alpha_fn = alpha.fn();
    const OrderFn q = [alpha_fn, n](double u, double v) { return n - alpha_fn(u, v); };
    const QuadConfig inner = tightened(cfg);
    const double limit = b - x_lo;
    return FractionalFn(
        "right_rl_derivative", x_lo, b,
        [=](double, double d) {
            const ScalarFn F = detail::rl_family_right(xf, q, b, d, inner);
            // d/dt = -d/dd, which cancels the (-1)^n of the definition.
            return detail::local_derivative(F, d, n, limit, diff);
        },
        BaseSide::hi);
}

template <typename X>
ScalarFn shared_eval(const X& x)
{
    auto xp = std::make_shared<const X>(x);
    return [xp](double t) { return xp->eval(t); };
}

template <typename X>
FractionalFn dual_operator_of(const X& f, const VarOrder& alpha, const VarOrder& beta,
                              const CombineWeights& w, double a, double T, const QuadConfig& cfg,
                              const LocalDiffConfig& diff)
{
    w.validate();
    if (alpha.band() != beta.band())
        throw InvalidArgument("dual_operator: alpha and beta bands differ");
    if (!(T > a))
        throw InvalidArgument("dual_operator: need T > a");
    require_base(f.lo(), f.hi(), T, "dual_operator");
    const int n = alpha.band();
    std::optional<FractionalFn> left;
    std::optional<FractionalFn> right;
    if (w.gamma2 != 0.0)
        left = left_rl_derivative(f, beta, a, n, cfg, diff);
    if (w.gamma1 != 0.0)
        right = right_rl_derivative(f, alpha, T, n, cfg, diff);
    return weighted_sum("dual_operator", a, T, w.gamma2, left, w.gamma1, right);
}

} // namespace

FractionalFn left_rl_derivative(const FuncApprox& x, const VarOrder& alpha, double a, int n,
                                const QuadConfig& cfg, const LocalDiffConfig& diff)
{
    return left_rl_derivative_of(shared_eval(x), x.lo(), x.hi(), alpha, a, n, cfg, diff);
}

FractionalFn left_rl_derivative(const PiecewiseApprox& x, const VarOrder& alpha, double a, int n,
                                const QuadConfig& cfg, const LocalDiffConfig& diff)
{
    return left_rl_derivative_of(shared_eval(x), x.lo(), x.hi(), alpha, a, n, cfg, diff);
}

FractionalFn right_rl_derivative(const FuncApprox& x, const VarOrder& alpha, double b, int n,
                                 const QuadConfig& cfg, const LocalDiffConfig& diff)
{
    return right_rl_derivative_of(shared_eval(x), x.lo(), x.hi(), alpha, b, n, cfg, diff);
}

FractionalFn right_rl_derivative(const PiecewiseApprox& x, const VarOrder& alpha, double b, int n,
                                 const QuadConfig& cfg, const LocalDiffConfig& diff)
{
    return right_rl_derivative_of(shared_eval(x), x.lo(), x.hi(), alpha, b, n, cfg, diff);
}

FractionalFn combined_caputo(const FuncApprox& x, const VarOrder& alpha, const VarOrder& beta,
                             const CombineWeights& w, double a, double b, int n,
                             const QuadConfig& cfg)
{
    w.validate();
    require_band(beta, n, "combined_caputo");
    std::optional<FractionalFn> left;
    std::optional<FractionalFn> right;
    if (w.gamma1 != 0.0)
        left = left_caputo(x, alpha, a, n, cfg);
    else
        require_band(alpha, n, "combined_caputo");
    if (w.gamma2 != 0.0)
        right = right_caputo(x, beta, b, n, cfg);
    return weighted_sum("combined_caputo", a, b, w.gamma1, left, w.gamma2, right);
}

FractionalFn combined_rl(const FuncApprox& x, const VarOrder& alpha, const VarOrder& beta,
                         const CombineWeights& w, double a, double b, int n, const QuadConfig& cfg,
                         const LocalDiffConfig& diff)
{
    w.validate();
    require_band(alpha, n, "combined_rl");
    require_band(beta, n, "combined_rl");
    std::optional<FractionalFn> left;
    std::optional<FractionalFn> right;
    if (w.gamma1 != 0.0)
        left = left_rl_derivative(x, alpha, a, n, cfg, diff);
    if (w.gamma2 != 0.0)
        right = right_rl_derivative(x, beta, b, n, cfg, diff);
    return weighted_sum("combined_rl", a, b, w.gamma1, left, w.gamma2, right);
}

FractionalFn dual_operator(const FuncApprox& f, const VarOrder& alpha, const VarOrder& beta,
                           const CombineWeights& w, double a, double T, const QuadConfig& cfg,
                           const LocalDiffConfig& diff)
{
    return dual_operator_of(f, alpha, beta, w, a, T, cfg, diff);
}

FractionalFn dual_operator(const PiecewiseApprox& f, const VarOrder& alpha, const VarOrder& beta,
                           const CombineWeights& w, double a, double T, const QuadConfig& cfg,
                           const LocalDiffConfig& diff)
{
    return dual_operator_of(f, alpha, beta, w, a, T, cfg, diff);
}

} // namespace varfrac
