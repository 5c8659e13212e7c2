#include "varfrac/variational.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "varfrac/error.hpp"
#include "varfrac/parallel.hpp"
#include "varfrac/special.hpp"

namespace varfrac {

namespace {

constexpr double kConstraintTol = 1e-9;

double sign_of(int power) { return power % 2 == 0 ? 1.0 : -1.0; }

std::vector<double> residual_grid(double lo, double hi, int count)
{
    std::vector<double> grid;
    if (!(hi > lo))
        return grid;
    for (int j = 0; j < count; ++j)
        grid.push_back(lo + (j + 0.5) * (hi - lo) / count);
    return grid;
}

class Pipeline {
public:
    Pipeline(const VariationalProblem& p, const Candidate& c, const ResidualOptions& o)
        : p_(p), c_(c), o_(o)
    {
        p_.validate();
        validate_candidate(p_, c_);
        if (o_.grid_points < 1)
            throw InvalidArgument("residual grid needs at least one point");
        if (o_.partial_points < 5 || o_.partial_points % 2 == 0)
            throw InvalidArgument("partial interpolation needs an odd point count >= 5");
        if (!(o_.partial_tol > 0.0))
            throw InvalidArgument("partial interpolation tolerance must be positive");
        if (!(o_.tolerance >= 0.0))
            throw InvalidArgument("residual tolerance must be non-negative");
        for (int i = 1; i <= p_.n; ++i) {
            const auto& ord = p_.orders[static_cast<std::size_t>(i - 1)];
            derivs_.push_back(combined_caputo(c_.curve, ord.alpha, ord.beta, ord.weights, p_.a, p_.b,
                                              i, o_.quad));
        }
        composites_.resize(static_cast<std::size_t>(p_.n));
        duals_.resize(static_cast<std::size_t>(p_.n));
    }

    double T() const { return c_.T; }
    bool reduced() const { return reduced_; }

    ArgumentBundle bundle(double t) const
    {
        ArgumentBundle out;
        out.t = t;
        out.x = c_.curve.eval(t);
        for (const auto& d : derivs_)
            out.combined_derivs.push_back(d(t));
        if (p_.delay) {
            const double s = t - p_.delay->sigma;
            out.delayed_x = s < p_.a ? p_.delay->history(s) : c_.curve.eval(s);
        }
        return out;
    }

    double direct(int position, double t) const { return p_.partial(position)(bundle(t)); }

    // Interpolated partial in the i-th combined derivative, i = 1..n.
    const PiecewiseApprox& composite(int i)
    {
        auto& slot = composites_[static_cast<std::size_t>(i - 1)];
        if (!slot) {
            const BundleFn& fn = p_.partial(i + 2);
            slot = std::make_unique<PiecewiseApprox>(PiecewiseApprox::adaptive(
                [&](double t) { return fn(bundle(t)); }, p_.a, p_.b, o_.partial_tol, o_.partial_points));
            reduced_ = reduced_ || !slot->resolved();
            pieces_used_ = std::max(pieces_used_, slot->pieces());
        }
        return *slot;
    }

    std::size_t pieces_used() const { return pieces_used_; }

    double inner(double t)
    {
        double r = direct(2, t);
        for (int i = 1; i <= p_.n; ++i) {
            const auto& ord = p_.orders[static_cast<std::size_t>(i - 1)];
            if (ord.weights.gamma1 == 0.0 && ord.weights.gamma2 == 0.0)
                continue;
            auto& dual = duals_[static_cast<std::size_t>(i - 1)];
            if (!dual)
                dual = std::make_unique<FractionalFn>(dual_operator(
                    composite(i), ord.alpha, ord.beta, ord.weights, p_.a, c_.T, o_.quad, o_.diff));
            r += note(dual->evaluate(t));
        }
        if (p_.delay && t + p_.delay->sigma <= c_.T)
            r += direct(p_.n + 3, t + p_.delay->sigma);
        return r;
    }

    double outer(double t)
    {
        double r = 0.0;
        for (int i = 1; i <= p_.n; ++i) {
            const auto& ord = p_.orders[static_cast<std::size_t>(i - 1)];
            if (ord.weights.gamma2 == 0.0)
                continue;
            const PiecewiseApprox& g = composite(i);
            const double from_a =
                note(left_rl_derivative(g, ord.beta, p_.a, i, o_.quad, o_.diff).evaluate(t));
            const double from_T =
                note(left_rl_derivative(g, ord.beta, c_.T, i, o_.quad, o_.diff).evaluate(t));
            r += ord.weights.gamma2 * (from_a - from_T);
        }
        return r;
    }

    double natural() const
    {
        const double T = c_.T;
        const double xT = c_.curve.eval(T);
        const double dxT = c_.curve.derivative(1).eval(T);
        return p_.lagrangian(bundle(T)) + p_.terminal.d1phi(T, xT) + p_.terminal.d2phi(T, xT) * dxT;
    }

    // Condition at T for h^(j)(T), j = 0..n-1.
    double at_T(int j)
    {
        const double T = c_.T;
        double r = 0.0;
        for (int i = j + 1; i <= p_.n; ++i) {
            const auto& ord = p_.orders[static_cast<std::size_t>(i - 1)];
            const int k = i - 1 - j;
            const PiecewiseApprox& g = composite(i);
            const ScalarFn gf = [&g](double s) { return g.eval(s); };
            if (ord.weights.gamma1 != 0.0) {
                const OrderFn q = [alpha = ord.alpha.fn(), i](double u, double v) {
                    return i - alpha(u, v);
                };
                const ScalarFn fam = detail::rl_family_right(gf, q, T, T - p_.a, o_.quad);
                const ScalarFn R = [&](double s) { return fam(T - s); };
                const double d = k == 0 ? R(T) : note(detail::interval_derivative(R, 0.5 * (p_.a + T), T, T, k, o_.diff));
                r += ord.weights.gamma1 * sign_of(i - 1 - j) * d;
            }
            if (ord.weights.gamma2 != 0.0 && T < p_.b) {
                const OrderFn q = [beta = ord.beta.fn(), i](double u, double v) {
                    return i - beta(u, v);
                };
                const ScalarFn fam = detail::rl_family_left(gf, q, T, p_.b - T, o_.quad);
                const ScalarFn F = [&](double s) { return fam(s - T); };
                const double d = k == 0 ? F(T) : note(detail::interval_derivative(F, T, 0.5 * (T + p_.b), T, k, o_.diff));
                const double sign =
                    o_.sign == TransversalitySign::stated ? sign_of(j + 1) : sign_of(i);
                r += ord.weights.gamma2 * sign * d;
            }
        }
        if (j == 0)
            r += p_.terminal.d2phi(T, c_.curve.eval(T));
        return r;
    }

    // Condition at b for h^(j)(b), j = 0..n-1.
    double at_b(int j)
    {
        const double T = c_.T;
        if (!(T < p_.b))
            return 0.0;
        double r = 0.0;
        for (int i = j + 1; i <= p_.n; ++i) {
            const auto& ord = p_.orders[static_cast<std::size_t>(i - 1)];
            if (ord.weights.gamma2 == 0.0)
                continue;
            const int k = i - 1 - j;
            const PiecewiseApprox& g = composite(i);
            const OrderFn beta = ord.beta.fn();
            // Left integral from a minus left integral from T, as a function
            // of the distance from T: a regular integral over [a, T].
            const ScalarFn D = [&](double delta) {
                const double s = T + delta;
                const ScalarFn integrand = [&](double tau) {
                    const double q = i - beta(s, tau);
                    return std::pow(s - tau, q - 1.0) * g.eval(tau) * special::rgamma(q);
                };
                return integrate_singular(integrand, p_.a, T, SingularEnd::lo, o_.quad).value;
            };
            const double span = p_.b - T;
            const double d = k == 0 ? D(span) : note(detail::local_derivative(D, span, k, span, o_.diff));
            r += ord.weights.gamma2 * sign_of(j + 1) * d;
        }
        return r;
    }

private:
    double note(const OperatorValue& v)
    {
        reduced_ = reduced_ || v.reduced_accuracy;
        return v.value;
    }

    const VariationalProblem& p_;
    const Candidate& c_;
    const ResidualOptions& o_;
    std::vector<FractionalFn> derivs_;
    std::vector<std::unique_ptr<PiecewiseApprox>> composites_;
    std::vector<std::unique_ptr<FractionalFn>> duals_;
    bool reduced_ = false;
    std::size_t pieces_used_ = 0;
};

ConditionReport scan(Pipeline& pipe, const std::string& name, std::vector<double> grid,
                     const std::function<double(double)>& residual, double tol)
{
    ConditionReport rep;
    rep.name = name;
    rep.grid = std::move(grid);
    rep.residuals.resize(rep.grid.size());
    const bool before = pipe.reduced();
    for (std::size_t j = 0; j < rep.grid.size(); ++j)
        rep.residuals[j] = residual(rep.grid[j]);
    for (double r : rep.residuals)
        rep.max_abs = std::max(rep.max_abs, std::abs(r));
    rep.pass = rep.max_abs <= tol;
    rep.reduced_accuracy = pipe.reduced() && !before;
    return rep;
}

ConditionReport point_condition(Pipeline& pipe, const std::string& name, double at,
                                const std::function<double()>& residual, double tol)
{
    return scan(pipe, name, {at}, [&](double) { return residual(); }, tol);
}

double integrate_lagrangian(const VariationalProblem& p, const Candidate& c, const QuadConfig& cfg,
                            const std::function<ArgumentBundle(double)>& bundle)
{
    const ScalarFn integrand = [&](double t) { return p.lagrangian(bundle(t)); };
    const double mid = 0.5 * (p.a + c.T);
    const auto lo = integrate_singular(integrand, p.a, mid, SingularEnd::lo, cfg);
    const auto hi = integrate_singular(integrand, mid, c.T, SingularEnd::hi, cfg);
    return lo.value + hi.value;
}

} // namespace

void VariationalProblem::validate() const
{
    if (n < 1)
        throw InvalidArgument("problem: n must be a positive integer");
    if (!(std::isfinite(a) && std::isfinite(b) && a < b))
        throw InvalidArgument("problem: need a < b");
    if (static_cast<int>(orders.size()) != n)
        throw InvalidArgument("problem: expected " + std::to_string(n) + " order entries");
    for (int i = 1; i <= n; ++i) {
        const auto& ord = orders[static_cast<std::size_t>(i - 1)];
        if (ord.alpha.band() != i || ord.beta.band() != i)
            throw InvalidArgument("problem: orders of entry " + std::to_string(i) +
                                  " must lie in (" + std::to_string(i - 1) + ", " +
                                  std::to_string(i) + ")");
        ord.weights.validate();
    }
    if (!lagrangian)
        throw InvalidArgument("problem: missing Lagrangian");
    const std::size_t want = static_cast<std::size_t>(n + 1) + (delay ? 1 : 0);
    if (partials.size() != want)
        throw InvalidArgument("problem: expected " + std::to_string(want) + " Lagrangian partials");
    for (const auto& fn : partials)
        if (!fn)
            throw InvalidArgument("problem: empty Lagrangian partial");
    if (!terminal.phi || !terminal.d1phi || !terminal.d2phi)
        throw InvalidArgument("problem: terminal cost and both partials are required");
    if (delay) {
        if (n != 1)
            throw InvalidArgument("problem: delay problems require n = 1");
        if (!(delay->sigma > 0.0))
            throw InvalidArgument("problem: delay sigma must be positive");
        if (!delay->history)
            throw InvalidArgument("problem: delay needs a history function");
        if (!initial_values.empty() && initial_values.size() != 1)
            throw InvalidArgument("problem: delay problems take at most x(a) as initial data");
    } else if (static_cast<int>(initial_values.size()) != n) {
        throw InvalidArgument("problem: expected " + std::to_string(n) + " initial values");
    }
}

const BundleFn& VariationalProblem::partial(int position) const
{
    const int index = position - 2;
    if (index < 0 || index >= static_cast<int>(partials.size()))
        throw InvalidArgument("problem: no partial at argument position " + std::to_string(position));
    return partials[static_cast<std::size_t>(index)];
}

void validate_candidate(const VariationalProblem& p, const Candidate& c)
{
    if (!(c.T > p.a && c.T <= p.b))
        throw InvalidArgument("candidate: T must lie in (a, b]");
    const double slack = 1e-12 * (p.b - p.a);
    if (c.curve.lo() > p.a + slack || c.curve.hi() < p.b - slack)
        throw InvalidArgument("candidate: curve must be defined on [a, b]");
    FuncApprox d = c.curve;
    for (std::size_t i = 0; i < p.initial_values.size(); ++i) {
        if (i > 0)
            d = d.derivative(1);
        const double want = p.initial_values[i];
        if (std::abs(d.eval(p.a) - want) > kConstraintTol * std::max(1.0, std::abs(want)))
            throw InvalidArgument("candidate: derivative " + std::to_string(i) +
                                  " at a does not match the initial data");
    }
    if (p.delay) {
        const double h = p.delay->history(p.a);
        if (std::abs(c.curve.eval(p.a) - h) > kConstraintTol * std::max(1.0, std::abs(h)))
            throw InvalidArgument("candidate: x(a) does not match the history");
    }
}

bool ResidualReport::all_pass() const
{
    return std::all_of(conditions.begin(), conditions.end(),
                       [](const ConditionReport& c) { return c.pass; });
}

const ConditionReport& ResidualReport::condition(const std::string& name) const
{
    for (const auto& c : conditions)
        if (c.name == name)
            return c;
    throw InvalidArgument("report has no condition named '" + name + "'");
}

ArgumentBundle argument_bundle(const VariationalProblem& p, const Candidate& c, double t,
                               const QuadConfig& cfg)
{
    ResidualOptions opts;
    opts.quad = cfg;
    Pipeline pipe(p, c, opts);
    return pipe.bundle(t);
}

double functional_value(const VariationalProblem& p, const Candidate& c, const QuadConfig& cfg)
{
    ResidualOptions opts;
    opts.quad = cfg;
    Pipeline pipe(p, c, opts);
    const double integral =
        integrate_lagrangian(p, c, cfg, [&](double t) { return pipe.bundle(t); });
    return integral + p.terminal.phi(c.T, c.curve.eval(c.T));
}

double euler_lagrange_residual_inner(const VariationalProblem& p, const Candidate& c, double t,
                                     const ResidualOptions& opts)
{
    if (!(t >= p.a && t <= c.T))
        throw DomainError("inner residual: t outside [a, T]");
    Pipeline pipe(p, c, opts);
    return pipe.inner(t);
}

double euler_lagrange_residual_outer(const VariationalProblem& p, const Candidate& c, double t,
                                     const ResidualOptions& opts)
{
    if (!(t >= c.T && t <= p.b))
        throw DomainError("outer residual: t outside [T, b]");
    Pipeline pipe(p, c, opts);
    return pipe.outer(t);
}

std::vector<double> transversality_residuals(const VariationalProblem& p, const Candidate& c,
                                             const ResidualOptions& opts)
{
    Pipeline pipe(p, c, opts);
    std::vector<double> out{pipe.natural()};
    for (int j = 0; j < p.n; ++j)
        out.push_back(pipe.at_T(j));
    for (int j = 0; j < p.n; ++j)
        out.push_back(pipe.at_b(j));
    return out;
}

ResidualReport optimality_residuals(const VariationalProblem& p, const Candidate& c,
                                    const ResidualOptions& opts)
{
    if (p.delay)
        throw InvalidArgument("optimality_residuals: problem has a delay; use delay_residuals");
    Pipeline pipe(p, c, opts);
    const double T = c.T;
    const double tol = opts.tolerance;
    ResidualReport rep;
    rep.tolerance = tol;
    rep.conditions.push_back(scan(pipe, "euler_lagrange_inner",
                                  residual_grid(p.a, T, opts.grid_points),
                                  [&](double t) { return pipe.inner(t); }, tol));
    rep.conditions.push_back(scan(pipe, "euler_lagrange_outer",
                                  residual_grid(T, p.b, opts.grid_points),
                                  [&](double t) { return pipe.outer(t); }, tol));
    rep.conditions.push_back(
        point_condition(pipe, "transversality_natural", T, [&] { return pipe.natural(); }, tol));
    for (int j = 0; j < p.n; ++j)
        rep.conditions.push_back(point_condition(pipe, "transversality_T_j" + std::to_string(j), T,
                                                 [&] { return pipe.at_T(j); }, tol));
    for (int j = 0; j < p.n; ++j) {
        auto cond = point_condition(pipe, "transversality_b_j" + std::to_string(j), p.b,
                                    [&] { return pipe.at_b(j); }, tol);
        if (!(T < p.b)) {
            cond.grid.clear();
            cond.residuals.clear();
        }
        rep.conditions.push_back(std::move(cond));
    }
    rep.functional_value =
        integrate_lagrangian(p, c, opts.quad, [&](double t) { return pipe.bundle(t); }) +
        p.terminal.phi(T, c.curve.eval(T));
    rep.metadata["kind"] = "higher_order";
    rep.metadata["terminal_time"] = std::to_string(T);
    rep.metadata["partial_pieces"] = std::to_string(pipe.pieces_used());
    rep.metadata["sign_convention"] =
        opts.sign == TransversalitySign::stated ? "stated" : "alternate";
    return rep;
}

ResidualReport delay_residuals(const VariationalProblem& p, const Candidate& c,
                               const ResidualOptions& opts)
{
    if (!p.delay)
        throw InvalidArgument("delay_residuals: problem has no delay");
    Pipeline pipe(p, c, opts);
    const double T = c.T;
    const double sigma = p.delay->sigma;
    const double tol = opts.tolerance;
    const bool split = sigma < T - p.a;
    ResidualReport rep;
    rep.tolerance = tol;
    const auto inner = [&](double t) { return pipe.inner(t); };
    if (split) {
        rep.conditions.push_back(scan(pipe, "euler_lagrange_advanced",
                                      residual_grid(p.a, T - sigma, opts.grid_points), inner, tol));
        rep.conditions.push_back(scan(pipe, "euler_lagrange_inner",
                                      residual_grid(T - sigma, T, opts.grid_points), inner, tol));
    } else {
        rep.conditions.push_back(
            scan(pipe, "euler_lagrange_inner", residual_grid(p.a, T, opts.grid_points), inner, tol));
    }
    rep.conditions.push_back(scan(pipe, "euler_lagrange_outer",
                                  residual_grid(T, p.b, opts.grid_points),
                                  [&](double t) { return pipe.outer(t); }, tol));
    rep.conditions.push_back(
        point_condition(pipe, "transversality_natural", T, [&] { return pipe.natural(); }, tol));
    rep.conditions.push_back(
        point_condition(pipe, "transversality_T", T, [&] { return pipe.at_T(0); }, tol));
    auto at_b = point_condition(pipe, "transversality_b", p.b, [&] { return pipe.at_b(0); }, tol);
    if (!(T < p.b)) {
        at_b.grid.clear();
        at_b.residuals.clear();
    }
    rep.conditions.push_back(std::move(at_b));
    rep.functional_value =
        integrate_lagrangian(p, c, opts.quad, [&](double t) { return pipe.bundle(t); }) +
        p.terminal.phi(T, c.curve.eval(T));
    rep.metadata["kind"] = "delay";
    rep.metadata["branch"] = split ? "sigma < T - a" : "sigma >= T - a";
    rep.metadata["terminal_time"] = std::to_string(T);
    rep.metadata["partial_pieces"] = std::to_string(pipe.pieces_used());
    rep.metadata["sign_convention"] =
        opts.sign == TransversalitySign::stated ? "stated" : "alternate";
    return rep;
}

IbpResult ibp_check(const FuncApprox& x, const FuncApprox& y, const VarOrder& alpha, double a,
                    double b, int n, IbpSide side, const IbpOptions& opts)
{
    if (n < 1)
        throw InvalidArgument("ibp_check: n must be a positive integer");
    if (!(a < b))
        throw InvalidArgument("ibp_check: need a < b");
    if (alpha.band() != n)
        throw InvalidArgument("ibp_check: order band does not match n");
    if (!(opts.truncation > 0.0 && opts.truncation < 0.5))
        throw InvalidArgument("ibp_check: truncation must lie in (0, 0.5)");
    const QuadConfig& cfg = opts.quad;
    const double length = b - a;
    const double eps = n == 1 ? 0.0 : opts.truncation * length;
    const OrderFn alpha_fn = alpha.fn();
    const OrderFn q = [alpha_fn, n](double u, double v) { return n - alpha_fn(u, v); };
    const ScalarFn yf = [&y](double s) { return y.eval(s); };

    std::vector<FuncApprox> xd{x};
    for (int k = 1; k < n; ++k)
        xd.push_back(xd.back().derivative(1));

    // Integrals whose integrand is singular at the operator base are taken
    // in the exact offset from that end.
    IbpResult out;
    const bool left = side == IbpSide::left;
    const FractionalFn caputo = left ? left_caputo(x, alpha, a, n, cfg) : right_caputo(x, alpha, b, n, cfg);
    const OffsetIntegrand lhs_integrand = [&](double t, double offset) {
        return y.eval(t) * caputo.evaluate_from_base(offset).value;
    };
    out.lhs = integrate_singular(lhs_integrand, a, b, left ? SingularEnd::lo : SingularEnd::hi, cfg).value;

    const FractionalFn adjoint = left ? right_rl_derivative(y, alpha, b, n, cfg, opts.diff)
                                      : left_rl_derivative(y, alpha, a, n, cfg, opts.diff);
    const double lo = left ? a : a + eps;
    const double hi = left ? b - eps : b;
    // Differentiated samples carry relative noise near 1e-10.
    QuadConfig outer_cfg = cfg;
    outer_cfg.abs_tol = std::max(cfg.abs_tol, 1e-10);
    outer_cfg.rel_tol = std::max(cfg.rel_tol, 1e-9);
    if (n == 1) {
        const OffsetIntegrand rhs_integrand = [&](double t, double offset) {
            return x.eval(t) * adjoint.evaluate_from_base(offset).value;
        };
        const double edge = left ? alpha_fn(b, b) : alpha_fn(a, a);
        out.rhs = integrate_singular(rhs_integrand, a, b, left ? SingularEnd::hi : SingularEnd::lo, outer_cfg, -edge)
                      .value;
    } else {
        // The adjoint grows like a non-integrable power towards its base, so
        // the truncated range is split into dyadic panels in the distance.
        std::vector<double> cuts{eps};
        while (cuts.back() * 2.0 < length)
            cuts.push_back(cuts.back() * 2.0);
        cuts.push_back(length);
        // Higher derivatives are noisier still.
        QuadConfig panel_cfg = outer_cfg;
        panel_cfg.rel_tol = std::max(outer_cfg.rel_tol, 1e-8);
        const ScalarFn rhs_integrand = [&](double d) {
            return x.eval(left ? b - d : a + d) * adjoint.evaluate_from_base(d).value;
        };
        std::vector<double> pieces;
        for (std::size_t j = 0; j + 1 < cuts.size(); ++j)
            pieces.push_back(integrate_singular(rhs_integrand, cuts[j], cuts[j + 1], SingularEnd::none, panel_cfg).value);
        std::sort(pieces.begin(), pieces.end(), [](double u, double v) { return std::abs(u) < std::abs(v); });
        out.rhs = 0.0;
        for (double piece : pieces)
            out.rhs += piece;
    }

    // F as a function of the distance from the adjoint's base.
    auto bracket = [&](double e, double d) {
        const ScalarFn F = left ? detail::rl_family_right(yf, q, b, d, cfg) : detail::rl_family_left(yf, q, a, d, cfg);
        double sum = 0.0;
        for (int k = 0; k < n; ++k) {
            double dk = k == 0 ? F(d) : detail::local_derivative(F, d, k, length, opts.diff).value;
            double sign = 0.0;
            if (left) {
                dk *= sign_of(k); // d/dt = -d/dd
                sign = sign_of(k);
            } else {
                sign = opts.sign == TransversalitySign::stated ? sign_of(n + k) : sign_of(n);
            }
            sum += sign * xd[static_cast<std::size_t>(n - 1 - k)].eval(e) * dk;
        }
        return sum;
    };
    out.boundary = left ? bracket(hi, eps) - bracket(a, length) : bracket(b, length) - bracket(lo, eps);
    out.rhs += out.boundary;
    out.gap = std::abs(out.lhs - out.rhs);
    return out;
}

} // namespace varfrac
