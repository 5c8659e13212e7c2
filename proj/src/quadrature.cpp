#include "varfrac/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

#include "varfrac/error.hpp"

namespace varfrac {

void QuadConfig::validate() const
{
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0))
        throw InvalidArgument("QuadConfig: tolerances must be positive");
    if (panel_points < 4)
        throw InvalidArgument("QuadConfig: panel_points must be >= 4");
    if (!(grading_ratio > 0.0 && grading_ratio < 1.0))
        throw InvalidArgument("QuadConfig: grading_ratio must lie in (0, 1)");
    if (max_panels < 4)
        throw InvalidArgument("QuadConfig: max_panels must be >= 4");
}

const GaussRule& gauss_legendre(int points)
{
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<GaussRule>> cache;

    if (points < 1)
        throw InvalidArgument("gauss_legendre: need at least one node");
    std::lock_guard lock(mutex);
    auto& slot = cache[points];
    if (slot)
        return *slot;

    auto rule = std::make_unique<GaussRule>();
    const int n = points;
    rule->nodes.resize(n);
    rule->weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) {
                p1 = x;
                p0 = 1.0;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16)
                break;
        }
        // Recompute the derivative at the converged node for the weight.
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = (n == 1) ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule->nodes[i] = -x;
        rule->nodes[n - 1 - i] = x;
        rule->weights[i] = w;
        rule->weights[n - 1 - i] = w;
    }
    if (n % 2 == 1)
        rule->nodes[n / 2] = 0.0;
    slot = std::move(rule);
    return *slot;
}

namespace {

// Maps an offset s in (0, L] from the singular end to the abscissa.
struct Frame {
    double lo;
    double hi;
    SingularEnd end;

    double point(double s) const
    {
        switch (end) {
        case SingularEnd::hi:
            return hi - s;
        default:
            return lo + s;
        }
    }
};

class Integrator {
public:
    Integrator(const OffsetIntegrand& f, Frame frame, const QuadConfig& cfg)
        : f_(f), frame_(frame), cfg_(cfg), fine_(gauss_legendre(cfg.panel_points)),
          coarse_(gauss_legendre(std::max(2, cfg.panel_points / 2)))
    {
    }

    double sample(double s) const
    {
        const double v = f_(frame_.point(s), s);
        if (!std::isfinite(v))
            throw NonFiniteValue("integrate_singular: non-finite integrand at tau = " +
                                 std::to_string(frame_.point(s)));
        return v;
    }

    double rule_sum(const GaussRule& rule, double s0, double s1, double* magnitude = nullptr) const
    {
        const double mid = 0.5 * (s0 + s1);
        const double half = 0.5 * (s1 - s0);
        double sum = 0.0;
        double abs_sum = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            const double v = rule.weights[i] * sample(mid + half * rule.nodes[i]);
            sum += v;
            abs_sum += std::abs(v);
        }
        if (magnitude)
            *magnitude = std::abs(half) * abs_sum;
        return half * sum;
    }

    // Adaptive panel over offsets [s0, s1]; appends accepted pieces.
    void panel(double s0, double s1, double target, std::vector<double>& pieces, double& err)
    {
        double magnitude = 0.0;
        const double fine = rule_sum(fine_, s0, s1, &magnitude);
        const double coarse = rule_sum(coarse_, s0, s1);
        const double diff = std::abs(fine - coarse);
        ++panels_;
        // Relative accuracy is measured against the integral of |f|, so
        // cancelling panels are not refined into rounding noise.
        if (diff <= std::max(target, cfg_.rel_tol * magnitude * 0.1) || (s1 - s0) <= 1e-15 * (s1 + s0)) {
            pieces.push_back(fine);
            if (record_)
                record_->emplace_back(s0, s1);
            // The lower-order rule bounds the error very loosely; report a
            // damped share so the estimate stays meaningful.
            err += std::min(diff, target);
            return;
        }
        check_budget();
        const double mid = 0.5 * (s0 + s1);
        panel(s0, mid, 0.5 * target, pieces, err);
        panel(mid, s1, 0.5 * target, pieces, err);
    }

    // Remainder [0, w] of an integrand behaving like s^p at 0. Uses
    // s = w v^q with q = 1/(p+1); when p is within 0.01 of -1 that power is
    // not representable and s = w e^-u is used instead, with the tail beyond
    // u = 45 taken in closed form.
    double remainder(double w, double p) const
    {
        if (!(w > 0.0))
            return 0.0;
        const double lift = p + 1.0;
        if (lift >= 0.01) {
            const double q = p < 0.0 ? 1.0 / lift : 1.0;
            double sum = 0.0;
            for (std::size_t i = 0; i < fine_.nodes.size(); ++i) {
                const double v = 0.5 * (fine_.nodes[i] + 1.0);
                const double s = w * std::pow(v, q);
                if (!(s > 0.0))
                    continue; // underflow: measure of this node is below double range
                const double jac = w * q * std::pow(v, q - 1.0);
                sum += 0.5 * fine_.weights[i] * sample(s) * jac;
            }
            return sum;
        }
        static constexpr double cuts[] = {0.0, 2.5, 5.0, 10.0, 20.0, 45.0};
        double sum = 0.0;
        for (std::size_t k = 0; k + 1 < std::size(cuts); ++k) {
            const double mid = 0.5 * (cuts[k] + cuts[k + 1]);
            const double half = 0.5 * (cuts[k + 1] - cuts[k]);
            double part = 0.0;
            for (std::size_t i = 0; i < fine_.nodes.size(); ++i) {
                const double s = w * std::exp(-(mid + half * fine_.nodes[i]));
                part += fine_.weights[i] * sample(s) * s;
            }
            sum += half * part;
        }
        const double s_end = w * std::exp(-cuts[std::size(cuts) - 1]);
        return sum + sample(s_end) * s_end / std::max(lift, 1e-300);
    }

    void check_budget() const
    {
        if (panels_ >= cfg_.max_panels)
            throw QuadratureBudgetExceeded("integrate_singular: panel budget of " +
                                           std::to_string(cfg_.max_panels) + " exhausted");
    }

    int panels() const { return panels_; }
    void record_into(std::vector<std::pair<double, double>>* out) { record_ = out; }

private:
    std::vector<std::pair<double, double>>* record_ = nullptr;
    const OffsetIntegrand& f_;
    Frame frame_;
    const QuadConfig& cfg_;
    const GaussRule& fine_;
    const GaussRule& coarse_;
    int panels_ = 0;
};

double sum_ascending(std::vector<double> pieces)
{
    std::sort(pieces.begin(), pieces.end(),
              [](double x, double y) { return std::abs(x) < std::abs(y); });
    double s = 0.0;
    for (double p : pieces)
        s += p;
    return s;
}

double probe_exponent(const Integrator& in, double length)
{
    const double s1 = 1e-9 * length;
    const double s2 = 1e-7 * length;
    double f1 = 0.0;
    double f2 = 0.0;
    try {
        f1 = in.sample(s1);
        f2 = in.sample(s2);
    } catch (const NonFiniteValue&) {
        return 0.0;
    }
    if (f1 == 0.0 || f2 == 0.0 || (f1 > 0.0) != (f2 > 0.0))
        return 0.0;
    return std::log(f2 / f1) / std::log(s2 / s1);
}

} // namespace

namespace {

QuadResult integrate_impl(const OffsetIntegrand& integrand, double lo, double hi,
                          SingularEnd singular_end, const QuadConfig& cfg,
                          std::optional<double> endpoint_exponent, PanelLayout* layout)
{
    cfg.validate();
    if (!(std::isfinite(lo) && std::isfinite(hi)))
        throw InvalidArgument("integrate_singular: non-finite limits");
    if (hi < lo)
        throw InvalidArgument("integrate_singular: hi < lo");
    if (hi == lo)
        return {};

    const double length = hi - lo;
    Integrator in(integrand, Frame{lo, hi, singular_end}, cfg);
    std::vector<std::pair<double, double>> recorded;
    if (layout)
        in.record_into(&recorded);
    double p = endpoint_exponent.value_or(std::numeric_limits<double>::quiet_NaN());
    auto finish = [&](double remainder_width) {
        if (!layout)
            return;
        layout->exponent = p;
        layout->panels.clear();
        for (const auto& [s0, s1] : recorded)
            layout->panels.emplace_back(s0 / length, s1 / length);
        layout->remainder = remainder_width / length;
        layout->end = singular_end;
        layout->points = cfg.panel_points;
    };

    if (singular_end == SingularEnd::none) {
        std::vector<double> pieces;
        double err = 0.0;
        in.panel(0.0, length, 0.1 * cfg.abs_tol, pieces, err);
        finish(0.0);
        return {sum_ascending(std::move(pieces)), err, in.panels()};
    }

    if (!(std::isfinite(p) && p > -1.0 + 1e-9))
        p = probe_exponent(in, length);

    const double r = cfg.grading_ratio;
    std::vector<double> pieces;
    double panel_err = 0.0;
    double outer = length;
    double tail = in.remainder(outer, p);
    for (;;) {
        in.check_budget();
        const double inner = r * outer;
        std::vector<double> here;
        double here_err = 0.0;
        in.panel(inner, outer, 0.1 * cfg.abs_tol, here, here_err);
        const double contribution = sum_ascending(here);
        const double next_tail = in.remainder(inner, p);
        pieces.insert(pieces.end(), here.begin(), here.end());
        panel_err += here_err;

        const double consistency = std::abs(tail - (contribution + next_tail));
        const double running = sum_ascending(pieces) + next_tail;
        if (consistency <= 0.1 * std::max(cfg.abs_tol, cfg.rel_tol * std::abs(running))) {
            pieces.push_back(next_tail);
            finish(inner);
            return {sum_ascending(std::move(pieces)), consistency + panel_err, in.panels()};
        }
        tail = next_tail;
        outer = inner;
    }
}

} // namespace

QuadResult integrate_singular(const OffsetIntegrand& integrand, double lo, double hi,
                              SingularEnd singular_end, const QuadConfig& cfg,
                              std::optional<double> endpoint_exponent)
{
    return integrate_impl(integrand, lo, hi, singular_end, cfg, endpoint_exponent, nullptr);
}

QuadResult integrate_singular_recorded(const OffsetIntegrand& integrand, double lo, double hi,
                                       SingularEnd singular_end, const QuadConfig& cfg,
                                       std::optional<double> endpoint_exponent, PanelLayout& layout)
{
    return integrate_impl(integrand, lo, hi, singular_end, cfg, endpoint_exponent, &layout);
}

double integrate_with_layout(const OffsetIntegrand& integrand, double lo, double hi,
                             const PanelLayout& layout, std::optional<double> endpoint_exponent)
{
    if (!(hi > lo))
        return 0.0;
    const double length = hi - lo;
    QuadConfig cfg;
    cfg.panel_points = layout.points;
    Integrator in(integrand, Frame{lo, hi, layout.end}, cfg);
    const GaussRule& rule = gauss_legendre(layout.points);
    std::vector<double> pieces;
    for (const auto& [u0, u1] : layout.panels)
        pieces.push_back(in.rule_sum(rule, u0 * length, u1 * length));
    if (layout.remainder > 0.0) {
        double p = endpoint_exponent.value_or(layout.exponent);
        if (!(std::isfinite(p) && p > -1.0 + 1e-9))
            p = probe_exponent(in, length);
        pieces.push_back(in.remainder(layout.remainder * length, p));
    }
    return sum_ascending(std::move(pieces));
}

QuadResult integrate_singular(const ScalarFn& integrand, double lo, double hi,
                              SingularEnd singular_end, const QuadConfig& cfg,
                              std::optional<double> endpoint_exponent)
{
    const OffsetIntegrand wrapped = [&integrand](double tau, double) { return integrand(tau); };
    return integrate_singular(wrapped, lo, hi, singular_end, cfg, endpoint_exponent);
}

} // namespace varfrac
