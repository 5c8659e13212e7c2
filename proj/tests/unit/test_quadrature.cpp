#include <doctest.h>

#include <cmath>
#include <numbers>

#include "varfrac/error.hpp"
#include "varfrac/quadrature.hpp"
#include "varfrac/special.hpp"

using namespace varfrac;

TEST_CASE("inverse square root singular at lo")
{
    const auto r =
        integrate_singular([](double t) { return 1 / std::sqrt(t); }, 0, 1, SingularEnd::lo);
    CHECK(std::abs(r.value - 2) <= 1e-9);
}

TEST_CASE("constant over a regular interval")
{
    const auto r = integrate_singular([](double) { return 1.0; }, 0, 1, SingularEnd::none);
    CHECK(std::abs(r.value - 1) <= 1e-15);
    CHECK(r.panels == 1);
}

TEST_CASE("Gauss-Legendre exactness")
{
    QuadConfig cfg;
    const int deg = 2 * cfg.panel_points - 1;
    const auto r = integrate_singular([deg](double t) { return std::pow(t, deg); }, 0, 1,
                                      SingularEnd::none, cfg);
    CHECK(std::abs(r.value - 1.0 / (deg + 1)) <= 1e-15);
    const auto& rule = gauss_legendre(12);
    double s = 0;
    for (double w : rule.weights)
        s += w;
    CHECK(std::abs(s - 2) <= 1e-14);
}

TEST_CASE("power singularities")
{
    for (double p : {-0.9, -0.5, -0.1}) {
        const double want = 1 / (p + 1);
        const auto lo =
            integrate_singular([p](double t) { return std::pow(t, p); }, 0, 1, SingularEnd::lo);
        const OffsetIntegrand mirrored = [p](double, double s) { return std::pow(s, p); };
        const auto hi = integrate_singular(mirrored, 0, 1, SingularEnd::hi);
        CHECK(std::abs(lo.value - want) / want <= 1e-8);
        CHECK(std::abs(hi.value - want) / want <= 1e-8);
    }
}

TEST_CASE("offset integrand sees the exact distance")
{
    const OffsetIntegrand f = [](double, double s) { return std::pow(s, -0.7); };
    const auto r = integrate_singular(f, 5, 5 + 1e-3, SingularEnd::lo);
    CHECK(std::abs(r.value - std::pow(1e-3, 0.3) / 0.3) <= 1e-10);
}

TEST_CASE("variable-order Caputo kernel of t^4 at 0.6")
{
    const double t = 0.6;
    const OffsetIntegrand f = [t](double tau, double s) {
        const double alpha = t * t / 2;
        return std::pow(s, -alpha) * 4 * tau * tau * tau * special::rgamma(1 - alpha);
    };
    const auto r = integrate_singular(f, 0, t, SingularEnd::hi);
    CHECK(std::abs(r.value - 0.185651036003120) <= 1e-8);
}

TEST_CASE("finer grading does not increase the error")
{
    for (double p : {-0.9, -0.5, -0.1}) {
        QuadConfig coarse;
        QuadConfig fine;
        fine.grading_ratio = coarse.grading_ratio / 2;
        const auto f = [p](double t) { return std::pow(t, p); };
        const double want = 1 / (p + 1);
        const double e1 = std::abs(integrate_singular(f, 0, 1, SingularEnd::lo, coarse).value - want);
        const double e2 = std::abs(integrate_singular(f, 0, 1, SingularEnd::lo, fine).value - want);
        CHECK(e2 <= std::max(e1, 1e-14));
    }
}

TEST_CASE("budget and non-finite errors")
{
    QuadConfig cfg;
    cfg.max_panels = 4;
    cfg.abs_tol = 1e-15;
    cfg.rel_tol = 1e-15;
    cfg.panel_points = 4;
    CHECK_THROWS_AS(integrate_singular([](double t) { return std::sin(200 * t); }, 0, 10,
                                       SingularEnd::none, cfg),
                    QuadratureBudgetExceeded);
    CHECK_THROWS_AS(integrate_singular([](double t) { return t < 0.5 ? 1.0 : NAN; }, 0, 1,
                                       SingularEnd::none),
                    NonFiniteValue);
}

TEST_CASE("config validation")
{
    QuadConfig cfg;
    cfg.panel_points = 3;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = {};
    cfg.grading_ratio = 1;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = {};
    cfg.abs_tol = 0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = {};
    cfg.max_panels = 3;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}

TEST_CASE("recorded layout replays the same integral")
{
    const auto make = [](double p) {
        return OffsetIntegrand([p](double tau, double s) { return std::pow(s, p) * std::cos(tau); });
    };
    PanelLayout layout;
    const auto r = integrate_singular_recorded(make(-0.4), 0, 1, SingularEnd::hi, {}, -0.4, layout);
    CHECK(!layout.panels.empty());
    const double again = integrate_with_layout(make(-0.4), 0, 1, layout, -0.4);
    CHECK(std::abs(again - r.value) <= 1e-13);
    const double nearby = integrate_with_layout(make(-0.41), 0, 1.01, layout, -0.41);
    const auto direct = integrate_singular(make(-0.41), 0, 1.01, SingularEnd::hi);
    CHECK(std::abs(nearby - direct.value) <= 1e-9);
}
