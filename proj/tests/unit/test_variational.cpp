#include <doctest.h>

#include <cmath>
#include <string>

#include "varfrac/error.hpp"
#include "varfrac/problem.hpp"
#include "varfrac/variational.hpp"

using namespace varfrac;

namespace {

// Euler-Lagrange residuals of x = 1 + 2t + t^2 / 10 at t = 0.5 and 1.25.
constexpr double kPerturbedInner = -0.261498903371633;
constexpr double kPerturbedOuter = 0.228203816496178;

std::string problems_dir() { return std::string(VARFRAC_SOURCE_DIR) + "/problems/v1/"; }

ResidualOptions options(const LoadedProblem& lp)
{
    ResidualOptions o;
    o.quad = lp.quadrature;
    return o;
}

// n = 1 problem with L = x2^2 + x1^2 - t along x = 1 + t / 2 + t^2 / 3,
// optionally written as a delay problem whose delay term is absent.
std::string plain_problem(double scale, bool as_delay)
{
    const std::string c = std::to_string(scale);
    std::string s = R"json({
      "interval": {"a": 0, "b": 1.5, "n": 1},
      "orders": [{"alpha": "0.3 + 0.2*t*tau", "beta": "0.5 + 0.1*(t - tau)", "gamma1": 0.6, "gamma2": 0.4}],
      "curve": "1 + t/2 + t^2/3",
      "lagrangian": {"L": "C*(x2^2 + x1^2 - t)", "dL2": "C*2*x1", "dL3": "C*2*x2")json";
    s += as_delay ? R"json(, "dL4": "0"},
      "delay": {"sigma": 1.5, "history": "1 + t/2 + t^2/3"},)json"
                  : R"json(},
      "initial": {"x_a": 1},)json";
    s += R"json(
      "terminal_cost": {"phi": "C*t^2*x1", "d1phi": "C*2*t*x1", "d2phi": "C*t^2"},
      "candidate_T": 1
    })json";
    for (auto pos = s.find('C'); pos != std::string::npos; pos = s.find('C', pos))
        s.replace(pos, 1, c);
    return s;
}

} // namespace

TEST_CASE("first example: optimal candidate")
{
    const auto lp = load_problem(problems_dir() + "example51.json");
    const auto rep = optimality_residuals(lp.problem, lp.candidate, options(lp));
    CHECK(rep.all_pass());
    for (const auto& c : rep.conditions)
        CHECK(c.max_abs <= 1e-7);
    CHECK(std::abs(rep.functional_value + 0.5) <= 1e-6);
    CHECK(rep.condition("euler_lagrange_inner").grid.size() == 41);
    CHECK(rep.metadata.at("kind") == "higher_order");
    CHECK_THROWS_AS(rep.condition("nope"), InvalidArgument);
}

TEST_CASE("first example: earlier terminal time fails the natural condition")
{
    const auto lp = load_problem(problems_dir() + "example51.json", 0.5);
    const auto rep = optimality_residuals(lp.problem, lp.candidate, options(lp));
    CHECK(!rep.all_pass());
    const auto& nat = rep.condition("transversality_natural");
    CHECK(!nat.pass);
    CHECK(std::abs(nat.residuals.at(0) + 0.5) <= 1e-6);
    CHECK(std::abs(rep.functional_value + 0.375) <= 1e-6);
}

TEST_CASE("first example: terminal time at b leaves the outer conditions empty")
{
    const auto lp = load_problem(problems_dir() + "example51.json", 1.5);
    const auto rep = optimality_residuals(lp.problem, lp.candidate, options(lp));
    CHECK(rep.condition("euler_lagrange_outer").grid.empty());
    CHECK(rep.condition("euler_lagrange_outer").pass);
    CHECK(rep.condition("transversality_b_j0").grid.empty());
}

TEST_CASE("second example: delay problem")
{
    const auto lp = load_problem(problems_dir() + "example52.json");
    REQUIRE(lp.delay);
    const auto rep = delay_residuals(lp.problem, lp.candidate, options(lp));
    CHECK(rep.all_pass());
    for (const auto& c : rep.conditions)
        CHECK(c.max_abs <= 1e-7);
    CHECK(std::abs(rep.functional_value + 2) <= 1e-5);
    CHECK(rep.metadata.at("branch") == "sigma < T - a");
    CHECK_NOTHROW(rep.condition("euler_lagrange_advanced"));

    const auto early = load_problem(problems_dir() + "example52.json", 0.8);
    const auto rep2 = delay_residuals(early.problem, early.candidate, options(early));
    CHECK(rep2.metadata.at("branch") == "sigma >= T - a");
    CHECK_THROWS_AS(rep2.condition("euler_lagrange_advanced"), InvalidArgument);
    CHECK_THROWS_AS(optimality_residuals(lp.problem, lp.candidate), InvalidArgument);
}

TEST_CASE("perturbed first example matches the dense oracle")
{
    auto lp = load_problem(problems_dir() + "example51.json");
    lp.candidate.curve =
        FuncApprox::approximate([](double t) { return 1 + 2 * t + 0.1 * t * t; }, 0, 1.5);
    const auto o = options(lp);
    const double inner = euler_lagrange_residual_inner(lp.problem, lp.candidate, 0.5, o);
    const double outer = euler_lagrange_residual_outer(lp.problem, lp.candidate, 1.25, o);
    CHECK(std::abs(inner - kPerturbedInner) <= 1e-8);
    CHECK(std::abs(outer - kPerturbedOuter) <= 1e-8);
}

TEST_CASE("without a delay term the delay conditions reduce to the plain ones")
{
    const auto plain = parse_problem(plain_problem(1, false));
    const auto delayed = parse_problem(plain_problem(1, true));
    const auto o = options(plain);
    for (int i = 0; i < 9; ++i) {
        const double t = (i + 0.5) / 9;
        CHECK(std::abs(euler_lagrange_residual_inner(plain.problem, plain.candidate, t, o) -
                       euler_lagrange_residual_inner(delayed.problem, delayed.candidate, t, o)) <=
              1e-9);
    }
    for (double t : {1.1, 1.3, 1.45})
        CHECK(std::abs(euler_lagrange_residual_outer(plain.problem, plain.candidate, t, o) -
                       euler_lagrange_residual_outer(delayed.problem, delayed.candidate, t, o)) <=
              1e-9);
    const auto tp = transversality_residuals(plain.problem, plain.candidate, o);
    const auto td = transversality_residuals(delayed.problem, delayed.candidate, o);
    REQUIRE(tp.size() == td.size());
    for (std::size_t k = 0; k < tp.size(); ++k)
        CHECK(std::abs(tp[k] - td[k]) <= 1e-9);
}

TEST_CASE("residuals scale with the Lagrangian")
{
    const auto base = parse_problem(plain_problem(1, false));
    const auto scaled = parse_problem(plain_problem(3.5, false));
    const auto o = options(base);
    for (double t : {0.2, 0.5, 0.8}) {
        const double r1 = euler_lagrange_residual_inner(base.problem, base.candidate, t, o);
        const double r2 = euler_lagrange_residual_inner(scaled.problem, scaled.candidate, t, o);
        REQUIRE(std::abs(r1) > 1e-3);
        CHECK(std::abs(r2 / r1 - 3.5) <= 1e-10 * 3.5);
    }
    for (double t : {1.2, 1.4}) {
        const double r1 = euler_lagrange_residual_outer(base.problem, base.candidate, t, o);
        const double r2 = euler_lagrange_residual_outer(scaled.problem, scaled.candidate, t, o);
        REQUIRE(std::abs(r1) > 1e-6);
        CHECK(std::abs(r2 / r1 - 3.5) <= 1e-10 * 3.5);
    }
}

TEST_CASE("no right weight means no outer residual")
{
    std::string src = plain_problem(1, false);
    src.replace(src.find("\"gamma1\": 0.6, \"gamma2\": 0.4"), 28, "\"gamma1\": 1.0, \"gamma2\": 0.0");
    const auto lp = parse_problem(src);
    for (double t : {1.1, 1.3})
        CHECK(euler_lagrange_residual_outer(lp.problem, lp.candidate, t, options(lp)) == 0);
}

TEST_CASE("candidate validation")
{
    auto lp = load_problem(problems_dir() + "example51.json");
    Candidate bad = lp.candidate;
    bad.curve = FuncApprox::approximate([](double t) { return 1.1 + 2 * t; }, 0, 1.5);
    CHECK_THROWS_AS(validate_candidate(lp.problem, bad), InvalidArgument);
    bad = lp.candidate;
    bad.curve = FuncApprox::approximate([](double t) { return 1 + 2.5 * t; }, 0, 1.5);
    CHECK_THROWS_AS(validate_candidate(lp.problem, bad), InvalidArgument);
    bad = lp.candidate;
    bad.T = 0;
    CHECK_THROWS_AS(validate_candidate(lp.problem, bad), InvalidArgument);
    bad.T = 2;
    CHECK_THROWS_AS(validate_candidate(lp.problem, bad), InvalidArgument);
}

TEST_CASE("argument bundle along the first example")
{
    const auto lp = load_problem(problems_dir() + "example51.json");
    const auto b = argument_bundle(lp.problem, lp.candidate, 0.7);
    CHECK(b.x == doctest::Approx(2.4).epsilon(1e-14));
    REQUIRE(b.combined_derivs.size() == 2);
    CHECK(std::abs(b.combined_derivs[1]) <= 1e-12);
    CHECK(!b.delayed_x);
    CHECK(std::abs(functional_value(lp.problem, lp.candidate) + 0.5) <= 1e-9);
}

TEST_CASE("integration by parts, first order")
{
    const VarOrder alpha([](double t, double) { return t * t / 2; }, 1, 0, 1);
    const auto x = FuncApprox::approximate([](double t) { return t; }, 0, 1);
    const auto y = FuncApprox::approximate([](double t) { return t * t; }, 0, 1);
    for (auto side : {IbpSide::left, IbpSide::right})
        CHECK(ibp_check(x, y, alpha, 0, 1, 1, side).gap <= 1e-6);

    const VarOrder beta([](double t, double tau) { return 0.4 + 0.2 * t * tau; }, 1, 0, 1);
    const auto bump = FuncApprox::approximate([](double t) { return t * (1 - t) * std::exp(t); }, 0, 1);
    const auto ey = FuncApprox::approximate([](double t) { return std::exp(t); }, 0, 1);
    const auto r = ibp_check(bump, ey, beta, 0, 1, 1, IbpSide::left);
    CHECK(std::abs(r.boundary) <= 1e-12);
    CHECK(r.gap <= 1e-7);
}

TEST_CASE("integration by parts, second order")
{
    const VarOrder alpha([](double t, double tau) { return 1.5 + 0.3 * t * tau; }, 2, 0, 1);
    const auto x = FuncApprox::approximate([](double t) { return t * t * t; }, 0, 1);
    const auto y = FuncApprox::approximate([](double t) { return t * t; }, 0, 1);
    for (auto side : {IbpSide::left, IbpSide::right}) {
        const auto stated = ibp_check(x, y, alpha, 0, 1, 2, side);
        CHECK(stated.gap <= 1e-5);
    }
    CHECK_THROWS_AS(ibp_check(x, y, alpha, 0, 1, 1, IbpSide::left), InvalidArgument);
}
