// Prints one PASS/FAIL line per acceptance criterion; exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"
#include "varfrac/operators.hpp"
#include "varfrac/oracle.hpp"
#include "varfrac/problem.hpp"
#include "varfrac/special.hpp"
#include "varfrac/variational.hpp"

using namespace varfrac;
using nlohmann::json;

namespace {

const std::string kProblems = std::string(VARFRAC_SOURCE_DIR) + "/problems/v1/";

struct Outcome {
    bool pass = true;
    std::vector<std::string> notes;

    void require(bool ok, const std::string& note)
    {
        pass = pass && ok;
        notes.push_back((ok ? "  ok   " : "  FAIL ") + note);
    }
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Rows of a CSV text without the header.
std::vector<std::vector<double>> csv_rows(const std::string& text)
{
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::istringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ','))
            row.push_back(std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

int run_cli(const std::vector<std::string>& args, std::string& out)
{
    std::ostringstream o;
    std::ostringstream e;
    const int code = cli::run(args, o, e);
    out = o.str();
    return code;
}

json read_json(const std::string& path)
{
    std::ifstream in(path);
    return json::parse(in);
}

double round4(double v) { return std::round(v * 1e4) / 1e4; }

FuncApprox polynomial(const std::vector<double>& c, double lo, double hi)
{
    return FuncApprox::approximate(
        [c](double t) {
            double s = 0;
            for (auto it = c.rbegin(); it != c.rend(); ++it)
                s = s * t + *it;
            return s;
        },
        lo, hi);
}

Outcome table1()
{
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    std::string out;
    const int code = run_cli({"table1"}, out);
    const double elapsed = seconds_since(t0);
    const auto rows = csv_rows(out);
    const json ref = read_json(kProblems + "table1.json");
    o.require(code == 0 && rows.size() == 9, fmt("table1 exit %d with %zu rows", code, rows.size()));
    for (std::size_t i = 0; i < rows.size() && i < ref["rows"].size(); ++i) {
        const double exact = std::stod(ref["rows"][i]["exact"].get<std::string>());
        const double err = rows[i][2] - exact;
        o.require(rows[i][0] == ref["rows"][i]["t"].get<double>() && std::abs(err) <= 1e-6,
                  fmt("t=%.1f exact %.15g approx %.15g error %.2e", rows[i][0], exact, rows[i][2], err));
    }
    o.require(elapsed <= 30, fmt("runtime %.2f s (limit 30 s)", elapsed));
    return o;
}

Outcome echoes()
{
    Outcome o;
    const auto echo = [&](const std::string& file, bool counts) {
        const json spec = read_json(kProblems + file);
        std::string out;
        const int code = run_cli({"eval", "--spec", kProblems + file}, out);
        const auto rows = csv_rows(out);
        const double expected = spec["expected"][0].get<double>();
        const double got = rows.empty() ? NAN : rows[0][1];
        const bool ok = code == 0 && round4(got) == expected;
        const std::string note = fmt("%-24s %s %s -> %.6f rounds to %.4f, printed %.4f", file.c_str(),
                                     spec["op"].get<std::string>().c_str(),
                                     spec["alpha"].get<std::string>().c_str(), got, round4(got), expected);
        if (counts)
            o.require(ok, note);
        else
            o.notes.push_back("  info " + note);
        return ok;
    };
    echo("example21_left.json", true);
    echo("example21_right.json", true);
    echo("example22_left.json", true);
    echo("example22_right.json", true);
    echo("example23_left.json", true);
    echo("example23_right.json", true);
    // Either reading of the fourth example's order may reproduce the print.
    const bool tenth = echo("example24.json", false);
    const bool quarter = echo("example24_quarter.json", false);
    o.require(tenth || quarter, "combined Caputo reproduced by the /0.4 or the /4 order reading");
    return o;
}

Outcome power_oracle()
{
    Outcome o;
    std::mt19937_64 rng(20240602);
    std::uniform_real_distribution<double> u(0, 1);
    double worst_left = 0;
    double worst_right = 0;
    for (int k = 0; k < 30; ++k) {
        const int n = 1 + k % 2;
        const double g = n - 1 + 0.05 + 2.5 * u(rng);
        const double lo = n - 1 + 0.05 + 0.4 * u(rng);
        const double hi = std::min(n - 0.05, lo + 0.5 * u(rng));
        const bool rising = u(rng) < 0.5;
        const auto bar = [=](double t) { return rising ? lo + (hi - lo) * t * t : hi - (hi - lo) * t; };
        const double coef = special::gamma_fn(g + 1) / special::gamma_fn(g - n + 1);
        const double sign = n % 2 == 0 ? 1 : -1;
        const VarOrder left_order([bar](double t, double) { return bar(t); }, n, 0, 1);
        const VarOrder right_order([bar](double, double t) { return bar(t); }, n, 0, 1);
        const auto left = left_caputo_from_derivative(
            [=](double s) { return coef * std::pow(s, g - n); }, left_order, 0, 1, n);
        const auto right = right_caputo_from_derivative(
            [=](double s) { return sign * coef * std::pow(s, g - n); }, right_order, 0, 1, n);
        oracle::PowerOracleSpec spec{g, oracle::PowerBase::left, bar, n, 0, 1};
        oracle::PowerOracleSpec rspec = spec;
        rspec.base = oracle::PowerBase::right;
        spec.validate();
        double wl = 0;
        double wr = 0;
        for (int i = 1; i <= 9; ++i) {
            const double t = i / 10.0;
            wl = std::max(wl, std::abs(left(t) - oracle::exact_left_caputo_power(spec, t)));
            wr = std::max(wr, std::abs(right(t) - oracle::exact_right_caputo_power(rspec, t)));
        }
        worst_left = std::max(worst_left, wl);
        worst_right = std::max(worst_right, wr);
        if (wl > 1e-6 || wr > 1e-6)
            o.require(false, fmt("case %d n=%d gamma=%.4f: left %.2e right %.2e", k, n, g, wl, wr));
    }
    o.require(worst_left <= 1e-6, fmt("30 cases, left worst error %.2e", worst_left));
    o.require(worst_right <= 1e-6, fmt("30 cases, right worst error %.2e", worst_right));
    return o;
}

Outcome integration_by_parts()
{
    Outcome o;
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> u(-1, 1);
    std::uniform_real_distribution<double> v(0, 1);
    double worst = 0;
    int failures = 0;
    std::vector<std::pair<FuncApprox, FuncApprox>> second_order;
    std::vector<VarOrder> second_orders;
    for (int k = 0; k < 25; ++k) {
        const int n = 1 + k % 2;
        std::vector<double> cx(5);
        std::vector<double> cy(5);
        for (auto& c : cx)
            c = u(rng);
        for (auto& c : cy)
            c = u(rng);
        const double c0 = n - 1 + 0.2 + 0.2 * v(rng);
        const double c1 = 0.25 * v(rng);
        const double c2 = 0.25 * v(rng);
        const VarOrder alpha([=](double t, double tau) { return c0 + c1 * t + c2 * tau; }, n, 0, 1);
        const auto x = polynomial(cx, 0, 1);
        const auto y = polynomial(cy, 0, 1);
        for (auto side : {IbpSide::left, IbpSide::right}) {
            try {
                const auto r = ibp_check(x, y, alpha, 0, 1, n, side);
                worst = std::max(worst, r.gap);
                if (r.gap > 1e-5) {
                    ++failures;
                    o.notes.push_back(fmt("  FAIL case %d n=%d %s gap %.2e", k, n,
                                          side == IbpSide::left ? "left" : "right", r.gap));
                }
            } catch (const std::exception& e) {
                ++failures;
                o.notes.push_back(fmt("  FAIL case %d n=%d: %s", k, n, e.what()));
            }
        }
        if (n == 2 && second_order.size() < 3) {
            second_order.emplace_back(x, y);
            second_orders.push_back(alpha);
        }
    }
    o.require(failures == 0, fmt("25 pairs, both sides: worst gap %.2e (limit 1e-5)", worst));

    // Boundary sign of the gamma2 terms: the stated pattern must close the
    // identity and the alternate one must not.
    double stated = 0;
    double alternate = 0;
    for (std::size_t k = 0; k < second_order.size(); ++k) {
        for (auto side : {IbpSide::left, IbpSide::right}) {
            IbpOptions opts;
            opts.sign = TransversalitySign::stated;
            stated = std::max(stated, ibp_check(second_order[k].first, second_order[k].second,
                                                second_orders[k], 0, 1, 2, side, opts)
                                          .gap);
            opts.sign = TransversalitySign::alternate;
            alternate = std::max(alternate, ibp_check(second_order[k].first, second_order[k].second,
                                                      second_orders[k], 0, 1, 2, side, opts)
                                                .gap);
        }
    }
    const bool adopted_stated = ResidualOptions{}.sign == TransversalitySign::stated;
    o.require(stated <= 1e-5 && alternate > 1e-3 && adopted_stated,
              fmt("sign convention: stated gap %.2e, alternate gap %.2e, adopted %s", stated, alternate,
                  adopted_stated ? "stated" : "alternate"));
    return o;
}

Outcome first_example()
{
    Outcome o;
    const auto lp = load_problem(kProblems + "example51.json");
    ResidualOptions opts;
    opts.quad = lp.quadrature;
    const auto rep = optimality_residuals(lp.problem, lp.candidate, opts);
    for (const auto& c : rep.conditions)
        o.require(c.max_abs <= 1e-6, fmt("%-26s max residual %.2e", c.name.c_str(), c.max_abs));
    o.require(std::abs(rep.functional_value + 0.5) <= 1e-6,
              fmt("functional value %.12f (target -0.5)", rep.functional_value));
    const auto early = load_problem(kProblems + "example51.json", 0.5);
    const auto rep2 = optimality_residuals(early.problem, early.candidate, opts);
    const auto& nat = rep2.condition("transversality_natural");
    const double r = nat.residuals.at(0);
    o.require(!nat.pass && std::abs(std::abs(r) - 0.5) <= 1e-6,
              fmt("T=0.5 control: natural condition residual %.12f fails", r));
    return o;
}

Outcome second_example()
{
    Outcome o;
    const auto lp = load_problem(kProblems + "example52.json");
    ResidualOptions opts;
    opts.quad = lp.quadrature;
    const auto rep = delay_residuals(lp.problem, lp.candidate, opts);
    for (const auto& c : rep.conditions)
        o.require(c.max_abs <= 1e-6, fmt("%-26s max residual %.2e", c.name.c_str(), c.max_abs));
    o.require(std::abs(rep.functional_value + 2) <= 1e-5,
              fmt("functional value %.12f (target -2)", rep.functional_value));
    o.require(rep.metadata.at("branch") == "sigma < T - a", "T=2 branch: " + rep.metadata.at("branch"));
    const auto early = load_problem(kProblems + "example52.json", 0.8);
    const auto rep2 = delay_residuals(early.problem, early.candidate, opts);
    bool advanced = false;
    for (const auto& c : rep2.conditions)
        advanced = advanced || c.name == "euler_lagrange_advanced";
    o.require(rep2.metadata.at("branch") == "sigma >= T - a" && !advanced,
              "T=0.8 branch: " + rep2.metadata.at("branch") + ", no advanced condition");
    return o;
}

Outcome properties()
{
    Outcome o;
    std::mt19937_64 rng(20240603);
    std::uniform_real_distribution<double> u(-1, 1);

    // Linearity.
    {
        const VarOrder a1([](double t, double tau) { return 0.35 + 0.2 * t - 0.1 * tau; }, 1, 0, 1);
        const VarOrder a2([](double t, double tau) { return 1.3 + 0.2 * t * tau; }, 2, 0, 1);
        double worst = 0;
        for (int k = 0; k < 4; ++k) {
            std::vector<double> cf(6);
            std::vector<double> cg(6);
            for (auto& c : cf)
                c = u(rng);
            for (auto& c : cg)
                c = u(rng);
            const double w1 = u(rng);
            const double w2 = u(rng);
            const auto f = polynomial(cf, 0, 1);
            const auto g = polynomial(cg, 0, 1);
            const auto h = FuncApprox::approximate([&](double t) { return w1 * f(t) + w2 * g(t); }, 0, 1);
            const std::vector<std::function<FractionalFn(const FuncApprox&)>> ops{
                [&](const FuncApprox& x) { return left_caputo(x, a1, 0, 1); },
                [&](const FuncApprox& x) { return right_caputo(x, a2, 1, 2); },
                [&](const FuncApprox& x) { return left_rl_integral(x, a1, 0); },
                [&](const FuncApprox& x) { return right_rl_integral(x, a1, 1); },
                [&](const FuncApprox& x) { return left_rl_derivative(x, a2, 0, 2); },
                [&](const FuncApprox& x) { return right_rl_derivative(x, a1, 1, 1); },
                [&](const FuncApprox& x) { return combined_caputo(x, a1, a1, {0.3, 0.6}, 0, 1, 1); },
            };
            for (const auto& op : ops) {
                const auto F = op(f);
                const auto G = op(g);
                const auto H = op(h);
                for (double t : {0.15, 0.5, 0.85})
                    worst = std::max(worst, std::abs(H(t) - (w1 * F(t) + w2 * G(t))));
            }
        }
        o.require(worst <= 1e-8, fmt("linearity: worst deviation %.2e", worst));
    }

    // Annihilation of polynomials of degree <= n - 1.
    {
        double worst = 0;
        for (int n : {1, 2, 3}) {
            const VarOrder alpha([n](double t, double tau) { return n - 0.6 + 0.3 * t * tau; }, n, 0, 1);
            std::vector<double> c(n);
            for (auto& v : c)
                v = u(rng);
            const auto p = polynomial(c, 0, 1);
            const auto l = left_caputo(p, alpha, 0, n);
            const auto r = right_caputo(p, alpha, 1, n);
            for (int i = 0; i < 20; ++i) {
                const double t = (i + 0.5) / 20;
                worst = std::max({worst, std::abs(l(t)), std::abs(r(t))});
            }
        }
        o.require(worst <= 1e-9, fmt("annihilation: worst |value| %.2e", worst));
    }

    // Degenerate weights.
    {
        const VarOrder alpha([](double t, double) { return t * t / 2; }, 1, 0, 1);
        const VarOrder beta([](double t, double tau) { return 0.3 + 0.2 * t * tau; }, 1, 0, 1);
        const auto x = FuncApprox::approximate([](double t) { return std::exp(t) * std::sin(2 * t); }, 0, 1);
        const auto l = left_caputo(x, alpha, 0, 1);
        const auto r = right_caputo(x, beta, 1, 1);
        const auto c10 = combined_caputo(x, alpha, beta, {1, 0}, 0, 1, 1);
        const auto c01 = combined_caputo(x, alpha, beta, {0, 1}, 0, 1, 1);
        const auto cc = combined_caputo(x, alpha, beta, {0.42, 0}, 0, 1, 1);
        const auto d10 = dual_operator(x, alpha, beta, {1, 0}, 0, 0.9);
        const auto d01 = dual_operator(x, alpha, beta, {0, 1}, 0, 0.9);
        const auto rr = right_rl_derivative(x, alpha, 0.9, 1);
        const auto lr = left_rl_derivative(x, beta, 0, 1);
        double exact = 0;
        double scaled = 0;
        for (double t : {0.1, 0.3, 0.5, 0.7}) {
            exact = std::max({exact, std::abs(c10(t) - l(t)), std::abs(c01(t) - r(t)),
                              std::abs(d10(t) - rr(t)), std::abs(d01(t) - lr(t))});
            scaled = std::max(scaled, std::abs(cc(t) - 0.42 * l(t)));
        }
        o.require(exact == 0 && scaled <= 1e-12,
                  fmt("degenerate weights: (1,0)/(0,1) deviation %.1e, (c,0) deviation %.1e", exact, scaled));
    }

    // Beta / Gamma identity.
    {
        std::uniform_real_distribution<double> w(0.1, 20);
        double worst = 0;
        for (int k = 0; k < 1000; ++k) {
            const double t = w(rng);
            const double s = w(rng);
            const double lhs = special::beta_fn(t, s) * special::gamma_fn(t + s);
            const double rhs = special::gamma_fn(t) * special::gamma_fn(s);
            worst = std::max(worst, std::abs(lhs - rhs) / std::abs(rhs));
        }
        o.require(worst <= 1e-12, fmt("Beta/Gamma identity: worst relative error %.2e", worst));
    }

    // First-order problem as a delay problem without delay term.
    {
        const json plain = json::parse(R"json({
          "interval": {"a": 0, "b": 1.5, "n": 1},
          "orders": [{"alpha": "0.3 + 0.2*t*tau", "beta": "0.5 + 0.1*(t - tau)", "gamma1": 0.6, "gamma2": 0.4}],
          "curve": "1 + t/2 + t^2/3",
          "lagrangian": {"L": "x2^2 + x1^2 - t", "dL2": "2*x1", "dL3": "2*x2"},
          "initial": {"x_a": 1},
          "terminal_cost": {"phi": "t^2*x1", "d1phi": "2*t*x1", "d2phi": "t^2"},
          "candidate_T": 1
        })json");
        json delayed = plain;
        delayed.erase("initial");
        delayed["lagrangian"]["dL4"] = "0";
        delayed["delay"] = {{"sigma", 1.5}, {"history", "1 + t/2 + t^2/3"}};
        const auto p = parse_problem(plain.dump());
        const auto d = parse_problem(delayed.dump());
        ResidualOptions opts;
        opts.grid_points = 9;
        const auto rp = optimality_residuals(p.problem, p.candidate, opts);
        const auto rd = delay_residuals(d.problem, d.candidate, opts);
        const auto pair = [](const ResidualReport& r, const std::string& name) {
            return r.condition(name).residuals;
        };
        double worst = 0;
        const std::vector<std::pair<std::string, std::string>> names{
            {"euler_lagrange_inner", "euler_lagrange_inner"},
            {"euler_lagrange_outer", "euler_lagrange_outer"},
            {"transversality_natural", "transversality_natural"},
            {"transversality_T_j0", "transversality_T"},
            {"transversality_b_j0", "transversality_b"},
        };
        bool shapes = rd.metadata.at("branch") == "sigma >= T - a";
        for (const auto& [a, b] : names) {
            const auto x = pair(rp, a);
            const auto y = pair(rd, b);
            shapes = shapes && x.size() == y.size() && !x.empty();
            for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i)
                worst = std::max(worst, std::abs(x[i] - y[i]));
        }
        o.require(shapes && worst <= 1e-9,
                  fmt("first-order reduction to the delay conditions: worst pointwise difference %.2e", worst));
    }
    return o;
}

} // namespace

int main()
{
    struct Criterion {
        int id;
        const char* title;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "Table 1 reproduction", table1},
        {2, "appendix example echoes", echoes},
        {3, "power-function oracle suite", power_oracle},
        {4, "integration by parts", integration_by_parts},
        {5, "higher-order example", first_example},
        {6, "delay example", second_example},
        {7, "property suite", properties},
    };
    bool all = true;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        all = all && o.pass;
        std::printf("criterion %d %s: %s (%.1f s)\n", c.id, o.pass ? "PASS" : "FAIL", c.title, seconds_since(t0));
        for (const auto& n : o.notes)
            std::printf("%s\n", n.c_str());
        std::fflush(stdout);
    }
    return all ? 0 : 1;
}
