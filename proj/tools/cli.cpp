#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "varfrac/error.hpp"
#include "varfrac/expr.hpp"
#include "varfrac/func_approx.hpp"
#include "varfrac/operators.hpp"
#include "varfrac/oracle.hpp"
#include "varfrac/parallel.hpp"
#include "varfrac/problem.hpp"
#include "varfrac/variational.hpp"

namespace varfrac::cli {
namespace {

using json = nlohmann::ordered_json;

struct Globals {
    std::optional<double> tol;
    bool json_out = false;
    std::optional<int> quad_panels;
    std::optional<int> quad_points;
};

// A check that did not meet its tolerance.
struct CheckFailed {};

QuadConfig quad_config(const Globals& g, QuadConfig cfg = {})
{
    if (g.quad_panels)
        cfg.max_panels = *g.quad_panels;
    if (g.quad_points)
        cfg.panel_points = *g.quad_points;
    cfg.validate();
    return cfg;
}

ScalarFn curve_of(const std::string& src, const std::string& what)
{
    try {
        auto c = std::make_shared<const expr::Compiled>(expr::parse(src, expr::ArityProfile::curve()),
                                                         std::vector<std::string>{"t"});
        return [c](double t) { return (*c)(t); };
    } catch (const expr::ParseError& e) {
        throw InvalidArgument(what + ": " + e.what());
    }
}

OrderFn order_of(const std::string& src, const std::string& what)
{
    try {
        auto c = std::make_shared<const expr::Compiled>(expr::parse(src, expr::ArityProfile::order()),
                                                         std::vector<std::string>{"t", "tau"});
        return [c](double t, double tau) { return (*c)(t, tau); };
    } catch (const expr::ParseError& e) {
        throw InvalidArgument(what + ": " + e.what());
    }
}

// Order checked on the square spanned by the operative interval [lo, hi].
VarOrder region_order(const OrderFn& fn, int n, double lo, double hi, double length)
{
    const double min_width = 1e-9 * length;
    if (hi - lo < min_width)
        hi = lo + min_width;
    return VarOrder(fn, n, lo, hi);
}

void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows)
{
    for (std::size_t i = 0; i < header.size(); ++i)
        out << (i ? "," : "") << header[i];
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out << (i ? "," : "") << format_number(row[i]);
        out << '\n';
    }
}

json rows_json(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows)
{
    json out = json::array();
    for (const auto& row : rows) {
        json r = json::object();
        for (std::size_t i = 0; i < header.size(); ++i)
            r[header[i]] = row[i];
        out.push_back(std::move(r));
    }
    return out;
}

void emit_table(const Globals& g, std::ostream& out, const std::string& command,
                const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows)
{
    if (g.json_out) {
        json doc{{"schema", 1}, {"command", command}, {"rows", rows_json(header, rows)}};
        out << doc.dump(2) << '\n';
    } else {
        write_csv(out, header, rows);
    }
}

// ---- eval ----------------------------------------------------------------

struct EvalArgs {
    std::string op;
    std::string x;
    std::string alpha;
    std::string beta;
    double a = 0.0;
    double b = 1.0;
    int n = 1;
    double gamma1 = 0.5;
    double gamma2 = 0.5;
    std::vector<double> t;
    std::string spec;
};

void load_eval_spec(EvalArgs& e)
{
    std::ifstream in(e.spec, std::ios::binary);
    if (!in)
        throw InvalidArgument("eval: cannot open " + e.spec);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& err) {
        throw InvalidArgument(std::string("eval spec: ") + err.what());
    }
    if (!doc.is_object())
        throw InvalidArgument("eval spec: expected an object");
    for (const auto& [key, value] : doc.items()) {
        auto num = [&] {
            if (!value.is_number())
                throw InvalidArgument("eval spec: " + key + " must be a number");
            return value.get<double>();
        };
        auto str = [&] {
            if (!value.is_string())
                throw InvalidArgument("eval spec: " + key + " must be a string");
            return value.get<std::string>();
        };
        if (key == "schema" || key == "name" || key == "expected")
            continue;
        if (key == "op")
            e.op = str();
        else if (key == "x")
            e.x = str();
        else if (key == "alpha")
            e.alpha = str();
        else if (key == "beta")
            e.beta = str();
        else if (key == "a")
            e.a = num();
        else if (key == "b")
            e.b = num();
        else if (key == "n") {
            if (!value.is_number_integer())
                throw InvalidArgument("eval spec: n must be an integer");
            e.n = value.get<int>();
        } else if (key == "gamma1")
            e.gamma1 = num();
        else if (key == "gamma2")
            e.gamma2 = num();
        else if (key == "t") {
            if (!value.is_array())
                throw InvalidArgument("eval spec: t must be an array");
            e.t.clear();
            for (const auto& v : value) {
                if (!v.is_number())
                    throw InvalidArgument("eval spec: t entries must be numbers");
                e.t.push_back(v.get<double>());
            }
        } else
            throw InvalidArgument("eval spec: unknown key \"" + key + "\"");
    }
}

// Value and error estimate of one operator at t.
OperatorValue eval_operator(const EvalArgs& e, const FuncApprox& x, double t, const QuadConfig& cfg)
{
    const double length = e.b - e.a;
    auto alpha_on = [&](double lo, double hi) { return region_order(order_of(e.alpha, "--alpha"), e.n, lo, hi, length); };
    const std::string& op = e.op;
    if (op == "left-caputo")
        return left_caputo(x, alpha_on(e.a, t), e.a, e.n, cfg).evaluate(t);
    if (op == "right-caputo")
        return right_caputo(x, alpha_on(t, e.b), e.b, e.n, cfg).evaluate(t);
    if (op == "left-rl-integral")
        return left_rl_integral(x, alpha_on(e.a, t), e.a, cfg).evaluate(t);
    if (op == "right-rl-integral")
        return right_rl_integral(x, alpha_on(t, e.b), e.b, cfg).evaluate(t);
    if (op == "left-rl-derivative")
        return left_rl_derivative(x, alpha_on(e.a, t), e.a, e.n, cfg).evaluate(t);
    if (op == "right-rl-derivative")
        return right_rl_derivative(x, alpha_on(t, e.b), e.b, e.n, cfg).evaluate(t);
    if (op == "combined-caputo") {
        if (e.beta.empty())
            throw InvalidArgument("eval: combined-caputo needs --beta");
        const VarOrder beta = region_order(order_of(e.beta, "--beta"), e.n, t, e.b, length);
        return combined_caputo(x, alpha_on(e.a, t), beta, CombineWeights{e.gamma1, e.gamma2}, e.a, e.b, e.n, cfg)
            .evaluate(t);
    }
    throw InvalidArgument("eval: unknown operator \"" + op + "\"");
}

void cmd_eval(const Globals& g, EvalArgs e, std::ostream& out)
{
    if (!e.spec.empty())
        load_eval_spec(e);
    if (e.op.empty() || e.x.empty() || e.alpha.empty())
        throw InvalidArgument("eval: --op, --x and --alpha are required");
    if (e.n < 1)
        throw InvalidArgument("eval: n must be a positive integer");
    if (!(e.a < e.b))
        throw InvalidArgument("eval: need a < b");
    if (e.t.empty())
        throw InvalidArgument("eval: at least one --t is required");
    static const std::vector<std::string> ops{"left-caputo",        "right-caputo",        "left-rl-integral",
                                              "right-rl-integral",  "left-rl-derivative",  "right-rl-derivative",
                                              "combined-caputo"};
    if (std::find(ops.begin(), ops.end(), e.op) == ops.end())
        throw InvalidArgument("eval: unknown operator \"" + e.op + "\"");
    for (double t : e.t)
        if (!(t >= e.a && t <= e.b))
            throw DomainError("eval: t = " + format_number(t) + " outside [a, b]");
    CombineWeights{e.gamma1, e.gamma2}.validate();
    QuadConfig cfg;
    if (g.tol) {
        cfg.abs_tol = *g.tol;
        cfg.rel_tol = *g.tol;
    }
    cfg = quad_config(g, cfg);
    const FuncApprox x = FuncApprox::approximate(curve_of(e.x, "--x"), e.a, e.b);
    // Checks orders and operator names before any quadrature runs.
    for (double t : e.t) {
        if (e.op == "combined-caputo" || e.op.find("left") == 0)
            region_order(order_of(e.alpha, "--alpha"), e.n, e.a, t, e.b - e.a);
        if (e.op.find("right") == 0)
            region_order(order_of(e.alpha, "--alpha"), e.n, t, e.b, e.b - e.a);
    }
    std::vector<std::vector<double>> rows(e.t.size());
    parallel_for(e.t.size(), [&](std::size_t i) {
        const OperatorValue v = eval_operator(e, x, e.t[i], cfg);
        rows[i] = {e.t[i], v.value, v.error};
    });
    emit_table(g, out, "eval", {"t", "value", "error"}, rows);
}

// ---- table1 ---------------------------------------------------------------

void cmd_table1(const Globals& g, std::ostream& out)
{
    const double tol = g.tol.value_or(1e-6);
    const QuadConfig cfg = quad_config(g);
    const FuncApprox x = FuncApprox::approximate([](double t) { return t * t * t * t; }, 0.0, 1.0);
    const VarOrder alpha([](double t, double) { return t * t / 2.0; }, 1, 0.0, 1.0);
    const FractionalFn d = left_caputo(x, alpha, 0.0, 1, cfg);
    const auto table = oracle::table1_rows();
    std::vector<std::vector<double>> rows(table.size());
    parallel_for(table.size(), [&](std::size_t i) {
        const double approx = d.evaluate(table[i].t).value;
        rows[i] = {table[i].t, table[i].exact, approx, table[i].exact - approx};
    });
    emit_table(g, out, "table1", {"t", "exact", "approximation", "error"}, rows);
    for (const auto& r : rows)
        if (!(std::abs(r[3]) <= tol))
            throw CheckFailed{};
}

// ---- figure-data ------------------------------------------------------------

struct Figure {
    ScalarFn x;
    OrderFn alpha;
    bool integral;
};

void cmd_figure_data(const Globals& g, const std::string& id, std::ostream& out)
{
    Figure f;
    if (id == "2.1")
        f = {[](double t) { return t * t * t * t; }, [](double t, double) { return t * t / 2.0; }, false};
    else if (id == "2.2")
        f = {[](double t) { return std::exp(t); }, [](double t, double) { return t * t / 2.0; }, false};
    else if (id == "2.3")
        f = {[](double t) { return t * t; }, [](double t, double tau) { return (t * t + tau * tau) / 4.0; }, true};
    else
        throw InvalidArgument("figure-data: unknown example id \"" + id + "\" (expected 2.1, 2.2 or 2.3)");
    const QuadConfig cfg = quad_config(g);
    const FuncApprox x = FuncApprox::approximate(f.x, 0.0, 1.0);
    const VarOrder alpha(f.alpha, 1, 0.0, 1.0);
    const FractionalFn left = f.integral ? left_rl_integral(x, alpha, 0.0, cfg) : left_caputo(x, alpha, 0.0, 1, cfg);
    const FractionalFn right = f.integral ? right_rl_integral(x, alpha, 1.0, cfg) : right_caputo(x, alpha, 1.0, 1, cfg);
    constexpr std::size_t count = 101;
    std::vector<std::vector<double>> rows(count);
    parallel_for(count, [&](std::size_t i) {
        const double t = static_cast<double>(i) / 100.0;
        rows[i] = {t, f.x(t), left.evaluate(t).value, right.evaluate(t).value};
    });
    emit_table(g, out, "figure-data", {"t", "x", "left", "right"}, rows);
}

// ---- ibp-check --------------------------------------------------------------

struct IbpArgs {
    std::string x;
    std::string y;
    std::string alpha;
    double a = 0.0;
    double b = 1.0;
    int n = 1;
    std::string side = "left";
};

void cmd_ibp_check(const Globals& g, const IbpArgs& args, std::ostream& out)
{
    if (args.n < 1)
        throw InvalidArgument("ibp-check: n must be a positive integer");
    if (!(args.a < args.b))
        throw InvalidArgument("ibp-check: need a < b");
    if (args.side != "left" && args.side != "right")
        throw InvalidArgument("ibp-check: side must be left or right");
    const double tol = g.tol.value_or(1e-5);
    IbpOptions opts;
    opts.quad = quad_config(g, opts.quad);
    const FuncApprox x = FuncApprox::approximate(curve_of(args.x, "--x"), args.a, args.b);
    const FuncApprox y = FuncApprox::approximate(curve_of(args.y, "--y"), args.a, args.b);
    const VarOrder alpha(order_of(args.alpha, "--alpha"), args.n, args.a, args.b);
    const IbpResult r =
        ibp_check(x, y, alpha, args.a, args.b, args.n, args.side == "left" ? IbpSide::left : IbpSide::right, opts);
    const bool pass = r.gap <= tol;
    if (g.json_out) {
        json doc{{"schema", 1}, {"command", "ibp-check"}, {"side", args.side}, {"n", args.n},
                 {"lhs", r.lhs}, {"rhs", r.rhs}, {"boundary", r.boundary}, {"gap", r.gap},
                 {"tolerance", tol}, {"pass", pass}};
        out << doc.dump(2) << '\n';
    } else {
        out << "lhs," << format_number(r.lhs) << '\n'
            << "rhs," << format_number(r.rhs) << '\n'
            << "gap," << format_number(r.gap) << '\n';
    }
    if (!pass)
        throw CheckFailed{};
}

// ---- el-check ---------------------------------------------------------------

void cmd_el_check(const Globals& g, const std::string& path, std::optional<double> candidate_T,
                  std::optional<int> grid, std::ostream& out)
{
    const LoadedProblem lp = load_problem(path, candidate_T);
    ResidualOptions opts;
    opts.quad = quad_config(g, lp.quadrature);
    if (g.tol)
        opts.tolerance = *g.tol;
    if (grid) {
        if (*grid < 1)
            throw InvalidArgument("el-check: grid must be positive");
        opts.grid_points = *grid;
    }
    const ResidualReport rep = lp.delay ? delay_residuals(lp.problem, lp.candidate, opts)
                                        : optimality_residuals(lp.problem, lp.candidate, opts);
    json conditions = json::array();
    for (const auto& c : rep.conditions)
        conditions.push_back({{"name", c.name},
                              {"points", c.grid.size()},
                              {"max_abs", c.max_abs},
                              {"pass", c.pass},
                              {"reduced_accuracy", c.reduced_accuracy},
                              {"grid", c.grid},
                              {"residuals", c.residuals}});
    json meta = json::object();
    for (const auto& [k, v] : rep.metadata)
        meta[k] = v;
    json doc{{"schema", 1},
             {"command", "el-check"},
             {"problem", lp.name},
             {"terminal_time", lp.candidate.T},
             {"tolerance", rep.tolerance},
             {"functional_value", rep.functional_value},
             {"all_pass", rep.all_pass()},
             {"metadata", meta},
             {"conditions", conditions}};
    out << doc.dump(2) << '\n';
    if (!rep.all_pass())
        throw CheckFailed{};
}

} // namespace

std::string format_number(double v)
{
    if (v == 0.0)
        return "0";
    char buf[64];
    // Shortest form first; fall back to 15 significant digits when longer.
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    std::string shortest(buf, res.ptr);
    int digits = 0;
    for (char c : shortest) {
        if (c == 'e')
            break;
        digits += (c >= '0' && c <= '9');
    }
    if (digits <= 15)
        return shortest;
    res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 15);
    return std::string(buf, res.ptr);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Variable-order fractional operators and optimality checks", "varfrac"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    double tol = 0.0;
    int panels = 0;
    int points = 0;
    auto* tol_opt = app.add_option("--tol", tol, "Pass tolerance of checks; quadrature tolerance for eval");
    app.add_flag("--json", g.json_out, "Machine-readable output");
    auto* panels_opt = app.add_option("--quad-panels", panels, "Panel budget per integral");
    auto* points_opt = app.add_option("--quad-points", points, "Gauss-Legendre nodes per panel");

    EvalArgs ea;
    auto* eval = app.add_subcommand("eval", "Evaluate a fractional operator at points t");
    eval->add_option("--op", ea.op,
                     "left-caputo, right-caputo, left-rl-integral, right-rl-integral, "
                     "left-rl-derivative, right-rl-derivative or combined-caputo");
    eval->add_option("--x", ea.x, "Function of t");
    eval->add_option("--alpha", ea.alpha, "Order alpha(t, tau)");
    eval->add_option("--beta", ea.beta, "Order beta(t, tau) of the right part (combined-caputo)");
    eval->add_option("--a", ea.a, "Lower end")->capture_default_str();
    eval->add_option("--b", ea.b, "Upper end")->capture_default_str();
    eval->add_option("--n", ea.n, "Order band (n - 1, n)")->capture_default_str();
    eval->add_option("--gamma1", ea.gamma1, "Weight of the left part")->capture_default_str();
    eval->add_option("--gamma2", ea.gamma2, "Weight of the right part")->capture_default_str();
    eval->add_option("--t", ea.t, "Evaluation points")->delimiter(',');
    eval->add_option("--spec", ea.spec, "JSON file with the same fields");

    auto* table1 = app.add_subcommand("table1", "Left Caputo derivative of t^4 against the closed form");

    std::string figure_id;
    auto* figure = app.add_subcommand("figure-data", "Operator curves of the appendix examples on 101 points");
    figure->add_option("id", figure_id, "2.1, 2.2 or 2.3")->required();

    IbpArgs ia;
    auto* ibp = app.add_subcommand("ibp-check", "Both sides of the fractional integration by parts");
    ibp->add_option("--x", ia.x, "Function of t")->required();
    ibp->add_option("--y", ia.y, "Function of t")->required();
    ibp->add_option("--alpha", ia.alpha, "Order alpha(t, tau) in (n - 1, n)")->required();
    ibp->add_option("--a", ia.a)->capture_default_str();
    ibp->add_option("--b", ia.b)->capture_default_str();
    ibp->add_option("--n", ia.n)->capture_default_str();
    ibp->add_option("--side", ia.side, "left or right")->capture_default_str();

    std::string problem_path;
    double candidate_T = 0.0;
    int grid = 0;
    auto* el = app.add_subcommand("el-check", "Euler-Lagrange and transversality residuals of a problem file");
    el->add_option("problem", problem_path, "Problem file (JSON)")->required();
    auto* T_opt = el->add_option("--candidate-T", candidate_T, "Override the candidate terminal time");
    auto* grid_opt = el->add_option("--grid", grid, "Residual points per interval");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return usage;
    }
    if (*tol_opt) {
        if (!(tol > 0.0)) {
            err << "error: --tol must be positive\n";
            return usage;
        }
        g.tol = tol;
    }
    if (*panels_opt)
        g.quad_panels = panels;
    if (*points_opt)
        g.quad_points = points;

    try {
        if (*eval)
            cmd_eval(g, ea, out);
        else if (*table1)
            cmd_table1(g, out);
        else if (*figure)
            cmd_figure_data(g, figure_id, out);
        else if (*ibp)
            cmd_ibp_check(g, ia, out);
        else if (*el)
            cmd_el_check(g, problem_path, *T_opt ? std::optional<double>(candidate_T) : std::nullopt,
                         *grid_opt ? std::optional<int>(grid) : std::nullopt, out);
    } catch (const CheckFailed&) {
        return failed;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << '\n';
        return usage;
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << '\n';
        // Budget exhaustion is a check failure for operator commands and a
        // separate outcome for el-check.
        return *el ? budget : failed;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return failed;
    }
    return ok;
}

} // namespace varfrac::cli
