#include "varfrac/problem.hpp"

#include <algorithm>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "varfrac/error.hpp"
#include "varfrac/expr.hpp"

namespace varfrac {
namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what)
{
    throw InvalidArgument("problem file: " + where + ": " + what);
}

void only_keys(const json& obj, const std::string& where, std::initializer_list<std::string_view> allowed)
{
    if (!obj.is_object())
        fail(where, "expected an object");
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (auto a : allowed)
            known = known || key == a;
        if (!known)
            fail(where, "unknown key \"" + key + "\"");
    }
}

const json& need(const json& obj, const std::string& key, const std::string& where)
{
    if (!obj.contains(key))
        fail(where, "missing key \"" + key + "\"");
    return obj.at(key);
}

double number(const json& v, const std::string& where)
{
    if (!v.is_number())
        fail(where, "expected a number");
    return v.get<double>();
}

std::string text(const json& v, const std::string& where)
{
    if (!v.is_string())
        fail(where, "expected an expression string");
    return v.get<std::string>();
}

expr::Expr parse_at(const json& v, const std::string& where, const expr::ArityProfile& profile)
{
    const std::string src = text(v, where);
    try {
        return expr::parse(src, profile);
    } catch (const expr::ParseError& e) {
        fail(where, e.what());
    }
}

void collect_variables(const expr::Expr& e, std::set<std::string>& out)
{
    if (e->kind == expr::NodeKind::variable)
        out.insert(e->name);
    for (const auto& arg : e->args)
        collect_variables(arg, out);
}

std::shared_ptr<const expr::Compiled> compile(const expr::Expr& e, std::vector<std::string> slots)
{
    return std::make_shared<const expr::Compiled>(e, std::move(slots));
}

ScalarFn curve_fn(const expr::Expr& e)
{
    auto c = compile(e, {"t"});
    return [c](double t) { return (*c)(t); };
}

OrderFn order_fn(const expr::Expr& e)
{
    auto c = compile(e, {"t", "tau"});
    return [c](double t, double tau) { return (*c)(t, tau); };
}

TerminalFn terminal_fn(const expr::Expr& e)
{
    auto c = compile(e, {"t", "x1"});
    return [c](double t, double x) { return (*c)(t, x); };
}

// Values of the reference slots y1..y(n+2) at t.
struct Reference {
    ScalarFn f;
    std::vector<FractionalFn> derivs;
    double sigma = 0.0;
};

} // namespace

LoadedProblem parse_problem(std::string_view json_text, std::optional<double> candidate_T)
{
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        fail("document", e.what());
    }
    only_keys(doc, "document",
              {"schema", "name", "interval", "orders", "curve", "reference", "lagrangian", "terminal_cost",
               "initial", "delay", "quadrature", "candidate_T"});
    if (doc.contains("schema") && !(doc["schema"].is_number_integer() && doc["schema"].get<int>() == 1))
        fail("schema", "only schema 1 is supported");

    const std::string name = doc.contains("name") ? text(doc["name"], "name") : std::string("problem");
    VariationalProblem p;
    QuadConfig quad;

    const json& interval = need(doc, "interval", "document");
    only_keys(interval, "interval", {"a", "b", "n"});
    p.a = number(need(interval, "a", "interval"), "interval.a");
    p.b = number(need(interval, "b", "interval"), "interval.b");
    const json& nj = need(interval, "n", "interval");
    if (!nj.is_number_integer() || nj.get<int>() < 1)
        fail("interval.n", "expected a positive integer");
    p.n = nj.get<int>();
    if (!(p.a < p.b))
        fail("interval", "need a < b");

    if (doc.contains("quadrature")) {
        const json& q = doc["quadrature"];
        only_keys(q, "quadrature", {"abs_tol", "rel_tol", "panel_points", "max_panels"});
        if (q.contains("abs_tol"))
            quad.abs_tol = number(q["abs_tol"], "quadrature.abs_tol");
        if (q.contains("rel_tol"))
            quad.rel_tol = number(q["rel_tol"], "quadrature.rel_tol");
        if (q.contains("panel_points"))
            quad.panel_points = static_cast<int>(number(q["panel_points"], "quadrature.panel_points"));
        if (q.contains("max_panels"))
            quad.max_panels = static_cast<int>(number(q["max_panels"], "quadrature.max_panels"));
        quad.validate();
    }

    const json& orders = need(doc, "orders", "document");
    if (!orders.is_array() || orders.size() != static_cast<std::size_t>(p.n))
        fail("orders", "expected an array of n entries");
    for (std::size_t i = 0; i < orders.size(); ++i) {
        const std::string where = "orders[" + std::to_string(i) + "]";
        const json& o = orders[i];
        only_keys(o, where, {"alpha", "beta", "gamma1", "gamma2"});
        const int band = static_cast<int>(i) + 1;
        CombineWeights w{number(need(o, "gamma1", where), where + ".gamma1"),
                         number(need(o, "gamma2", where), where + ".gamma2")};
        try {
            w.validate();
            p.orders.push_back(OrderTriple{
                VarOrder(order_fn(parse_at(need(o, "alpha", where), where + ".alpha", expr::ArityProfile::order())),
                         band, p.a, p.b),
                VarOrder(order_fn(parse_at(need(o, "beta", where), where + ".beta", expr::ArityProfile::order())),
                         band, p.a, p.b),
                w});
        } catch (const expr::ParseError&) {
            throw;
        } catch (const InvalidArgument& e) {
            fail(where, e.what());
        }
    }

    std::optional<double> sigma;
    ScalarFn history;
    if (doc.contains("delay")) {
        const json& d = doc["delay"];
        only_keys(d, "delay", {"sigma", "history"});
        sigma = number(need(d, "sigma", "delay"), "delay.sigma");
        if (!(*sigma > 0.0))
            fail("delay.sigma", "must be positive");
        if (p.n != 1)
            fail("delay", "delay problems need n = 1");
        history = curve_fn(parse_at(need(d, "history", "delay"), "delay.history", expr::ArityProfile::curve()));
        p.delay = DelaySpec{*sigma, history};
    }

    const int slots = p.n + 1 + (sigma ? 1 : 0);
    const int reference_slots = doc.contains("reference") ? slots : 0;
    const expr::ArityProfile bundle_profile = expr::ArityProfile::bundle(slots, reference_slots);

    const ScalarFn curve = curve_fn(parse_at(need(doc, "curve", "document"), "curve", expr::ArityProfile::curve()));
    const FuncApprox curve_approx = FuncApprox::approximate(curve, p.a, p.b);

    std::shared_ptr<Reference> reference;
    if (doc.contains("reference")) {
        const ScalarFn f = curve_fn(parse_at(doc["reference"], "reference", expr::ArityProfile::curve()));
        reference = std::make_shared<Reference>();
        reference->f = f;
        reference->sigma = sigma.value_or(0.0);
        const FuncApprox fa = FuncApprox::approximate(f, p.a, p.b);
        for (int i = 1; i <= p.n; ++i) {
            const OrderTriple& o = p.orders[static_cast<std::size_t>(i - 1)];
            reference->derivs.push_back(
                combined_caputo(fa, o.alpha, o.beta, o.weights, p.a, p.b, i, quad));
        }
    }

    auto bundle_fn = [&](const json& v, const std::string& where) -> BundleFn {
        const expr::Expr e = parse_at(v, where, bundle_profile);
        std::set<std::string> used;
        collect_variables(e, used);
        std::vector<std::string> names{"t"};
        for (int k = 1; k <= slots; ++k)
            names.push_back("x" + std::to_string(k));
        for (int k = 1; k <= reference_slots; ++k)
            names.push_back("y" + std::to_string(k));
        std::vector<bool> need_y(static_cast<std::size_t>(reference_slots), false);
        for (int k = 1; k <= reference_slots; ++k)
            need_y[static_cast<std::size_t>(k - 1)] = used.count("y" + std::to_string(k)) > 0;
        auto c = compile(e, names);
        const int n = p.n;
        const double a = p.a;
        const ScalarFn hist = history;
        return [c, n, slots, reference_slots, need_y, reference, a, hist](const ArgumentBundle& b) {
            std::vector<double> v(static_cast<std::size_t>(1 + slots + reference_slots), 0.0);
            v[0] = b.t;
            v[1] = b.x;
            for (int i = 0; i < n && i < static_cast<int>(b.combined_derivs.size()); ++i)
                v[static_cast<std::size_t>(2 + i)] = b.combined_derivs[static_cast<std::size_t>(i)];
            if (slots == n + 2)
                v[static_cast<std::size_t>(n + 2)] = b.delayed_x.value_or(0.0);
            for (int k = 1; k <= reference_slots; ++k) {
                if (!need_y[static_cast<std::size_t>(k - 1)])
                    continue;
                double y = 0.0;
                if (k == 1)
                    y = reference->f(b.t);
                else if (k <= n + 1)
                    y = reference->derivs[static_cast<std::size_t>(k - 2)].evaluate(b.t).value;
                else {
                    const double s = b.t - reference->sigma;
                    y = s < a && hist ? hist(s) : reference->f(s);
                }
                v[static_cast<std::size_t>(slots + k)] = y;
            }
            return (*c)(v);
        };
    };

    const json& lag = need(doc, "lagrangian", "document");
    const int last = p.n + 2 + (sigma ? 1 : 0);
    std::vector<std::string> lag_keys{"L"};
    for (int k = 2; k <= last; ++k)
        lag_keys.push_back("dL" + std::to_string(k));
    if (!lag.is_object())
        fail("lagrangian", "expected an object");
    for (const auto& [key, value] : lag.items())
        if (std::find(lag_keys.begin(), lag_keys.end(), key) == lag_keys.end())
            fail("lagrangian", "unknown key \"" + key + "\"");
    p.lagrangian = bundle_fn(need(lag, "L", "lagrangian"), "lagrangian.L");
    for (int k = 2; k <= last; ++k) {
        const std::string key = "dL" + std::to_string(k);
        p.partials.push_back(bundle_fn(need(lag, key, "lagrangian"), "lagrangian." + key));
    }

    const json& tc = need(doc, "terminal_cost", "document");
    only_keys(tc, "terminal_cost", {"phi", "d1phi", "d2phi"});
    p.terminal.phi = terminal_fn(parse_at(need(tc, "phi", "terminal_cost"), "terminal_cost.phi", expr::ArityProfile::terminal()));
    p.terminal.d1phi =
        terminal_fn(parse_at(need(tc, "d1phi", "terminal_cost"), "terminal_cost.d1phi", expr::ArityProfile::terminal()));
    p.terminal.d2phi =
        terminal_fn(parse_at(need(tc, "d2phi", "terminal_cost"), "terminal_cost.d2phi", expr::ArityProfile::terminal()));

    if (doc.contains("initial")) {
        const json& init = doc["initial"];
        only_keys(init, "initial", {"x_a", "derivs"});
        p.initial_values.push_back(number(need(init, "x_a", "initial"), "initial.x_a"));
        if (init.contains("derivs")) {
            const json& ds = init["derivs"];
            if (!ds.is_array())
                fail("initial.derivs", "expected an array");
            for (const auto& dv : ds)
                p.initial_values.push_back(number(dv, "initial.derivs"));
        }
        if (p.initial_values.size() != static_cast<std::size_t>(p.n))
            fail("initial", "expected x(a) and n - 1 derivatives");
    } else if (!sigma) {
        fail("document", "missing key \"initial\"");
    }

    LoadedProblem out{name, std::move(p),
                      Candidate{curve_approx, candidate_T ? *candidate_T
                                                          : number(need(doc, "candidate_T", "document"), "candidate_T")},
                      quad, sigma.has_value()};

    try {
        out.problem.validate();
        validate_candidate(out.problem, out.candidate);
    } catch (const InvalidArgument& e) {
        fail("problem", e.what());
    }
    return out;
}

LoadedProblem load_problem(const std::filesystem::path& path, std::optional<double> candidate_T)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InvalidArgument("problem file: cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_problem(buf.str(), candidate_T);
}

} // namespace varfrac
