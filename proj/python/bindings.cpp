#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cli.hpp"
#include "varfrac/error.hpp"
#include "varfrac/expr.hpp"
#include "varfrac/operators.hpp"
#include "varfrac/oracle.hpp"
#include "varfrac/problem.hpp"
#include "varfrac/special.hpp"
#include "varfrac/variational.hpp"

namespace py = pybind11;
using namespace varfrac;

namespace {

using CurveSource = std::variant<std::string, py::function>;
using OrderSource = std::variant<std::string, py::function>;

// Python callables may be reached from worker threads while the calling
// thread has released the GIL.
template <typename R, typename... A>
std::function<R(A...)> guarded(py::function f)
{
    auto held = std::shared_ptr<py::function>(new py::function(std::move(f)), [](py::function* p) {
        py::gil_scoped_acquire gil;
        delete p;
    });
    return [held](A... args) -> R {
        py::gil_scoped_acquire gil;
        return (*held)(args...).template cast<R>();
    };
}

ScalarFn curve_fn(const CurveSource& src)
{
    if (const auto* s = std::get_if<std::string>(&src)) {
        auto c = std::make_shared<const expr::Compiled>(expr::parse(*s, expr::ArityProfile::curve()),
                                                         std::vector<std::string>{"t"});
        return [c](double t) { return (*c)(t); };
    }
    return guarded<double, double>(std::get<py::function>(src));
}

OrderFn order_fn(const OrderSource& src)
{
    if (const auto* s = std::get_if<std::string>(&src)) {
        auto c = std::make_shared<const expr::Compiled>(expr::parse(*s, expr::ArityProfile::order()),
                                                         std::vector<std::string>{"t", "tau"});
        return [c](double t, double tau) { return (*c)(t, tau); };
    }
    return guarded<double, double, double>(std::get<py::function>(src));
}

QuadConfig quad_config(double abs_tol, double rel_tol)
{
    QuadConfig cfg;
    cfg.abs_tol = abs_tol;
    cfg.rel_tol = rel_tol;
    cfg.validate();
    return cfg;
}

py::dict report_dict(const ResidualReport& rep)
{
    py::list conditions;
    for (const auto& c : rep.conditions) {
        py::dict d;
        d["name"] = c.name;
        d["grid"] = c.grid;
        d["residuals"] = c.residuals;
        d["max_abs"] = c.max_abs;
        d["pass"] = c.pass;
        d["reduced_accuracy"] = c.reduced_accuracy;
        conditions.append(d);
    }
    py::dict out;
    out["conditions"] = conditions;
    out["functional_value"] = rep.functional_value;
    out["tolerance"] = rep.tolerance;
    out["metadata"] = rep.metadata;
    out["all_pass"] = rep.all_pass();
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Variable-order fractional operators and optimality checks";

    auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    auto invalid = py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", invalid.ptr());
    auto numerical = py::register_exception<NumericalError>(m, "NumericalError", error.ptr());
    py::register_exception<QuadratureBudgetExceeded>(m, "QuadratureBudgetExceeded", numerical.ptr());
    py::register_exception<NonConvergence>(m, "NonConvergence", numerical.ptr());
    py::register_exception<NonFiniteValue>(m, "NonFiniteValue", numerical.ptr());
    py::register_exception<OverflowError>(m, "OverflowError", numerical.ptr());

    m.def("gamma", &special::gamma_fn, py::arg("x"));
    m.def("log_gamma", &special::log_gamma, py::arg("x"));
    m.def("rgamma", &special::rgamma, py::arg("x"));
    m.def("beta", &special::beta_fn, py::arg("t"), py::arg("u"));

    py::class_<FuncApprox>(m, "FuncApprox")
        .def(py::init([](const CurveSource& f, double lo, double hi, double tol) {
                 auto fn = curve_fn(f);
                 py::gil_scoped_release release;
                 return FuncApprox::approximate(fn, lo, hi, tol);
             }),
             py::arg("f"), py::arg("lo"), py::arg("hi"), py::arg("tol") = FuncApprox::kDefaultTol)
        .def("__call__", &FuncApprox::eval, py::arg("t"))
        .def("derivative", &FuncApprox::derivative, py::arg("k") = 1)
        .def("antiderivative", &FuncApprox::antiderivative)
        .def("definite_integral", &FuncApprox::definite_integral)
        .def("degree", &FuncApprox::degree)
        .def_property_readonly("lo", &FuncApprox::lo)
        .def_property_readonly("hi", &FuncApprox::hi)
        .def_property_readonly("coefficients", [](const FuncApprox& f) {
            const auto c = f.coefficients();
            return std::vector<double>(c.begin(), c.end());
        });

    py::class_<PiecewiseApprox>(m, "PiecewiseApprox")
        .def(py::init([](const CurveSource& f, double lo, double hi, double tol) {
                 auto fn = curve_fn(f);
                 py::gil_scoped_release release;
                 return PiecewiseApprox::adaptive(fn, lo, hi, tol);
             }),
             py::arg("f"), py::arg("lo"), py::arg("hi"), py::arg("tol") = PiecewiseApprox::kDefaultTol)
        .def("__call__", &PiecewiseApprox::eval, py::arg("t"))
        .def_property_readonly("pieces", &PiecewiseApprox::pieces)
        .def_property_readonly("breaks", &PiecewiseApprox::breaks)
        .def_property_readonly("resolved", &PiecewiseApprox::resolved)
        .def_property_readonly("lo", &PiecewiseApprox::lo)
        .def_property_readonly("hi", &PiecewiseApprox::hi);

    py::class_<VarOrder>(m, "VarOrder")
        .def(py::init([](const OrderSource& f, int n, double lo, double hi) {
                 auto fn = order_fn(f);
                 py::gil_scoped_release release;
                 return VarOrder(fn, n, lo, hi);
             }),
             py::arg("alpha"), py::arg("n"), py::arg("lo"), py::arg("hi"))
        .def("__call__", [](const VarOrder& o, double t, double tau) {
            py::gil_scoped_release release;
            return o(t, tau);
        })
        .def_property_readonly("band", &VarOrder::band)
        .def_property_readonly("lo", &VarOrder::lo)
        .def_property_readonly("hi", &VarOrder::hi);

    py::class_<OperatorValue>(m, "OperatorValue")
        .def_readonly("value", &OperatorValue::value)
        .def_readonly("error", &OperatorValue::error)
        .def_readonly("reduced_accuracy", &OperatorValue::reduced_accuracy)
        .def("__repr__", [](const OperatorValue& v) {
            std::ostringstream s;
            s.precision(17);
            s << "OperatorValue(value=" << v.value << ", error=" << v.error
              << ", reduced_accuracy=" << (v.reduced_accuracy ? "True" : "False") << ")";
            return s.str();
        });

    py::class_<FractionalFn>(m, "FractionalFn")
        .def("__call__", [](const FractionalFn& f, double t) {
            py::gil_scoped_release release;
            return f(t);
        }, py::arg("t"))
        .def("evaluate", [](const FractionalFn& f, double t) {
            py::gil_scoped_release release;
            return f.evaluate(t);
        }, py::arg("t"))
        .def("evaluate_from_base", [](const FractionalFn& f, double d) {
            py::gil_scoped_release release;
            return f.evaluate_from_base(d);
        }, py::arg("distance"))
        .def_property_readonly("name", &FractionalFn::name)
        .def_property_readonly("lo", &FractionalFn::lo)
        .def_property_readonly("hi", &FractionalFn::hi);

    m.def("left_caputo",
          [](const FuncApprox& x, const VarOrder& alpha, double a, int n, double abs_tol, double rel_tol) {
              return left_caputo(x, alpha, a, n, quad_config(abs_tol, rel_tol));
          },
          py::arg("x"), py::arg("alpha"), py::arg("a"), py::arg("n"), py::arg("abs_tol") = 1e-10,
          py::arg("rel_tol") = 1e-10);
    m.def("right_caputo",
          [](const FuncApprox& x, const VarOrder& alpha, double b, int n, double abs_tol, double rel_tol) {
              return right_caputo(x, alpha, b, n, quad_config(abs_tol, rel_tol));
          },
          py::arg("x"), py::arg("alpha"), py::arg("b"), py::arg("n"), py::arg("abs_tol") = 1e-10,
          py::arg("rel_tol") = 1e-10);
    m.def("left_rl_integral",
          [](const FuncApprox& x, const VarOrder& alpha, double a, double abs_tol, double rel_tol) {
              return left_rl_integral(x, alpha, a, quad_config(abs_tol, rel_tol));
          },
          py::arg("x"), py::arg("alpha"), py::arg("a"), py::arg("abs_tol") = 1e-10, py::arg("rel_tol") = 1e-10);
    m.def("right_rl_integral",
          [](const FuncApprox& x, const VarOrder& alpha, double b, double abs_tol, double rel_tol) {
              return right_rl_integral(x, alpha, b, quad_config(abs_tol, rel_tol));
          },
          py::arg("x"), py::arg("alpha"), py::arg("b"), py::arg("abs_tol") = 1e-10, py::arg("rel_tol") = 1e-10);
    const auto rl_derivatives = [&m](auto tag) {
        using X = typename decltype(tag)::type;
        m.def("left_rl_derivative",
              [](const X& x, const VarOrder& alpha, double a, int n, double abs_tol, double rel_tol) {
                  return left_rl_derivative(x, alpha, a, n, quad_config(abs_tol, rel_tol));
              },
              py::arg("x"), py::arg("alpha"), py::arg("a"), py::arg("n"), py::arg("abs_tol") = 1e-10,
              py::arg("rel_tol") = 1e-10);
        m.def("right_rl_derivative",
              [](const X& x, const VarOrder& alpha, double b, int n, double abs_tol, double rel_tol) {
                  return right_rl_derivative(x, alpha, b, n, quad_config(abs_tol, rel_tol));
              },
              py::arg("x"), py::arg("alpha"), py::arg("b"), py::arg("n"), py::arg("abs_tol") = 1e-10,
              py::arg("rel_tol") = 1e-10);
        m.def("dual_operator",
              [](const X& f, const VarOrder& alpha, const VarOrder& beta, double gamma1, double gamma2,
                 double a, double T) { return dual_operator(f, alpha, beta, {gamma1, gamma2}, a, T); },
              py::arg("f"), py::arg("alpha"), py::arg("beta"), py::arg("gamma1"), py::arg("gamma2"),
              py::arg("a"), py::arg("T"));
    };
    rl_derivatives(std::type_identity<FuncApprox>{});
    rl_derivatives(std::type_identity<PiecewiseApprox>{});
    m.def("combined_caputo",
          [](const FuncApprox& x, const VarOrder& alpha, const VarOrder& beta, double gamma1, double gamma2,
             double a, double b, int n) {
              return combined_caputo(x, alpha, beta, {gamma1, gamma2}, a, b, n);
          },
          py::arg("x"), py::arg("alpha"), py::arg("beta"), py::arg("gamma1"), py::arg("gamma2"), py::arg("a"),
          py::arg("b"), py::arg("n"));
    m.def("combined_rl",
          [](const FuncApprox& x, const VarOrder& alpha, const VarOrder& beta, double gamma1, double gamma2,
             double a, double b, int n) {
              return combined_rl(x, alpha, beta, {gamma1, gamma2}, a, b, n);
          },
          py::arg("x"), py::arg("alpha"), py::arg("beta"), py::arg("gamma1"), py::arg("gamma2"), py::arg("a"),
          py::arg("b"), py::arg("n"));
    m.def("exact_caputo_power",
          [](double gamma_exp, const py::function& order, int n, double a, double b, double t,
             const std::string& side) {
              oracle::PowerOracleSpec spec;
              spec.gamma_exp = gamma_exp;
              spec.order = guarded<double, double>(order);
              spec.n = n;
              spec.a = a;
              spec.b = b;
              if (side == "left")
                  spec.base = oracle::PowerBase::left;
              else if (side == "right")
                  spec.base = oracle::PowerBase::right;
              else
                  throw InvalidArgument("side must be 'left' or 'right'");
              spec.validate();
              return side == "left" ? oracle::exact_left_caputo_power(spec, t)
                                    : oracle::exact_right_caputo_power(spec, t);
          },
          py::arg("gamma_exp"), py::arg("order"), py::arg("n"), py::arg("a"), py::arg("b"), py::arg("t"),
          py::arg("side") = "left");
    m.def("table1_rows", [] {
        std::vector<std::pair<double, double>> rows;
        for (const auto& r : oracle::table1_rows())
            rows.emplace_back(r.t, r.exact);
        return rows;
    });

    m.def("ibp_check",
          [](const FuncApprox& x, const FuncApprox& y, const VarOrder& alpha, double a, double b, int n,
             const std::string& side, const std::string& sign) {
              if (side != "left" && side != "right")
                  throw InvalidArgument("side must be 'left' or 'right'");
              if (sign != "stated" && sign != "alternate")
                  throw InvalidArgument("sign must be 'stated' or 'alternate'");
              IbpOptions opts;
              opts.sign = sign == "stated" ? TransversalitySign::stated : TransversalitySign::alternate;
              IbpResult r;
              {
                  py::gil_scoped_release release;
                  r = ibp_check(x, y, alpha, a, b, n, side == "left" ? IbpSide::left : IbpSide::right, opts);
              }
              py::dict d;
              d["lhs"] = r.lhs;
              d["rhs"] = r.rhs;
              d["gap"] = r.gap;
              d["boundary"] = r.boundary;
              return d;
          },
          py::arg("x"), py::arg("y"), py::arg("alpha"), py::arg("a"), py::arg("b"), py::arg("n"),
          py::arg("side") = "left", py::arg("sign") = "stated");

    m.def("check_problem",
          [](const std::filesystem::path& path, std::optional<double> T, double tolerance, int grid_points) {
              ResidualReport rep;
              {
                  py::gil_scoped_release release;
                  const auto lp = load_problem(path, T);
                  ResidualOptions opts;
                  opts.quad = lp.quadrature;
                  opts.tolerance = tolerance;
                  opts.grid_points = grid_points;
                  rep = lp.delay ? delay_residuals(lp.problem, lp.candidate, opts)
                                 : optimality_residuals(lp.problem, lp.candidate, opts);
              }
              return report_dict(rep);
          },
          py::arg("path"), py::arg("T") = std::nullopt, py::arg("tolerance") = 1e-6, py::arg("grid_points") = 41);

    m.def("run_cli", [](const std::vector<std::string>& args) {
        std::ostringstream out;
        std::ostringstream err;
        int code;
        {
            py::gil_scoped_release release;
            code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
    }, py::arg("args"));
}
