#include "varfrac/oracle.hpp"

#include <charconv>
#include <cmath>
#include <string_view>

#include "varfrac/error.hpp"
#include "varfrac/special.hpp"

namespace varfrac::oracle {

void PowerOracleSpec::validate() const
{
    if (n < 1)
        throw InvalidArgument("power oracle: n must be a positive integer");
    if (!order)
        throw InvalidArgument("power oracle: missing order function");
    if (!(a < b))
        throw InvalidArgument("power oracle: need a < b");
    if (!(gamma_exp > n - 1))
        throw InvalidArgument("power oracle: exponent must exceed n - 1");
    constexpr int kGrid = 256;
    for (int i = 0; i < kGrid; ++i) {
        const double t = a + (b - a) * i / (kGrid - 1);
        const double v = order(t);
        if (!(v > n - 1 && v < n))
            throw InvalidArgument("power oracle: order leaves (n - 1, n) at t = " + std::to_string(t));
    }
}

namespace {

double closed_form(const PowerOracleSpec& spec, double t, double distance)
{
    const double alpha = spec.order(t);
    const double g = spec.gamma_exp;
    if (distance == 0.0)
        return 0.0;
    return special::gamma_fn(g + 1) * special::rgamma(g - alpha + 1) * std::pow(distance, g - alpha);
}

} // namespace

double exact_left_caputo_power(const PowerOracleSpec& spec, double t)
{
    if (spec.base != PowerBase::left)
        throw InvalidArgument("exact_left_caputo_power: spec has a right base");
    if (!(t > spec.a && t <= spec.b))
        throw DomainError("exact_left_caputo_power: t outside (a, b]");
    return closed_form(spec, t, t - spec.a);
}

double exact_right_caputo_power(const PowerOracleSpec& spec, double t)
{
    if (spec.base != PowerBase::right)
        throw InvalidArgument("exact_right_caputo_power: spec has a left base");
    if (!(t >= spec.a && t <= spec.b))
        throw DomainError("exact_right_caputo_power: t outside [a, b]");
    return closed_form(spec, t, spec.b - t);
}

std::vector<Table1Row> table1_rows()
{
    struct Literal {
        std::string_view t;
        std::string_view exact;
    };
    static constexpr Literal kRows[] = {
        {"0.1", "1.019223177296953e-04"}, {"0.2", "0.001702793965464"},
        {"0.3", "0.009148530806348"},     {"0.4", "0.031052290994593"},
        {"0.5", "0.082132144921157"},     {"0.6", "0.185651036003120"},
        {"0.7", "0.376408251363662"},     {"0.8", "0.704111480975332"},
        {"0.9", "1.236753486749357"},
    };
    auto parse = [](std::string_view s) {
        double v = 0.0;
        std::from_chars(s.data(), s.data() + s.size(), v);
        return v;
    };
    std::vector<Table1Row> rows;
    for (const auto& r : kRows)
        rows.push_back({parse(r.t), parse(r.exact),
                        "left Caputo of t^4, order t^2/2, a = 0, at t = " + std::string(r.t)});
    return rows;
}

} // namespace varfrac::oracle
