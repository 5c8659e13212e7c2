#pragma once

#include <functional>
#include <string>
#include <vector>

namespace varfrac::oracle {

enum class PowerBase { left, right };

// x(t) = (t - a)^gamma (left) or (b - t)^gamma (right) with an order that
// depends on t alone.
struct PowerOracleSpec {
    double gamma_exp = 1.0;
    PowerBase base = PowerBase::left;
    std::function<double(double)> order;
    int n = 1;
    double a = 0.0;
    double b = 1.0;

    // gamma_exp > n - 1 and n - 1 < order(t) < n on a 256-point grid.
    void validate() const;
};

// Gamma(g + 1) / Gamma(g - alpha(t) + 1) * (t - a)^(g - alpha(t)).
double exact_left_caputo_power(const PowerOracleSpec& spec, double t);
// Same with (b - t); the right Caputo derivative of (b - t)^g.
double exact_right_caputo_power(const PowerOracleSpec& spec, double t);

struct Table1Row {
    double t;
    double exact;
    std::string description;
};

// Left Caputo derivative of t^4 with order t^2/2 on [0, 1]: the nine
// reference values at t = 0.1, ..., 0.9.
std::vector<Table1Row> table1_rows();

} // namespace varfrac::oracle
