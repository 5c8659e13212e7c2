#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "varfrac/quadrature.hpp"
#include "varfrac/variational.hpp"

namespace varfrac {

// A variational problem read from a JSON problem file, with its candidate.
//
// Expression variables: t, x1 = x(t), x2 .. x(n+1) = combined derivatives
// 1..n, and for delay problems x(n+2) = x(t - sigma). An optional
// "reference" curve f adds y1 = f(t), y2 .. y(n+1) = its combined
// derivatives with the problem orders, and y(n+2) = f(t - sigma).
// Terminal cost expressions use t and x1 = x(T).
struct LoadedProblem {
    std::string name;
    VariationalProblem problem;
    Candidate candidate;
    QuadConfig quadrature;
    bool delay = false;
};

// Strict: unknown keys, missing sections and expressions that do not
// parse under their variable sets throw InvalidArgument naming the key.
LoadedProblem parse_problem(std::string_view json_text,
                            std::optional<double> candidate_T = std::nullopt);
LoadedProblem load_problem(const std::filesystem::path& path,
                           std::optional<double> candidate_T = std::nullopt);

} // namespace varfrac
