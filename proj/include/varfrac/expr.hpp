#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "varfrac/error.hpp"

namespace varfrac::expr {

enum class NodeKind { number, variable, negate, binary, call };

struct Node;
using Expr = std::shared_ptr<const Node>;

struct Node {
    NodeKind kind;
    double value = 0.0; // number
    std::string name;   // variable or function name
    char op = 0;        // binary: + - * / ^
    std::vector<Expr> args;
    int line = 1;
    int column = 1;
};

class ParseError : public InvalidArgument {
public:
    ParseError(const std::string& message, int line, int column,
               std::vector<std::string> expected = {});

    int line() const { return line_; }
    int column() const { return column_; }
    const std::vector<std::string>& expected() const { return expected_; }

private:
    int line_;
    int column_;
    std::vector<std::string> expected_;
};

// Raised during evaluation: missing binding, division by zero, or a
// builtin called outside its domain.
class EvalError : public DomainError {
public:
    using DomainError::DomainError;
};

// Variables an expression may reference.
struct ArityProfile {
    std::vector<std::string> variables;

    static ArityProfile order();                          // t, tau
    static ArityProfile curve();                          // t
    static ArityProfile terminal();                       // t, x1
    // t, x1 .. x(slots), plus y1 .. y(reference_slots).
    static ArityProfile bundle(int slots, int reference_slots = 0);

    bool allows(std::string_view name) const;
};

// Grammar:
//   expr    := term { ("+" | "-") term }
//   term    := unary { ("*" | "/") unary }
//   unary   := "-" unary | power
//   power   := primary [ "^" unary ]
//   primary := NUMBER | IDENT | IDENT "(" expr { "," expr } ")" | "(" expr ")"
Expr parse(std::string_view src, const ArityProfile& profile);

double eval_expr(const Expr& e, const std::map<std::string, double, std::less<>>& bindings);

// Minimal-parenthesis rendering that reparses to the same tree.
std::string to_string(const Expr& e);

bool structurally_equal(const Expr& lhs, const Expr& rhs);

bool is_builtin(std::string_view name);

// Flat postfix program with variables resolved to slot indices; cheap to
// call in quadrature loops.
class Compiled {
public:
    Compiled(const Expr& e, std::vector<std::string> slots);

    double operator()(std::span<const double> values) const;
    double operator()(double v0) const;
    double operator()(double v0, double v1) const;

    const std::vector<std::string>& slots() const { return slots_; }

private:
    enum class Op { push, load, neg, add, sub, mul, div, pow, fn1, fn2 };
    struct Instr {
        Op op;
        double value = 0.0;
        int index = 0;
    };

    void emit(const Expr& e, int depth);

    std::vector<Instr> code_;
    std::vector<std::string> slots_;
    int max_depth_ = 0;
};

} // namespace varfrac::expr
