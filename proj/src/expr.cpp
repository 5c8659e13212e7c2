#include "varfrac/expr.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cctype>
#include <limits>

namespace varfrac::expr {

ParseError::ParseError(const std::string& message, int line, int column,
                       std::vector<std::string> expected)
    : InvalidArgument("line " + std::to_string(line) + ", column " + std::to_string(column) +
                      ": " + message),
      line_(line), column_(column), expected_(std::move(expected))
{
}

namespace {

constexpr std::array<std::string_view, 8> kBuiltins = {"exp", "ln",  "sin",   "cos",
                                                       "sqrt", "abs", "gamma", "pow"};

int builtin_index(std::string_view name)
{
    const auto it = std::find(kBuiltins.begin(), kBuiltins.end(), name);
    return it == kBuiltins.end() ? -1 : static_cast<int>(it - kBuiltins.begin());
}

int builtin_arity(int index) { return kBuiltins[index] == "pow" ? 2 : 1; }

double checked(double result, const char* what)
{
    if (std::isnan(result))
        throw EvalError(std::string(what) + ": argument outside the domain");
    if (std::isinf(result))
        throw EvalError(std::string(what) + ": result is not finite");
    return result;
}

double apply_binary(char op, double a, double b)
{
    switch (op) {
    case '+':
        return checked(a + b, "addition");
    case '-':
        return checked(a - b, "subtraction");
    case '*':
        return checked(a * b, "multiplication");
    case '/':
        if (b == 0.0)
            throw EvalError("division by zero");
        return checked(a / b, "division");
    default:
        return checked(std::pow(a, b), "power");
    }
}

double apply_fn(int index, double x)
{
    switch (index) {
    case 0:
        return checked(std::exp(x), "exp");
    case 1:
        if (x <= 0.0)
            throw EvalError("ln: argument must be positive");
        return std::log(x);
    case 2:
        return checked(std::sin(x), "sin");
    case 3:
        return checked(std::cos(x), "cos");
    case 4:
        if (x < 0.0)
            throw EvalError("sqrt: argument must be non-negative");
        return std::sqrt(x);
    case 5:
        return std::abs(x);
    default:
        if (x <= 0.0 && x == std::nearbyint(x))
            throw EvalError("gamma: pole at non-positive integer");
        return checked(std::tgamma(x), "gamma");
    }
}

enum class Tok { number, ident, plus, minus, star, slash, caret, lparen, rparen, comma, end };

struct Token {
    Tok kind;
    std::string_view text;
    double value = 0.0;
    int line = 1;
    int column = 1;
};

std::string describe(const Token& tok)
{
    if (tok.kind == Tok::end)
        return "end of input";
    return "'" + std::string(tok.text) + "'";
}

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run()
    {
        std::vector<Token> out;
        for (;;) {
            skip_space();
            Token tok{Tok::end, {}, 0.0, line_, col_};
            if (pos_ >= src_.size()) {
                out.push_back(tok);
                return out;
            }
            const char c = src_[pos_];
            if (std::isdigit(static_cast<unsigned char>(c))) {
                lex_number(tok);
            } else if (std::isalpha(static_cast<unsigned char>(c))) {
                const std::size_t start = pos_;
                while (pos_ < src_.size() &&
                       (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                    advance();
                tok.kind = Tok::ident;
                tok.text = src_.substr(start, pos_ - start);
            } else {
                switch (c) {
                case '+': tok.kind = Tok::plus; break;
                case '-': tok.kind = Tok::minus; break;
                case '*': tok.kind = Tok::star; break;
                case '/': tok.kind = Tok::slash; break;
                case '^': tok.kind = Tok::caret; break;
                case '(': tok.kind = Tok::lparen; break;
                case ')': tok.kind = Tok::rparen; break;
                case ',': tok.kind = Tok::comma; break;
                default:
                    throw ParseError(std::string("unexpected character '") + c + "'", line_, col_);
                }
                tok.text = src_.substr(pos_, 1);
                advance();
            }
            out.push_back(tok);
        }
    }

private:
    void advance()
    {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_space()
    {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
            advance();
    }

    bool digit_at(std::size_t i) const
    {
        return i < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i]));
    }

    void digits()
    {
        while (digit_at(pos_))
            advance();
    }

    void lex_number(Token& tok)
    {
        const std::size_t start = pos_;
        digits();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            if (!digit_at(pos_ + 1))
                throw ParseError("expected digits after '.'", line_, col_ + 1, {"digit"});
            advance();
            digits();
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t look = pos_ + 1;
            if (look < src_.size() && (src_[look] == '+' || src_[look] == '-'))
                ++look;
            if (!digit_at(look))
                throw ParseError("malformed exponent", line_, col_ + static_cast<int>(look - pos_),
                                 {"digit"});
            while (pos_ < look)
                advance();
            digits();
        }
        tok.kind = Tok::number;
        tok.text = src_.substr(start, pos_ - start);
        const auto res = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), tok.value);
        if (res.ec != std::errc() || !std::isfinite(tok.value))
            throw ParseError("numeric literal out of range", tok.line, tok.column);
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

const std::vector<std::string> kOperandStart = {"number", "identifier", "'('", "'-'"};

class Parser {
public:
    Parser(std::vector<Token> tokens, const ArityProfile& profile)
        : toks_(std::move(tokens)), profile_(profile)
    {
    }

    Expr run()
    {
        Expr e = expr();
        if (peek().kind != Tok::end)
            fail("unexpected " + describe(peek()), peek(),
                 {"operator", "end of input"});
        return e;
    }

private:
    const Token& peek() const { return toks_[pos_]; }
    const Token& take() { return toks_[pos_++]; }

    [[noreturn]] void fail(const std::string& msg, const Token& at, std::vector<std::string> expected)
    {
        throw ParseError(msg, at.line, at.column, std::move(expected));
    }

    static bool starts_operand(Tok k)
    {
        return k == Tok::number || k == Tok::ident || k == Tok::lparen || k == Tok::minus;
    }

    void require_operand(const Token& op)
    {
        if (!starts_operand(peek().kind))
            fail("operator '" + std::string(op.text) + "' lacks a right operand (found " +
                     describe(peek()) + ")",
                 op, kOperandStart);
    }

    static Expr make_binary(const Token& op, Expr lhs, Expr rhs)
    {
        auto n = std::make_shared<Node>();
        n->kind = NodeKind::binary;
        n->op = op.text[0];
        n->args = {std::move(lhs), std::move(rhs)};
        n->line = op.line;
        n->column = op.column;
        return n;
    }

    Expr expr()
    {
        Expr lhs = term();
        while (peek().kind == Tok::plus || peek().kind == Tok::minus) {
            const Token& op = take();
            require_operand(op);
            lhs = make_binary(op, lhs, term());
        }
        return lhs;
    }

    Expr term()
    {
        Expr lhs = unary();
        while (peek().kind == Tok::star || peek().kind == Tok::slash) {
            const Token& op = take();
            require_operand(op);
            lhs = make_binary(op, lhs, unary());
        }
        return lhs;
    }

    Expr unary()
    {
        if (peek().kind == Tok::minus) {
            const Token& op = take();
            require_operand(op);
            auto n = std::make_shared<Node>();
            n->kind = NodeKind::negate;
            n->args = {unary()};
            n->line = op.line;
            n->column = op.column;
            return n;
        }
        return power();
    }

    Expr power()
    {
        Expr base = primary();
        if (peek().kind == Tok::caret) {
            const Token& op = take();
            require_operand(op);
            return make_binary(op, base, unary());
        }
        return base;
    }

    Expr primary()
    {
        const Token& tok = peek();
        switch (tok.kind) {
        case Tok::number: {
            take();
            auto n = std::make_shared<Node>();
            n->kind = NodeKind::number;
            n->value = tok.value;
            n->line = tok.line;
            n->column = tok.column;
            return n;
        }
        case Tok::ident:
            return identifier();
        case Tok::lparen: {
            take();
            Expr inner = expr();
            if (peek().kind != Tok::rparen)
                fail("expected ')' but found " + describe(peek()), peek(), {"')'", "operator"});
            take();
            return inner;
        }
        default:
            fail("expected an operand but found " + describe(tok), tok, kOperandStart);
        }
    }

    Expr identifier()
    {
        const Token& tok = take();
        const std::string name(tok.text);
        auto n = std::make_shared<Node>();
        n->name = name;
        n->line = tok.line;
        n->column = tok.column;
        const int fn = builtin_index(name);
        if (peek().kind == Tok::lparen) {
            if (fn < 0)
                fail("unknown function '" + name + "'", tok, {});
            take();
            n->kind = NodeKind::call;
            n->args.push_back(expr());
            while (peek().kind == Tok::comma) {
                take();
                n->args.push_back(expr());
            }
            if (peek().kind != Tok::rparen)
                fail("expected ')' or ',' but found " + describe(peek()), peek(), {"')'", "','"});
            take();
            const int want = builtin_arity(fn);
            if (static_cast<int>(n->args.size()) != want)
                fail("function '" + name + "' takes " + std::to_string(want) + " argument(s), got " +
                         std::to_string(n->args.size()),
                     tok, {});
            return n;
        }
        if (fn >= 0)
            fail("function '" + name + "' must be called with arguments", peek(), {"'('"});
        if (!profile_.allows(name)) {
            std::string allowed;
            for (const auto& v : profile_.variables)
                allowed += (allowed.empty() ? "" : ", ") + v;
            fail("variable '" + name + "' is not available here (allowed: " + allowed + ")", tok,
                 profile_.variables);
        }
        n->kind = NodeKind::variable;
        return n;
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    const ArityProfile& profile_;
};

int precedence(const Expr& e)
{
    switch (e->kind) {
    case NodeKind::binary:
        switch (e->op) {
        case '+':
        case '-':
            return 1;
        case '*':
        case '/':
            return 2;
        default:
            return 4;
        }
    case NodeKind::negate:
        return 3;
    default:
        return 5;
    }
}

void render(const Expr& e, std::string& out);

void render_child(const Expr& child, bool parens, std::string& out)
{
    if (parens)
        out += '(';
    render(child, out);
    if (parens)
        out += ')';
}

void render(const Expr& e, std::string& out)
{
    switch (e->kind) {
    case NodeKind::number: {
        std::array<char, 32> buf{};
        const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), e->value);
        out.append(buf.data(), res.ptr);
        return;
    }
    case NodeKind::variable:
        out += e->name;
        return;
    case NodeKind::negate:
        out += '-';
        render_child(e->args[0], precedence(e->args[0]) < 3, out);
        return;
    case NodeKind::call:
        out += e->name;
        out += '(';
        for (std::size_t i = 0; i < e->args.size(); ++i) {
            if (i)
                out += ", ";
            render(e->args[i], out);
        }
        out += ')';
        return;
    case NodeKind::binary: {
        const int p = precedence(e);
        if (e->op == '^') {
            render_child(e->args[0], precedence(e->args[0]) < 5, out);
            out += '^';
            render_child(e->args[1], precedence(e->args[1]) < 3, out);
            return;
        }
        render_child(e->args[0], precedence(e->args[0]) < p, out);
        out += ' ';
        out += e->op;
        out += ' ';
        render_child(e->args[1], precedence(e->args[1]) <= p, out);
        return;
    }
    }
}

} // namespace

ArityProfile ArityProfile::order() { return {{"t", "tau"}}; }
ArityProfile ArityProfile::curve() { return {{"t"}}; }
ArityProfile ArityProfile::terminal() { return {{"t", "x1"}}; }

ArityProfile ArityProfile::bundle(int slots, int reference_slots)
{
    ArityProfile p{{"t"}};
    for (int i = 1; i <= slots; ++i)
        p.variables.push_back("x" + std::to_string(i));
    for (int i = 1; i <= reference_slots; ++i)
        p.variables.push_back("y" + std::to_string(i));
    return p;
}

bool ArityProfile::allows(std::string_view name) const
{
    return std::find(variables.begin(), variables.end(), name) != variables.end();
}

bool is_builtin(std::string_view name) { return builtin_index(name) >= 0; }

Expr parse(std::string_view src, const ArityProfile& profile)
{
    if (src.find_first_not_of(" \t\r\n") == std::string_view::npos)
        throw ParseError("empty expression", 1, 1, kOperandStart);
    return Parser(Lexer(src).run(), profile).run();
}

double eval_expr(const Expr& e, const std::map<std::string, double, std::less<>>& bindings)
{
    switch (e->kind) {
    case NodeKind::number:
        return e->value;
    case NodeKind::variable: {
        const auto it = bindings.find(e->name);
        if (it == bindings.end())
            throw EvalError("no value bound for variable '" + e->name + "'");
        return it->second;
    }
    case NodeKind::negate:
        return -eval_expr(e->args[0], bindings);
    case NodeKind::binary: {
        const double lhs = eval_expr(e->args[0], bindings);
        const double rhs = eval_expr(e->args[1], bindings);
        return apply_binary(e->op, lhs, rhs);
    }
    case NodeKind::call: {
        const int fn = builtin_index(e->name);
        const double x = eval_expr(e->args[0], bindings);
        if (builtin_arity(fn) == 2)
            return apply_binary('^', x, eval_expr(e->args[1], bindings));
        return apply_fn(fn, x);
    }
    }
    return 0.0;
}

std::string to_string(const Expr& e)
{
    std::string out;
    render(e, out);
    return out;
}

bool structurally_equal(const Expr& lhs, const Expr& rhs)
{
    if (lhs->kind != rhs->kind || lhs->args.size() != rhs->args.size())
        return false;
    switch (lhs->kind) {
    case NodeKind::number:
        if (lhs->value != rhs->value)
            return false;
        break;
    case NodeKind::variable:
    case NodeKind::call:
        if (lhs->name != rhs->name)
            return false;
        break;
    case NodeKind::binary:
        if (lhs->op != rhs->op)
            return false;
        break;
    case NodeKind::negate:
        break;
    }
    for (std::size_t i = 0; i < lhs->args.size(); ++i)
        if (!structurally_equal(lhs->args[i], rhs->args[i]))
            return false;
    return true;
}

Compiled::Compiled(const Expr& e, std::vector<std::string> slots) : slots_(std::move(slots))
{
    emit(e, 1);
}

void Compiled::emit(const Expr& e, int depth)
{
    max_depth_ = std::max(max_depth_, depth);
    switch (e->kind) {
    case NodeKind::number:
        code_.push_back({Op::push, e->value, 0});
        return;
    case NodeKind::variable: {
        const auto it = std::find(slots_.begin(), slots_.end(), e->name);
        if (it == slots_.end())
            throw InvalidArgument("expression uses '" + e->name + "', which has no slot");
        code_.push_back({Op::load, 0.0, static_cast<int>(it - slots_.begin())});
        return;
    }
    case NodeKind::negate:
        emit(e->args[0], depth);
        code_.push_back({Op::neg});
        return;
    case NodeKind::binary: {
        emit(e->args[0], depth);
        emit(e->args[1], depth + 1);
        Op op = Op::pow;
        switch (e->op) {
        case '+': op = Op::add; break;
        case '-': op = Op::sub; break;
        case '*': op = Op::mul; break;
        case '/': op = Op::div; break;
        default: break;
        }
        code_.push_back({op});
        return;
    }
    case NodeKind::call: {
        const int fn = builtin_index(e->name);
        emit(e->args[0], depth);
        if (builtin_arity(fn) == 2) {
            emit(e->args[1], depth + 1);
            code_.push_back({Op::fn2, 0.0, fn});
        } else {
            code_.push_back({Op::fn1, 0.0, fn});
        }
        return;
    }
    }
}

double Compiled::operator()(std::span<const double> values) const
{
    if (values.size() < slots_.size())
        throw EvalError("compiled expression: too few slot values");
    constexpr int kInline = 32;
    std::array<double, kInline> small{};
    std::vector<double> large;
    double* stack = small.data();
    if (max_depth_ > kInline) {
        large.resize(static_cast<std::size_t>(max_depth_));
        stack = large.data();
    }
    int top = -1;
    for (const Instr& in : code_) {
        switch (in.op) {
        case Op::push:
            stack[++top] = in.value;
            break;
        case Op::load:
            stack[++top] = values[static_cast<std::size_t>(in.index)];
            break;
        case Op::neg:
            stack[top] = -stack[top];
            break;
        case Op::add:
        case Op::sub:
        case Op::mul:
        case Op::div:
        case Op::pow: {
            static constexpr char kOps[] = {'+', '-', '*', '/', '^'};
            const char op = kOps[static_cast<int>(in.op) - static_cast<int>(Op::add)];
            --top;
            stack[top] = apply_binary(op, stack[top], stack[top + 1]);
            break;
        }
        case Op::fn1:
            stack[top] = apply_fn(in.index, stack[top]);
            break;
        case Op::fn2:
            --top;
            stack[top] = apply_binary('^', stack[top], stack[top + 1]);
            break;
        }
    }
    return stack[0];
}

double Compiled::operator()(double v0) const
{
    const std::array<double, 1> v{v0};
    return (*this)(v);
}

double Compiled::operator()(double v0, double v1) const
{
    const std::array<double, 2> v{v0, v1};
    return (*this)(v);
}

} // namespace varfrac::expr
