#include "plap/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>

#include <fmt/format.h>

#include "plap/errors.hpp"

namespace plap {

namespace {

constexpr std::array<std::string_view, var_count> kVarNames{"x1", "x2", "u", "gnorm", "p", "q", "a", "b", "r"};
constexpr std::array<std::string_view, 6> kFuncNames{"abs", "min", "max", "exp", "sin", "cos"};
constexpr int kMaxDepth = 200;

}  // namespace

std::string_view var_name(Var v) noexcept { return kVarNames[static_cast<std::size_t>(v)]; }

std::optional<Var> var_from_name(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kVarNames.size(); ++i)
        if (kVarNames[i] == name) return static_cast<Var>(i);
    return std::nullopt;
}

std::string_view func_name(Func f) noexcept { return kFuncNames[static_cast<std::size_t>(f)]; }

int func_arity(Func f) noexcept { return (f == Func::min || f == Func::max) ? 2 : 1; }

ParseError::ParseError(const std::string& message, int line, int column)
    : Error(fmt::format("{}:{}: {}", line, column, message)), detail_(message), line_(line), column_(column) {}

// ---------------------------------------------------------------------------
// Tree utilities

namespace {

std::uint32_t collect_vars(const Expression::Node& n) {
    std::uint32_t m = n.kind == Expression::Kind::variable ? (1u << static_cast<unsigned>(n.var)) : 0u;
    for (const auto& c : n.args) m |= collect_vars(c);
    return m;
}

void print(const Expression::Node& n, std::string& out) {
    using K = Expression::Kind;
    switch (n.kind) {
        case K::literal:
            out += fmt::format("{}", n.value);
            return;
        case K::variable:
            out += var_name(n.var);
            return;
        case K::neg:
            out += "(-";
            print(n.args[0], out);
            out += ')';
            return;
        case K::call:
            out += func_name(n.func);
            out += '(';
            for (std::size_t i = 0; i < n.args.size(); ++i) {
                if (i) out += ", ";
                print(n.args[i], out);
            }
            out += ')';
            return;
        default:
            break;
    }
    const char op = n.kind == K::add ? '+' : n.kind == K::sub ? '-' : n.kind == K::mul ? '*' : n.kind == K::div ? '/' : '^';
    out += '(';
    print(n.args[0], out);
    out += ' ';
    out += op;
    out += ' ';
    print(n.args[1], out);
    out += ')';
}

}  // namespace

bool operator==(const Expression::Node& a, const Expression::Node& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case Expression::Kind::literal:
            return a.value == b.value;
        case Expression::Kind::variable:
            return a.var == b.var;
        case Expression::Kind::call:
            if (a.func != b.func) return false;
            break;
        default:
            break;
    }
    return a.args == b.args;
}

Expression::Expression(Node root)
    : root_(std::make_shared<const Node>(std::move(root))), vars_(collect_vars(*root_)) {}

std::string Expression::to_string() const {
    std::string s;
    print(*root_, s);
    return s;
}

bool Expression::operator==(const Expression& other) const { return *root_ == *other.root_; }

// ---------------------------------------------------------------------------
// Lexer and recursive-descent parser

namespace {

enum class Tok { number, ident, plus, minus, star, slash, caret, lparen, rparen, comma, end };

struct Token {
    Tok kind;
    std::string_view text;
    double number = 0.0;
    int line = 1;
    int column = 1;
};

std::string describe(const Token& t) {
    if (t.kind == Tok::end) return "end of input";
    return fmt::format("'{}'", t.text);
}

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    Token next() {
        skip_space();
        Token t;
        t.line = line_;
        t.column = col_;
        if (pos_ >= src_.size()) {
            t.kind = Tok::end;
            return t;
        }
        const char c = src_[pos_];
        const std::size_t start = pos_;
        if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && pos_ + 1 < src_.size() &&
                                                            std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
            lex_number(t);
            return t;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) advance();
            t.kind = Tok::ident;
            t.text = src_.substr(start, pos_ - start);
            return t;
        }
        switch (c) {
            case '+': t.kind = Tok::plus; break;
            case '-': t.kind = Tok::minus; break;
            case '*': t.kind = Tok::star; break;
            case '/': t.kind = Tok::slash; break;
            case '^': t.kind = Tok::caret; break;
            case '(': t.kind = Tok::lparen; break;
            case ')': t.kind = Tok::rparen; break;
            case ',': t.kind = Tok::comma; break;
            default: {
                const std::string shown = std::isprint(static_cast<unsigned char>(c))
                                              ? std::string(1, c)
                                              : fmt::format("\\x{:02x}", static_cast<unsigned char>(c));
                throw ParseError(fmt::format("unexpected character '{}'", shown), line_, col_);
            }
        }
        advance();
        t.text = src_.substr(start, 1);
        return t;
    }

private:
    void advance() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_space() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) advance();
    }

    bool digit_at(std::size_t i) const {
        return i < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i]));
    }

    void lex_number(Token& t) {
        const std::size_t start = pos_;
        while (digit_at(pos_)) advance();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            advance();
            while (digit_at(pos_)) advance();
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t look = pos_ + 1;
            if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
            if (digit_at(look)) {
                while (pos_ < look) advance();
                while (digit_at(pos_)) advance();
            }
        }
        t.kind = Tok::number;
        t.text = src_.substr(start, pos_ - start);
        // std::from_chars for double is unavailable on some standard libraries; strtod on a copy is fine here.
        const std::string copy(t.text);
        char* end = nullptr;
        t.number = std::strtod(copy.c_str(), &end);
        if (end != copy.c_str() + copy.size() || !std::isfinite(t.number))
            throw ParseError(fmt::format("malformed number '{}'", copy), t.line, t.column);
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

class Parser {
public:
    explicit Parser(std::string_view src) : lex_(src) { cur_ = lex_.next(); }

    Expression::Node parse_all() {
        auto n = parse_sum(0);
        if (cur_.kind != Tok::end) fail(fmt::format("unexpected {} after expression", describe(cur_)));
        return n;
    }

private:
    using Node = Expression::Node;
    using K = Expression::Kind;

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, cur_.line, cur_.column); }

    void bump() { cur_ = lex_.next(); }

    void guard(int depth) const {
        if (depth > kMaxDepth) fail("expression nested too deeply");
    }

    static Node binary(K k, Node lhs, Node rhs) {
        Node n;
        n.kind = k;
        n.args.reserve(2);
        n.args.push_back(std::move(lhs));
        n.args.push_back(std::move(rhs));
        return n;
    }

    Node parse_sum(int depth) {
        guard(depth);
        Node lhs = parse_product(depth + 1);
        while (cur_.kind == Tok::plus || cur_.kind == Tok::minus) {
            const K k = cur_.kind == Tok::plus ? K::add : K::sub;
            bump();
            lhs = binary(k, std::move(lhs), parse_product(depth + 1));
        }
        return lhs;
    }

    Node parse_product(int depth) {
        guard(depth);
        Node lhs = parse_unary(depth + 1);
        while (cur_.kind == Tok::star || cur_.kind == Tok::slash) {
            const K k = cur_.kind == Tok::star ? K::mul : K::div;
            bump();
            lhs = binary(k, std::move(lhs), parse_unary(depth + 1));
        }
        return lhs;
    }

    Node parse_unary(int depth) {
        guard(depth);
        if (cur_.kind == Tok::minus) {
            bump();
            Node n;
        n.kind = K::neg;
            n.args.push_back(parse_unary(depth + 1));
            return n;
        }
        return parse_power(depth + 1);
    }

    Node parse_power(int depth) {
        guard(depth);
        Node base = parse_primary(depth + 1);
        if (cur_.kind == Tok::caret) {
            bump();
            return binary(K::pow, std::move(base), parse_unary(depth + 1));
        }
        return base;
    }

    Node parse_primary(int depth) {
        guard(depth);
        switch (cur_.kind) {
            case Tok::number: {
                Node n;
        n.kind = K::literal;
                n.value = cur_.number;
                bump();
                return n;
            }
            case Tok::lparen: {
                bump();
                Node inner = parse_sum(depth + 1);
                if (cur_.kind != Tok::rparen) fail(fmt::format("expected ')' but found {}", describe(cur_)));
                bump();
                return inner;
            }
            case Tok::ident:
                return parse_identifier(depth);
            default:
                fail(fmt::format("expected a value but found {}", describe(cur_)));
        }
    }

    Node parse_identifier(int depth) {
        const Token id = cur_;
        bump();
        for (std::size_t f = 0; f < kFuncNames.size(); ++f) {
            if (kFuncNames[f] != id.text) continue;
            const Func func = static_cast<Func>(f);
            if (cur_.kind != Tok::lparen)
                throw ParseError(fmt::format("function '{}' must be called with '('", id.text), id.line, id.column);
            bump();
            Node n;
        n.kind = K::call;
            n.func = func;
            if (cur_.kind != Tok::rparen) {
                n.args.push_back(parse_sum(depth + 1));
                while (cur_.kind == Tok::comma) {
                    bump();
                    n.args.push_back(parse_sum(depth + 1));
                }
            }
            if (cur_.kind != Tok::rparen) fail(fmt::format("expected ')' or ',' but found {}", describe(cur_)));
            bump();
            if (static_cast<int>(n.args.size()) != func_arity(func))
                throw ParseError(fmt::format("function '{}' takes {} argument(s), got {}", id.text, func_arity(func),
                                             n.args.size()),
                                 id.line, id.column);
            return n;
        }
        if (auto v = var_from_name(id.text)) {
            Node n;
        n.kind = K::variable;
            n.var = *v;
            return n;
        }
        throw ParseError(fmt::format("unknown identifier '{}'", id.text), id.line, id.column);
    }

    Lexer lex_;
    Token cur_{};
};

}  // namespace

Expression parse(std::string_view source) { return Expression(Parser(source).parse_all()); }

// ---------------------------------------------------------------------------

namespace {

double checked(double v, const char* what) {
    if (!std::isfinite(v)) throw EvalError(fmt::format("non-finite result in {}", what));
    return v;
}

double eval(const Expression::Node& n, const Bindings& b) {
    using K = Expression::Kind;
    switch (n.kind) {
        case K::literal:
            return n.value;
        case K::variable:
            if (!b.has(n.var)) throw EvalError(fmt::format("no binding for '{}'", var_name(n.var)));
            return b.get(n.var);
        case K::neg:
            return -eval(n.args[0], b);
        case K::add:
            return checked(eval(n.args[0], b) + eval(n.args[1], b), "addition");
        case K::sub:
            return checked(eval(n.args[0], b) - eval(n.args[1], b), "subtraction");
        case K::mul:
            return checked(eval(n.args[0], b) * eval(n.args[1], b), "multiplication");
        case K::div: {
            const double num = eval(n.args[0], b);
            const double den = eval(n.args[1], b);
            if (den == 0.0) throw EvalError("division by zero");
            return checked(num / den, "division");
        }
        case K::pow: {
            const double base = eval(n.args[0], b);
            const double ex = eval(n.args[1], b);
            if (base == 0.0 && ex < 0.0) throw EvalError("zero raised to a negative power");
            return checked(std::pow(base, ex), "power");
        }
        case K::call: {
            const double x = eval(n.args[0], b);
            switch (n.func) {
                case Func::abs: return std::abs(x);
                case Func::min: return std::min(x, eval(n.args[1], b));
                case Func::max: return std::max(x, eval(n.args[1], b));
                case Func::exp: return checked(std::exp(x), "exp");
                case Func::sin: return std::sin(x);
                case Func::cos: return std::cos(x);
            }
        }
    }
    throw EvalError("corrupt expression tree");
}

}  // namespace

double evaluate(const Expression& e, const Bindings& bindings) { return checked(eval(e.root(), bindings), "expression"); }

}  // namespace plap
