#pragma once

#include <cctype>
#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace abslab::expr {

// Arithmetic AST over the single variable u.
// Grammar (documented in the README):
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := base ('^' factor)?
//   base   := number | 'u' | 'ln' '(' expr ')' | 'exp' '(' expr ')' | '(' expr ')'

enum class Op { Const, Var, Add, Sub, Mul, Div, Pow, Ln, Exp };

struct Node;
using NodePtr = std::unique_ptr<Node>;

struct Node {
    Op op = Op::Const;
    double value = 0.0;  // for Const
    NodePtr lhs, rhs;    // rhs unused for Ln/Exp
};

struct ParseError : std::runtime_error {
    size_t offset;
    ParseError(const std::string& msg, size_t off)
        : std::runtime_error(msg + " (byte " + std::to_string(off) + ")"), offset(off) {}
};

struct EvalError : std::runtime_error {
    explicit EvalError(const std::string& msg) : std::runtime_error(msg) {}
};

inline NodePtr make(Op op, NodePtr l = nullptr, NodePtr r = nullptr) {
    auto n = std::make_unique<Node>();
    n->op = op;
    n->lhs = std::move(l);
    n->rhs = std::move(r);
    return n;
}

inline NodePtr constant(double v) {
    auto n = std::make_unique<Node>();
    n->op = Op::Const;
    n->value = v;
    return n;
}

inline NodePtr clone(const Node& n) {
    auto c = std::make_unique<Node>();
    c->op = n.op;
    c->value = n.value;
    if (n.lhs) c->lhs = clone(*n.lhs);
    if (n.rhs) c->rhs = clone(*n.rhs);
    return c;
}

inline bool equal(const Node& a, const Node& b) {
    if (a.op != b.op) return false;
    if (a.op == Op::Const) return a.value == b.value;
    if (a.lhs && b.lhs) {
        if (!equal(*a.lhs, *b.lhs)) return false;
    } else if (a.lhs || b.lhs) {
        return false;
    }
    if (a.rhs && b.rhs) {
        if (!equal(*a.rhs, *b.rhs)) return false;
    } else if (a.rhs || b.rhs) {
        return false;
    }
    return true;
}

inline double eval(const Node& n, double u) {
    switch (n.op) {
        case Op::Const: return n.value;
        case Op::Var: return u;
        case Op::Add: return eval(*n.lhs, u) + eval(*n.rhs, u);
        case Op::Sub: return eval(*n.lhs, u) - eval(*n.rhs, u);
        case Op::Mul: return eval(*n.lhs, u) * eval(*n.rhs, u);
        case Op::Div: {
            const double d = eval(*n.rhs, u);
            if (d == 0.0) throw EvalError("division by zero");
            return eval(*n.lhs, u) / d;
        }
        case Op::Pow: {
            const double b = eval(*n.lhs, u);
            const double e = eval(*n.rhs, u);
            if (b < 0.0 && e != std::floor(e)) throw EvalError("negative base with non-integer exponent");
            if (b == 0.0 && e < 0.0) throw EvalError("zero base with negative exponent");
            return std::pow(b, e);
        }
        case Op::Ln: {
            const double a = eval(*n.lhs, u);
            if (a <= 0.0) throw EvalError("ln of non-positive argument");
            return std::log(a);
        }
        case Op::Exp: return std::exp(eval(*n.lhs, u));
    }
    throw EvalError("corrupt expression node");
}

namespace detail {

class Parser {
public:
    explicit Parser(std::string_view text) : s_(text) {}

    NodePtr run() {
        skip_ws();
        auto e = parse_expr();
        skip_ws();
        if (pos_ != s_.size()) throw ParseError("unexpected trailing input", pos_);
        return e;
    }

private:
    std::string_view s_;
    size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool accept(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!accept(c)) throw ParseError(std::string("expected '") + c + "'", pos_);
    }
    bool accept_word(std::string_view w) {
        skip_ws();
        if (s_.substr(pos_, w.size()) == w) {
            const size_t after = pos_ + w.size();
            // must not continue as identifier
            if (after >= s_.size() || !std::isalnum(static_cast<unsigned char>(s_[after]))) {
                pos_ = after;
                return true;
            }
        }
        return false;
    }

    NodePtr parse_expr() {
        auto lhs = parse_term();
        for (;;) {
            if (accept('+')) {
                lhs = make(Op::Add, std::move(lhs), parse_term());
            } else if (accept('-')) {
                lhs = make(Op::Sub, std::move(lhs), parse_term());
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_term() {
        auto lhs = parse_factor();
        for (;;) {
            if (accept('*')) {
                lhs = make(Op::Mul, std::move(lhs), parse_factor());
            } else if (accept('/')) {
                lhs = make(Op::Div, std::move(lhs), parse_factor());
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_factor() {
        auto base = parse_base();
        if (accept('^')) {
            // right associative
            return make(Op::Pow, std::move(base), parse_factor());
        }
        return base;
    }

    NodePtr parse_base() {
        skip_ws();
        if (pos_ >= s_.size()) throw ParseError("unexpected end of input", pos_);
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            auto e = parse_expr();
            expect(')');
            return e;
        }
        if (accept_word("ln")) {
            expect('(');
            auto a = parse_expr();
            expect(')');
            return make(Op::Ln, std::move(a));
        }
        if (accept_word("exp")) {
            expect('(');
            auto a = parse_expr();
            expect(')');
            return make(Op::Exp, std::move(a));
        }
        if (accept_word("u")) return make(Op::Var);
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        throw ParseError("unexpected character", pos_);
    }

    NodePtr parse_number() {
        const size_t start = pos_;
        while (pos_ < s_.size() &&
               (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.'))
            ++pos_;
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            size_t p = pos_ + 1;
            if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) ++p;
            if (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) {
                ++p;
                while (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) ++p;
                pos_ = p;
            }
        }
        try {
            size_t used = 0;
            const std::string tok(s_.substr(start, pos_ - start));
            const double v = std::stod(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            return constant(v);
        } catch (const std::exception&) {
            throw ParseError("malformed number", start);
        }
    }
};

inline int precedence(Op op) {
    switch (op) {
        case Op::Add:
        case Op::Sub: return 1;
        case Op::Mul:
        case Op::Div: return 2;
        case Op::Pow: return 3;
        default: return 4;
    }
}

inline void print_rec(const Node& n, std::ostringstream& out, int parent_prec, bool right_child) {
    const int prec = precedence(n.op);
    switch (n.op) {
        case Op::Const: {
            std::ostringstream tmp;
            tmp.precision(17);
            tmp << n.value;
            out << tmp.str();
            return;
        }
        case Op::Var: out << "u"; return;
        case Op::Ln:
            out << "ln(";
            print_rec(*n.lhs, out, 0, false);
            out << ")";
            return;
        case Op::Exp:
            out << "exp(";
            print_rec(*n.lhs, out, 0, false);
            out << ")";
            return;
        default: break;
    }
    const bool need_paren =
        prec < parent_prec || (prec == parent_prec && (right_child || n.op == Op::Pow));
    if (need_paren) out << "(";
    const char* sym = n.op == Op::Add   ? "+"
                      : n.op == Op::Sub ? "-"
                      : n.op == Op::Mul ? "*"
                      : n.op == Op::Div ? "/"
                                        : "^";
    // '^' is right associative: parenthesize a compound left child
    print_rec(*n.lhs, out, n.op == Op::Pow ? prec + 1 : prec, false);
    out << sym;
    print_rec(*n.rhs, out, prec, n.op != Op::Pow);
    if (need_paren) out << ")";
}

}  // namespace detail

inline NodePtr parse(std::string_view text) { return detail::Parser(text).run(); }

inline std::string print(const Node& n) {
    std::ostringstream out;
    detail::print_rec(n, out, 0, false);
    return out.str();
}

}  // namespace abslab::expr
