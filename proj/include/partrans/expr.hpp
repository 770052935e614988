#pragma once

// Scalar fields over a planar chart: immutable expression ASTs in the
// variables x, y with named parameters resolved at evaluation time.
// Parsing is a small Pratt parser; every error carries the byte offset of
// the offending token. Evaluation returns jets (see jet.hpp), so any partial
// derivative up to total order 4 comes out of one evaluation pass.

#include <charconv>
#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "partrans/jet.hpp"

namespace partrans {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " (byte offset " + std::to_string(offset) +
                             ")"),
          offset_(offset) {}

    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

using ParamEnv = std::map<std::string, double>;

namespace ast {

enum class Kind { Num, VarX, VarY, Param, Neg, Add, Sub, Mul, Div, PowInt, Call, Deriv };

enum class Fn { Exp, Log, Sin, Cos, Sqrt, Atan };

struct Node {
    Kind kind;
    std::size_t offset = EvalError::npos; // source byte offset, npos if built in code
    double num = 0.0;                     // Num
    std::string name;                     // Param
    long long ipow = 0;                   // PowInt
    Fn fn = Fn::Exp;                      // Call
    int dx = 0, dy = 0;                   // Deriv
    std::shared_ptr<const Node> a, b;
};

using NodePtr = std::shared_ptr<const Node>;

inline NodePtr make(Kind k, std::size_t off = EvalError::npos) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->offset = off;
    return n;
}

inline Jet eval(const Node& n, double x, double y, int order,
                const ParamEnv& env) {
    switch (n.kind) {
        case Kind::Num:
            return Jet::constant(n.num, order);
        case Kind::VarX:
            return Jet::var_x(x, order);
        case Kind::VarY:
            return Jet::var_y(y, order);
        case Kind::Param: {
            auto it = env.find(n.name);
            if (it == env.end())
                throw EvalError("unresolved parameter '" + n.name + "'",
                                n.offset);
            return Jet::constant(it->second, order);
        }
        case Kind::Neg:
            return -eval(*n.a, x, y, order, env);
        case Kind::Add:
            return eval(*n.a, x, y, order, env) + eval(*n.b, x, y, order, env);
        case Kind::Sub:
            return eval(*n.a, x, y, order, env) - eval(*n.b, x, y, order, env);
        case Kind::Mul:
            return eval(*n.a, x, y, order, env) * eval(*n.b, x, y, order, env);
        case Kind::Div: {
            Jet num = eval(*n.a, x, y, order, env);
            Jet den = eval(*n.b, x, y, order, env);
            if (den.value() == 0.0)
                throw EvalError("division by zero", n.offset);
            return num / den;
        }
        case Kind::PowInt:
            return jet_pow_int(eval(*n.a, x, y, order, env), n.ipow, n.offset);
        case Kind::Call: {
            Jet u = eval(*n.a, x, y, order, env);
            switch (n.fn) {
                case Fn::Exp:  return jet_exp(u);
                case Fn::Log:  return jet_log(u, n.offset);
                case Fn::Sin:  return jet_sin(u);
                case Fn::Cos:  return jet_cos(u);
                case Fn::Sqrt: return jet_sqrt(u, n.offset);
                case Fn::Atan: return jet_atan(u);
            }
            throw EvalError("unknown function", n.offset);
        }
        case Kind::Deriv: {
            int total = order + n.dx + n.dy;
            if (total > kJetMaxOrder)
                throw EvalError("derivative request exceeds jet order cap " +
                                    std::to_string(kJetMaxOrder),
                                n.offset);
            Jet inner = eval(*n.a, x, y, total, env);
            Jet r;
            r.order = order;
            for (int i = 0; i <= order; ++i)
                for (int j = 0; i + j <= order; ++j)
                    // raw partial (i+dx, j+dy), renormalized to coefficient (i, j)
                    r.c[i][j] = inner.c[i + n.dx][j + n.dy] *
                                Jet::factorial(i + n.dx) *
                                Jet::factorial(j + n.dy) /
                                (Jet::factorial(i) * Jet::factorial(j));
            return r;
        }
    }
    throw EvalError("corrupt expression node");
}

} // namespace ast

// Immutable scalar field. Copies share the AST.
class ScalarField {
public:
    ScalarField() : node_(ast::make(ast::Kind::Num)) {}

    static ScalarField constant(double v) {
        auto n = ast::make(ast::Kind::Num);
        std::const_pointer_cast<ast::Node>(n)->num = v;
        return ScalarField(n);
    }

    static ScalarField x() { return ScalarField(ast::make(ast::Kind::VarX)); }
    static ScalarField y() { return ScalarField(ast::make(ast::Kind::VarY)); }

    static ScalarField param(const std::string& name) {
        auto n = ast::make(ast::Kind::Param);
        std::const_pointer_cast<ast::Node>(n)->name = name;
        return ScalarField(n);
    }

    static ScalarField parse(const std::string& src);

    double eval(double x, double y, const ParamEnv& env = {}) const {
        return ast::eval(*node_, x, y, 0, env).value();
    }

    Jet eval_jet(double x, double y, int order, const ParamEnv& env = {}) const {
        Jet::check_order(order);
        return ast::eval(*node_, x, y, order, env);
    }

    // Field whose value at p is the raw partial d^{dx+dy} f / dx^i dy^j of
    // this field. Evaluating its jets raises the inner order accordingly;
    // the combined order must stay within the engine cap.
    ScalarField derivative(int dx, int dy) const {
        if (dx < 0 || dy < 0 || dx + dy == 0 || dx + dy > kJetMaxOrder)
            throw EvalError("bad derivative multi-index");
        auto n = ast::make(ast::Kind::Deriv);
        auto m = std::const_pointer_cast<ast::Node>(n);
        m->dx = dx;
        m->dy = dy;
        m->a = node_;
        return ScalarField(n);
    }

    ast::NodePtr node() const { return node_; }

    friend ScalarField operator+(const ScalarField& a, const ScalarField& b) {
        return binary(ast::Kind::Add, a, b);
    }
    friend ScalarField operator-(const ScalarField& a, const ScalarField& b) {
        return binary(ast::Kind::Sub, a, b);
    }
    friend ScalarField operator*(const ScalarField& a, const ScalarField& b) {
        return binary(ast::Kind::Mul, a, b);
    }
    friend ScalarField operator/(const ScalarField& a, const ScalarField& b) {
        return binary(ast::Kind::Div, a, b);
    }
    friend ScalarField operator-(const ScalarField& a) {
        auto n = ast::make(ast::Kind::Neg);
        std::const_pointer_cast<ast::Node>(n)->a = a.node_;
        return ScalarField(n);
    }
    friend ScalarField operator*(double s, const ScalarField& a) {
        return constant(s) * a;
    }
    friend ScalarField operator+(const ScalarField& a, double s) {
        return a + constant(s);
    }
    friend ScalarField operator+(double s, const ScalarField& a) {
        return constant(s) + a;
    }
    friend ScalarField operator-(double s, const ScalarField& a) {
        return constant(s) - a;
    }

    ScalarField pow_int(long long n) const {
        auto p = ast::make(ast::Kind::PowInt);
        auto m = std::const_pointer_cast<ast::Node>(p);
        m->ipow = n;
        m->a = node_;
        return ScalarField(p);
    }

private:
    explicit ScalarField(ast::NodePtr n) : node_(std::move(n)) {}

    static ScalarField binary(ast::Kind k, const ScalarField& a,
                              const ScalarField& b) {
        auto n = ast::make(k);
        auto m = std::const_pointer_cast<ast::Node>(n);
        m->a = a.node_;
        m->b = b.node_;
        return ScalarField(n);
    }

    friend ScalarField sf_call(ast::Fn fn, const ScalarField& a);

    ast::NodePtr node_;
};

inline ScalarField sf_call(ast::Fn fn, const ScalarField& a) {
    auto n = ast::make(ast::Kind::Call);
    auto m = std::const_pointer_cast<ast::Node>(n);
    m->fn = fn;
    m->a = a.node();
    return ScalarField(n);
}

inline ScalarField sf_exp(const ScalarField& a) { return sf_call(ast::Fn::Exp, a); }
inline ScalarField sf_log(const ScalarField& a) { return sf_call(ast::Fn::Log, a); }
inline ScalarField sf_sin(const ScalarField& a) { return sf_call(ast::Fn::Sin, a); }
inline ScalarField sf_cos(const ScalarField& a) { return sf_call(ast::Fn::Cos, a); }
inline ScalarField sf_sqrt(const ScalarField& a) { return sf_call(ast::Fn::Sqrt, a); }
inline ScalarField sf_atan(const ScalarField& a) { return sf_call(ast::Fn::Atan, a); }

namespace parser_detail {

enum class Tok { Num, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };

struct Token {
    Tok kind;
    std::size_t offset;
    double num = 0.0;
    std::string text;
};

class Lexer {
public:
    explicit Lexer(const std::string& src) : src_(src) { advance(); }

    const Token& peek() const { return tok_; }

    Token take() {
        Token t = tok_;
        advance();
        return t;
    }

private:
    void advance() {
        while (pos_ < src_.size() &&
               (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n'))
            ++pos_;
        tok_.offset = pos_;
        tok_.text.clear();
        if (pos_ >= src_.size()) {
            tok_.kind = Tok::End;
            return;
        }
        char ch = src_[pos_];
        switch (ch) {
            case '+': tok_.kind = Tok::Plus;   ++pos_; return;
            case '-': tok_.kind = Tok::Minus;  ++pos_; return;
            case '*': tok_.kind = Tok::Star;   ++pos_; return;
            case '/': tok_.kind = Tok::Slash;  ++pos_; return;
            case '^': tok_.kind = Tok::Caret;  ++pos_; return;
            case '(': tok_.kind = Tok::LParen; ++pos_; return;
            case ')': tok_.kind = Tok::RParen; ++pos_; return;
            default: break;
        }
        if ((ch >= '0' && ch <= '9') || ch == '.') {
            const char* begin = src_.data() + pos_;
            const char* end = src_.data() + src_.size();
            double v = 0.0;
            auto res = std::from_chars(begin, end, v);
            if (res.ec != std::errc())
                throw ParseError("malformed number", pos_);
            tok_.kind = Tok::Num;
            tok_.num = v;
            pos_ = static_cast<std::size_t>(res.ptr - src_.data());
            return;
        }
        if ((ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || ch == '_') {
            std::size_t start = pos_;
            while (pos_ < src_.size() &&
                   ((src_[pos_] >= 'a' && src_[pos_] <= 'z') ||
                    (src_[pos_] >= 'A' && src_[pos_] <= 'Z') ||
                    (src_[pos_] >= '0' && src_[pos_] <= '9') ||
                    src_[pos_] == '_'))
                ++pos_;
            tok_.kind = Tok::Ident;
            tok_.text = src_.substr(start, pos_ - start);
            return;
        }
        throw ParseError(std::string("unexpected character '") + ch + "'", pos_);
    }

    const std::string& src_;
    std::size_t pos_ = 0;
    Token tok_;
};

class Parser {
public:
    explicit Parser(const std::string& src) : lex_(src) {}

    ast::NodePtr parse() {
        ast::NodePtr e = expr(0);
        if (lex_.peek().kind != Tok::End)
            throw ParseError("unexpected trailing input", lex_.peek().offset);
        return e;
    }

private:
    // Binding powers: +,- (1); *,/ (3); prefix - (5); ^ (7).
    ast::NodePtr expr(int min_bp) {
        ast::NodePtr lhs = prefix();
        for (;;) {
            Tok k = lex_.peek().kind;
            int lbp;
            ast::Kind op;
            switch (k) {
                case Tok::Plus:  lbp = 1; op = ast::Kind::Add; break;
                case Tok::Minus: lbp = 1; op = ast::Kind::Sub; break;
                case Tok::Star:  lbp = 3; op = ast::Kind::Mul; break;
                case Tok::Slash: lbp = 3; op = ast::Kind::Div; break;
                case Tok::Caret: lbp = 7; op = ast::Kind::PowInt; break;
                default: return lhs;
            }
            if (lbp < min_bp) return lhs;
            Token t = lex_.take();
            if (op == ast::Kind::PowInt) {
                auto n = ast::make(ast::Kind::PowInt, t.offset);
                auto m = std::const_pointer_cast<ast::Node>(n);
                m->ipow = exponent();
                m->a = lhs;
                lhs = n;
                continue;
            }
            ast::NodePtr rhs = expr(lbp + 1);
            auto n = ast::make(op, t.offset);
            auto m = std::const_pointer_cast<ast::Node>(n);
            m->a = lhs;
            m->b = rhs;
            lhs = n;
        }
    }

    // Exponents are integer literals (optionally signed); a caret chain is
    // right-associative, so x^2^3 = x^(2^3).
    long long exponent() {
        bool neg = false;
        if (lex_.peek().kind == Tok::Minus) {
            lex_.take();
            neg = true;
        }
        Token t = lex_.peek();
        if (t.kind != Tok::Num)
            throw ParseError("exponent must be an integer literal", t.offset);
        double v = t.num;
        long long iv = static_cast<long long>(v);
        if (static_cast<double>(iv) != v)
            throw ParseError("exponent must be an integer literal", t.offset);
        lex_.take();
        long long e = neg ? -iv : iv;
        if (lex_.peek().kind == Tok::Caret) {
            Token caret = lex_.take();
            long long e2 = exponent();
            if (e2 < 0)
                throw ParseError("negative exponent in exponent tower",
                                 caret.offset);
            long long r = 1;
            for (long long i = 0; i < e2; ++i) {
                r *= e;
                if (r > 1000000000LL || r < -1000000000LL)
                    throw ParseError("exponent too large", caret.offset);
            }
            e = r;
        }
        if (e > 1000000000LL || e < -1000000000LL)
            throw ParseError("exponent too large", t.offset);
        return e;
    }

    ast::NodePtr prefix() {
        Token t = lex_.take();
        switch (t.kind) {
            case Tok::Num: {
                auto n = ast::make(ast::Kind::Num, t.offset);
                std::const_pointer_cast<ast::Node>(n)->num = t.num;
                return n;
            }
            case Tok::Minus: {
                auto n = ast::make(ast::Kind::Neg, t.offset);
                std::const_pointer_cast<ast::Node>(n)->a = expr(6);
                return n;
            }
            case Tok::LParen: {
                ast::NodePtr e = expr(0);
                if (lex_.peek().kind != Tok::RParen)
                    throw ParseError("expected ')'", lex_.peek().offset);
                lex_.take();
                return e;
            }
            case Tok::Ident:
                return ident(t);
            default:
                throw ParseError("expected an operand", t.offset);
        }
    }

    ast::NodePtr ident(const Token& t) {
        static const std::map<std::string, ast::Fn> fns = {
            {"exp", ast::Fn::Exp},   {"log", ast::Fn::Log},
            {"sin", ast::Fn::Sin},   {"cos", ast::Fn::Cos},
            {"sqrt", ast::Fn::Sqrt}, {"atan", ast::Fn::Atan}};
        auto fn = fns.find(t.text);
        if (fn != fns.end()) {
            if (lex_.peek().kind != Tok::LParen)
                throw ParseError("expected '(' after function '" + t.text + "'",
                                 lex_.peek().offset);
            lex_.take();
            ast::NodePtr arg = expr(0);
            if (lex_.peek().kind != Tok::RParen)
                throw ParseError("expected ')'", lex_.peek().offset);
            lex_.take();
            auto n = ast::make(ast::Kind::Call, t.offset);
            auto m = std::const_pointer_cast<ast::Node>(n);
            m->fn = fn->second;
            m->a = arg;
            return n;
        }
        if (lex_.peek().kind == Tok::LParen)
            throw ParseError("unknown function '" + t.text + "'", t.offset);
        if (t.text == "x") return ast::make(ast::Kind::VarX, t.offset);
        if (t.text == "y") return ast::make(ast::Kind::VarY, t.offset);
        auto n = ast::make(ast::Kind::Param, t.offset);
        std::const_pointer_cast<ast::Node>(n)->name = t.text;
        return n;
    }

    Lexer lex_;
};

} // namespace parser_detail

inline ScalarField ScalarField::parse(const std::string& src) {
    parser_detail::Parser p(src);
    return ScalarField(p.parse());
}

} // namespace partrans
