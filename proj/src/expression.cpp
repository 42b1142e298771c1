#include "hysterelax/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <vector>

#include <fmt/format.h>

#include "hysterelax/error.hpp"

namespace hysterelax {

struct Expression::Node {
    enum class Kind { number, var_x, var_y, var_t, unary_minus, add, sub, mul, div, pow, call };
    Kind kind = Kind::number;
    double value = 0.0;
    std::string name;
    std::vector<std::shared_ptr<const Node>> args;

    double eval(double x, double y, double t) const {
        switch (kind) {
            case Kind::number: return value;
            case Kind::var_x: return x;
            case Kind::var_y: return y;
            case Kind::var_t: return t;
            case Kind::unary_minus: return -args[0]->eval(x, y, t);
            case Kind::add: return args[0]->eval(x, y, t) + args[1]->eval(x, y, t);
            case Kind::sub: return args[0]->eval(x, y, t) - args[1]->eval(x, y, t);
            case Kind::mul: return args[0]->eval(x, y, t) * args[1]->eval(x, y, t);
            case Kind::div: return args[0]->eval(x, y, t) / args[1]->eval(x, y, t);
            case Kind::pow: return std::pow(args[0]->eval(x, y, t), args[1]->eval(x, y, t));
            case Kind::call: return call(x, y, t);
        }
        return 0.0;
    }

    double call(double x, double y, double t) const {
        const double a = args[0]->eval(x, y, t);
        if (name == "sin") return std::sin(a);
        if (name == "cos") return std::cos(a);
        if (name == "tan") return std::tan(a);
        if (name == "exp") return std::exp(a);
        if (name == "log") return std::log(a);
        if (name == "sqrt") return std::sqrt(a);
        if (name == "abs") return std::abs(a);
        if (name == "tanh") return std::tanh(a);
        if (name == "step") return a > 0.0 ? 1.0 : 0.0;
        const double b = args[1]->eval(x, y, t);
        if (name == "min") return std::min(a, b);
        return std::max(a, b);
    }

    bool uses_t() const {
        if (kind == Kind::var_t) return true;
        for (const auto& a : args) {
            if (a->uses_t()) return true;
        }
        return false;
    }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

int arity(const std::string& name) {
    static const char* unary[] = {"sin", "cos", "tan", "exp", "log", "sqrt", "abs", "tanh", "step"};
    for (const char* f : unary) {
        if (name == f) return 1;
    }
    if (name == "min" || name == "max") return 2;
    return -1;
}

class Parser {
public:
    explicit Parser(const std::string& s) : s_(s) {}

    NodePtr parse() {
        NodePtr e = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected character");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError(fmt::format("expression '{}': {} at position {}", s_, what, pos_));
    }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    static NodePtr make(Kind kind, std::vector<NodePtr> args = {}, double value = 0.0, std::string name = {}) {
        auto n = std::make_shared<Expression::Node>();
        n->kind = kind;
        n->args = std::move(args);
        n->value = value;
        n->name = std::move(name);
        return n;
    }

    NodePtr expr() {
        NodePtr lhs = term();
        for (;;) {
            if (accept('+')) {
                lhs = make(Kind::add, {lhs, term()});
            } else if (accept('-')) {
                lhs = make(Kind::sub, {lhs, term()});
            } else {
                return lhs;
            }
        }
    }

    NodePtr term() {
        NodePtr lhs = unary();
        for (;;) {
            if (accept('*')) {
                lhs = make(Kind::mul, {lhs, unary()});
            } else if (accept('/')) {
                lhs = make(Kind::div, {lhs, unary()});
            } else {
                return lhs;
            }
        }
    }

    NodePtr unary() {
        if (accept('-')) return make(Kind::unary_minus, {unary()});
        if (accept('+')) return unary();
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (accept('^')) return make(Kind::pow, {base, unary()});
        return base;
    }

    NodePtr primary() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end");
        const char c = s_[pos_];
        if (accept('(')) {
            NodePtr e = expr();
            if (!accept(')')) fail("missing ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = s_.c_str() + pos_;
            char* end = nullptr;
            const double v = std::strtod(begin, &end);
            if (end == begin) fail("bad number");
            pos_ += static_cast<std::size_t>(end - begin);
            return make(Kind::number, {}, v);
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < s_.size() &&
                   (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
                ++pos_;
            }
            const std::string name = s_.substr(start, pos_ - start);
            if (name == "x") return make(Kind::var_x);
            if (name == "y") return make(Kind::var_y);
            if (name == "t") return make(Kind::var_t);
            if (name == "pi") return make(Kind::number, {}, std::numbers::pi);
            const int n = arity(name);
            if (n < 0) fail(fmt::format("unknown name '{}'", name));
            if (!accept('(')) fail(fmt::format("'{}' needs an argument list", name));
            std::vector<NodePtr> args{expr()};
            while (accept(',')) args.push_back(expr());
            if (!accept(')')) fail("missing ')'");
            if (static_cast<int>(args.size()) != n) {
                fail(fmt::format("'{}' takes {} argument(s)", name, n));
            }
            return make(Kind::call, std::move(args), 0.0, name);
        }
        fail("unexpected character");
    }

    const std::string& s_;
    std::size_t pos_ = 0;
};

}  // namespace

Expression::Expression() : Expression("0") {}

Expression::Expression(const std::string& source) : source_(source), root_(Parser(source).parse()) {}

double Expression::operator()(double x, double y, double t) const { return root_->eval(x, y, t); }

bool Expression::time_independent() const { return !root_->uses_t(); }

}  // namespace hysterelax
