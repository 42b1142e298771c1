#pragma once

#include <memory>
#include <string>

namespace hysterelax {

/// Arithmetic expression in the variables x, y, t.
///
/// Supports + - * / ^, unary minus, parentheses, the constant pi and the
/// functions sin, cos, tan, exp, log, sqrt, abs, tanh, step (Heaviside with
/// step(0) = 0), min and max. Throws ConfigError on syntax errors.
class Expression {
public:
    Expression();  ///< the constant 0
    explicit Expression(const std::string& source);

    double operator()(double x, double y, double t) const;
    const std::string& source() const { return source_; }
    /// True if the value does not depend on t.
    bool time_independent() const;

    bool operator==(const Expression& other) const { return source_ == other.source_; }

    struct Node;

private:
    std::string source_;
    std::shared_ptr<const Node> root_;
};

}  // namespace hysterelax
