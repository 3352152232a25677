#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lmc {

/// Scalar coefficient field f(t, x) given as text.
///
/// Grammar: numbers, the variables `t`, `x` (alias of the first coordinate)
/// and `x1`..`xN` (1-based coordinates), binary `+ - * / ^`, unary `-`/`+`,
/// parentheses and the functions exp, log, sqrt, abs, sin, cos, tanh (one
/// argument) and min, max (two arguments). Precedence, tightest first:
/// `^` (right-associative), unary minus, `* /`, `+ -`.
///
/// Values are immutable and cheap to copy; evaluation is a pure function of
/// its inputs and may run concurrently from any number of threads.
/// Evaluation never traps: domain problems (log of a negative number,
/// division by zero) surface in-band as inf/NaN. Use `eval_checked` at
/// boundaries that require a finite value.
class Expr {
public:
    struct Node;
    struct Program;

    /// Zero constant.
    Expr();

    /// Throws SyntaxError / UnknownIdentifier.
    static Expr parse(std::string_view text);
    static Expr constant(double value);
    /// `name` is "t", "x" or "x<k>" with k >= 1.
    static Expr variable(std::string_view name);

    [[nodiscard]] double operator()(double t, double x) const;
    [[nodiscard]] double operator()(double t, std::span<const double> coords) const;

    /// Throws EvalDomain when the value is not finite.
    [[nodiscard]] double eval_checked(double t, double x) const;
    [[nodiscard]] double eval_checked(double t, std::span<const double> coords) const;

    /// Fully parenthesized canonical text; `parse(render())` evaluates identically.
    [[nodiscard]] std::string render() const;

    [[nodiscard]] bool depends_on_time() const;
    /// Largest 1-based coordinate index referenced (0 when state-free).
    [[nodiscard]] int max_coordinate() const;
    [[nodiscard]] std::optional<double> constant_value() const;
    [[nodiscard]] bool is_zero() const;

    friend Expr operator+(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a, const Expr& b);
    friend Expr operator*(const Expr& a, const Expr& b);
    friend Expr operator/(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a);
    friend Expr pow(const Expr& a, const Expr& b);
    /// Function application by catalog name ("exp", "min", ...).
    static Expr call(std::string_view name, std::vector<Expr> args);

private:
    explicit Expr(std::shared_ptr<const Node> root);

    std::shared_ptr<const Node> root_;
    std::shared_ptr<const Program> program_;
};

}  // namespace lmc
