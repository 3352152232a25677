#pragma once

#include <functional>

namespace lmc {

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    long evaluations = 0;
};

struct QuadratureTolerance {
    double absolute = 1e-9;
    double relative = 1e-7;
    unsigned max_depth = 60;  // bisection depth limit per panel
};

/// Globally adaptive Gauss-Kronrod (15-point) integral of f over [a, b], a <= b or a > b.
/// Throws QuadratureFailure when the error target is unmet or f is not finite.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const QuadratureTolerance& tol = {});

/// Non-adaptive 15-point Gauss-Legendre rule; for short smooth ranges.
double gauss_legendre(const std::function<double(double)>& f, double a, double b);

}  // namespace lmc
