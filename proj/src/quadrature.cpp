#include "lmc/quadrature.hpp"

#include "lmc/errors.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <queue>
#include <string>

namespace lmc {

namespace {

struct Piece {
    double a, b, value, error;
    unsigned depth;
    bool operator<(const Piece& o) const { return error < o.error; }
};

// One GK15 panel. Boost reports the Kronrod-Gauss difference on the
// reference interval [-1, 1]; it is rescaled here.
template <class F>
Piece panel(F& f, double a, double b, unsigned depth) {
    double err = 0.0;
    double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 0, 0.0, &err);
    return {a, b, v, err * 0.5 * (b - a), depth};
}

}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const QuadratureTolerance& tol) {
    QuadratureResult out;
    if (a == b) return out;
    if (a > b) {
        out = integrate(f, b, a, tol);
        out.value = -out.value;
        return out;
    }
    long evals = 0;
    auto counted = [&](double x) {
        ++evals;
        double y = f(x);
        if (!std::isfinite(y)) throw QuadratureFailure("integrand not finite at x=" + std::to_string(x));
        return y;
    };
    std::priority_queue<Piece> heap;
    double value = 0.0;
    double error = 0.0;
    auto push = [&](double lo, double hi, unsigned depth) {
        Piece p = panel(counted, lo, hi, depth);
        value += p.value;
        error += p.error;
        heap.push(p);
    };
    try {
        push(a, b, 0);
        // Global adaptive bisection of the worst panel.
        for (;;) {
            double target = std::max(tol.absolute, tol.relative * std::fabs(value));
            if (error <= target) break;
            Piece worst = heap.top();
            if (worst.depth >= tol.max_depth) break;
            double mid = 0.5 * (worst.a + worst.b);
            if (!(mid > worst.a && mid < worst.b)) break;
            heap.pop();
            value -= worst.value;
            error -= worst.error;
            push(worst.a, mid, worst.depth + 1);
            push(mid, worst.b, worst.depth + 1);
        }
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw QuadratureFailure(std::string("integrand not finite on the range: ") + e.what());
    }
    // Recompute the totals to shed accumulated rounding from the updates.
    value = 0.0;
    error = 0.0;
    while (!heap.empty()) {
        value += heap.top().value;
        error += heap.top().error;
        heap.pop();
    }
    if (!std::isfinite(value)) throw QuadratureFailure("integral is not finite");
    if (error > std::max(tol.absolute, 10.0 * tol.relative * std::fabs(value))) {
        throw QuadratureFailure("error target unmet on [" + std::to_string(a) + ", " + std::to_string(b) +
                                "]: estimated error " + std::to_string(error));
    }
    out.value = value;
    out.error = error;
    out.evaluations = evals;
    return out;
}

double gauss_legendre(const std::function<double(double)>& f, double a, double b) {
    if (a == b) return 0.0;
    return boost::math::quadrature::gauss<double, 15>::integrate(f, a, b);
}

}  // namespace lmc
