#pragma once

#include "lmc/errors.hpp"
#include "lmc/mc.hpp"
#include "lmc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace lmc::detail {

// Euler-Maruyama stepper holding one path's state. After each step the
// coefficients used (evaluated at the step's left point), the Brownian
// increment and the continuous-part increment sigma dW remain readable.
class EulerPath {
public:
    EulerPath(const DiffusionSpec& spec, const SimConfig& config, std::size_t index, std::uint64_t stream = 0)
        : spec_(spec), config_(config), d_(spec.dim()), rng_(path_engine(config.seed, index, stream)),
          x(spec.x0), x_prev(d_), b(d_), sigma(d_ * d_), dw(d_), xc(d_) {}

    // Advances by one step ending no later than t_stop. Returns false when the
    // path is declared a numerical explosion (step floor, guard, or leaving
    // the state interval).
    bool step(double t_stop) {
        t_prev = t;
        x_prev = x;
        dt = 0.0;
        std::fill(xc.begin(), xc.end(), 0.0);
        double norm_b = 0.0;
        double trace_c = 0.0;
        for (std::size_t i = 0; i < d_; ++i) {
            b[i] = spec_.drift[i](t, x);
            norm_b += b[i] * b[i];
        }
        for (std::size_t k = 0; k < d_ * d_; ++k) {
            sigma[k] = spec_.dispersion[k](t, x);
            trace_c += sigma[k] * sigma[k];
        }
        if (!std::isfinite(norm_b) || !std::isfinite(trace_c)) {
            throw EvalDomain("coefficient not finite at t=" + std::to_string(t) + ", x1=" + std::to_string(x[0]));
        }
        double full = config_.dt_max;
        if (config_.adaptive) {
            full = std::min(full, config_.dt_max / (std::sqrt(norm_b) + trace_c + 1.0));
            if (full < config_.dt_min()) return false;
        }
        const bool last = t_stop - t <= full;
        dt = last ? t_stop - t : full;
        const double root = std::sqrt(dt);
        for (std::size_t k = 0; k < d_; ++k) dw[k] = root * normal_(rng_);
        for (std::size_t i = 0; i < d_; ++i) {
            double acc = 0.0;
            for (std::size_t k = 0; k < d_; ++k) acc += sigma[i * d_ + k] * dw[k];
            xc[i] = acc;
            x[i] += b[i] * dt + acc;
        }
        t = last ? t_stop : t + dt;
        gauge = spec_.gauge(x);
        return gauge < config_.explosion_guard;
    }

    // Uniform draw from the same stream (bridge tests).
    double uniform() { return uniform_(rng_); }

    [[nodiscard]] std::size_t dim() const { return d_; }

private:
    const DiffusionSpec& spec_;
    const SimConfig& config_;
    std::size_t d_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};

public:
    double t = 0.0;
    double t_prev = 0.0;
    double dt = 0.0;
    double gauge = 0.0;
    std::vector<double> x;
    std::vector<double> x_prev;
    std::vector<double> b;
    std::vector<double> sigma;  // row-major, at (t_prev, x_prev)
    std::vector<double> dw;
    std::vector<double> xc;     // sigma dw
};

// Probability that a Brownian bridge from a to b over dt with variance
// density c crosses the scalar barriers of `level` inside the step.
inline double bridge_crossing(const DiffusionSpec& spec, double level, double a, double b, double c, double dt) {
    if (!(c > 0.0) || !(dt > 0.0)) return 0.0;
    const double up = spec.upper_barrier(level);
    const double lo = spec.lower_barrier(level);
    double p = 0.0;
    if (a < up && b < up) p += std::exp(-2.0 * (up - a) * (up - b) / (c * dt));
    else p = 1.0;
    if (a > lo && b > lo) p += std::exp(-2.0 * (a - lo) * (b - lo) / (c * dt));
    else p = 1.0;
    return std::min(1.0, p);
}

}  // namespace lmc::detail
