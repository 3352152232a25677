#include "lmc/model.hpp"

#include "lmc/errors.hpp"

#include <algorithm>
#include <cmath>

namespace lmc {

DiffusionSpec DiffusionSpec::scalar(Expr drift, Expr dispersion, double x0, Interval iv) {
    DiffusionSpec s;
    s.interval = {iv};
    s.drift = {std::move(drift)};
    s.dispersion = {std::move(dispersion)};
    s.x0 = {x0};
    return s;
}

bool DiffusionSpec::homogeneous() const {
    auto uses_t = [](const Expr& e) { return e.depends_on_time(); };
    return std::none_of(drift.begin(), drift.end(), uses_t) &&
           std::none_of(dispersion.begin(), dispersion.end(), uses_t);
}

void DiffusionSpec::qv_density(double t, std::span<const double> x, std::span<double> out) const {
    const std::size_t d = dim();
    if (d == 1) {
        double s = dispersion[0](t, x);
        out[0] = s * s;
        return;
    }
    std::vector<double> sig(d * d);
    for (std::size_t k = 0; k < d * d; ++k) sig[k] = dispersion[k](t, x);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < d; ++k) acc += sig[i * d + k] * sig[j * d + k];
            out[i * d + j] = acc;
            out[j * d + i] = acc;
        }
    }
}

double DiffusionSpec::gauge(std::span<const double> x) const {
    double sq = 0.0;
    double g = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto& iv = interval[i];
        if (!(x[i] > iv.lower && x[i] < iv.upper)) return kInf;
        sq += x[i] * x[i];
        if (std::isfinite(iv.lower)) g = std::max(g, 1.0 / (x[i] - iv.lower));
        if (std::isfinite(iv.upper)) g = std::max(g, 1.0 / (iv.upper - x[i]));
    }
    return std::max(g, std::sqrt(sq));
}

bool DiffusionSpec::inside(std::span<const double> x) const {
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > interval[i].lower && x[i] < interval[i].upper)) return false;
    }
    return true;
}

double DiffusionSpec::upper_barrier(double level) const {
    double u = level;
    if (std::isfinite(interval[0].upper)) u = std::min(u, interval[0].upper - 1.0 / level);
    return u;
}

double DiffusionSpec::lower_barrier(double level) const {
    double l = -level;
    if (std::isfinite(interval[0].lower)) l = std::max(l, interval[0].lower + 1.0 / level);
    return l;
}

void validate(const DiffusionSpec& spec) {
    const std::size_t d = spec.dim();
    if (d == 0) throw ValidationError("diffusion must have dimension >= 1");
    if (spec.interval.size() != d || spec.x0.size() != d) {
        throw DimensionMismatch("interval and x0 must have one entry per coordinate");
    }
    if (spec.dispersion.size() != d * d) throw DimensionMismatch("dispersion must be dim x dim");
    for (std::size_t i = 0; i < d; ++i) {
        const auto& iv = spec.interval[i];
        if (!(iv.lower < iv.upper)) throw ValidationError("interval lower end must be below upper end");
        if (!(spec.x0[i] > iv.lower && spec.x0[i] < iv.upper)) {
            throw ValidationError("x0 must lie strictly inside the state interval");
        }
    }
    auto check_coords = [d](const Expr& e, const char* what) {
        if (static_cast<std::size_t>(e.max_coordinate()) > d) {
            throw DimensionMismatch(std::string(what) + " '" + e.render() + "' references a coordinate beyond dim");
        }
    };
    for (const auto& e : spec.drift) check_coords(e, "drift");
    for (const auto& e : spec.dispersion) check_coords(e, "dispersion");
}

bool ExponentSpec::is_zero() const {
    return std::all_of(beta.begin(), beta.end(), [](const Expr& e) { return e.is_zero(); });
}

void validate(const LocalizationPlan& plan) {
    if (plan.levels.size() < 2) throw ValidationError("localization plan needs at least two levels");
    if (plan.time_caps.size() != plan.levels.size()) {
        throw DimensionMismatch("time_caps must have one entry per level");
    }
    for (std::size_t i = 0; i < plan.levels.size(); ++i) {
        if (!(plan.levels[i] > 0.0) || !std::isfinite(plan.levels[i])) {
            throw ValidationError("levels must be positive and finite");
        }
        if (!(plan.time_caps[i] > 0.0)) throw ValidationError("time caps must be positive");
        if (i > 0 && !(plan.levels[i] > plan.levels[i - 1])) {
            throw ValidationError("levels must be strictly increasing");
        }
        if (i > 0 && plan.time_caps[i] < plan.time_caps[i - 1]) {
            throw ValidationError("time caps must be nondecreasing");
        }
    }
}

std::string to_string(Classification c) {
    switch (c) {
        case Classification::TrueMartingale: return "TrueMartingale";
        case Classification::StrictLocal: return "StrictLocal";
        default: return "Inconclusive";
    }
}

std::string to_string(FellerReport::Conclusion c) {
    switch (c) {
        case FellerReport::Conclusion::Explosive: return "Explosive";
        case FellerReport::Conclusion::NonExplosive: return "NonExplosive";
        default: return "Unknown";
    }
}

std::string to_string(EndpointIntegral::Status s) {
    switch (s) {
        case EndpointIntegral::Status::Finite: return "finite";
        case EndpointIntegral::Status::Infinite: return "infinite";
        default: return "failed";
    }
}

Expr fold_add(const Expr& a, const Expr& b) {
    auto ca = a.constant_value();
    auto cb = b.constant_value();
    if (ca && cb) return Expr::constant(*ca + *cb);
    if (ca && *ca == 0.0) return b;
    if (cb && *cb == 0.0) return a;
    return a + b;
}

Expr fold_mul(const Expr& a, const Expr& b) {
    auto ca = a.constant_value();
    auto cb = b.constant_value();
    if (ca && cb) return Expr::constant(*ca * *cb);
    if ((ca && *ca == 0.0) || (cb && *cb == 0.0)) return Expr::constant(0.0);
    if (ca && *ca == 1.0) return b;
    if (cb && *cb == 1.0) return a;
    return a * b;
}

namespace {

void require_compatible(const DiffusionSpec& spec, const ExponentSpec& exp) {
    if (exp.beta.size() != spec.dim()) {
        throw DimensionMismatch("exponent has " + std::to_string(exp.beta.size()) +
                                " components but the diffusion has dimension " + std::to_string(spec.dim()));
    }
    for (const auto& e : exp.beta) {
        if (static_cast<std::size_t>(e.max_coordinate()) > spec.dim()) {
            throw DimensionMismatch("beta '" + e.render() + "' references a coordinate beyond dim");
        }
    }
}

// c_ij = sum_k sigma_ik sigma_jk
Expr qv_entry(const DiffusionSpec& spec, std::size_t i, std::size_t j) {
    Expr acc = Expr::constant(0.0);
    for (std::size_t k = 0; k < spec.dim(); ++k) {
        acc = fold_add(acc, fold_mul(spec.sigma(i, k), spec.sigma(j, k)));
    }
    return acc;
}

}  // namespace

DiffusionSpec modified_drift(const DiffusionSpec& spec, const ExponentSpec& exp) {
    require_compatible(spec, exp);
    if (exp.is_zero()) return spec;
    DiffusionSpec out = spec;
    for (std::size_t i = 0; i < spec.dim(); ++i) {
        Expr shift = Expr::constant(0.0);
        for (std::size_t j = 0; j < spec.dim(); ++j) {
            if (exp.beta[j].is_zero()) continue;
            shift = fold_add(shift, fold_mul(qv_entry(spec, i, j), exp.beta[j]));
        }
        out.drift[i] = fold_add(spec.drift[i], shift);
    }
    return out;
}

Expr quadratic_exponent(const DiffusionSpec& spec, const ExponentSpec& exp) {
    require_compatible(spec, exp);
    Expr q = Expr::constant(0.0);
    for (std::size_t k = 0; k < spec.dim(); ++k) {
        // (sigma^T beta)_k
        Expr v = Expr::constant(0.0);
        for (std::size_t i = 0; i < spec.dim(); ++i) v = fold_add(v, fold_mul(exp.beta[i], spec.sigma(i, k)));
        q = fold_add(q, fold_mul(v, v));
    }
    return q;
}

StoppingRule rho_level(const LocalizationPlan& plan, std::size_t n) {
    if (n < 1 || n > plan.levels.size()) {
        throw IndexOutOfRange("plan level " + std::to_string(n) + " outside 1.." +
                              std::to_string(plan.levels.size()));
    }
    return {n, plan.levels[n - 1], plan.time_caps[n - 1]};
}

bool is_positive_definite(std::span<const double> m, std::size_t dim) {
    std::vector<double> l(dim * dim, 0.0);
    for (std::size_t j = 0; j < dim; ++j) {
        double diag = m[j * dim + j];
        for (std::size_t k = 0; k < j; ++k) diag -= l[j * dim + k] * l[j * dim + k];
        if (!(diag > 0.0)) return false;
        l[j * dim + j] = std::sqrt(diag);
        for (std::size_t i = j + 1; i < dim; ++i) {
            double v = m[i * dim + j];
            for (std::size_t k = 0; k < j; ++k) v -= l[i * dim + k] * l[j * dim + k];
            l[i * dim + j] = v / l[j * dim + j];
        }
    }
    return true;
}

GridCheck check_coefficients(const DiffusionSpec& spec, const ExponentSpec& exp, double radius, double horizon,
                             int points_per_axis) {
    GridCheck out;
    const std::size_t d = spec.dim();
    // Per-axis grid of the compact {gauge <= radius}; for d > 1 only the
    // coordinate axes through x0 plus the diagonal are sampled.
    std::vector<std::vector<double>> points;
    auto axis_values = [&](std::size_t i) {
        double lo = std::isfinite(spec.interval[i].lower) ? spec.interval[i].lower + 1.0 / radius : -radius;
        double hi = std::isfinite(spec.interval[i].upper) ? spec.interval[i].upper - 1.0 / radius : radius;
        lo = std::max(lo, -radius);
        hi = std::min(hi, radius);
        std::vector<double> v;
        for (int k = 0; k < points_per_axis; ++k) {
            v.push_back(lo + (hi - lo) * k / (points_per_axis - 1));
        }
        return v;
    };
    for (std::size_t i = 0; i < d; ++i) {
        for (double v : axis_values(i)) {
            auto p = spec.x0;
            p[i] = v;
            points.push_back(p);
        }
    }
    if (d > 1) {
        auto diag = axis_values(0);
        for (double v : diag) points.emplace_back(d, v / std::sqrt(static_cast<double>(d)));
    }
    std::vector<double> times{0.0};
    if (!spec.homogeneous()) {
        for (int k = 1; k <= 8; ++k) times.push_back(horizon * k / 8.0);
    }
    std::vector<double> c(d * d);
    bool reported_c = false;
    bool reported_f = false;
    for (double t : times) {
        for (const auto& p : points) {
            if (!spec.inside(p) || spec.gauge(p) > radius) continue;
            spec.qv_density(t, p, c);
            bool finite = std::all_of(c.begin(), c.end(), [](double v) { return std::isfinite(v); });
            for (const auto& e : spec.drift) finite = finite && std::isfinite(e(t, p));
            for (const auto& e : exp.beta) finite = finite && std::isfinite(e(t, p));
            if (!finite) {
                out.coefficients_finite = false;
                if (!reported_f) {
                    out.notes.push_back("coefficient not finite at t=" + std::to_string(t) + ", x1=" +
                                        std::to_string(p[0]));
                    reported_f = true;
                }
                continue;
            }
            if (!is_positive_definite(c, d)) {
                out.qv_positive = false;
                if (!reported_c) {
                    out.notes.push_back("quadratic-variation density not positive definite at t=" +
                                        std::to_string(t) + ", x1=" + std::to_string(p[0]));
                    reported_c = true;
                }
            }
        }
    }
    return out;
}

}  // namespace lmc
