#include "lmc/mc.hpp"

#include "euler.hpp"
#include "lmc/errors.hpp"
#include "lmc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace lmc {

void validate(const SimConfig& c) {
    if (c.n_paths < 1) throw ValidationError("mc.n_paths must be positive");
    if (!(c.horizon > 0.0) || !std::isfinite(c.horizon)) throw ValidationError("mc.horizon must be positive");
    if (!(c.dt_max > 0.0) || c.dt_max > c.horizon) throw ValidationError("mc.dt_max must lie in (0, horizon]");
    if (!(c.explosion_guard > 0.0)) throw ValidationError("mc.explosion_guard must be positive");
}

std::string to_string(PathStatus s) {
    switch (s) {
        case PathStatus::ReachedHorizon: return "ReachedHorizon";
        case PathStatus::ExitedLevel: return "ExitedLevel";
        default: return "NumericalExplosion";
    }
}

MCEstimate summarize(std::span<const double> samples) {
    MCEstimate e;
    const std::size_t n = samples.size();
    e.n_effective = n;
    if (n == 0) return e;
    const double total = pairwise_sum(samples);
    const double largest = *std::max_element(samples.begin(), samples.end());
    if (!std::isfinite(total)) {
        e.mean = kInf;
        e.std_error = kInf;
        e.max_sample_share = 1.0;
        e.heavy_tail_flag = true;
        return e;
    }
    e.mean = total / static_cast<double>(n);
    if (n > 1) {
        std::vector<double> dev(n);
        for (std::size_t i = 0; i < n; ++i) dev[i] = (samples[i] - e.mean) * (samples[i] - e.mean);
        e.std_error = std::sqrt(pairwise_sum(dev) / static_cast<double>(n - 1) / static_cast<double>(n));
    }
    e.max_sample_share = total > 0.0 ? std::clamp(largest / total, 0.0, 1.0) : 0.0;
    e.heavy_tail_flag = e.max_sample_share > 0.5;
    return e;
}

PathRecord simulate_path(const DiffusionSpec& spec, const SimConfig& config, std::size_t path_index,
                         double stop_level) {
    validate(config);
    if (path_index >= config.n_paths) throw IndexOutOfRange("path index beyond n_paths");
    detail::EulerPath p(spec, config, path_index);
    PathRecord rec;
    rec.dim = spec.dim();
    rec.times.push_back(0.0);
    rec.states.insert(rec.states.end(), p.x.begin(), p.x.end());
    while (p.t < config.horizon) {
        const bool ok = p.step(config.horizon);
        if (p.dt > 0.0 || !ok) {
            rec.times.push_back(p.t);
            rec.states.insert(rec.states.end(), p.x.begin(), p.x.end());
        }
        if (!ok) {
            rec.status = PathStatus::NumericalExplosion;
            rec.exit_time = p.t;
            return rec;
        }
        if (p.gauge >= stop_level) {
            rec.status = PathStatus::ExitedLevel;
            rec.exit_level = stop_level;
            rec.exit_time = p.t;
            return rec;
        }
    }
    return rec;
}

std::vector<double> stochastic_exponential(const PathRecord& path, const DiffusionSpec& spec,
                                           const ExponentSpec& exp, ExponentDriver driver) {
    const std::size_t d = spec.dim();
    if (exp.beta.size() != d || path.dim != d) throw DimensionMismatch("exponent, path and spec dimensions differ");
    std::vector<double> z(path.times.size(), 1.0);
    if (exp.is_zero()) return z;
    std::vector<double> beta(d), sig(d * d), drv(d);
    double log_z = 0.0;
    for (std::size_t i = 0; i + 1 < path.times.size(); ++i) {
        const double t = path.times[i];
        const double dt = path.times[i + 1] - t;
        auto x = path.state(i);
        auto xn = path.state(i + 1);
        for (std::size_t k = 0; k < d * d; ++k) sig[k] = spec.dispersion[k](t, x);
        double lin = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            beta[j] = exp.beta[j](t, x);
            drv[j] = xn[j] - x[j];
            if (driver == ExponentDriver::ContinuousPart) drv[j] -= spec.drift[j](t, x) * dt;
            lin += beta[j] * drv[j];
        }
        double q = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            double v = 0.0;
            for (std::size_t j = 0; j < d; ++j) v += beta[j] * sig[j * d + k];
            q += v * v;
        }
        log_z += lin - 0.5 * q * dt;
        if (!std::isfinite(log_z)) throw EvalDomain("stochastic exponential not finite at t=" + std::to_string(t));
        z[i + 1] = std::exp(log_z);
    }
    return z;
}

std::vector<double> exponent_bracket(const PathRecord& path, const DiffusionSpec& spec, const ExponentSpec& exp) {
    const std::size_t d = spec.dim();
    if (exp.beta.size() != d || path.dim != d) throw DimensionMismatch("exponent, path and spec dimensions differ");
    std::vector<double> out(path.times.size(), 0.0);
    std::vector<double> beta(d), sig(d * d);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < path.times.size(); ++i) {
        const double t = path.times[i];
        auto x = path.state(i);
        for (std::size_t k = 0; k < d * d; ++k) sig[k] = spec.dispersion[k](t, x);
        for (std::size_t j = 0; j < d; ++j) beta[j] = exp.beta[j](t, x);
        double q = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            double v = 0.0;
            for (std::size_t j = 0; j < d; ++j) v += beta[j] * sig[j * d + k];
            q += v * v;
        }
        acc += q * (path.times[i + 1] - t);
        out[i + 1] = acc;
    }
    return out;
}

namespace {

// Simulates one path under `spec`, accumulating log Z for `exp` along the
// continuous part and the per-level exit information of the plan.
PathSummary run_path(const DiffusionSpec& spec, const ExponentSpec& exp, const SimConfig& config,
                     const EnsembleOptions& opt, std::size_t index) {
    const LocalizationPlan* plan = opt.plan;
    const std::size_t levels = plan ? plan->levels.size() : 0;
    const std::size_t d = spec.dim();
    const bool scalar_bridge = config.bridge_correction && d == 1;
    const bool track_z = !exp.is_zero();

    PathSummary out;
    out.index = index;
    out.exit_times.assign(levels, kInf);
    out.stopped_z.assign(levels, 1.0);
    std::vector<char> stopped(levels, 0);
    std::size_t n_stopped = 0;
    std::size_t n_hit = 0;

    // Times at which some rho_n is capped strictly before t.
    std::vector<double> checkpoints;
    for (std::size_t n = 0; n < levels; ++n) {
        if (plan->time_caps[n] < opt.t) checkpoints.push_back(plan->time_caps[n]);
    }
    checkpoints.push_back(opt.t);
    std::sort(checkpoints.begin(), checkpoints.end());
    checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
    std::size_t next_cp = 0;

    detail::EulerPath p(spec, config, index);
    std::vector<double> beta(d);
    double log_z = 0.0;
    double z = 1.0;

    auto stop_level = [&](std::size_t n) {
        if (!stopped[n]) {
            stopped[n] = 1;
            out.stopped_z[n] = z;
            ++n_stopped;
        }
    };

    for (;;) {
        const bool ok = p.step(checkpoints[next_cp]);
        if (track_z) {
            double lin = 0.0;
            double q = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                beta[j] = exp.beta[j](p.t_prev, p.x_prev);
                lin += beta[j] * p.xc[j];
            }
            for (std::size_t k = 0; k < d; ++k) {
                double v = 0.0;
                for (std::size_t j = 0; j < d; ++j) v += beta[j] * p.sigma[j * d + k];
                q += v * v;
            }
            if (!std::isfinite(lin) || !std::isfinite(q)) {
                throw EvalDomain("exponent not finite at t=" + std::to_string(p.t_prev));
            }
            log_z += lin - 0.5 * q * p.dt;
            out.novikov_integral += q * p.dt;
            z = std::exp(log_z);
        }
        if (!ok) {
            out.status = PathStatus::NumericalExplosion;
            for (std::size_t n = 0; n < levels; ++n) {
                if (std::isinf(out.exit_times[n])) out.exit_times[n] = p.t;
                stop_level(n);
            }
            break;
        }
        if (levels > 0 && n_hit < levels) {
            const double u = scalar_bridge ? p.uniform() : 1.0;
            const double c = scalar_bridge ? p.sigma[0] * p.sigma[0] : 0.0;
            for (std::size_t n = 0; n < levels; ++n) {
                if (!std::isinf(out.exit_times[n])) continue;
                bool hit = p.gauge >= plan->levels[n];
                if (!hit && scalar_bridge) {
                    hit = u < detail::bridge_crossing(spec, plan->levels[n], p.x_prev[0], p.x[0], c, p.dt);
                }
                if (hit) {
                    out.exit_times[n] = p.t;
                    ++n_hit;
                    stop_level(n);
                }
            }
        }
        if (p.t >= checkpoints[next_cp]) {
            for (std::size_t n = 0; n < levels; ++n) {
                if (plan->time_caps[n] <= p.t) stop_level(n);
            }
            ++next_cp;
        }
        if (opt.stop_at_last_level && levels > 0 && n_hit == levels) {
            out.status = PathStatus::ExitedLevel;
            break;
        }
        if (next_cp == checkpoints.size()) break;
    }
    for (std::size_t n = 0; n < levels; ++n) stop_level(n);
    out.end_time = p.t;
    out.z = z;
    return out;
}

void require_compatible(const DiffusionSpec& spec, const ExponentSpec& exp) {
    if (exp.beta.size() != spec.dim()) throw DimensionMismatch("exponent and diffusion dimensions differ");
}

ExponentSpec zero_exponent(std::size_t d) {
    ExponentSpec e;
    e.beta.assign(d, Expr::constant(0.0));
    return e;
}

}  // namespace

std::vector<PathSummary> simulate_ensemble(const DiffusionSpec& spec, const ExponentSpec& exp,
                                           const SimConfig& config, const EnsembleOptions& options) {
    validate(spec);
    validate(config);
    require_compatible(spec, exp);
    if (!(options.t > 0.0) || options.t > config.horizon) throw ValidationError("t must lie in (0, horizon]");
    if (options.plan) {
        validate(*options.plan);
        if (options.plan->levels.back() >= config.explosion_guard) {
            throw ValidationError("explosion_guard must exceed the largest localization level");
        }
    }
    std::vector<PathSummary> out(config.n_paths);
    parallel_for(config.n_paths, config.threads,
                 [&](std::size_t i) { out[i] = run_path(spec, exp, config, options, i); });
    return out;
}

MCEstimate estimate_mean_direct(const DiffusionSpec& spec, const ExponentSpec& exp, double t,
                                const SimConfig& config) {
    validate(spec);
    validate(config);
    require_compatible(spec, exp);
    if (exp.is_zero()) {
        // Z is identically one.
        std::vector<double> ones(config.n_paths, 1.0);
        return summarize(ones);
    }
    auto ens = simulate_ensemble(spec, exp, config, {t, nullptr, false});
    std::vector<double> z(ens.size());
    for (std::size_t i = 0; i < ens.size(); ++i) z[i] = ens[i].z;
    return summarize(z);
}

DeficitCurve estimate_deficit_localized(const DiffusionSpec& modified_spec, const LocalizationPlan& plan,
                                        double t, const SimConfig& config) {
    auto ens = simulate_ensemble(modified_spec, zero_exponent(modified_spec.dim()), config, {t, &plan, true});
    DeficitCurve curve;
    curve.t = t;
    const double n = static_cast<double>(ens.size());
    std::size_t exploded = 0;
    for (const auto& s : ens) exploded += s.status == PathStatus::NumericalExplosion;
    for (std::size_t k = 0; k < plan.levels.size(); ++k) {
        std::vector<double> alive(ens.size());
        for (std::size_t i = 0; i < ens.size(); ++i) {
            alive[i] = (ens[i].exit_times[k] > t && t <= plan.time_caps[k]) ? 1.0 : 0.0;
        }
        const double p = pairwise_sum(alive) / n;
        curve.entries.push_back({plan.levels[k], plan.time_caps[k], p, std::sqrt(p * (1.0 - p) / n)});
    }
    const auto& last = curve.entries.back();
    const auto& prev = curve.entries[curve.entries.size() - 2];
    curve.extrapolated_expectation = last.survival;
    curve.converged = std::fabs(last.survival - prev.survival) <= 2.0 * (last.std_error + prev.std_error);
    curve.plan_too_coarse = !curve.converged;
    if (curve.plan_too_coarse) {
        curve.notes.push_back("PlanTooCoarse: the last two levels differ by more than twice their combined "
                              "standard errors; add higher levels");
    }
    if (exploded > 0) {
        curve.notes.push_back(std::to_string(exploded) + " paths reached the explosion guard before t");
    }
    return curve;
}

std::vector<MCEstimate> estimate_stopped_means(const DiffusionSpec& spec, const ExponentSpec& exp,
                                               const LocalizationPlan& plan, double t,
                                               const SimConfig& config) {
    auto ens = simulate_ensemble(spec, exp, config, {t, &plan, true});
    std::vector<MCEstimate> out;
    std::vector<double> z(ens.size());
    for (std::size_t k = 0; k < plan.levels.size(); ++k) {
        for (std::size_t i = 0; i < ens.size(); ++i) z[i] = ens[i].stopped_z[k];
        out.push_back(summarize(z));
    }
    return out;
}

namespace {

// sup of q over {gauge <= level} x [0, cap] sampled with `points` per axis.
double grid_sup(const DiffusionSpec& spec, const Expr& q, double level, double cap, int points) {
    const std::size_t d = spec.dim();
    std::vector<double> times{0.0};
    if (!spec.homogeneous() || q.depends_on_time()) {
        for (int k = 1; k <= 8; ++k) times.push_back(cap * k / 8.0);
    }
    // Smallest box holding {gauge <= level}: finite ends pulled in by 1/level.
    std::vector<double> lo(d), hi(d);
    for (std::size_t i = 0; i < d; ++i) {
        lo[i] = std::max(-level, spec.interval[i].lower + 1.0 / level);
        hi[i] = std::min(level, spec.interval[i].upper - 1.0 / level);
    }
    const int per_axis = d == 1 ? points : std::max(9, static_cast<int>(std::pow(points, 1.0 / d)) | 1);
    std::vector<int> idx(d, 0);
    std::vector<double> x(d);
    double sup = 0.0;
    for (;;) {
        for (std::size_t i = 0; i < d; ++i) x[i] = lo[i] + (hi[i] - lo[i]) * idx[i] / (per_axis - 1);
        if (spec.inside(x) && spec.gauge(x) <= level) {
            for (double s : times) {
                double v = q(s, x);
                if (std::isnan(v)) v = kInf;
                sup = std::max(sup, v);
            }
        }
        std::size_t i = 0;
        while (i < d && ++idx[i] == per_axis) idx[i++] = 0;
        if (i == d) break;
    }
    return sup;
}

}  // namespace

std::vector<double> localized_bound_check(const DiffusionSpec& spec, const ExponentSpec& exp,
                                          const LocalizationPlan& plan) {
    validate(plan);
    const Expr q = quadratic_exponent(spec, exp);
    std::vector<double> bounds;
    if (auto cq = q.constant_value()) {
        for (double cap : plan.time_caps) bounds.push_back(cap * std::max(0.0, *cq) * 1.1);
        return bounds;
    }
    for (std::size_t n = 0; n < plan.levels.size(); ++n) {
        double prev = 0.0;
        int grew = 0;
        double sup = 0.0;
        for (int points : {257, 1025, 4097}) {
            sup = grid_sup(spec, q, plan.levels[n], plan.time_caps[n], points);
            if (!std::isfinite(sup)) {
                throw UnboundedOnCompact("q = " + q.render() + " is not finite on the level set " +
                                         std::to_string(plan.levels[n]));
            }
            if (points > 257 && sup > 1.5 * prev) ++grew;
            prev = sup;
        }
        if (grew == 2) {
            throw UnboundedOnCompact("sup of q = " + q.render() + " keeps growing under grid refinement on level " +
                                     std::to_string(plan.levels[n]));
        }
        bounds.push_back(plan.time_caps[n] * sup * 1.1);
    }
    return bounds;
}

NovikovReport summarize_growth(std::span<const double> samples) {
    NovikovReport rep;
    rep.estimate = summarize(samples);
    // Checkpoints n_0, 2 n_0, ..., n with n_0 about n / 64.
    std::vector<std::size_t> sizes;
    for (std::size_t n = samples.size(); n >= 16 && sizes.size() < 7; n /= 2) sizes.push_back(n);
    std::reverse(sizes.begin(), sizes.end());
    MCEstimate first;
    for (std::size_t n : sizes) {
        auto e = summarize(samples.first(n));
        if (rep.running_means.empty()) first = e;
        rep.running_means.emplace_back(n, e.mean);
    }
    if (rep.running_means.size() >= 2) {
        rep.growing = rep.running_means.back().second > first.mean + 3.0 * first.std_error;
    }
    return rep;
}

NovikovReport novikov_estimate(const DiffusionSpec& spec, const ExponentSpec& exp, double t,
                               const SimConfig& config) {
    std::vector<double> samples;
    if (exp.is_zero()) {
        validate(config);
        samples.assign(config.n_paths, 1.0);
    } else {
        auto ens = simulate_ensemble(spec, exp, config, {t, nullptr, false});
        samples.resize(ens.size());
        for (std::size_t i = 0; i < ens.size(); ++i) samples[i] = std::exp(0.5 * ens[i].novikov_integral);
    }
    return summarize_growth(samples);
}

double exit_time(const PathRecord& path, const DiffusionSpec& spec, const StoppingRule& rule) {
    for (std::size_t i = 0; i < path.times.size() && path.times[i] <= rule.cap; ++i) {
        if (spec.gauge(path.state(i)) >= rule.level) return path.times[i];
    }
    return rule.cap;
}

Classification classify_curve(const DeficitCurve& curve) {
    if (!curve.converged || curve.entries.empty()) return Classification::Inconclusive;
    const double deficit = curve.deficit();
    const double se = curve.entries.back().std_error;
    if (deficit < 0.01) return Classification::TrueMartingale;
    if (deficit > 3.0 * se) return Classification::StrictLocal;
    return Classification::Inconclusive;
}

void write_ensemble_csv(std::ostream& out, std::span<const PathSummary> ensemble, const LocalizationPlan* plan) {
    out << "index,terminal_status,end_time,z";
    if (plan) {
        for (double m : plan->levels) out << ",exit_time_" << m;
    }
    out << '\n';
    char buf[64];
    auto num = [&](double v) {
        if (std::isinf(v)) return std::string(v > 0 ? "inf" : "-inf");
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (const auto& s : ensemble) {
        out << s.index << ',' << to_string(s.status) << ',' << num(s.end_time) << ',' << num(s.z);
        for (double e : s.exit_times) out << ',' << num(e);
        out << '\n';
    }
}

}  // namespace lmc
