#include "lmc/hilbert.hpp"

#include "lmc/errors.hpp"
#include "lmc/parallel.hpp"
#include "lmc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace lmc {

namespace {

constexpr std::uint64_t kModeStream = 2;

double norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Incremental evaluation of phi along one path.
class PhiTracker {
public:
    PhiTracker(const FunctionalSpec& phi, std::span<const double> x0) : phi_(phi) {
        if (phi_.kind == FunctionalSpec::Kind::RunningSup) sup_ = dot(phi_.weights, x0);
    }

    // phi(t, omega) with omega known up to the current point x.
    void value(double t, std::span<const double> x, std::span<double> out) const {
        if (phi_.kind == FunctionalSpec::Kind::RunningSup) {
            for (std::size_t k = 0; k < out.size(); ++k) out[k] = sup_ * phi_.direction[k];
        } else {
            for (std::size_t k = 0; k < out.size(); ++k) out[k] = phi_.pointwise[k](t, x);
        }
    }

    // Records x as a point strictly in the past of the next evaluation.
    void pass(std::span<const double> x) {
        if (phi_.kind == FunctionalSpec::Kind::RunningSup) sup_ = std::max(sup_, dot(phi_.weights, x));
    }

private:
    const FunctionalSpec& phi_;
    double sup_ = 0.0;
};

struct ModeRun {
    double z = 1.0;
    double bracket = 0.0;  // int |Q^{1/2} phi|^2 ds
    std::vector<double> exit_times;
    std::vector<double> terminal;
    bool exploded = false;
};

// Fixed-step simulation of the modes; `modified` adds the drift lambda_k phi^k.
ModeRun run_modes(const FunctionalSpec* phi, const CovarianceSpec& cov, const SimConfig& config, double t_end,
                  const LocalizationPlan* plan, bool modified, std::size_t index) {
    const std::size_t K = cov.modes();
    const std::size_t steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(t_end / config.dt_max - 1e-9)));
    const double dt = t_end / static_cast<double>(steps);
    auto rng = path_engine(config.seed, index, kModeStream);
    std::normal_distribution<double> normal(0.0, 1.0);

    ModeRun out;
    const std::size_t levels = plan ? plan->levels.size() : 0;
    out.exit_times.assign(levels, kInf);
    std::vector<double> x(K, 0.0), f(K, 0.0), scale(K);
    for (std::size_t k = 0; k < K; ++k) scale[k] = std::sqrt(cov.eigenvalues[k] * dt);
    std::optional<PhiTracker> tracker;
    if (phi) tracker.emplace(*phi, x);
    double log_z = 0.0;
    std::size_t hit = 0;
    for (std::size_t j = 0; j < steps; ++j) {
        const double t = t_end * static_cast<double>(j) / static_cast<double>(steps);
        if (tracker) tracker->value(t, x, f);
        double lin = 0.0;
        double q = 0.0;
        for (std::size_t k = 0; k < K; ++k) q += cov.eigenvalues[k] * f[k] * f[k];
        if (tracker) tracker->pass(x);
        for (std::size_t k = 0; k < K; ++k) {
            const double dw = scale[k] * normal(rng);
            lin += f[k] * dw;
            x[k] += dw + (modified ? cov.eigenvalues[k] * f[k] * dt : 0.0);
        }
        log_z += lin - 0.5 * q * dt;
        out.bracket += q * dt;
        const double n = norm(x);
        if (!std::isfinite(n) || n >= config.explosion_guard) {
            out.exploded = true;
            for (auto& e : out.exit_times) e = std::min(e, t + dt);
            break;
        }
        for (std::size_t l = 0; l < levels; ++l) {
            if (std::isinf(out.exit_times[l]) && n >= plan->levels[l]) {
                out.exit_times[l] = t + dt;
                ++hit;
            }
        }
        if (modified && levels > 0 && hit == levels) break;
    }
    out.z = std::exp(log_z);
    out.terminal = x;
    return out;
}

}  // namespace

void validate(const CovarianceSpec& cov) {
    if (cov.eigenvalues.empty()) throw ValidationError("covariance needs at least one mode");
    for (std::size_t k = 0; k < cov.modes(); ++k) {
        if (!(cov.eigenvalues[k] > 0.0) || !std::isfinite(cov.eigenvalues[k])) {
            throw ValidationError("eigenvalues must be positive and finite");
        }
        if (k > 0 && cov.eigenvalues[k] > cov.eigenvalues[k - 1]) {
            throw ValidationError("eigenvalues must be nonincreasing");
        }
    }
}

std::vector<std::string> validate(const FunctionalSpec& phi, const CovarianceSpec& cov) {
    validate(cov);
    const std::size_t K = cov.modes();
    std::vector<std::string> warnings;
    auto unit = [](const std::vector<double>& v) { return std::fabs(norm(v) - 1.0) <= 1e-9; };
    if (phi.kind == FunctionalSpec::Kind::RunningSup) {
        if (phi.weights.size() != K || phi.direction.size() != K) {
            throw DimensionMismatch("running-sup weights and direction need one entry per mode");
        }
        if (!unit(phi.weights) || !unit(phi.direction)) {
            throw ValidationError("running-sup weights and direction must have unit norm");
        }
    } else {
        if (phi.pointwise.size() != K) throw DimensionMismatch("pointwise functional needs one expression per mode");
        for (const auto& e : phi.pointwise) {
            if (static_cast<std::size_t>(e.max_coordinate()) > K) {
                throw DimensionMismatch("'" + e.render() + "' references a mode beyond the truncation");
            }
        }
        // phi(., 0) should be constant in time.
        std::vector<double> zero(K, 0.0);
        for (std::size_t k = 0; k < K; ++k) {
            const double v0 = phi.pointwise[k](0.0, zero);
            for (double t : {0.25, 0.5, 1.0, 2.0, 4.0}) {
                if (phi.pointwise[k](t, zero) != v0) {
                    warnings.push_back("phi(., 0) is not constant in component " + std::to_string(k + 1) +
                                       "; proceeding");
                    break;
                }
            }
        }
    }
    for (auto c : {phi.claimed_lipschitz, phi.claimed_growth}) {
        if (c && !(*c >= 0.0)) throw ValidationError("claimed constants must be nonnegative");
    }
    return warnings;
}

FunctionalSpec running_sup_of_mode(std::size_t modes, std::size_t mode) {
    if (mode >= modes) throw IndexOutOfRange("mode beyond the truncation");
    FunctionalSpec phi;
    phi.kind = FunctionalSpec::Kind::RunningSup;
    phi.weights.assign(modes, 0.0);
    phi.direction.assign(modes, 0.0);
    phi.weights[mode] = 1.0;
    phi.direction[mode] = 1.0;
    return phi;
}

PathRecord simulate_q_brownian(const CovarianceSpec& cov, const SimConfig& config, std::size_t path_index) {
    validate(cov);
    validate(config);
    if (path_index >= config.n_paths) throw IndexOutOfRange("path index beyond n_paths");
    const std::size_t K = cov.modes();
    const std::size_t steps =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(config.horizon / config.dt_max - 1e-9)));
    const double dt = config.horizon / static_cast<double>(steps);
    auto rng = path_engine(config.seed, path_index, kModeStream);
    std::normal_distribution<double> normal(0.0, 1.0);
    PathRecord rec;
    rec.dim = K;
    rec.times.reserve(steps + 1);
    rec.states.assign(K, 0.0);
    rec.times.push_back(0.0);
    std::vector<double> x(K, 0.0), scale(K);
    for (std::size_t k = 0; k < K; ++k) scale[k] = std::sqrt(cov.eigenvalues[k] * dt);
    for (std::size_t j = 0; j < steps; ++j) {
        for (std::size_t k = 0; k < K; ++k) x[k] += scale[k] * normal(rng);
        rec.times.push_back(config.horizon * static_cast<double>(j + 1) / static_cast<double>(steps));
        rec.states.insert(rec.states.end(), x.begin(), x.end());
    }
    return rec;
}

std::vector<double> evaluate_functional(const FunctionalSpec& phi, const PathRecord& path) {
    const std::size_t K = path.dim;
    std::vector<double> out(path.times.size() * K);
    PhiTracker tracker(phi, path.state(0));
    for (std::size_t j = 0; j < path.times.size(); ++j) {
        tracker.value(path.times[j], path.state(j), std::span<double>(out).subspan(j * K, K));
        tracker.pass(path.state(j));
    }
    return out;
}

ConditionsReport check_conditions(const FunctionalSpec& phi, const CovarianceSpec& cov,
                                  const std::vector<PathRecord>& paths) {
    ConditionsReport rep;
    rep.notes = validate(phi, cov);
    const std::size_t K = cov.modes();
    std::vector<std::vector<double>> values;
    values.reserve(paths.size());
    for (const auto& p : paths) {
        if (p.dim != K) throw DimensionMismatch("path dimension differs from the number of modes");
        values.push_back(evaluate_functional(phi, p));
    }
    // Growth: |Q^{1/2} phi(t, w)|^2 / (1 + sup_{s<=t} |w(s)|^2).
    for (std::size_t i = 0; i < paths.size(); ++i) {
        double sup = 0.0;
        for (std::size_t j = 0; j < paths[i].times.size(); ++j) {
            sup = std::max(sup, norm(paths[i].state(j)));
            double q = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                const double f = values[i][j * K + k];
                q += cov.eigenvalues[k] * f * f;
            }
            rep.growth_hat = std::max(rep.growth_hat, q / (1.0 + sup * sup));
        }
    }
    // Lipschitz on consecutive pairs, banded by the larger sup norm.
    auto band_for = [&](double radius) -> ConditionsReport::Band& {
        double r = 1.0;
        while (r < radius) r *= 2.0;
        for (auto& b : rep.lipschitz_bands) {
            if (b.radius == r) return b;
        }
        rep.lipschitz_bands.push_back({r, 0.0, 0});
        return rep.lipschitz_bands.back();
    };
    for (std::size_t i = 0; i + 1 < paths.size(); i += 2) {
        const auto& a = paths[i];
        const auto& b = paths[i + 1];
        if (a.times != b.times) throw PreconditionViolated("paired paths must share one grid");
        double sup_diff = 0.0;
        double sup_norm = 0.0;
        std::vector<double> diff(K);
        for (std::size_t j = 1; j < a.times.size(); ++j) {
            for (std::size_t k = 0; k < K; ++k) diff[k] = a.state(j - 1)[k] - b.state(j - 1)[k];
            sup_diff = std::max(sup_diff, norm(diff));
            sup_norm = std::max({sup_norm, norm(a.state(j - 1)), norm(b.state(j - 1))});
            if (!(sup_diff > 0.0)) continue;
            double num = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                const double d = values[i][j * K + k] - values[i + 1][j * K + k];
                num += cov.eigenvalues[k] * d * d;
            }
            const double ratio = std::sqrt(num) / sup_diff;
            auto& band = band_for(sup_norm);
            band.lipschitz = std::max(band.lipschitz, ratio);
            ++band.samples;
            rep.lipschitz_hat = std::max(rep.lipschitz_hat, ratio);
        }
    }
    std::sort(rep.lipschitz_bands.begin(), rep.lipschitz_bands.end(),
              [](const auto& x, const auto& y) { return x.radius < y.radius; });
    if (phi.claimed_lipschitz) rep.lipschitz_ok = rep.lipschitz_hat <= *phi.claimed_lipschitz;
    else rep.notes.push_back("no Lipschitz constant claimed; reported only");
    if (phi.claimed_growth) rep.growth_ok = rep.growth_hat <= *phi.claimed_growth;
    else rep.notes.push_back("no growth constant claimed; reported only");
    return rep;
}

ModeMoments mode_moments(const CovarianceSpec& cov, double t, const SimConfig& config) {
    validate(cov);
    validate(config);
    const std::size_t K = cov.modes();
    const std::size_t n = config.n_paths;
    std::vector<std::vector<double>> terminal(n);
    parallel_for(n, config.threads, [&](std::size_t i) {
        terminal[i] = run_modes(nullptr, cov, config, t, nullptr, false, i).terminal;
    });
    ModeMoments m;
    const double dn = static_cast<double>(n);
    std::vector<double> col(n), sq(n);
    auto column_mean = [&](auto&& f) {
        for (std::size_t i = 0; i < n; ++i) col[i] = f(i);
        return pairwise_sum(col) / dn;
    };
    std::vector<double> means(K);
    for (std::size_t k = 0; k < K; ++k) means[k] = column_mean([&](std::size_t i) { return terminal[i][k]; });
    for (std::size_t k = 0; k < K; ++k) {
        const double var = column_mean([&](std::size_t i) {
                               const double d = terminal[i][k] - means[k];
                               return d * d;
                           }) * dn / (dn - 1.0);
        const double m4 = column_mean([&](std::size_t i) { return std::pow(terminal[i][k] - means[k], 4); });
        m.variance_ratio.push_back(var / t);
        m.variance_se.push_back(std::sqrt(std::max(0.0, m4 - var * var) / dn) / t);
        if (k + 1 < K) {
            const double cov_k = column_mean([&](std::size_t i) {
                return (terminal[i][k] - means[k]) * (terminal[i][k + 1] - means[k + 1]);
            });
            const double second = column_mean([&](std::size_t i) {
                const double p = (terminal[i][k] - means[k]) * (terminal[i][k + 1] - means[k + 1]);
                return p * p;
            });
            m.cross_covariance.push_back(cov_k / t);
            m.cross_se.push_back(std::sqrt(std::max(0.0, second - cov_k * cov_k) / dn) / t);
        }
    }
    return m;
}

HilbertEstimate estimate_hilbert_expectation(const FunctionalSpec& phi, const CovarianceSpec& cov, double t,
                                             const LocalizationPlan& plan, const SimConfig& config) {
    validate(config);
    validate(plan);
    if (!(t > 0.0) || t > config.horizon) throw ValidationError("t must lie in (0, horizon]");
    HilbertEstimate est;
    // Condition check on the first pairs of the ensemble.
    {
        SimConfig c = config;
        c.horizon = t;
        const std::size_t pairs = std::min<std::size_t>(128, config.n_paths / 2);
        std::vector<PathRecord> sample;
        for (std::size_t i = 0; i < 2 * pairs; ++i) sample.push_back(simulate_q_brownian(cov, c, i));
        est.conditions = check_conditions(phi, cov, sample);
    }
    est.notes = est.conditions.notes;
    if (plan.levels.back() >= config.explosion_guard) {
        throw ValidationError("explosion_guard must exceed the largest localization level");
    }
    const std::size_t n = config.n_paths;
    std::vector<double> z(n);
    parallel_for(n, config.threads,
                 [&](std::size_t i) { z[i] = run_modes(&phi, cov, config, t, nullptr, false, i).z; });
    est.direct = summarize(z);

    std::vector<std::vector<double>> exits(n);
    parallel_for(n, config.threads,
                 [&](std::size_t i) { exits[i] = run_modes(&phi, cov, config, t, &plan, true, i).exit_times; });
    est.curve.t = t;
    for (std::size_t l = 0; l < plan.levels.size(); ++l) {
        std::vector<double> alive(n);
        for (std::size_t i = 0; i < n; ++i) alive[i] = (exits[i][l] > t && t <= plan.time_caps[l]) ? 1.0 : 0.0;
        const double p = pairwise_sum(alive) / static_cast<double>(n);
        est.curve.entries.push_back(
            {plan.levels[l], plan.time_caps[l], p, std::sqrt(p * (1.0 - p) / static_cast<double>(n))});
    }
    const auto& last = est.curve.entries.back();
    const auto& prev = est.curve.entries[est.curve.entries.size() - 2];
    est.curve.extrapolated_expectation = last.survival;
    est.curve.converged = std::fabs(last.survival - prev.survival) <= 2.0 * (last.std_error + prev.std_error);
    est.curve.plan_too_coarse = !est.curve.converged;
    if (est.curve.plan_too_coarse) est.curve.notes.push_back("PlanTooCoarse: the last two levels disagree");

    if (!est.conditions.pass()) {
        est.classification = Classification::Inconclusive;
        est.notes.push_back("claimed Lipschitz/growth constants are dominated by the empirical ones");
    } else {
        est.classification = classify_curve(est.curve);
    }
    return est;
}

NovikovReport hilbert_novikov(const FunctionalSpec& phi, const CovarianceSpec& cov, double t,
                              const SimConfig& config) {
    validate(phi, cov);
    validate(config);
    std::vector<double> samples(config.n_paths);
    parallel_for(config.n_paths, config.threads, [&](std::size_t i) {
        samples[i] = std::exp(0.5 * run_modes(&phi, cov, config, t, nullptr, false, i).bracket);
    });
    return summarize_growth(samples);
}

}  // namespace lmc
