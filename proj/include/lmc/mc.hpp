#pragma once

#include "lmc/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace lmc {

struct SimConfig {
    std::size_t n_paths = 10000;
    double dt_max = 1e-2;
    double horizon = 1.0;
    std::uint64_t seed = 20240601;
    /// dt = min(dt_max, dt_max / (|b| + tr c + 1)).
    bool adaptive = true;
    /// Scalar case only: Brownian-bridge test for crossings inside a step.
    bool bridge_correction = false;
    double explosion_guard = 1e6;
    /// Worker count, 0 = hardware concurrency. Never affects results.
    unsigned threads = 0;

    [[nodiscard]] double dt_min() const { return dt_max * 1e-6; }
};

/// Throws ValidationError.
void validate(const SimConfig& config);

enum class PathStatus { ReachedHorizon, ExitedLevel, NumericalExplosion };
std::string to_string(PathStatus s);

struct PathRecord {
    std::size_t dim = 1;
    std::vector<double> times;
    std::vector<double> states;  // times.size() * dim, row per time
    PathStatus status = PathStatus::ReachedHorizon;
    double exit_level = 0.0;  // ExitedLevel only
    double exit_time = 0.0;   // ExitedLevel / NumericalExplosion

    [[nodiscard]] std::span<const double> state(std::size_t i) const {
        return std::span<const double>(states).subspan(i * dim, dim);
    }
};

struct MCEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_effective = 0;
    bool heavy_tail_flag = false;
    double max_sample_share = 0.0;
};

/// Mean, standard error and tail diagnostics of nonnegative samples.
MCEstimate summarize(std::span<const double> samples);

/// Euler-Maruyama path on [0, config.horizon]; stops early once the gauge
/// reaches `stop_level` (ExitedLevel) or the explosion guard.
PathRecord simulate_path(const DiffusionSpec& spec, const SimConfig& config, std::size_t path_index,
                         double stop_level = kInf);

/// First grid time at which the gauge reaches rule.level, capped at rule.cap.
double exit_time(const PathRecord& path, const DiffusionSpec& spec, const StoppingRule& rule);

/// What the exponent integrates against. The continuous martingale part
/// X^c = X - int b dt is the default; `Increment` uses the raw dX.
enum class ExponentDriver { ContinuousPart, Increment };

/// Z on the path grid: log Z = sum beta . dD - 1/2 sum q dt with D the driver.
std::vector<double> stochastic_exponential(const PathRecord& path, const DiffusionSpec& spec,
                                           const ExponentSpec& exp,
                                           ExponentDriver driver = ExponentDriver::ContinuousPart);

/// Running int_0^t q ds on the path grid (left-point rule), q = beta^T c beta.
std::vector<double> exponent_bracket(const PathRecord& path, const DiffusionSpec& spec, const ExponentSpec& exp);

/// One simulated path reduced to what the estimators and CSV export need.
struct PathSummary {
    std::size_t index = 0;
    PathStatus status = PathStatus::ReachedHorizon;
    double end_time = 0.0;
    double z = 1.0;                  // Z at end_time
    double novikov_integral = 0.0;   // int_0^end q ds
    std::vector<double> exit_times;  // first time gauge >= m_n, +inf if not within [0, t]
    std::vector<double> stopped_z;   // Z at t ^ rho_n
};

struct EnsembleOptions {
    double t = 1.0;
    const LocalizationPlan* plan = nullptr;
    /// Stop a path once every level has been reached.
    bool stop_at_last_level = false;
};

std::vector<PathSummary> simulate_ensemble(const DiffusionSpec& spec, const ExponentSpec& exp,
                                           const SimConfig& config, const EnsembleOptions& options);

/// Sample mean of Z_t under the original dynamics.
MCEstimate estimate_mean_direct(const DiffusionSpec& spec, const ExponentSpec& exp, double t,
                                const SimConfig& config);

/// Survival fractions Q(rho_n > t) under the modified dynamics, all levels
/// read off one shared ensemble.
DeficitCurve estimate_deficit_localized(const DiffusionSpec& modified_spec, const LocalizationPlan& plan,
                                        double t, const SimConfig& config);

/// Sample means of Z_{t ^ rho_n} under the original dynamics, one per level.
std::vector<MCEstimate> estimate_stopped_means(const DiffusionSpec& spec, const ExponentSpec& exp,
                                               const LocalizationPlan& plan, double t,
                                               const SimConfig& config);

/// c_n = cap_n * sup{q(s,x) : s <= cap_n, gauge(x) <= m_n} * 1.1.
/// Throws UnboundedOnCompact when the sup does not settle under grid refinement.
std::vector<double> localized_bound_check(const DiffusionSpec& spec, const ExponentSpec& exp,
                                          const LocalizationPlan& plan);

struct NovikovReport {
    MCEstimate estimate;
    /// Running means over the first n paths, n doubling up to n_paths.
    std::vector<std::pair<std::size_t, double>> running_means;
    /// The running mean keeps climbing across the doublings.
    bool growing = false;
};

/// Estimate plus running means at doublings. `growing` is set when the mean
/// over all samples exceeds the mean over the first checkpoint by more than 3
/// of that checkpoint's standard errors.
NovikovReport summarize_growth(std::span<const double> samples);

/// E exp(1/2 int_0^t q ds) under the original dynamics.
NovikovReport novikov_estimate(const DiffusionSpec& spec, const ExponentSpec& exp, double t,
                               const SimConfig& config);

/// Shared MC classification of a survival curve: TrueMartingale when
/// converged with deficit < 0.01, StrictLocal when converged with a deficit
/// of at least 0.01 and more than 3 standard errors, else Inconclusive.
Classification classify_curve(const DeficitCurve& curve);

/// One row per path: index, terminal status, Z_t, exit time per level.
void write_ensemble_csv(std::ostream& out, std::span<const PathSummary> ensemble,
                        const LocalizationPlan* plan);

}  // namespace lmc
