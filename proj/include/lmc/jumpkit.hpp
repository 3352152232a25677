#pragma once

#include "lmc/mc.hpp"
#include "lmc/model.hpp"

#include <vector>

namespace lmc {

/// Finite discrete law on jump sizes.
struct DiscreteLaw {
    std::vector<double> support;
    std::vector<double> probs;
};

/// Fixed-time jump: at `time` a jump fires with probability `mass`, size ~ law.
struct Atom {
    double time = 0.0;
    double mass = 0.0;
    DiscreteLaw law;
};

/// 1-d jump diffusion: base diffusion plus compound Poisson jumps (rate,
/// law) plus scheduled atoms. nu(dt,dx) = rate F(dx) dt + sum_k a_k G_k(dx) delta_{t_k}(dt).
struct JumpTriplet {
    DiffusionSpec base;
    double rate = 0.0;
    DiscreteLaw jump_law;
    std::vector<Atom> atoms;

    /// a_t = nu({t} x R).
    [[nodiscard]] double atom_mass(double t) const;
};

/// Density recipe of the measure change: K for the continuous part, U(t, x)
/// with x the jump size for the jump part.
struct GirsanovData {
    Expr K;
    Expr U;
};

/// Throws ValidationError.
void validate(const JumpTriplet& trip);
/// Also checks U > 0 on the support of nu, U-hat <= 1 at atoms, {a = 1} in {U-hat = 1},
/// and rejects U-hat = 1 with a < 1 (the no-jump branch would give a jump of N equal to -1).
void validate(const JumpTriplet& trip, const GirsanovData& gd);

/// U-hat_t = a_k sum_x G_k(x) U(t_k, x) at atom times, 0 elsewhere. Throws
/// ValidationError above 1 + 1e-12.
double compute_Uhat(const JumpTriplet& trip, const GirsanovData& gd, double t);

/// U' = U - 1 + (U-hat - a)/(1 - a) with 0/0 = 0.
double compute_Uprime(const GirsanovData& gd, const JumpTriplet& trip, double t, double x);

/// Increment of R at atom k: a sum G (1 - sqrt U)^2 + (sqrt(1-a) - sqrt(1-U-hat))^2.
double atom_R_increment(const JumpTriplet& trip, const GirsanovData& gd, std::size_t k);

struct HellingerPath {
    std::vector<double> times;
    std::vector<double> R;
    std::vector<double> continuous;  // int K^2 c ds
    std::vector<double> poisson;     // rate int E_F (1 - sqrt U)^2 ds
    std::vector<double> atoms;       // atom sum
};

/// R on `grid` (left-point rule between grid points, atoms added at their
/// times, which must lie on the grid). `states` gives X on the grid when K
/// depends on the state; it may be empty otherwise.
HellingerPath compute_R(const JumpTriplet& trip, const GirsanovData& gd, const std::vector<double>& grid,
                        const std::vector<double>& states = {});

/// One simulated path of X, N and Z = E(N) on its event grid (Euler steps,
/// compound Poisson jump times and atom times).
struct JumpPathRecord {
    std::vector<double> times;
    std::vector<double> x;
    std::vector<double> n;
    std::vector<double> z;
    std::vector<double> r;
    PathStatus status = PathStatus::ReachedHorizon;
    double min_jump_n = 0.0;  // smallest jump of N seen (0 when no jumps)
};

/// Path under the original triplet up to config.horizon. Throws JumpBoundViolation if a jump of N is <= -1.
JumpPathRecord simulate_jump_exponential(const JumpTriplet& trip, const GirsanovData& gd,
                                         const SimConfig& config, std::size_t path_index);

/// Per-path reduction used by the ensemble estimators.
struct JumpPathSummary {
    PathStatus status = PathStatus::ReachedHorizon;
    double end_time = 0.0;
    double z = 1.0;
    double r = 0.0;              // R at t ^ rho
    double bracket_sum = 0.0;    // int (1/Z_-^2) dC(Z) over [0, t ^ rho]
    double min_jump_n = 0.0;
    std::size_t jumps = 0;
    std::vector<double> exit_times;  // rho_n before caps, +inf if > t
    std::vector<double> stopped_z;   // Z at t ^ rho_n
};

enum class JumpMeasure { Original, Modified };

struct JumpEnsembleOptions {
    double t = 1.0;
    const LocalizationPlan* plan = nullptr;
    JumpMeasure measure = JumpMeasure::Original;
    /// Stop R-accounting once R reaches this value (the rho of the compensator check).
    double r_stop = kInf;
};

/// rho_n = inf{s : R_s >= m_n or gauge(X_s) >= m_n} ^ cap_n for each plan level.
std::vector<JumpPathSummary> simulate_jump_ensemble(const JumpTriplet& trip, const GirsanovData& gd,
                                                    const SimConfig& config, const JumpEnsembleOptions& options);

/// Sample means of Z_{t ^ rho_n} under the original triplet.
std::vector<MCEstimate> jump_stopped_means(const JumpTriplet& trip, const GirsanovData& gd,
                                           const LocalizationPlan& plan, double t, const SimConfig& config);

struct CompensatorReport {
    double mean_bracket = 0.0;  // mean of int (1/Z_-^2) dC(Z)
    double mean_r = 0.0;        // mean of R
    double difference = 0.0;
    double std_error = 0.0;
    bool pass = false;
    double min_jump_n = 0.0;
};

/// Tests E[int (1/Z_-^2) dC(Z) - R] = 0 over [0, t ^ rho], rho = first time R >= r_stop.
CompensatorReport verify_compensator_identity(const JumpTriplet& trip, const GirsanovData& gd,
                                              const SimConfig& config, double t, double r_stop = kInf);

/// Simulates the modified triplet and reads Q(rho_n > t) across the plan.
MartingaleVerdict verdict_jump(const JumpTriplet& trip, const GirsanovData& gd, double t,
                               const LocalizationPlan& plan, const SimConfig& config);

}  // namespace lmc
