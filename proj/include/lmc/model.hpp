#pragma once

#include "lmc/expr.hpp"

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lmc {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Open state interval (lower, upper) of one coordinate; either end may be infinite.
struct Interval {
    double lower = -kInf;
    double upper = kInf;
};

/// dX = b(t,X) dt + sigma(t,X) dW on a product of open intervals.
///
/// `dispersion` is stored row-major (dim x dim). The quadratic-variation
/// density is always derived as c = sigma sigma^T.
struct DiffusionSpec {
    std::vector<Interval> interval;
    std::vector<Expr> drift;
    std::vector<Expr> dispersion;
    std::vector<double> x0;

    static DiffusionSpec scalar(Expr drift, Expr dispersion, double x0, Interval iv = {});

    [[nodiscard]] std::size_t dim() const { return drift.size(); }
    [[nodiscard]] const Expr& sigma(std::size_t i, std::size_t j) const { return dispersion[i * dim() + j]; }
    /// True iff no coefficient references t.
    [[nodiscard]] bool homogeneous() const;

    /// c(t,x), row-major, written into `out` (size dim*dim).
    void qv_density(double t, std::span<const double> x, std::span<double> out) const;

    /// Exhaustion gauge of the state space: the Euclidean norm on R^d, raised
    /// near finite interval ends by 1/distance. Level sets {gauge < m} are the
    /// compacts used for localization; +inf outside the state space.
    [[nodiscard]] double gauge(std::span<const double> x) const;
    [[nodiscard]] bool inside(std::span<const double> x) const;

    /// Scalar case: {gauge >= m} == {x <= lower_barrier(m)} u {x >= upper_barrier(m)}.
    [[nodiscard]] double upper_barrier(double level) const;
    [[nodiscard]] double lower_barrier(double level) const;
};

/// Throws ValidationError / DimensionMismatch.
void validate(const DiffusionSpec& spec);

/// Girsanov exponent: Z = E(beta(X) . X^c).
struct ExponentSpec {
    std::vector<Expr> beta;

    [[nodiscard]] bool is_zero() const;
};

/// Stopping levels m_1 < ... < m_N on the gauge, each paired with a time cap.
struct LocalizationPlan {
    std::vector<double> levels;
    std::vector<double> time_caps;
};

void validate(const LocalizationPlan& plan);

/// First time the path gauge reaches `level`, capped at `cap`.
struct StoppingRule {
    std::size_t index = 1;  // 1-based
    double level = 0.0;
    double cap = 0.0;
};

/// Feller endpoint integral outcome.
struct EndpointIntegral {
    enum class Status { Finite, Infinite, Failed };
    Status status = Status::Failed;
    double value = 0.0;  // partial integral reached (finite value when Finite)
    std::string reason;
    int probes = 0;
    int subdivisions = 0;
    double error_estimate = 0.0;
};

struct FellerReport {
    enum class Conclusion { Explosive, NonExplosive, Unknown };
    EndpointIntegral left;
    EndpointIntegral right;
    double xi = 0.0;
    Conclusion conclusion = Conclusion::Unknown;
};

struct DeficitEntry {
    double level = 0.0;
    double cap = 0.0;
    double survival = 0.0;  // estimate of Q(rho_n > t)
    double std_error = 0.0;
};

struct DeficitCurve {
    double t = 0.0;
    std::vector<DeficitEntry> entries;
    double extrapolated_expectation = 0.0;
    bool converged = false;
    /// Set when the last two levels disagree: the plan is too coarse.
    bool plan_too_coarse = false;
    std::vector<std::string> notes;

    [[nodiscard]] double deficit() const { return 1.0 - extrapolated_expectation; }
};

enum class Classification { TrueMartingale, StrictLocal, Inconclusive };

struct MartingaleVerdict {
    Classification classification = Classification::Inconclusive;
    std::optional<DeficitCurve> deficit_curve;
    std::optional<FellerReport> feller_original;
    std::optional<FellerReport> feller_modified;
    std::vector<std::string> notes;
};

std::string to_string(Classification c);
std::string to_string(FellerReport::Conclusion c);
std::string to_string(EndpointIntegral::Status s);

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Drift of the Girsanov-modified dynamics: b + c beta, dispersion unchanged.
DiffusionSpec modified_drift(const DiffusionSpec& spec, const ExponentSpec& exp);

/// q = beta^T c beta, built as a sum of squares so it is nonnegative by construction.
Expr quadratic_exponent(const DiffusionSpec& spec, const ExponentSpec& exp);

/// 1-based; throws IndexOutOfRange.
StoppingRule rho_level(const LocalizationPlan& plan, std::size_t n);

/// Empirical checks of the standing coefficient assumptions on a grid.
struct GridCheck {
    bool qv_positive = true;     // c positive definite at every grid point
    bool coefficients_finite = true;
    std::vector<std::string> notes;
};

/// Grid over the state space within gauge level `radius` and times in [0, horizon].
GridCheck check_coefficients(const DiffusionSpec& spec, const ExponentSpec& exp, double radius,
                             double horizon, int points_per_axis = 65);

/// Cholesky-based positive-definiteness test of a row-major symmetric matrix.
bool is_positive_definite(std::span<const double> m, std::size_t dim);

// Constant-folding builders used when composing coefficient expressions.
Expr fold_add(const Expr& a, const Expr& b);
Expr fold_mul(const Expr& a, const Expr& b);

}  // namespace lmc
