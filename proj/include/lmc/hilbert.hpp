#pragma once

#include "lmc/mc.hpp"
#include "lmc/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace lmc {

/// Truncated spectrum of a nuclear covariance Q: eigenvalues lambda_1 >= ... >= lambda_K > 0.
struct CovarianceSpec {
    std::vector<double> eigenvalues;

    [[nodiscard]] std::size_t modes() const { return eigenvalues.size(); }
};

void validate(const CovarianceSpec& cov);

/// Integrand phi(t, omega) with values in the truncated space.
struct FunctionalSpec {
    enum class Kind { Pointwise, RunningSup };
    Kind kind = Kind::RunningSup;
    /// Pointwise: phi^k(t, omega) = expr_k(t, omega(t)); variables x1..xK are the modes.
    std::vector<Expr> pointwise;
    /// RunningSup: phi(t, omega) = sup_{s<t} <weights, omega(s)> * direction.
    std::vector<double> weights;
    std::vector<double> direction;
    std::optional<double> claimed_lipschitz;
    std::optional<double> claimed_growth;
};

/// Throws ValidationError / DimensionMismatch. Returns warnings (phi(., 0) not constant).
std::vector<std::string> validate(const FunctionalSpec& phi, const CovarianceSpec& cov);

/// RunningSup of one mode broadcast into the same mode.
FunctionalSpec running_sup_of_mode(std::size_t modes, std::size_t mode);

/// Independent modes with Var(W^k_t) = lambda_k t on a fixed grid of step dt_max.
PathRecord simulate_q_brownian(const CovarianceSpec& cov, const SimConfig& config, std::size_t path_index);

/// phi on every grid point of a path: row j holds phi(t_j, omega), using
/// omega on grid points strictly before t_j for the running sup (omega(0) at j = 0).
std::vector<double> evaluate_functional(const FunctionalSpec& phi, const PathRecord& path);

struct ConditionsReport {
    struct Band {
        double radius = 0.0;  // paths with sup norm below this radius
        double lipschitz = 0.0;
        std::size_t samples = 0;
    };
    std::vector<Band> lipschitz_bands;
    double lipschitz_hat = 0.0;  // max over bands
    double growth_hat = 0.0;
    bool lipschitz_ok = true;
    bool growth_ok = true;
    std::vector<std::string> notes;

    [[nodiscard]] bool pass() const { return lipschitz_ok && growth_ok; }
};

/// Empirical constants of the local Lipschitz and linear growth conditions
/// over consecutive pairs of `paths` (all on one grid).
ConditionsReport check_conditions(const FunctionalSpec& phi, const CovarianceSpec& cov,
                                  const std::vector<PathRecord>& paths);

struct ModeMoments {
    std::vector<double> variance_ratio;  // sample Var(W^k_t) / t
    std::vector<double> variance_se;
    std::vector<double> cross_covariance;  // between modes k and k+1, divided by t
    std::vector<double> cross_se;
};

/// Terminal-time moments of the simulated modes.
ModeMoments mode_moments(const CovarianceSpec& cov, double t, const SimConfig& config);

struct HilbertEstimate {
    MCEstimate direct;  // E Z_t under the Q-Brownian motion
    DeficitCurve curve;  // Q(rho_n > t) under the modified dynamics
    ConditionsReport conditions;
    Classification classification = Classification::Inconclusive;
    std::vector<std::string> notes;
};

/// log Z = sum_k int phi^k dW^k - 1/2 int sum_k lambda_k (phi^k)^2 dt, with
/// rho_n = inf{s : |X_s| >= m_n} ^ cap_n on the modified dynamics
/// dX^k = lambda_k phi^k dt + dW^k.
HilbertEstimate estimate_hilbert_expectation(const FunctionalSpec& phi, const CovarianceSpec& cov, double t,
                                             const LocalizationPlan& plan, const SimConfig& config);

/// E exp(1/2 int_0^t |Q^{1/2} phi|^2 ds) under the Q-Brownian motion.
NovikovReport hilbert_novikov(const FunctionalSpec& phi, const CovarianceSpec& cov, double t,
                              const SimConfig& config);

}  // namespace lmc
