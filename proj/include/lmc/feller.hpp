#pragma once

#include "lmc/model.hpp"
#include "lmc/quadrature.hpp"

#include <optional>

namespace lmc {

enum class Endpoint { Left, Right };

/// Tuning of the endpoint-limit search used by the Feller test.
///
/// Probe points approach the endpoint geometrically: xi +/- 2^k * step for an
/// infinite end, endpoint -/+ (distance) * 2^-k for a finite one. The partial
/// integral is declared infinite once it exceeds `divergence_threshold`, or
/// when the probe-to-probe increments stop shrinking (their ratio stays within
/// `unit_ratio_band` of one for `log_window` probes, i.e. logarithmic growth).
/// It is declared finite once the increments decay geometrically and the
/// projected remaining tail drops below `limit_tolerance` times the value.
struct FellerOptions {
    QuadratureTolerance quadrature{};
    double divergence_threshold = 1e12;
    double limit_tolerance = 1e-4;
    double step = 0.125;
    int max_probes = 96;
    int log_window = 6;
    double unit_ratio_band = 1e-2;
    /// When set, overrides x0 as the reference point.
    std::optional<double> xi;
    /// Radius (in gauge units) of the grid used to check coefficients.
    double grid_radius = 8.0;
    /// When false, failed grid checks only add notes instead of forcing Inconclusive.
    bool gate_on_grid_checks = true;
};

/// s'(x) = exp(-int_xi^x 2b/c). Requires a 1-d homogeneous spec.
double scale_density(const DiffusionSpec& spec, double x, double xi, const FellerOptions& opts = {});

/// v(endpoint) = int_xi^end s'(y) int_xi^y 2/(c s') dz dy.
/// Throws QuadratureFailure / DegenerateDiffusion.
EndpointIntegral feller_v(const DiffusionSpec& spec, Endpoint endpoint, double xi, const FellerOptions& opts = {});

/// Runs both endpoints; failures are embedded (conclusion Unknown).
FellerReport classify_explosion(const DiffusionSpec& spec, const FellerOptions& opts = {});

/// Original vs modified Feller tests combined into a martingale verdict.
/// Throws PreconditionViolated for non-1-d / inhomogeneous input or c <= 0 on the grid.
MartingaleVerdict martingale_verdict(const DiffusionSpec& spec, const ExponentSpec& exp,
                                     const FellerOptions& opts = {});

}  // namespace lmc
