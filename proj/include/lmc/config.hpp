#pragma once

#include "lmc/feller.hpp"
#include "lmc/hilbert.hpp"
#include "lmc/jumpkit.hpp"
#include "lmc/mc.hpp"
#include "lmc/model.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace lmc {

enum class OutputFormat { Json, Csv };

/// Everything one CLI run needs, validated section by section.
///
/// JSON schema (all sections optional unless the command needs them):
///   t            number, analysis time (default 1)
///   diffusion    {interval: [[lo, hi], ...], drift: [str], dispersion: [str] (row-major), x0: [num]}
///                interval ends may be numbers or the strings "inf" / "-inf"
///   exponent     {beta: [str]}
///   jump         {rate, law: {support, probs}, atoms: [{time, mass, law}], K: str, U: str}
///                uses `diffusion` as the base; 1-d only
///   hilbert      {eigenvalues: [num], functional: {kind: "running_sup" | "pointwise",
///                 mode (1-based) | weights + direction, exprs: [str],
///                 claimed_lipschitz, claimed_growth}}
///   mc           {n_paths, dt_max, horizon, seed, adaptive, bridge_correction, explosion_guard, threads}
///   plan         {levels: [num], time_caps: [num]}
///   feller       {xi, gate_on_grid_checks, grid_radius}
///   with_mc      bool, attach the Monte Carlo cross-check to `classify`
///   output       {path, format: "json" | "csv"}
struct RunConfig {
    std::string preset;  // empty when loaded from a file only
    double t = 1.0;
    std::optional<DiffusionSpec> diffusion;
    std::optional<ExponentSpec> exponent;
    std::optional<JumpTriplet> triplet;
    std::optional<GirsanovData> girsanov;
    std::optional<CovarianceSpec> covariance;
    std::optional<FunctionalSpec> functional;
    SimConfig mc;
    std::optional<LocalizationPlan> plan;
    FellerOptions feller;
    bool with_mc = false;
    std::string output_path;
    OutputFormat format = OutputFormat::Json;
};

/// Throws ConfigError naming the offending field path (e.g. "mc.n_paths").
RunConfig parse_config(const nlohmann::json& j);

/// Canonical form of a config: every default filled in, expressions
/// rendered canonically. Worker count and output location are left out
/// since they never change results.
nlohmann::json resolved_json(const RunConfig& config);

/// Overlays `patch` onto `base` key by key (objects merge, everything else replaces).
nlohmann::json merge_json(nlohmann::json base, const nlohmann::json& patch);

}  // namespace lmc
