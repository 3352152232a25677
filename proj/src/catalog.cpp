#include "lmc/catalog.hpp"

#include "lmc/errors.hpp"

#include <cmath>

namespace lmc {

using nlohmann::json;

namespace {

json scalar(const std::string& drift, const std::string& dispersion, double x0, json interval = json::array({"-inf", "inf"})) {
    return {{"interval", json::array({interval})}, {"drift", {drift}}, {"dispersion", {dispersion}}, {"x0", {x0}}};
}

json plan(std::vector<double> levels, double cap = 1.0) {
    return {{"levels", levels}, {"time_caps", std::vector<double>(levels.size(), cap)}};
}

const std::vector<double> kStandardLevels{1, 2, 4, 8, 16, 32};

CatalogEntry diffusion(std::string name, std::string description, json spec, std::vector<std::string> beta,
                       std::vector<double> levels = kStandardLevels, json extra = json::object()) {
    json c = {{"preset", name}, {"t", 1.0}, {"diffusion", std::move(spec)}, {"exponent", {{"beta", beta}}},
              {"plan", plan(std::move(levels))}};
    c.update(extra);
    return {std::move(name), CatalogEntry::Kind::Diffusion, std::move(description), std::move(c)};
}

CatalogEntry jump(std::string name, std::string description, json base, json section, std::vector<double> levels) {
    json c = {{"preset", name}, {"t", 1.0}, {"diffusion", std::move(base)}, {"jump", std::move(section)},
              {"plan", plan(std::move(levels))}};
    return {std::move(name), CatalogEntry::Kind::Jump, std::move(description), std::move(c)};
}

CatalogEntry hilbert(std::string name, std::string description, std::vector<double> eigenvalues, json functional,
                     std::vector<double> levels = kStandardLevels) {
    json c = {{"preset", name},
              {"t", 1.0},
              {"hilbert", {{"eigenvalues", eigenvalues}, {"functional", std::move(functional)}}},
              {"plan", plan(std::move(levels))}};
    return {std::move(name), CatalogEntry::Kind::Hilbert, std::move(description), std::move(c)};
}

std::vector<double> dyadic(std::size_t k) {
    std::vector<double> out;
    for (std::size_t i = 1; i <= k; ++i) out.push_back(std::ldexp(1.0, -static_cast<int>(i)));
    return out;
}

std::vector<CatalogEntry> build() {
    std::vector<CatalogEntry> c;
    const json bm = scalar("0", "1", 0.0);
    c.push_back(diffusion("brownian-zero", "Brownian motion with beta = 0; Z is identically 1", bm, {"0"}));
    c.push_back(diffusion("brownian-linear", "Brownian motion with beta(x) = x; modified drift x, true martingale",
                          bm, {"x"}));
    c.push_back(diffusion("brownian-cubic",
                          "Brownian motion with beta(x) = x^3; modified drift x^3 explodes, strict local martingale",
                          bm, {"x^3"}, {1, 2, 3, 4, 6, 8, 16, 32}, {{"mc", {{"dt_max", 0.0025}}}}));
    c.push_back(diffusion("bessel3-inverse",
                          "Bessel(3) from 1 with beta(x) = -1/x, so Z = 1/X; modified law is Brownian motion "
                          "killed at 0, deficit erfc(1/sqrt(2t))",
                          scalar("1/x", "1", 1.0, json::array({0.0, "inf"})), {"-1/x"}, {2, 4, 8, 16, 32, 64, 128},
                          {{"mc", {{"bridge_correction", true}}}}));
    c.push_back(diffusion("ou-linear", "Ornstein-Uhlenbeck dX = -X dt + dW with beta(x) = x; modified law is Brownian",
                          scalar("-x", "1", 0.0), {"x"}));
    c.push_back(diffusion("brownian-timevarying", "Brownian motion with beta(t, x) = t x (inhomogeneous)", bm,
                          {"t*x"}));
    c.push_back(diffusion("brownian-2d-linear", "Two-dimensional Brownian motion with beta(x) = x",
                          {{"interval", json::array({json::array({"-inf", "inf"}), json::array({"-inf", "inf"})})},
                           {"drift", json::array({"0", "0"})},
                           {"dispersion", {"1", "0", "0", "1"}},
                           {"x0", {0.0, 0.0}}},
                          {"x1", "x2"}));

    const json still = scalar("0", "0", 0.0);
    c.push_back(jump("poisson-U4", "Poisson process of rate 1 with unit jumps, reweighted by U = 4", still,
                     {{"rate", 1.0}, {"law", {{"support", {1.0}}, {"probs", {1.0}}}}, {"K", "0"}, {"U", "4"}},
                     {2, 4, 8, 16, 32, 64}));
    c.push_back(jump("poisson-atoms",
                     "Compound Poisson jumps plus fixed-time atoms of mass 0.5 with U-hat = 0.75", still,
                     {{"rate", 1.0},
                      {"law", {{"support", {1.0, -0.5}}, {"probs", {0.5, 0.5}}}},
                      {"atoms",
                       {{{"time", 0.25}, {"mass", 0.5}, {"law", {{"support", {1.0}}, {"probs", {1.0}}}}},
                        {{"time", 0.75}, {"mass", 0.5}, {"law", {{"support", {1.0}}, {"probs", {1.0}}}}}}},
                      {"K", "0"},
                      {"U", "1.5"}},
                     {2, 4, 8, 16, 32, 64}));
    c.push_back(jump("jump-linear", "Brownian motion plus unit Poisson jumps with K(x) = x and U = 2", bm,
                     {{"rate", 1.0}, {"law", {{"support", {1.0}}, {"probs", {1.0}}}}, {"K", "x"}, {"U", "2"}},
                     {1, 2, 4, 8, 16, 32, 64, 128, 256, 512}));
    c.push_back(jump("jump-cubic", "Brownian motion plus Poisson jumps with K(x) = x^3 and U = 1", bm,
                     {{"rate", 0.5}, {"law", {{"support", {0.5}}, {"probs", {1.0}}}}, {"K", "x^3"}, {"U", "1"}},
                     {1, 2, 3, 4, 6, 8, 16, 32}));

    c.push_back(hilbert("running-sup-1", "One mode with lambda = 1 and phi = running sup of the mode", {1.0},
                        {{"kind", "running_sup"}, {"mode", 1}, {"claimed_lipschitz", 1.0}, {"claimed_growth", 1.0}}));
    c.push_back(hilbert("running-sup-16", "16 modes with lambda_k = 2^-k and phi = running sup of mode 1",
                        dyadic(16),
                        {{"kind", "running_sup"}, {"mode", 1}, {"claimed_lipschitz", 1.0}, {"claimed_growth", 1.0}}));
    c.push_back(hilbert("quadratic-pointwise", "Two modes with phi(t, w) = (w1(t)^2, 0); violates linear growth",
                        {1.0, 0.5},
                        {{"kind", "pointwise"}, {"exprs", {"x1^2", "0"}}, {"claimed_lipschitz", 1.0},
                         {"claimed_growth", 1.0}}));
    return c;
}

}  // namespace

const std::vector<CatalogEntry>& catalog() {
    static const std::vector<CatalogEntry> entries = build();
    return entries;
}

const CatalogEntry& find_preset(std::string_view name) {
    for (const auto& e : catalog()) {
        if (e.name == name) return e;
    }
    throw ConfigError("preset: unknown catalog entry '" + std::string(name) + "'");
}

std::string to_string(CatalogEntry::Kind kind) {
    switch (kind) {
        case CatalogEntry::Kind::Diffusion: return "diffusion";
        case CatalogEntry::Kind::Jump: return "jump";
        case CatalogEntry::Kind::Hilbert: return "hilbert";
    }
    return "unknown";
}

}  // namespace lmc
