#include "lmc/acceptance.hpp"

#include "lmc/catalog.hpp"
#include "lmc/commands.hpp"
#include "lmc/config.hpp"
#include "lmc/errors.hpp"
#include "lmc/feller.hpp"
#include "lmc/hilbert.hpp"
#include "lmc/jumpkit.hpp"
#include "lmc/mc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

namespace lmc {

using nlohmann::json;

namespace {

std::string fmt(double v, const char* spec = "%.5g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string pm(double mean, double se) { return fmt(mean) + " +/- " + fmt(se, "%.3g"); }

bool within(double value, double target, double se, double k = 3.0) { return std::fabs(value - target) <= k * se; }

RunConfig preset(const std::string& name, unsigned threads, const json& patch = json::object()) {
    RunConfig c = parse_config(merge_json(find_preset(name).config, patch));
    c.mc.threads = threads;
    return c;
}

// Checks accumulate into one result; a failing check fails the criterion.
struct Checks {
    CriterionResult& r;
    void operator()(bool ok, const std::string& what) {
        r.details.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
        if (!ok) r.pass = false;
    }
};

// Probability that dY = Y^3 dt + dW from 0 leaves |y| < 1e4 by t = 1, from a
// plain fixed-step Euler loop with its own generator.
struct ExplosionOracle {
    double p = 0.0;
    double se = 0.0;
};

ExplosionOracle explosion_oracle(std::size_t paths, double dt) {
    const int steps = static_cast<int>(std::lround(1.0 / dt));
    std::mt19937_64 gen(777);
    std::normal_distribution<double> normal;
    const double sq = std::sqrt(dt);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < paths; ++i) {
        double y = 0.0;
        for (int k = 0; k < steps; ++k) {
            y += y * y * y * dt + sq * normal(gen);
            if (!std::isfinite(y) || std::fabs(y) >= 1e4) {
                ++hit;
                break;
            }
        }
    }
    ExplosionOracle o;
    o.p = static_cast<double>(hit) / static_cast<double>(paths);
    o.se = std::sqrt(o.p * (1.0 - o.p) / static_cast<double>(paths));
    return o;
}

bool all_infinite(const FellerReport& f) {
    return f.conclusion == FellerReport::Conclusion::NonExplosive &&
           f.left.status == EndpointIntegral::Status::Infinite && f.right.status == EndpointIntegral::Status::Infinite;
}

void criterion1(CriterionResult& r, unsigned threads) {
    Checks check{r};
    auto c = preset("brownian-zero", threads);
    auto classify = run_command("classify", c);
    const std::string cls = classify.json["verdict"]["classification"];
    check(cls == "TrueMartingale", "classify brownian-zero: " + cls);
    auto deficit = run_command("deficit", c);
    const double d = deficit.json["curves"]["deficit"]["deficit"];
    check(d == 0.0, "deficit exactly 0: " + fmt(d));
    auto direct = estimate_mean_direct(*c.diffusion, *c.exponent, c.t, c.mc);
    check(direct.mean == 1.0 && direct.std_error == 0.0, "direct mean " + pm(direct.mean, direct.std_error));
    r.summary = "beta = 0: " + cls + ", deficit " + fmt(d) + ", direct mean " + pm(direct.mean, direct.std_error);
}

void criterion2(CriterionResult& r, unsigned threads) {
    Checks check{r};
    auto c = preset("brownian-linear", threads, {{"mc", {{"n_paths", 100000}}}});
    auto v = martingale_verdict(*c.diffusion, *c.exponent, c.feller);
    check(all_infinite(*v.feller_modified), "Feller on dY = Y dt + dB: " + to_string(v.feller_modified->conclusion) +
                                                " (left " + to_string(v.feller_modified->left.status) + ", right " +
                                                to_string(v.feller_modified->right.status) + ")");
    check(v.classification == Classification::TrueMartingale, "verdict " + to_string(v.classification));
    auto curve = estimate_deficit_localized(modified_drift(*c.diffusion, *c.exponent), *c.plan, 1.0, c.mc);
    check(curve.deficit() < 0.01, "localized deficit " + fmt(curve.deficit()) + " < 0.01 (levels to " +
                                      fmt(c.plan->levels.back()) + ", 1e5 paths)");
    auto direct = estimate_mean_direct(*c.diffusion, *c.exponent, 1.0, c.mc);
    check(within(direct.mean, 1.0, direct.std_error), "direct mean " + pm(direct.mean, direct.std_error));
    r.summary = "E(X.X): " + to_string(v.classification) + ", deficit " + fmt(curve.deficit()) + ", direct mean " +
                pm(direct.mean, direct.std_error);
}

void criterion3(CriterionResult& r, unsigned threads) {
    Checks check{r};
    auto c = preset("brownian-linear", threads, {{"t", 3.0}, {"mc", {{"n_paths", 100000}, {"horizon", 3.0}}}});
    auto rep = novikov_estimate(*c.diffusion, *c.exponent, 3.0, c.mc);
    check(rep.estimate.heavy_tail_flag, "heavy_tail_flag at t = 3");
    std::string means;
    for (auto [n, m] : rep.running_means) means += (means.empty() ? "" : ", ") + std::to_string(n) + ":" + fmt(m);
    check(rep.growing, "running mean keeps increasing under doubling [" + means + "]");
    auto v = martingale_verdict(*c.diffusion, *c.exponent, c.feller);
    check(v.classification == Classification::TrueMartingale, "simultaneous verdict " + to_string(v.classification));
    r.summary = "Novikov at t = 3: mean " + pm(rep.estimate.mean, rep.estimate.std_error) + ", heavy tail " +
                (rep.estimate.heavy_tail_flag ? "yes" : "no") + ", growing " + (rep.growing ? "yes" : "no");
}

void criterion4(CriterionResult& r, unsigned threads) {
    Checks check{r};
    auto c = preset("brownian-cubic", threads, {{"mc", {{"n_paths", 100000}}}});
    const auto modified = modified_drift(*c.diffusion, *c.exponent);
    auto v_right = feller_v(modified, Endpoint::Right, c.diffusion->x0[0], c.feller);
    check(v_right.status == EndpointIntegral::Status::Finite,
          "Feller v(+inf) " + to_string(v_right.status) + " = " + fmt(v_right.value));
    auto v = martingale_verdict(*c.diffusion, *c.exponent, c.feller);
    check(v.classification == Classification::StrictLocal, "verdict " + to_string(v.classification));
    auto curve = estimate_deficit_localized(modified, *c.plan, 1.0, c.mc);
    const double se = curve.entries.back().std_error;
    check(curve.converged && curve.deficit() > 3.0 * se, "localized deficit " + pm(curve.deficit(), se) +
                                                             (curve.converged ? " converged" : " not converged"));
    auto o = explosion_oracle(100000, 2.5e-4);
    const double combined = std::hypot(se, o.se);
    check(within(curve.deficit(), o.p, combined, 2.0),
          "fine-step oracle " + pm(o.p, o.se) + ", difference " + fmt(curve.deficit() - o.p) + " vs 2 SE " +
              fmt(2.0 * combined));
    r.summary = "beta = x^3: " + to_string(v.classification) + ", deficit " + pm(curve.deficit(), se) +
                ", oracle " + pm(o.p, o.se);
}

void criterion5(CriterionResult& r, unsigned threads) {
    Checks check{r};
    std::size_t tested = 0;
    std::size_t failed_levels = 0;
    for (const auto& e : catalog()) {
        if (e.kind != CatalogEntry::Kind::Diffusion) continue;
        auto c = preset(e.name, threads, {{"mc", {{"n_paths", 10000}}}});
        try {
            (void)localized_bound_check(*c.diffusion, *c.exponent, *c.plan);
        } catch (const UnboundedOnCompact& err) {
            r.details.push_back("skip " + e.name + ": " + err.what());
            continue;
        }
        ++tested;
        auto means = estimate_stopped_means(*c.diffusion, *c.exponent, *c.plan, c.t, c.mc);
        for (std::size_t i = 0; i < means.size(); ++i) {
            const bool ok = within(means[i].mean, 1.0, means[i].std_error);
            if (!ok) ++failed_levels;
            check(ok, e.name + " level " + fmt(c.plan->levels[i]) + ": " + pm(means[i].mean, means[i].std_error) +
                          (means[i].heavy_tail_flag ? " (heavy tail)" : ""));
        }
    }
    r.summary = std::to_string(tested) + " catalog diffusions, " + std::to_string(failed_levels) +
                " level(s) outside 1 +/- 3 SE at 1e4 paths";
}

void criterion6(CriterionResult& r, unsigned threads) {
    Checks check{r};
    // (a) jumps of N stay above -1.
    for (const auto& e : catalog()) {
        if (e.kind != CatalogEntry::Kind::Jump) continue;
        auto c = preset(e.name, threads, {{"mc", {{"n_paths", 10000}}}});
        JumpEnsembleOptions opt;
        opt.t = c.t;
        auto ens = simulate_jump_ensemble(*c.triplet, *c.girsanov, c.mc, opt);
        std::size_t ok_paths = 0;
        std::size_t jumps = 0;
        double min_jump = 0.0;
        for (const auto& p : ens) {
            if (p.jumps == 0 || p.min_jump_n > -1.0) ++ok_paths;
            jumps += p.jumps;
            if (p.jumps > 0) min_jump = std::min(min_jump, p.min_jump_n);
        }
        check(ok_paths == ens.size(), "(a) " + e.name + ": " + std::to_string(ok_paths) + "/" +
                                          std::to_string(ens.size()) + " paths with dN > -1, " +
                                          std::to_string(jumps) + " jumps, min dN " + fmt(min_jump));
    }
    // (b) compensator identity, plus the closed form R_t = rate (1 - sqrt U)^2 t = 1.
    {
        auto c = preset("poisson-U4", threads);
        auto comp = verify_compensator_identity(*c.triplet, *c.girsanov, c.mc, c.t, c.plan->levels.back());
        check(comp.pass, "(b) poisson-U4 bracket - R = " + pm(comp.difference, comp.std_error));
        const double closed = 1.0 * std::pow(1.0 - std::sqrt(4.0), 2) * c.t;
        check(std::fabs(comp.mean_r - closed) <= 1e-12, "(b) mean R " + fmt(comp.mean_r, "%.15g") +
                                                             " vs closed form " + fmt(closed));
        // Reported only: beyond the first level Z^rho is the unstopped, heavy-tailed Z.
        auto stopped = jump_stopped_means(*c.triplet, *c.girsanov, *c.plan, c.t, c.mc);
        for (std::size_t k = 0; k < stopped.size(); ++k) {
            r.details.push_back("info (b) E Z(t ^ rho_" + std::to_string(k + 1) + ") " +
                                pm(stopped[k].mean, stopped[k].std_error));
        }
    }
    // (c) atom bookkeeping against the closed form.
    {
        auto c = preset("poisson-atoms", threads);
        const auto& atom = c.triplet->atoms.front();
        const double a = atom.mass;
        const double uhat = compute_Uhat(*c.triplet, *c.girsanov, atom.time);
        double s = 0.0;
        for (std::size_t i = 0; i < atom.law.support.size(); ++i) {
            s += a * atom.law.probs[i] * std::sqrt((*c.girsanov).U(atom.time, atom.law.support[i]));
        }
        const double closed = 2.0 * (1.0 - s - std::sqrt((1.0 - a) * (1.0 - uhat)));
        const double computed = atom_R_increment(*c.triplet, *c.girsanov, 0);
        const double rel = std::fabs(computed - closed) / std::fabs(closed);
        check(a == 0.5 && std::fabs(uhat - 0.75) < 1e-15, "(c) atom a = " + fmt(a) + ", U-hat = " + fmt(uhat));
        check(rel < 1e-12, "(c) dR = " + fmt(computed, "%.17g") + " vs closed form " + fmt(closed, "%.17g") +
                               ", relative error " + fmt(rel, "%.2e"));
    }
    // (d) rate 0: jumpkit against the diffusion module.
    {
        auto c = preset("brownian-linear", threads);
        JumpTriplet trip;
        trip.base = *c.diffusion;
        GirsanovData gd{c.exponent->beta[0], Expr::constant(1.0)};
        bool exact = true;
        for (std::size_t i = 0; i < 64; ++i) {
            auto path = simulate_path(*c.diffusion, c.mc, i);
            auto bracket = exponent_bracket(path, *c.diffusion, *c.exponent);
            auto hp = compute_R(trip, gd, path.times, path.states);
            exact = exact && hp.R == bracket;
        }
        check(exact, "(d) R equals the diffusion bracket exactly on 64 paths");
        auto jm = jump_stopped_means(trip, gd, *c.plan, c.t, c.mc);
        auto dm = estimate_stopped_means(*c.diffusion, *c.exponent, *c.plan, c.t, c.mc);
        auto jv = verdict_jump(trip, gd, c.t, *c.plan, c.mc);
        auto dc = estimate_deficit_localized(modified_drift(*c.diffusion, *c.exponent), *c.plan, c.t, c.mc);
        for (std::size_t k = 0; k < jm.size(); ++k) {
            const double se = std::hypot(jm[k].std_error, dm[k].std_error);
            check(within(jm[k].mean, dm[k].mean, se), "(d) level " + fmt(c.plan->levels[k]) + " stopped means " +
                                                          fmt(jm[k].mean) + " vs " + fmt(dm[k].mean));
            // Jump rho_n also stops on R, so per-level survival differs by design.
            r.details.push_back("info (d) level " + fmt(c.plan->levels[k]) + " survival " +
                                fmt(jv.deficit_curve->entries[k].survival) + " vs " + fmt(dc.entries[k].survival));
        }
        const double se = std::hypot(jv.deficit_curve->entries.back().std_error, dc.entries.back().std_error);
        check(std::fabs(jv.deficit_curve->deficit() - dc.deficit()) <= 3.0 * se + 1e-12,
              "(d) deficit " + fmt(jv.deficit_curve->deficit()) + " vs " + fmt(dc.deficit()));
        check(jv.classification == classify_curve(dc),
              "(d) verdict " + to_string(jv.classification) + " vs " + to_string(classify_curve(dc)));
    }
    r.summary = "jump kit: (a) jump bound, (b) compensator, (c) atom bookkeeping, (d) rate-0 reduction";
}

void criterion7(CriterionResult& r, unsigned threads) {
    Checks check{r};
    auto c = preset("running-sup-16", threads, {{"mc", {{"n_paths", 10000}}}});
    const auto& cov = *c.covariance;
    auto m = mode_moments(cov, c.t, c.mc);
    std::size_t good = 0;
    for (std::size_t k = 0; k < cov.modes(); ++k) {
        const bool ok = within(m.variance_ratio[k], cov.eigenvalues[k], m.variance_se[k]);
        good += ok;
        if (!ok) {
            check(false, "mode " + std::to_string(k + 1) + " Var/t " + pm(m.variance_ratio[k], m.variance_se[k]) +
                             " vs " + fmt(cov.eigenvalues[k]));
        }
    }
    check(good == cov.modes(), std::to_string(good) + "/16 mode variances within 3 SE of lambda_k t");
    auto est = estimate_hilbert_expectation(*c.functional, cov, c.t, *c.plan, c.mc);
    check(est.conditions.growth_hat <= 1.0, "lambda-hat " + fmt(est.conditions.growth_hat) + " <= 1");
    check(est.conditions.lipschitz_hat <= 1.0, "L-hat " + fmt(est.conditions.lipschitz_hat) + " <= 1");
    check(within(est.direct.mean, 1.0, est.direct.std_error), "E Z_1 " + pm(est.direct.mean, est.direct.std_error));
    r.summary = "K = 16 running sup: E Z_1 " + pm(est.direct.mean, est.direct.std_error) + ", L-hat " +
                fmt(est.conditions.lipschitz_hat) + ", lambda-hat " + fmt(est.conditions.growth_hat);
}

void criterion8(CriterionResult& r) {
    Checks check{r};
    struct Run {
        const char* command;
        const char* preset;
        json patch;
    };
    const std::vector<Run> runs = {
        {"classify", "brownian-linear", {{"with_mc", true}, {"mc", {{"n_paths", 2000}}}}},
        {"deficit", "brownian-cubic", {{"mc", {{"n_paths", 2000}}}}},
        {"deficit", "bessel3-inverse", {{"mc", {{"n_paths", 2000}}}}},
        {"novikov", "brownian-linear", {{"t", 3.0}, {"mc", {{"n_paths", 4000}, {"horizon", 3.0}}}}},
        {"jump", "poisson-atoms", {{"mc", {{"n_paths", 2000}}}}},
        {"jump", "jump-linear", {{"mc", {{"n_paths", 1000}}}}},
        {"hilbert", "running-sup-16", {{"mc", {{"n_paths", 1000}}}}},
    };
    for (const auto& run : runs) {
        std::string bytes[2];
        std::string csv[2];
        int i = 0;
        for (unsigned threads : {1u, 8u}) {
            auto rep = run_command(run.command, preset(run.preset, threads, run.patch));
            bytes[i] = rep.json.dump(2);
            csv[i] = rep.csv;
            ++i;
        }
        check(bytes[0] == bytes[1] && csv[0] == csv[1], std::string(run.command) + " " + run.preset + ": " +
                                                            std::to_string(bytes[0].size()) + " bytes");
    }
    r.summary = std::to_string(runs.size()) + " reports compared byte for byte, threads 1 vs 8";
}

void criterion9(CriterionResult& r) {
    Checks check{r};
    std::size_t tested = 0;
    for (const auto& e : catalog()) {
        if (e.kind != CatalogEntry::Kind::Diffusion) continue;
        auto c = preset(e.name, 1);
        const auto& spec = *c.diffusion;
        if (spec.dim() != 1 || !spec.homogeneous() || c.exponent->beta[0].depends_on_time()) {
            r.details.push_back("n/a  " + e.name + ": Feller's test needs a 1-d homogeneous diffusion");
            continue;
        }
        ++tested;
        auto key = [](const MartingaleVerdict& v) {
            return to_string(v.classification) + "/" + to_string(v.feller_original->conclusion) + "/" +
                   to_string(v.feller_modified->conclusion);
        };
        const std::string base = key(martingale_verdict(spec, *c.exponent, c.feller));
        const double x0 = spec.x0[0];
        const auto& iv = spec.interval[0];
        std::vector<double> xis = {std::isfinite(iv.lower) ? 0.5 * (iv.lower + x0) : x0 - 0.5,
                                   std::isfinite(iv.upper) ? 0.5 * (iv.upper + x0) : x0 + 1.5};
        bool same = true;
        std::string trail;
        for (double xi : xis) {
            auto opts = c.feller;
            opts.xi = xi;
            const auto k = key(martingale_verdict(spec, *c.exponent, opts));
            same = same && k == base;
            trail += " xi=" + fmt(xi) + ":" + k;
        }
        for (double lambda : {0.5, 2.0}) {
            DiffusionSpec scaled = spec;
            scaled.drift[0] = Expr::constant(lambda) * spec.drift[0];
            scaled.dispersion[0] = Expr::constant(std::sqrt(lambda)) * spec.dispersion[0];
            const auto k = key(martingale_verdict(scaled, *c.exponent, c.feller));
            same = same && k == base;
            trail += " scale=" + fmt(lambda) + ":" + k;
        }
        check(same, e.name + " " + base + " |" + trail);
    }
    r.summary = std::to_string(tested) + " catalog diffusions invariant under xi and (b, c) scaling";
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options,
                                            const std::function<void(const CriterionResult&)>& on_result) {
    std::vector<CriterionResult> out;
    for (int id = 1; id <= 9; ++id) {
        if (!options.criteria.empty() &&
            std::find(options.criteria.begin(), options.criteria.end(), id) == options.criteria.end()) {
            continue;
        }
        CriterionResult r;
        r.id = id;
        r.pass = true;
        const auto start = std::chrono::steady_clock::now();
        try {
            switch (id) {
                case 1: criterion1(r, options.threads); break;
                case 2: criterion2(r, options.threads); break;
                case 3: criterion3(r, options.threads); break;
                case 4: criterion4(r, options.threads); break;
                case 5: criterion5(r, options.threads); break;
                case 6: criterion6(r, options.threads); break;
                case 7: criterion7(r, options.threads); break;
                case 8: criterion8(r); break;
                case 9: criterion9(r); break;
            }
        } catch (const std::exception& e) {
            r.pass = false;
            r.summary = std::string("error: ") + e.what();
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (on_result) on_result(r);
        out.push_back(std::move(r));
    }
    return out;
}

std::string format_result(const CriterionResult& r) {
    return "criterion " + std::to_string(r.id) + " " + (r.pass ? "PASS" : "FAIL") + " (" + fmt(r.seconds, "%.1f") +
           " s): " + r.summary;
}

}  // namespace lmc
