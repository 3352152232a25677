#include "lmc/errors.hpp"
#include "lmc/mc.hpp"
#include "lmc/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

using namespace lmc;

namespace {

SimConfig small(std::size_t n, double dt = 1e-2) {
    SimConfig c;
    c.n_paths = n;
    c.dt_max = dt;
    c.threads = 1;
    return c;
}

PathRecord manual_path(std::vector<double> times, std::vector<double> states) {
    PathRecord p;
    p.times = std::move(times);
    p.states = std::move(states);
    return p;
}

}  // namespace

TEST(Mc, DeterministicPathWhenSigmaZero) {
    auto spec = DiffusionSpec::scalar(Expr::constant(1.0), Expr(), 0.0);
    auto p = simulate_path(spec, small(1), 0);
    EXPECT_EQ(p.status, PathStatus::ReachedHorizon);
    EXPECT_DOUBLE_EQ(p.times.back(), 1.0);
    EXPECT_NEAR(p.states.back(), 1.0, 1e-12);
}

TEST(Mc, ExponentDrivers) {
    auto spec = DiffusionSpec::scalar(Expr::constant(1.0), Expr(), 0.0);
    ExponentSpec exp{{Expr::constant(1.0)}};
    auto p = simulate_path(spec, small(1), 0);
    auto inc = stochastic_exponential(p, spec, exp, ExponentDriver::Increment);
    auto cont = stochastic_exponential(p, spec, exp, ExponentDriver::ContinuousPart);
    EXPECT_NEAR(inc.back(), std::exp(1.0), 1e-12);
    EXPECT_NEAR(cont.back(), 1.0, 1e-12);
}

TEST(Mc, ExitTime) {
    auto spec = DiffusionSpec::scalar(Expr(), Expr::constant(1.0), 0.0);
    auto flat = manual_path({0.0, 0.5, 1.0}, {0.0, 0.0, 0.0});
    EXPECT_DOUBLE_EQ(exit_time(flat, spec, StoppingRule{1, 2.0, 1.0}), 1.0);
    EXPECT_DOUBLE_EQ(exit_time(flat, spec, StoppingRule{1, 0.5, 0.75}), 0.75);
    auto hit = manual_path({0.0, 0.25, 0.5, 0.75, 1.0}, {0.0, 1.0, 2.0, 1.0, 0.0});
    EXPECT_DOUBLE_EQ(exit_time(hit, spec, StoppingRule{1, 2.0, 1.0}), 0.5);
    EXPECT_DOUBLE_EQ(exit_time(hit, spec, StoppingRule{1, 2.0, 0.25}), 0.25);
}

TEST(Mc, Summarize) {
    std::vector<double> ones(10, 1.0);
    auto s = summarize(ones);
    EXPECT_EQ(s.mean, 1.0);
    EXPECT_EQ(s.std_error, 0.0);
    EXPECT_FALSE(s.heavy_tail_flag);
    std::vector<double> spike{0.0, 0.0, 0.0, 100.0};
    auto h = summarize(spike);
    EXPECT_DOUBLE_EQ(h.mean, 25.0);
    EXPECT_DOUBLE_EQ(h.max_sample_share, 1.0);
    EXPECT_TRUE(h.heavy_tail_flag);
    std::vector<double> ab{1.0, 3.0};
    EXPECT_DOUBLE_EQ(summarize(ab).std_error, 1.0);  // sqrt(2 / 2)
}

TEST(Mc, ZeroExponentIsExact) {
    auto spec = DiffusionSpec::scalar(Expr::parse("x^3"), Expr::constant(1.0), 0.0);
    auto e = estimate_mean_direct(spec, ExponentSpec{{Expr()}}, 1.0, small(500));
    EXPECT_EQ(e.mean, 1.0);
    EXPECT_EQ(e.std_error, 0.0);
}

TEST(Mc, LinearExponentMeanOne) {
    auto spec = DiffusionSpec::scalar(Expr(), Expr::constant(1.0), 0.0);
    auto e = estimate_mean_direct(spec, ExponentSpec{{Expr::parse("x")}}, 1.0, small(20000));
    EXPECT_NEAR(e.mean, 1.0, 4 * e.std_error);
}

TEST(Mc, CubicExplosionFractionMatchesFineEuler) {
    // Independent fixed-step Euler at a 10x finer step, same guard.
    auto spec = DiffusionSpec::scalar(Expr::parse("x^3"), Expr::constant(1.0), 0.0);
    SimConfig c = small(4000, 1e-2);
    c.adaptive = false;
    c.explosion_guard = 1e4;
    std::size_t exploded = 0;
    for (std::size_t i = 0; i < c.n_paths; ++i) {
        if (simulate_path(spec, c, i).status == PathStatus::NumericalExplosion) ++exploded;
    }
    std::mt19937_64 rng(99);
    std::normal_distribution<double> g;
    const int n = 4000;
    const double dt = 1e-3;
    int ref = 0;
    for (int i = 0; i < n; ++i) {
        double y = 0.0;
        for (int k = 0; k < 1000; ++k) {
            y += y * y * y * dt + std::sqrt(dt) * g(rng);
            if (std::abs(y) >= 1e4) {
                ++ref;
                break;
            }
        }
    }
    const double p1 = static_cast<double>(exploded) / c.n_paths;
    const double p2 = static_cast<double>(ref) / n;
    const double se = std::sqrt(p1 * (1 - p1) / c.n_paths + p2 * (1 - p2) / n);
    EXPECT_GT(p1, 0.2);
    // Coarser step explodes slightly less often; allow the first-order bias on top of noise.
    EXPECT_NEAR(p1, p2, 3 * se + 0.02);
}

TEST(Mc, BoundCheck) {
    auto spec = DiffusionSpec::scalar(Expr(), Expr::constant(1.0), 0.0);
    LocalizationPlan plan{{2.0, 4.0}, {1.0, 1.0}};
    auto c = localized_bound_check(spec, ExponentSpec{{Expr::parse("x")}}, plan);
    ASSERT_EQ(c.size(), 2u);
    EXPECT_NEAR(c[0], 4.4, 1e-9);
    EXPECT_NEAR(c[1], 17.6, 1e-9);
    EXPECT_THROW((void)localized_bound_check(spec, ExponentSpec{{Expr::parse("1/x")}}, plan), UnboundedOnCompact);
}

TEST(Mc, NovikovStableAtShortHorizon) {
    auto spec = DiffusionSpec::scalar(Expr(), Expr::constant(1.0), 0.0);
    auto r = novikov_estimate(spec, ExponentSpec{{Expr::parse("x")}}, 0.1, small(4000));
    EXPECT_FALSE(r.growing);
    EXPECT_FALSE(r.running_means.empty());
    // E exp(1/2 int_0^t W^2) = cos(t)^{-1/2}
    EXPECT_NEAR(r.estimate.mean, 1.0 / std::sqrt(std::cos(0.1)), 4 * r.estimate.std_error + 1e-3);
}

TEST(Mc, BesselDeficitMatchesErfc) {
    // Modified dynamics of 1/X for the Bessel(3) bridge: Q(rho > 1) = 1 - erfc(1/sqrt 2).
    auto spec = DiffusionSpec::scalar(Expr::parse("1/x"), Expr::constant(1.0), 1.0, {0.0, kInf});
    auto mod = modified_drift(spec, ExponentSpec{{Expr::parse("-1/x")}});
    LocalizationPlan plan{{2, 4, 8, 16, 32, 64, 128}, {1, 1, 1, 1, 1, 1, 1}};
    SimConfig c = small(8000);
    c.bridge_correction = true;
    c.explosion_guard = 1e3;
    auto curve = estimate_deficit_localized(mod, plan, 1.0, c);
    const double exact = std::erfc(1.0 / std::sqrt(2.0));
    EXPECT_NEAR(curve.deficit(), exact, 4 * curve.entries.back().std_error + 0.01);
}

TEST(Mc, ThreadCountNeverChangesResults) {
    auto spec = DiffusionSpec::scalar(Expr(), Expr::constant(1.0), 0.0);
    auto mod = modified_drift(spec, ExponentSpec{{Expr::parse("x^3")}});
    LocalizationPlan plan{{1, 2, 4, 8}, {1, 1, 1, 1}};
    SimConfig a = small(1000);
    SimConfig b = a;
    b.threads = 4;
    auto ca = estimate_deficit_localized(mod, plan, 1.0, a);
    auto cb = estimate_deficit_localized(mod, plan, 1.0, b);
    ASSERT_EQ(ca.entries.size(), cb.entries.size());
    for (std::size_t i = 0; i < ca.entries.size(); ++i) {
        EXPECT_EQ(ca.entries[i].survival, cb.entries[i].survival);
        EXPECT_EQ(ca.entries[i].std_error, cb.entries[i].std_error);
    }
    EXPECT_EQ(ca.extrapolated_expectation, cb.extrapolated_expectation);
}

TEST(Mc, PathEngineIsPure) {
    auto a = path_engine(1, 2, 0);
    auto b = path_engine(1, 2, 0);
    auto c = path_engine(1, 2, 1);
    const auto va = a();
    EXPECT_EQ(va, b());
    EXPECT_NE(va, c());
}

TEST(Mc, ClassifyCurve) {
    DeficitCurve c;
    c.entries = {{1, 1, 0.9, 0.001}, {2, 1, 0.7, 0.001}};
    c.converged = true;
    c.extrapolated_expectation = 0.7;
    EXPECT_EQ(classify_curve(c), Classification::StrictLocal);
    c.extrapolated_expectation = 0.995;
    EXPECT_EQ(classify_curve(c), Classification::TrueMartingale);
    c.converged = false;
    EXPECT_EQ(classify_curve(c), Classification::Inconclusive);
}

TEST(Mc, EnsembleCsvHasOneRowPerPath) {
    auto spec = DiffusionSpec::scalar(Expr(), Expr::constant(1.0), 0.0);
    LocalizationPlan plan{{1, 2}, {1, 1}};
    EnsembleOptions o;
    o.plan = &plan;
    auto ens = simulate_ensemble(spec, ExponentSpec{{Expr::parse("x")}}, small(7), o);
    std::ostringstream out;
    write_ensemble_csv(out, ens, &plan);
    const auto text = out.str();
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 8);
}

TEST(Mc, ConfigValidation) {
    SimConfig c;
    c.n_paths = 0;
    EXPECT_THROW(validate(c), ValidationError);
    c = SimConfig{};
    c.dt_max = -1;
    EXPECT_THROW(validate(c), ValidationError);
}
