#include "lmc/errors.hpp"
#include "lmc/hilbert.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace lmc;

namespace {

SimConfig cfg(std::size_t n) {
    SimConfig c;
    c.n_paths = n;
    c.dt_max = 1e-2;
    c.threads = 1;
    return c;
}

PathRecord ramp(double slope, std::size_t modes, int steps) {
    PathRecord p;
    p.dim = modes;
    for (int j = 0; j <= steps; ++j) {
        const double t = static_cast<double>(j) / steps;
        p.times.push_back(t);
        for (std::size_t k = 0; k < modes; ++k) p.states.push_back(k == 0 ? slope * t : 0.0);
    }
    return p;
}

}  // namespace

TEST(Hilbert, CovarianceValidation) {
    EXPECT_NO_THROW(validate(CovarianceSpec{{1.0, 0.5}}));
    EXPECT_THROW(validate(CovarianceSpec{{}}), ValidationError);
    EXPECT_THROW(validate(CovarianceSpec{{0.5, 1.0}}), ValidationError);
    EXPECT_THROW(validate(CovarianceSpec{{1.0, 0.0}}), ValidationError);
}

TEST(Hilbert, RunningSupMatchesLoop) {
    CovarianceSpec cov{{1.0, 0.5, 0.25}};
    auto phi = running_sup_of_mode(3, 1);
    auto path = simulate_q_brownian(cov, cfg(4), 3);
    auto v = evaluate_functional(phi, path);
    ASSERT_EQ(v.size(), path.times.size() * 3);
    double sup = path.state(0)[1];
    for (std::size_t j = 0; j < path.times.size(); ++j) {
        if (j > 0) sup = std::max(sup, path.state(j - 1)[1]);
        EXPECT_EQ(v[j * 3 + 1], sup);
        EXPECT_EQ(v[j * 3 + 0], 0.0);
        EXPECT_EQ(v[j * 3 + 2], 0.0);
    }
    EXPECT_THROW((void)running_sup_of_mode(3, 3), IndexOutOfRange);
}

TEST(Hilbert, ModeVariances) {
    CovarianceSpec cov{{1.0, 0.25}};
    auto m = mode_moments(cov, 1.0, cfg(20000));
    for (std::size_t k = 0; k < 2; ++k) {
        EXPECT_NEAR(m.variance_ratio[k], cov.eigenvalues[k], 4 * m.variance_se[k]);
    }
    EXPECT_NEAR(m.cross_covariance[0], 0.0, 4 * m.cross_se[0]);
}

TEST(Hilbert, GrowthConstantGrowsForQuadraticFunctional) {
    CovarianceSpec cov{{1.0, 0.5}};
    FunctionalSpec phi;
    phi.kind = FunctionalSpec::Kind::Pointwise;
    phi.pointwise = {Expr::parse("x1^2"), Expr()};
    double last = 0.0;
    for (double m : {1.0, 4.0, 16.0}) {
        std::vector<PathRecord> paths{ramp(m, 2, 50), ramp(m * 0.9, 2, 50)};
        auto r = check_conditions(phi, cov, paths);
        EXPECT_GT(r.growth_hat, last);
        last = r.growth_hat;
    }
    // m^4 / (1 + m^2) at the largest ramp
    EXPECT_NEAR(last, std::pow(16.0, 4) / (1 + 256.0), 1e-6 * last);
}

TEST(Hilbert, ZeroFunctionalGivesUnitExponential) {
    CovarianceSpec cov{{1.0}};
    FunctionalSpec phi;
    phi.kind = FunctionalSpec::Kind::Pointwise;
    phi.pointwise = {Expr()};
    LocalizationPlan plan{{2, 4, 8}, {1, 1, 1}};
    auto e = estimate_hilbert_expectation(phi, cov, 1.0, plan, cfg(200));
    EXPECT_EQ(e.direct.mean, 1.0);
    EXPECT_EQ(e.direct.std_error, 0.0);
}

TEST(Hilbert, WarnsWhenPhiAtZeroMovesInTime) {
    CovarianceSpec cov{{1.0}};
    FunctionalSpec phi;
    phi.kind = FunctionalSpec::Kind::Pointwise;
    phi.pointwise = {Expr::parse("t + x1")};
    EXPECT_EQ(validate(phi, cov).size(), 1u);
    phi.pointwise = {Expr::parse("1 + x1")};
    EXPECT_TRUE(validate(phi, cov).empty());
    phi.pointwise = {Expr::parse("x2")};
    EXPECT_THROW((void)validate(phi, cov), DimensionMismatch);
}

TEST(Hilbert, RunningSupExpectationIsOne) {
    CovarianceSpec cov{{1.0}};
    auto phi = running_sup_of_mode(1, 0);
    phi.claimed_lipschitz = 1.0;
    phi.claimed_growth = 1.0;
    LocalizationPlan plan{{2, 4, 8, 16}, {1, 1, 1, 1}};
    auto e = estimate_hilbert_expectation(phi, cov, 1.0, plan, cfg(10000));
    EXPECT_NEAR(e.direct.mean, 1.0, 4 * e.direct.std_error);
    EXPECT_TRUE(e.conditions.pass());
    EXPECT_LE(e.conditions.lipschitz_hat, 1.0 + 1e-12);
}
