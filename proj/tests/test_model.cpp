#include "lmc/errors.hpp"
#include "lmc/model.hpp"
#include "lmc/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

using namespace lmc;

TEST(Model, ModifiedDriftAndQuadraticExponent) {
    auto spec = DiffusionSpec::scalar(Expr::constant(1.0), Expr::constant(2.0), 0.0);
    ExponentSpec exp{{Expr::parse("x")}};
    auto mod = modified_drift(spec, exp);
    auto q = quadratic_exponent(spec, exp);
    for (double x : {-2.0, 0.0, 0.5, 3.0}) {
        EXPECT_DOUBLE_EQ(mod.drift[0](0.0, x), 1.0 + 4.0 * x);
        EXPECT_DOUBLE_EQ(mod.sigma(0, 0)(0.0, x), 2.0);
        EXPECT_DOUBLE_EQ(q(0.0, x), 4.0 * x * x);
    }
}

TEST(Model, QuadraticExponentTwoDimensional) {
    DiffusionSpec spec;
    spec.interval = {Interval{}, Interval{}};
    spec.drift = {Expr(), Expr()};
    spec.dispersion = {Expr::constant(1.0), Expr::constant(0.0), Expr::constant(1.0), Expr::constant(1.0)};
    spec.x0 = {0.0, 0.0};
    ExponentSpec exp{{Expr::parse("x1"), Expr::parse("x2")}};
    auto q = quadratic_exponent(spec, exp);
    // c = [[1,1],[1,2]], q = b1^2 + 2 b1 b2 + 2 b2^2
    std::vector<double> p{1.5, -0.5};
    EXPECT_NEAR(q(0.0, p), 1.5 * 1.5 + 2 * 1.5 * -0.5 + 2 * 0.25, 1e-14);
}

TEST(Model, RhoLevel) {
    LocalizationPlan plan{{1.0, 2.0, 4.0}, {1.0, 1.0, 2.0}};
    auto r = rho_level(plan, 3);
    EXPECT_EQ(r.index, 3u);
    EXPECT_EQ(r.level, 4.0);
    EXPECT_EQ(r.cap, 2.0);
    EXPECT_THROW((void)rho_level(plan, 0), IndexOutOfRange);
    EXPECT_THROW((void)rho_level(plan, 4), IndexOutOfRange);
}

TEST(Model, PlanValidation) {
    EXPECT_NO_THROW(validate(LocalizationPlan{{1, 2}, {1, 1}}));
    EXPECT_THROW(validate(LocalizationPlan{{1}, {1}}), ValidationError);
    EXPECT_THROW(validate(LocalizationPlan{{2, 1}, {1, 1}}), ValidationError);
    EXPECT_THROW(validate(LocalizationPlan{{1, 2}, {2, 1}}), ValidationError);
    EXPECT_THROW(validate(LocalizationPlan{{1, 2}, {1}}), DimensionMismatch);
    EXPECT_THROW(validate(LocalizationPlan{{0, 2}, {1, 1}}), ValidationError);
}

TEST(Model, SpecValidation) {
    EXPECT_NO_THROW(validate(DiffusionSpec::scalar(Expr(), Expr::constant(1), 0.5, {0.0, 1.0})));
    EXPECT_THROW(validate(DiffusionSpec::scalar(Expr(), Expr::constant(1), 2.0, {0.0, 1.0})), ValidationError);
    auto bad = DiffusionSpec::scalar(Expr(), Expr::constant(1), 0.0);
    bad.x0 = {0.0, 0.0};
    EXPECT_THROW(validate(bad), DimensionMismatch);
}

TEST(Model, GaugeAndBarriers) {
    auto spec = DiffusionSpec::scalar(Expr(), Expr::constant(1), 1.0, {0.0, kInf});
    std::vector<double> x{0.25};
    EXPECT_DOUBLE_EQ(spec.gauge(x), 4.0);
    x = {3.0};
    EXPECT_DOUBLE_EQ(spec.gauge(x), 3.0);
    x = {-1.0};
    EXPECT_TRUE(std::isinf(spec.gauge(x)));
    for (double m : {2.0, 8.0}) {
        std::vector<double> lo{spec.lower_barrier(m)};
        std::vector<double> hi{spec.upper_barrier(m)};
        EXPECT_NEAR(spec.gauge(lo), m, 1e-12);
        EXPECT_NEAR(spec.gauge(hi), m, 1e-12);
    }
}

TEST(Model, PositiveDefinite) {
    std::vector<double> a{2, 1, 1, 2};
    std::vector<double> b{1, 2, 2, 1};
    std::vector<double> z{0, 0, 0, 1};
    EXPECT_TRUE(is_positive_definite(a, 2));
    EXPECT_FALSE(is_positive_definite(b, 2));
    EXPECT_FALSE(is_positive_definite(z, 2));
}

TEST(Model, GridCheckFlagsDegenerateDispersion) {
    auto spec = DiffusionSpec::scalar(Expr(), Expr::parse("x"), 1.0);
    auto g = check_coefficients(spec, ExponentSpec{{Expr()}}, 4.0, 1.0);
    EXPECT_FALSE(g.qv_positive);
    EXPECT_FALSE(g.notes.empty());
    auto ok = check_coefficients(DiffusionSpec::scalar(Expr(), Expr::constant(1), 0.0), ExponentSpec{{Expr()}}, 4.0,
                                 1.0);
    EXPECT_TRUE(ok.qv_positive);
    EXPECT_TRUE(ok.coefficients_finite);
}

TEST(Quadrature, ClosedForms) {
    EXPECT_NEAR(integrate([](double x) { return x * x; }, 0.0, 1.0).value, 1.0 / 3.0, 1e-12);
    EXPECT_NEAR(integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi).value, 2.0, 1e-10);
    EXPECT_NEAR(integrate([](double x) { return std::exp(-x * x); }, -8.0, 8.0).value, std::sqrt(std::numbers::pi),
                1e-9);
    EXPECT_NEAR(integrate([](double x) { return x; }, 1.0, 0.0).value, -0.5, 1e-12);
    EXPECT_NEAR(integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0).value, 2.0, 1e-6);
    EXPECT_NEAR(gauss_legendre([](double x) { return x * x * x; }, 0.0, 2.0), 4.0, 1e-12);
}

TEST(Quadrature, NonFiniteIntegrandThrows) {
    EXPECT_THROW((void)integrate([](double) { return std::nan(""); }, 0.0, 1.0), QuadratureFailure);
}
