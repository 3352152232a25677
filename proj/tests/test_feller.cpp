#include "lmc/errors.hpp"
#include "lmc/feller.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace lmc;

namespace {

// v(+inf) for dX = X^3 dt + dW from 0, by integrating I' = 1 - 2 y^3 I with RK4,
// where I(y) = s'(y) int_0^y 1/s'; v = 2 int I. The tail beyond Y uses I ~ 1/(2y^3) + 3/(4y^7).
double cubic_v_oracle() {
    const double Y = 10.0;
    const int n = 200000;
    const double h = Y / n;
    auto f = [](double y, double i) { return 1.0 - 2.0 * y * y * y * i; };
    double y = 0.0, I = 0.0, area = 0.0;
    for (int k = 0; k < n; ++k) {
        const double k1 = f(y, I);
        const double k2 = f(y + h / 2, I + h / 2 * k1);
        const double k3 = f(y + h / 2, I + h / 2 * k2);
        const double k4 = f(y + h, I + h * k3);
        const double next = I + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        area += h / 2 * (I + next);
        I = next;
        y += h;
    }
    const double tail = 1.0 / (4 * Y * Y) + 1.0 / (8 * std::pow(Y, 6));
    return 2.0 * (area + tail);
}

}  // namespace

TEST(Feller, ScaleDensity) {
    auto spec = DiffusionSpec::scalar(Expr::parse("x"), Expr::constant(1.0), 0.0);
    for (double x : {-1.0, 0.5, 2.0}) EXPECT_NEAR(scale_density(spec, x, 0.0), std::exp(-x * x), 1e-9);
    auto scaled = DiffusionSpec::scalar(Expr::constant(1.0), Expr::constant(2.0), 0.0);
    // 2b/c = 1/2
    EXPECT_NEAR(scale_density(scaled, 3.0, 1.0), std::exp(-1.0), 1e-9);
}

TEST(Feller, BrownianBothEndsInfinite) {
    auto spec = DiffusionSpec::scalar(Expr(), Expr::constant(1.0), 0.0);
    auto r = classify_explosion(spec);
    EXPECT_EQ(r.left.status, EndpointIntegral::Status::Infinite);
    EXPECT_EQ(r.right.status, EndpointIntegral::Status::Infinite);
    EXPECT_EQ(r.conclusion, FellerReport::Conclusion::NonExplosive);
}

TEST(Feller, LinearDriftLogDivergence) {
    auto spec = DiffusionSpec::scalar(Expr::parse("x"), Expr::constant(1.0), 0.0);
    auto v = feller_v(spec, Endpoint::Right, 0.0);
    EXPECT_EQ(v.status, EndpointIntegral::Status::Infinite);
}

TEST(Feller, CubicRightEndFiniteMatchesOde) {
    auto spec = DiffusionSpec::scalar(Expr::parse("x^3"), Expr::constant(1.0), 0.0);
    auto v = feller_v(spec, Endpoint::Right, 0.0);
    ASSERT_EQ(v.status, EndpointIntegral::Status::Finite) << v.reason;
    const double oracle = cubic_v_oracle();
    EXPECT_NEAR(v.value, oracle, 1e-3 * oracle);
    EXPECT_EQ(classify_explosion(spec).conclusion, FellerReport::Conclusion::Explosive);
}

TEST(Feller, VerdictLinearIsTrueMartingale) {
    auto spec = DiffusionSpec::scalar(Expr(), Expr::constant(1.0), 0.0);
    auto v = martingale_verdict(spec, ExponentSpec{{Expr::parse("x")}});
    EXPECT_EQ(v.classification, Classification::TrueMartingale);
    ASSERT_TRUE(v.feller_modified.has_value());
    EXPECT_EQ(v.feller_modified->conclusion, FellerReport::Conclusion::NonExplosive);
}

TEST(Feller, VerdictCubicIsStrictLocal) {
    auto spec = DiffusionSpec::scalar(Expr(), Expr::constant(1.0), 0.0);
    auto v = martingale_verdict(spec, ExponentSpec{{Expr::parse("x^3")}});
    EXPECT_EQ(v.classification, Classification::StrictLocal);
}

TEST(Feller, VerdictRejectsInhomogeneous) {
    auto spec = DiffusionSpec::scalar(Expr::parse("t*x"), Expr::constant(1.0), 0.0);
    EXPECT_THROW((void)martingale_verdict(spec, ExponentSpec{{Expr()}}), PreconditionViolated);
}

TEST(Feller, DegenerateGridGatesVerdict) {
    auto spec = DiffusionSpec::scalar(Expr(), Expr::parse("x"), 1.0);
    EXPECT_THROW((void)martingale_verdict(spec, ExponentSpec{{Expr()}}), PreconditionViolated);
}
