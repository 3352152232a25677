#include "lmc/errors.hpp"
#include "lmc/expr.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <thread>
#include <vector>

using lmc::Expr;

TEST(Expr, Arithmetic) {
    EXPECT_DOUBLE_EQ(Expr::parse("x^3")(0.0, 2.0), 8.0);
    EXPECT_DOUBLE_EQ(Expr::parse("2*t + exp(0*x)")(1.0, 5.0), 3.0);
    EXPECT_DOUBLE_EQ(Expr::parse("sqrt(x)")(0.0, 4.0), 2.0);
    EXPECT_DOUBLE_EQ(Expr::parse("min(x, 3)")(0.0, 10.0), 3.0);
    EXPECT_DOUBLE_EQ(Expr::parse("max(x, 3)")(0.0, 10.0), 10.0);
    EXPECT_DOUBLE_EQ(Expr::parse("abs(-x)")(0.0, 2.5), 2.5);
}

TEST(Expr, Precedence) {
    EXPECT_DOUBLE_EQ(Expr::parse("2^3^2")(0, 0), 512.0);  // right-associative
    EXPECT_DOUBLE_EQ(Expr::parse("-2^2")(0, 0), -4.0);    // ^ binds tighter than unary minus
    EXPECT_DOUBLE_EQ(Expr::parse("1 + 2 * 3")(0, 0), 7.0);
    EXPECT_DOUBLE_EQ(Expr::parse("(1 + 2) * 3")(0, 0), 9.0);
    EXPECT_DOUBLE_EQ(Expr::parse("8 / 4 / 2")(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(Expr::parse("1 - 2 - 3")(0, 0), -4.0);
}

TEST(Expr, SyntaxErrorPosition) {
    try {
        (void)Expr::parse("x +");
        FAIL() << "expected SyntaxError";
    } catch (const lmc::SyntaxError& e) {
        EXPECT_EQ(e.position(), 3u);
        EXPECT_FALSE(e.expected().empty());
    }
    EXPECT_THROW((void)Expr::parse("(x"), lmc::SyntaxError);
    EXPECT_THROW((void)Expr::parse("x y"), lmc::SyntaxError);
    EXPECT_THROW((void)Expr::parse(""), lmc::SyntaxError);
}

TEST(Expr, UnknownIdentifier) {
    EXPECT_THROW((void)Expr::parse("y + 1"), lmc::UnknownIdentifier);
    EXPECT_THROW((void)Expr::parse("foo(x)"), lmc::UnknownIdentifier);
    EXPECT_THROW((void)Expr::parse("x0"), lmc::UnknownIdentifier);
}

TEST(Expr, DomainErrorsAreInBand) {
    auto e = Expr::parse("1/x");
    EXPECT_TRUE(std::isinf(e(0.0, 0.0)));
    EXPECT_THROW((void)e.eval_checked(0.0, 0.0), lmc::EvalDomain);
    EXPECT_TRUE(std::isnan(Expr::parse("log(x)")(0.0, -1.0)));
}

TEST(Expr, Coordinates) {
    auto e = Expr::parse("x1 * x2 + x3");
    std::vector<double> v{2.0, 3.0, 4.0};
    EXPECT_DOUBLE_EQ(e(0.0, v), 10.0);
    EXPECT_EQ(e.max_coordinate(), 3);
    EXPECT_EQ(Expr::parse("x")(0.0, std::vector<double>{7.0, 1.0}), 7.0);
    EXPECT_EQ(Expr::parse("t + 1").max_coordinate(), 0);
}

TEST(Expr, RenderRoundTrip) {
    for (const char* s : {"x^3", "-x + 2*t", "exp(-x^2/2) / sqrt(2)", "min(x, max(t, 1))", "1/x - 3"}) {
        auto e = Expr::parse(s);
        auto r = Expr::parse(e.render());
        for (double x : {-1.5, 0.3, 2.0}) {
            for (double t : {0.0, 0.7}) {
                const double a = e(t, x);
                const double b = r(t, x);
                if (std::isnan(a)) EXPECT_TRUE(std::isnan(b));
                else EXPECT_EQ(a, b) << s;
            }
        }
    }
}

TEST(Expr, Queries) {
    EXPECT_TRUE(Expr::parse("t*x").depends_on_time());
    EXPECT_FALSE(Expr::parse("x^2").depends_on_time());
    EXPECT_TRUE(Expr().is_zero());
    EXPECT_EQ(Expr::parse("6").constant_value().value_or(0.0), 6.0);
    EXPECT_FALSE(Expr::parse("x").constant_value().has_value());
}

TEST(Expr, Builders) {
    auto x = Expr::variable("x");
    auto e = pow(x, Expr::constant(2)) + Expr::constant(1);
    EXPECT_DOUBLE_EQ(e(0.0, 3.0), 10.0);
    EXPECT_DOUBLE_EQ(Expr::call("min", {x, Expr::constant(1)})(0.0, 5.0), 1.0);
}

TEST(Expr, ConcurrentEvaluation) {
    auto e = Expr::parse("sin(x) * exp(-t) + x^2");
    std::vector<double> out(8, 0.0);
    std::vector<std::thread> pool;
    for (int k = 0; k < 8; ++k) {
        pool.emplace_back([&, k] {
            double s = 0.0;
            for (int i = 0; i < 10000; ++i) s += e(0.5, i * 1e-3);
            out[k] = s;
        });
    }
    for (auto& th : pool) th.join();
    for (double v : out) EXPECT_EQ(v, out[0]);
}
