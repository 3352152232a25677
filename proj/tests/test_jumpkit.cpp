#include "lmc/errors.hpp"
#include "lmc/jumpkit.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace lmc;

namespace {

DiscreteLaw unit() { return {{1.0}, {1.0}}; }

JumpTriplet still_base() {
    JumpTriplet t;
    t.base = DiffusionSpec::scalar(Expr(), Expr(), 0.0);
    return t;
}

JumpTriplet atom_triplet(double mass) {
    auto t = still_base();
    t.atoms = {{0.5, mass, unit()}};
    return t;
}

JumpTriplet poisson(double rate) {
    JumpTriplet t;
    t.base = DiffusionSpec::scalar(Expr(), Expr::constant(1.0), 0.0);
    t.rate = rate;
    t.jump_law = unit();
    return t;
}

std::vector<double> grid(int n, double t) {
    std::vector<double> g;
    for (int k = 0; k <= n; ++k) g.push_back(t * k / n);
    return g;
}

SimConfig cfg(std::size_t n) {
    SimConfig c;
    c.n_paths = n;
    c.threads = 1;
    return c;
}

}  // namespace

TEST(Jumpkit, UhatAndUprime) {
    auto trip = atom_triplet(0.5);
    GirsanovData gd{Expr(), Expr::constant(1.5)};
    EXPECT_DOUBLE_EQ(compute_Uhat(trip, gd, 0.5), 0.75);
    EXPECT_DOUBLE_EQ(compute_Uhat(trip, gd, 0.3), 0.0);
    // U - 1 + (U-hat - a) / (1 - a)
    EXPECT_DOUBLE_EQ(compute_Uprime(gd, trip, 0.5, 1.0), 0.5 + 0.25 / 0.5);
    EXPECT_DOUBLE_EQ(compute_Uprime(gd, trip, 0.3, 1.0), 0.5);
    EXPECT_NO_THROW(validate(trip, gd));
}

TEST(Jumpkit, UhatOneWithPartialMassRejected) {
    auto trip = atom_triplet(0.5);
    EXPECT_THROW(validate(trip, GirsanovData{Expr(), Expr::constant(2.0)}), ValidationError);
    EXPECT_THROW(validate(trip, GirsanovData{Expr(), Expr::constant(3.0)}), ValidationError);
    EXPECT_THROW(validate(poisson(1.0), GirsanovData{Expr(), Expr::constant(0.0)}), ValidationError);
}

TEST(Jumpkit, FullMassAtom) {
    auto trip = atom_triplet(1.0);
    EXPECT_NO_THROW(validate(trip, GirsanovData{Expr(), Expr::constant(1.0)}));
    EXPECT_THROW(validate(trip, GirsanovData{Expr(), Expr::constant(0.5)}), ValidationError);
    // 0/0 = 0 in U'
    EXPECT_DOUBLE_EQ(compute_Uprime(GirsanovData{Expr(), Expr::constant(1.0)}, trip, 0.5, 1.0), 0.0);
}

TEST(Jumpkit, AtomIncrementMatchesAffinityForm) {
    auto trip = atom_triplet(0.5);
    GirsanovData gd{Expr(), Expr::constant(1.5)};
    const double a = 0.5, u = 1.5, uhat = 0.75;
    const double affinity = 2.0 * (1.0 - a * std::sqrt(u) - std::sqrt((1 - a) * (1 - uhat)));
    EXPECT_NEAR(atom_R_increment(trip, gd, 0), affinity, 1e-14);
}

TEST(Jumpkit, RContinuousPart) {
    auto trip = poisson(0.0);
    const double k = 1.7;
    auto h = compute_R(trip, GirsanovData{Expr::constant(k), Expr::constant(1.0)}, grid(10, 2.0));
    for (std::size_t i = 0; i < h.times.size(); ++i) EXPECT_NEAR(h.R[i], k * k * h.times[i], 1e-12);
}

TEST(Jumpkit, RPoissonPart) {
    auto h = compute_R(poisson(1.0), GirsanovData{Expr(), Expr::constant(4.0)}, grid(8, 1.0));
    for (std::size_t i = 0; i < h.times.size(); ++i) EXPECT_NEAR(h.R[i], h.times[i], 1e-12);
}

TEST(Jumpkit, RAtomsAddAtTheirTimes) {
    auto trip = atom_triplet(0.5);
    GirsanovData gd{Expr(), Expr::constant(1.5)};
    auto h = compute_R(trip, gd, grid(4, 1.0));
    const double inc = atom_R_increment(trip, gd, 0);
    EXPECT_EQ(h.R[1], 0.0);
    EXPECT_NEAR(h.R[2], inc, 1e-14);
    EXPECT_NEAR(h.R.back(), inc, 1e-14);
}

TEST(Jumpkit, StoppedMeanIsOne) {
    auto trip = poisson(1.0);
    trip.base = DiffusionSpec::scalar(Expr(), Expr(), 0.0);
    LocalizationPlan plan{{1.0, 2.0}, {1.0, 1.0}};
    auto m = jump_stopped_means(trip, GirsanovData{Expr(), Expr::constant(2.0)}, plan, 1.0, cfg(20000));
    ASSERT_EQ(m.size(), 2u);
    EXPECT_NEAR(m[0].mean, 1.0, 4 * m[0].std_error);
}

TEST(Jumpkit, JumpsOfNStayAboveMinusOne) {
    auto trip = poisson(2.0);
    trip.jump_law = {{1.0, -0.5}, {0.5, 0.5}};
    GirsanovData gd{Expr::parse("x"), Expr::parse("exp(-x)")};
    for (std::size_t i = 0; i < 50; ++i) {
        auto p = simulate_jump_exponential(trip, gd, cfg(50), i);
        EXPECT_GT(p.min_jump_n, -1.0);
        for (double z : p.z) EXPECT_GT(z, 0.0);
    }
}

TEST(Jumpkit, CompensatorIdentity) {
    auto trip = poisson(1.0);
    auto r = verify_compensator_identity(trip, GirsanovData{Expr::constant(0.5), Expr::constant(4.0)}, cfg(4000),
                                         1.0, 2.0);
    EXPECT_TRUE(r.pass) << r.difference << " +- " << r.std_error;
    EXPECT_NEAR(r.difference, 0.0, 4 * r.std_error + 1e-12);
}

TEST(Jumpkit, VerdictWithoutJumpsMatchesDiffusion) {
    auto trip = poisson(0.0);
    LocalizationPlan plan{{1, 2, 4, 8, 16, 32, 64}, {1, 1, 1, 1, 1, 1, 1}};
    auto v = verdict_jump(trip, GirsanovData{Expr::parse("x"), Expr::constant(1.0)}, 1.0, plan, cfg(4000));
    EXPECT_EQ(v.classification, Classification::TrueMartingale);
}
