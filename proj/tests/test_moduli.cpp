#include <gtest/gtest.h>

#include <cmath>

#include "rpf/moduli.hpp"

using namespace rpf;

namespace {

// Largest x* with x^a (log 1/x)^{-b} concave on (0, x*]: the second derivative carries the sign of
// a(a-1) L^2 + b(2a-1) L + b(b+1), L = log 1/x, which is negative beyond its larger root.
double analytic_threshold(double a, double b) {
    const double A = a * (a - 1.0), B = b * (2.0 * a - 1.0), C = b * (b + 1.0);
    const double disc = B * B - 4.0 * A * C;
    const double L = (-B - std::sqrt(disc)) / (2.0 * A);
    return std::exp(-L);
}

double dyadic_floor(double x) { return std::exp2(std::floor(std::log2(x))); }

}  // namespace

TEST(OmegaAB, ValuesAndWindow) {
    auto w = omega_ab(0.75, 0.0);
    EXPECT_DOUBLE_EQ(w.window(), std::exp(-2.0));
    EXPECT_DOUBLE_EQ(w(0.01), std::pow(0.01, 0.75));
    EXPECT_EQ(w(0.0), 0.0);
    EXPECT_EQ(w(-1.0), 0.0);
    EXPECT_DOUBLE_EQ(w(0.5), w(w.window()));
    EXPECT_THROW(omega_ab(1.0, 0.0), InvalidParameters);
    EXPECT_THROW(omega_ab(0.0, 0.0), InvalidParameters);
    EXPECT_THROW(omega_ab(0.5, -1.0), InvalidParameters);
}

TEST(OmegaAB, ConcavityThresholdMatchesAnalyticOracle) {
    for (auto [a, b] : {std::pair{0.9, 1.0}, {0.4, 1.0}, {0.5, 2.0}, {0.25, 0.5}, {0.75, 3.0}}) {
        const double expect = dyadic_floor(std::min(analytic_threshold(a, b), std::exp(-2.0)));
        EXPECT_DOUBLE_EQ(concavity_threshold(a, b), expect) << a << " " << b;
    }
    EXPECT_DOUBLE_EQ(concavity_threshold(0.9, 1.0), std::exp2(-16.0));
}

TEST(OmegaAB, MidpointConcavityOnWindow) {
    for (auto [a, b] : {std::pair{0.75, 0.0}, {0.4, 1.0}, {0.1, 2.0}}) {
        auto w = omega_ab(a, b);
        EXPECT_TRUE(midpoint_concave([&](double x) { return w(x); }, w.window()));
    }
    EXPECT_FALSE(midpoint_concave([](double x) { return x * x; }, 0.5));
}

TEST(IlogComposite, PairedModuli) {
    auto w = ilog_pair_omega(1);
    EXPECT_EQ(w.provenance().powers, (std::vector<double>{2.0, 2.0}));
    const double x = 1e-10, L = std::log(1e10);
    EXPECT_NEAR(w(x), std::pow(L, -2.0) * std::pow(std::log(L), -2.0), 1e-18);
    auto w2 = ilog_pair_omega(2);
    EXPECT_EQ(w2.provenance().powers, (std::vector<double>{1.0, 3.0}));
    auto W = ilog_pair_Omega();
    EXPECT_NEAR(W(x), 1.0 / std::log(L), 1e-15);
    EXPECT_GT(W.window(), 0.0);
    EXPECT_TRUE(midpoint_concave([&](double y) { return W(y); }, W.window()));
    EXPECT_THROW(ilog_composite({0.0, 0.0}), InvalidParameters);
    EXPECT_THROW(ilog_composite({}), InvalidParameters);
}

TEST(Compatibility, PowerCaseIsExactlyConstant) {
    auto T = CircleMap::manneville_pomeau(0.5);
    auto rep = check_compatibility(T, omega_ab(0.75, 0.0), omega_ab(0.25, 0.0), 0.1);
    const double closed = std::pow(1.1, 0.25) - 1.0;
    for (double v : rep.values) EXPECT_NEAR(v, closed, 1e-12);
    EXPECT_EQ(rep.verdict, Verdict::positive_evidence);
    EXPECT_NEAR(rep.C1, 0.5 * closed, 1e-12);
    EXPECT_NEAR(rep.grid.front(), 0.1, 1e-15);
    EXPECT_DOUBLE_EQ(rep.grid.back(), 1e-12);
    for (std::size_t i = 1; i < rep.grid.size(); ++i) EXPECT_LT(rep.grid[i], rep.grid[i - 1]);
}

TEST(Compatibility, IteratedLogCaseTendsToLog) {
    auto S = CircleMap::iterated_log(1, 1.0);
    auto rep = check_compatibility(S, ilog_pair_omega(1), ilog_pair_Omega(), 0.1);
    EXPECT_EQ(rep.verdict, Verdict::positive_evidence);
    EXPECT_NEAR(rep.liminf_estimate, std::log(1.1), 0.05 * std::log(1.1));
}

TEST(Compatibility, BoundaryVanishes) {
    auto T = CircleMap::manneville_pomeau(0.5);
    auto flat = custom_modulus([](double) { return 1.0; }, 0.1);
    auto rep = check_compatibility(T, omega_ab(0.5, 0.0), flat, 0.1);
    EXPECT_EQ(rep.verdict, Verdict::vanishing);
    EXPECT_EQ(rep.C1, 0.0);
}

TEST(Compatibility, TrendingToZeroVanishes) {
    // omega/V = x^{0.25}, Omega = x^{0.5}: the quotient behaves like x^{0.25}
    auto T = CircleMap::manneville_pomeau(0.5);
    auto rep = check_compatibility(T, omega_ab(0.75, 0.0), omega_ab(0.5, 0.0), 0.1);
    EXPECT_EQ(rep.verdict, Verdict::vanishing);
}

TEST(Compatibility, Preconditions) {
    auto T = CircleMap::manneville_pomeau(0.5);
    auto w = omega_ab(0.75, 0.0);
    EXPECT_THROW(check_compatibility(T, w, w, 0.2), InvalidParameters);
    EXPECT_THROW(check_compatibility(T, w, w, 0.0), InvalidParameters);
    auto tiny = custom_modulus([](double x) { return std::sqrt(x); }, 1e-13);
    EXPECT_THROW(check_compatibility(T, w, tiny, 0.1), WindowError);
    EXPECT_DOUBLE_EQ(default_c(T), 0.1);
    EXPECT_DOUBLE_EQ(default_c(CircleMap::manneville_pomeau(0.9)), std::min(0.1, std::exp2(-2.9)));
}

TEST(RatioCondition, PowerRatioTable) {
    auto T = CircleMap::manneville_pomeau(0.5);
    auto res = check_ratio_condition(T, omega_ab(0.75, 0.0), {1.5, 2.0}, 0.01);
    EXPECT_TRUE(res.holds);
    ASSERT_EQ(res.table.size(), 2u);
    EXPECT_NEAR(res.table[0].second, 1.10668192, 1e-8);
    EXPECT_NEAR(res.table[1].second, std::pow(2.0, 0.25), 1e-12);
    auto flat = check_ratio_condition(T, omega_ab(0.5, 0.0), {1.5}, 0.01);
    EXPECT_FALSE(flat.holds);
    EXPECT_THROW(check_ratio_condition(T, omega_ab(0.75, 0.0), {1.0}, 0.01), InvalidParameters);
}
