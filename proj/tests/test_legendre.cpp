#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rpf/legendre.hpp"

using namespace rpf;

namespace {

// O(N^2) reference for min_j (q a_j - b_j).
std::vector<double> brute_conjugate(const std::vector<double>& a, const std::vector<double>& b,
                                    const std::vector<double>& qs) {
    std::vector<double> out;
    for (double q : qs) {
        double m = INFINITY;
        for (std::size_t j = 0; j < a.size(); ++j) m = std::min(m, q * a[j] - b[j]);
        out.push_back(m);
    }
    return out;
}

// Smallest concave majorant at the sample points, by checking every chord.
std::vector<double> brute_hull(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> out(y);
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t a = 0; a <= i; ++a)
            for (std::size_t b = i; b < x.size(); ++b) {
                if (a == b) continue;
                double t = (x[i] - x[a]) / (x[b] - x[a]);
                out[i] = std::max(out[i], (1.0 - t) * y[a] + t * y[b]);
            }
    return out;
}

}  // namespace

TEST(Conjugate, FastMatchesBruteForce) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> a(300), b(300), q(200);
        double x = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            x += 0.01 + U(rng);
            a[i] = x;
            b[i] = std::sqrt(x) + 0.3 * U(rng);
        }
        double p = 0.0;
        for (double& v : q) v = (p += 0.02 * U(rng));
        auto fast = concave_conjugate(a, b, q);
        auto slow = brute_conjugate(a, b, q);
        for (std::size_t i = 0; i < q.size(); ++i) EXPECT_NEAR(fast[i], slow[i], 1e-12);
    }
}

TEST(Hull, UpperHullMatchesChordOracle) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<double> x(120), y(120);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = static_cast<double>(i) + 0.5 * U(rng);
        y[i] = std::log1p(x[i]) + 0.5 * U(rng);
    }
    auto hv = hull_values(x, y, upper_hull(x, y));
    auto ref = brute_hull(x, y);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(hv[i], ref[i], 1e-12);
}

TEST(Hull, CollinearPointsDropped) {
    std::vector<double> x = {0, 1, 2, 3}, y = {0, 1, 2, 3};
    auto h = upper_hull(x, y);
    EXPECT_EQ(h, (std::vector<std::size_t>{0, 3}));
}

TEST(Envelope, ConcaveDataIsReproduced) {
    std::vector<double> y = {0.0}, t = {0.0};
    for (int i = 0; i < 2000; ++i) {
        double v = std::exp(std::log(1e-10) + std::log(1e9) * i / 1999.0);
        y.push_back(v);
        t.push_back(std::sqrt(v));
    }
    auto r = concave_envelope(y, t, 2000);
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(r.Omega_grid[i], t[i], 1e-6);
    EXPECT_LT(r.hull_gap, 1e-6);
    EXPECT_NEAR(r.max_theta1_star, 0.0, 1e-12);
}

TEST(Envelope, NonConcaveDataGetsItsHull) {
    std::vector<double> y = {0.0, 0.1, 0.2, 0.3, 0.4}, t = {0.0, 0.05, 0.4, 0.41, 0.42};
    auto r = concave_envelope(y, t, 4000);
    auto ref = brute_hull(y, t);
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(r.Omega_grid[i], ref[i], 1e-3);
    EXPECT_GE(r.Omega_grid[1], t[1]);
    EXPECT_THROW(concave_envelope({0.1, 0.2, 0.3}, {0.0, 0.1, 0.2}, 10), InvalidParameters);
}

TEST(BuildOmega, PowerCaseReproducesShiftedExponent) {
    auto T = CircleMap::manneville_pomeau(0.5);
    auto w = omega_ab(0.75, 0.0);
    auto r = build_omega_legendre(T, w, w.window(), 4000);
    auto target = omega_ab(0.25, 0.0);
    double worst = 0.0;
    for (int i = 0; i < 500; ++i) {
        double x = std::exp(std::log(1e-8) + std::log(w.window() / 1e-8) * i / 499.0);
        worst = std::max(worst, std::fabs(r.Omega(x) - target(x)));
    }
    EXPECT_LT(worst, 1e-4);
    EXPECT_EQ(r.Omega(0.0), 0.0);
    EXPECT_EQ(r.Omega.provenance().kind, ModulusKind::legendre_built);
    // theta1 is the running max of theta0
    for (std::size_t i = 1; i < r.theta1.size(); ++i) EXPECT_GE(r.theta1[i], r.theta0[i]);
}

TEST(BuildOmega, Preconditions) {
    auto T = CircleMap::manneville_pomeau(0.5);
    auto w = omega_ab(0.75, 0.0);
    EXPECT_THROW(build_omega_legendre(T, w, 0.1, 999), InvalidParameters);
    EXPECT_THROW(build_omega_legendre(T, w, -1.0, 2000), InvalidParameters);
    auto flat = CircleMap(VaryingFunction::custom([](double x) { return x < 0.5 ? 0.0 : 2.0 * x - 1.0; }, 1.0));
    EXPECT_THROW(build_omega_legendre(flat, w, 0.1, 2000), DivisionError);
}
