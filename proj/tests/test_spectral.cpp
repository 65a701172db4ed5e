#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "rpf/spectral.hpp"

using namespace rpf;

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

Potential cos_potential(std::size_t n, double amp, double shift = 0.0) {
    return make_potential(GridFunction::sample(n, [=](double x) { return amp * std::cos(two_pi * x) + shift; }),
                          omega_ab(0.75, 0.0));
}

// Root of x + x^{1.5} = v by Newton, for the reference operator below.
double newton_root(double v) {
    double x = 0.5;
    for (int i = 0; i < 100; ++i) x -= (x + std::pow(x, 1.5) - v) / (1.0 + 1.5 * std::sqrt(x));
    return x;
}

// L phi at node i for T_{0.5}, written out directly.
double reference_apply(const std::vector<double>& phi, const std::function<double(double)>& f, std::size_t i) {
    const std::size_t n = phi.size();
    const double z = static_cast<double>(i) / static_cast<double>(n);
    double s = 0.0;
    for (int k = 0; k < 2; ++k) {
        double y = newton_root(z + k);
        double u = y * static_cast<double>(n);
        auto j = static_cast<std::size_t>(u) % n;
        double t = u - std::floor(u);
        s += std::exp(f(y)) * ((1.0 - t) * phi[j] + t * phi[(j + 1) % n]);
    }
    return s;
}

}  // namespace

TEST(TransferOperator, MatchesReferenceImplementation) {
    const std::size_t n = 512;
    auto T = CircleMap::manneville_pomeau(0.5);
    auto f = cos_potential(n, 0.2);
    TransferOperator op(T, f, Mesh::uniform(n));
    std::vector<double> phi(n);
    for (std::size_t i = 0; i < n; ++i) phi[i] = std::sin(two_pi * 3.0 * i / n) + 2.0;
    auto out = op.apply(phi);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(out[i], reference_apply(phi, [&](double y) { return f(y); }, i), 1e-11);
}

TEST(TransferOperator, ConstantPotentialOnConstants) {
    auto T = CircleMap::manneville_pomeau(0.5);
    auto one = transfer_apply(T, constant_potential(256, 0.3), GridFunction(256, 1.0));
    for (double v : one.values()) EXPECT_NEAR(v, 2.0 * std::exp(0.3), 1e-13);
    EXPECT_THROW(transfer_apply(T, constant_potential(256, 0.0), GridFunction(128, 1.0)), DimensionError);
}

TEST(PowerIteration, ZeroPotentialGivesDegree) {
    auto T = CircleMap::manneville_pomeau(0.5);
    auto r = power_iterate(T, constant_potential(1024, 0.0), 1024);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.chi, 2.0, 1e-12);
    for (double v : r.h) EXPECT_NEAR(v, 1.0, 1e-12);
    EXPECT_THROW(power_iterate(T, constant_potential(128, 0.0), 128), InvalidParameters);
}

TEST(PowerIteration, GridDoublingAndRefinedMesh) {
    auto T = CircleMap::manneville_pomeau(0.5);
    auto a = power_iterate(T, cos_potential(2048, 0.2), 2048);
    auto b = power_iterate(T, cos_potential(4096, 0.2), 4096);
    EXPECT_NEAR(a.chi, b.chi, 1e-3 * b.chi);
    auto f = cos_potential(2048, 0.2);
    auto c = power_iterate(TransferOperator(T, f, Mesh::refined(2048, 6)));
    EXPECT_NEAR(c.chi, b.chi, 1e-3 * b.chi);
}

TEST(Mesh, RefinedIsSortedAndInterpolatesLinearFunctions) {
    auto m = Mesh::refined(64, 4);
    EXPECT_EQ(m.size(), 32u * 6u);
    for (std::size_t i = 1; i < m.size(); ++i) EXPECT_LT(m[i - 1], m[i]);
    std::vector<double> v(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) v[i] = std::cos(two_pi * m[i]);
    for (double x : {0.001, 0.02, 0.3, 0.77}) EXPECT_NEAR(m.interpolate(v, x), std::cos(two_pi * x), 2e-3);
    EXPECT_THROW(Mesh::refined(63, 2), InvalidParameters);
}

TEST(Spectral, ConstantShiftCovariance) {
    auto T = CircleMap::manneville_pomeau(0.5);
    auto base = solve_spectral(T, cos_potential(1024, 0.2));
    for (double c : {-1.0, 0.5}) {
        auto sh = solve_spectral(T, cos_potential(1024, 0.2, c));
        EXPECT_NEAR(sh.chi / base.chi, std::exp(c), 1e-8 * std::exp(c));
        EXPECT_LT(sup_distance(sh.h.values(), base.h.values()), 1e-6);
        EXPECT_LT(tv_distance(sh.mu.weights(), base.mu.weights()), 1e-6);
    }
}

TEST(Spectral, EigendataConsistency) {
    auto T = CircleMap::manneville_pomeau(0.5);
    auto f = cos_potential(2048, 0.2);
    auto d = solve_spectral(T, f);
    EXPECT_TRUE(d.converged);
    EXPECT_LT(d.eigen_residual, 1e-9);
    EXPECT_GT(d.h.min(), 0.0);
    EXPECT_NEAR(integrate(d.h, d.nu), 1.0, 1e-12);
    EXPECT_NEAR(d.mu.total(), 1.0, 1e-14);
    EXPECT_LT(d.dual_residual, 1e-8);
    EXPECT_LT(d.normalized_defect, 1e-4);
    EXPECT_TRUE(d.ulam_converged);
    EXPECT_GT(d.spectral_gap_est, 0.0);
    EXPECT_LT(d.spectral_gap_est, 1.0);
    // mu_j = h_j nu_j up to the normalization
    for (std::size_t i = 0; i < 2048; i += 97) EXPECT_NEAR(d.mu[i], d.h[i] * d.nu[i], 1e-12);
}

TEST(Spectral, InvariantMeasureStableUnderRefinement) {
    auto T = CircleMap::manneville_pomeau(0.5);
    auto a = solve_spectral(T, cos_potential(2048, 0.2));
    auto b = solve_spectral(T, cos_potential(4096, 0.2));
    double worst = 0.0;
    for (int k = 1; k < 64; ++k) worst = std::max(worst, std::fabs(a.mu.cdf(k / 64.0) - b.mu.cdf(k / 64.0)));
    EXPECT_LT(worst, 5e-3);
    EXPECT_LT(b.invariance_residual, a.invariance_residual);
    EXPECT_LT(b.weak_invariance_residual, a.weak_invariance_residual);
    EXPECT_LT(b.weak_invariance_residual, 1e-5);
}

TEST(Ulam, PreconditionAndAgreementWithSimilarityChain) {
    auto T = CircleMap::manneville_pomeau(0.5);
    EXPECT_THROW(ulam_invariant_measure(T, GridFunction(512, 0.0), 512), DomainError);
    auto f = cos_potential(1024, 0.2);
    auto d = solve_spectral(T, f);
    auto ft = normalized_potential(T, f, d.h, d.chi);
    auto u = ulam_invariant_measure(T, ft, 1024);
    EXPECT_TRUE(u.converged);
    EXPECT_LT(tv_distance(u.mu.weights(), d.mu.weights()), 1e-3);
}

TEST(Convergence, DeflatedAndLiteralAgreeBeforeTheFloor) {
    auto T = CircleMap::manneville_pomeau(0.5);
    auto f = cos_potential(2048, 0.2);
    TransferOperator op(T, f, Mesh::uniform(2048));
    auto d = solve_spectral(T, f, op);
    std::vector<double> phi(2048);
    for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = std::cos(two_pi * d.h.node(i));
    std::vector<std::size_t> ns = {1, 5, 10, 15};
    auto a = iterate_convergence(op, phi, d, ns);
    auto b = iterate_convergence_literal(op, phi, d, ns);
    for (std::size_t i = 0; i < ns.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-8);
    for (std::size_t i = 1; i < ns.size(); ++i) EXPECT_LT(a[i], a[i - 1]);
    auto h = iterate_convergence(op, d.h.values(), d, {1});
    EXPECT_LE(h[0], 10.0 * d.eigen_residual + 1e-14);
    EXPECT_THROW(iterate_convergence(op, phi, d, {5, 1}), InvalidParameters);
}

TEST(Convergence, ConstantsUnderZeroPotential) {
    auto T = CircleMap::manneville_pomeau(0.5);
    auto f = constant_potential(512, 0.0);
    TransferOperator op(T, f, Mesh::uniform(512));
    auto d = solve_spectral(T, f, op);
    auto r = iterate_convergence(op, std::vector<double>(512, 1.0), d, {1, 10, 50});
    for (double v : r) EXPECT_LT(v, 1e-12);
}

TEST(Potential, SeminormAndKappa) {
    auto f = cos_potential(4096, 0.2);
    // omega is constant past its window, so the sup sits at antipodal nodes: 0.4 / omega(1/2)
    const double sup = 0.4 / f.omega(0.5);
    EXPECT_LE(f.omega_seminorm_est, sup * (1.0 + 1e-12));
    EXPECT_GT(f.omega_seminorm_est, 0.99 * sup);
    EXPECT_TRUE(std::isnan(f.kappa_f));
    f.set_C1(0.01);
    EXPECT_DOUBLE_EQ(f.kappa_f, f.omega_seminorm_est / 0.01);
    EXPECT_THROW(f.set_C1(0.0), InvalidParameters);
}

TEST(Birkhoff, SumAlongOrbit) {
    auto T = CircleMap::manneville_pomeau(0.5);
    auto f = cos_potential(4096, 0.2);
    double x = 0.3, s = 0.0;
    for (int k = 0; k < 7; ++k) {
        s += f(x);
        x = T.apply(x);
    }
    EXPECT_NEAR(birkhoff_sum(T, f, 0.3, 7), s, 1e-13);
    EXPECT_EQ(birkhoff_sum(T, f, 0.3, 0), 0.0);
}

TEST(Cover, Size) {
    EXPECT_EQ(cover_size(0.125), 9u);
    EXPECT_EQ(cover_size(0.3), 4u);
    EXPECT_THROW(cover_size(0.0), InvalidParameters);
}
