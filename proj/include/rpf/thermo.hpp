/**
 * @file thermo.hpp
 * @brief Jacobian, entropy, pressure checks and dynamic-ball masses for the equilibrium state.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "rpf/circle.hpp"
#include "rpf/maps.hpp"
#include "rpf/spectral.hpp"

namespace rpf {

inline double jacobian(const CircleMap& map, const Potential& f, const SpectralData& d, double x) {
    x = wrap(x);
    return d.chi * d.h(map.apply(x)) / d.h(x) * std::exp(-f(x));
}

inline GridFunction log_jacobian(const CircleMap& map, const Potential& f, const SpectralData& d) {
    const std::size_t n = d.h.resolution();
    if (f.f.resolution() != n) throw DimensionError("log_jacobian: resolution mismatch");
    const double lc = std::log(d.chi);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        double x = d.h.node(i);
        v[i] = lc + std::log(d.h(map.apply(x))) - std::log(d.h[i]) - f.f[i];
    }
    return GridFunction(std::move(v));
}

inline double rokhlin_entropy(const CircleMap& map, const Potential& f, const SpectralData& d) {
    return integrate(log_jacobian(map, f, d), d.mu);
}

/// max over sampled x of |sum_{Ty = x} 1/J(y) - 1|.
inline double reciprocal_sum_defect(const CircleMap& map, const Potential& f, const SpectralData& d,
                                    std::size_t samples = 1000, std::uint64_t seed = 42) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double worst = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
        double x = U(rng);
        double sum = 0.0;
        for (double y : map.preimages(x)) sum += 1.0 / jacobian(map, f, d, y);
        worst = std::max(worst, std::fabs(sum - 1.0));
    }
    return worst;
}

struct DiracCheck {
    bool ok = false;
    double margin = 0.0;
};

inline DiracCheck dirac_exclusion_check(const Potential& f, double chi) {
    if (!(chi > 0.0)) throw InvalidParameters("dirac_exclusion_check: chi must be positive");
    double m = std::log(chi) - f(0.0);
    return {m > 0.0, m};
}

// ------------------------------------------------------------ cover pressure

/// (1/n) log p_n for n = 1..n_max over the cylinders of the branch-arc cover.
/// The sup of S_n f on a cylinder is taken over the pre-images of `samples` points of the circle.
inline std::vector<double> cover_pressure(const CircleMap& map, const Potential& f, std::size_t n_max = 12,
                                          std::size_t samples = 64) {
    const std::size_t nv = static_cast<std::size_t>(map.branch_count());
    std::vector<std::vector<double>> best(n_max + 1);
    std::size_t words = 1;
    for (std::size_t n = 1; n <= n_max; ++n) {
        words *= nv;
        best[n].assign(words, -std::numeric_limits<double>::infinity());
    }
    std::vector<double> zs;
    for (std::size_t m = 0; m < samples; ++m) zs.push_back(static_cast<double>(m) / static_cast<double>(samples));
    zs.push_back(1.0 - 1e-9);

    struct Frame {
        double z;
        std::size_t depth;
        std::size_t word;
        double sum;
    };
    std::vector<Frame> stack;
    for (double z0 : zs) {
        stack.push_back({z0, 0, 0, 0.0});
        while (!stack.empty()) {
            Frame fr = stack.back();
            stack.pop_back();
            if (fr.depth == n_max) continue;
            auto pre = map.preimages(fr.z);
            for (std::size_t k = 0; k < nv; ++k) {
                Frame c{pre[k], fr.depth + 1, fr.word * nv + k, fr.sum + f(pre[k])};
                best[c.depth][c.word] = std::max(best[c.depth][c.word], c.sum);
                stack.push_back(c);
            }
        }
    }
    std::vector<double> out;
    for (std::size_t n = 1; n <= n_max; ++n) {
        double top = *std::max_element(best[n].begin(), best[n].end());
        CompensatedSum s;
        for (double v : best[n]) s.add(std::exp(v - top));
        out.push_back((top + std::log(s.value())) / static_cast<double>(n));
    }
    return out;
}

// ------------------------------------------------------------- thermo report

struct ThermoReport {
    double pressure = 0.0;
    double entropy = 0.0;
    double f_integral = 0.0;
    double identity_gap = 0.0;
    double dirac_margin = 0.0;
    double cover_pressure_lower = 0.0;
    std::vector<double> cover_pressures;
    double reciprocal_defect = 0.0;
};

inline ThermoReport thermo_report(const CircleMap& map, const Potential& f, const SpectralData& d,
                                  std::size_t cover_n_max = 12, std::uint64_t seed = 42) {
    ThermoReport t;
    t.pressure = std::log(d.chi);
    t.entropy = rokhlin_entropy(map, f, d);
    t.f_integral = integrate(f.f, d.mu);
    t.identity_gap = std::fabs(t.entropy + t.f_integral - t.pressure);
    t.dirac_margin = dirac_exclusion_check(f, d.chi).margin;
    t.cover_pressures = cover_pressure(map, f, cover_n_max);
    t.cover_pressure_lower = *std::min_element(t.cover_pressures.begin(), t.cover_pressures.end());
    t.reciprocal_defect = reciprocal_sum_defect(map, f, d, 1000, seed);
    return t;
}

/// h_m + int f dm for m the equilibrium state of another potential g (its own Jacobian gives h_m).
inline double free_energy_of(const CircleMap& map, const Potential& g, const SpectralData& m_data,
                             const Potential& f) {
    return rokhlin_entropy(map, g, m_data) + integrate(f.f, m_data.mu);
}

// ------------------------------------------------------------ dynamic balls

struct DynamicBall {
    double x = 0.0;
    std::size_t n = 0;
    double r = 0.0;
    double left = 0.0;   // lift coordinates around x; left may be < 0, right may be >= 1
    double right = 0.0;
    double image_lo = 0.0;  // offsets of T^n(ball) from T^n x
    double image_hi = 0.0;
    std::vector<double> orbit;  // x, Tx, ..., T^n x
};

inline DynamicBall dynamic_ball(const CircleMap& map, double x, std::size_t n, double r, double rho1) {
    if (!(r > 0.0)) throw InvalidParameters("dynamic_ball: r must be positive");
    if (!(r < rho1)) throw RadiusError("dynamic_ball: r must be below the working radius rho1");
    DynamicBall b;
    b.x = wrap(x);
    b.n = n;
    b.r = r;
    b.orbit.push_back(b.x);
    for (std::size_t j = 0; j < n; ++j) b.orbit.push_back(map.apply(b.orbit.back()));
    double lo = -r, hi = r;
    for (std::size_t j = n; j-- > 0;) {
        lo = std::max(map.pull_offset(b.orbit[j], lo), -r);
        hi = std::min(map.pull_offset(b.orbit[j], hi), r);
    }
    b.left = b.x + lo;
    b.right = b.x + hi;
    double a = lo, c = hi;
    for (std::size_t j = 0; j < n; ++j) {
        a = map.push_offset(b.orbit[j], a);
        c = map.push_offset(b.orbit[j], c);
    }
    b.image_lo = a;
    b.image_hi = c;
    return b;
}

/// Pull an offset at T^n x back along the orbit; returns S_n f at the pulled point and its offset at x.
inline std::pair<double, double> pull_back_along(const CircleMap& map, const Potential& f,
                                                 const std::vector<double>& orbit, double offset) {
    const std::size_t n = orbit.size() - 1;
    CompensatedSum s;
    double e = offset;
    for (std::size_t j = n; j-- > 0;) {
        e = map.pull_offset(orbit[j], e);
        s.add(f(orbit[j] + e));
    }
    return {s.value(), e};
}

/// mu(B) = integral over T^n B of e^{S_n f(psi z) - nP} h(psi z) / h(z) dmu(z), psi the inverse
/// branch chain along the orbit; mu read from its cell weights with boundary cells pro-rated.
inline double ball_mass_transported(const CircleMap& map, const Potential& f, const SpectralData& d,
                                    const DynamicBall& b, std::size_t knots = 64) {
    const double P = std::log(d.chi);
    const double zc = b.orbit.back();
    const double a = b.image_lo, c = b.image_hi;
    if (!(c > a)) return 0.0;
    std::vector<double> factor(knots + 1);
    for (std::size_t k = 0; k <= knots; ++k) {
        double e = a + (c - a) * static_cast<double>(k) / static_cast<double>(knots);
        if (b.n == 0) {
            factor[k] = 1.0;
            continue;
        }
        auto [S, e0] = pull_back_along(map, f, b.orbit, e);
        factor[k] = std::exp(S - static_cast<double>(b.n) * P) * d.h(b.x + e0) / d.h(zc + e);
    }
    const std::size_t N = d.mu.resolution();
    const double cell = 1.0 / static_cast<double>(N);
    const double lo = zc + a, hi = zc + c;
    auto first = static_cast<long long>(std::floor(lo * static_cast<double>(N)));
    auto last = static_cast<long long>(std::floor(hi * static_cast<double>(N)));
    CompensatedSum mass;
    for (long long q = first; q <= last; ++q) {
        double cl = std::max(lo, static_cast<double>(q) * cell);
        double cr = std::min(hi, static_cast<double>(q + 1) * cell);
        if (cr <= cl) continue;
        auto idx = static_cast<std::size_t>(((q % static_cast<long long>(N)) + static_cast<long long>(N)) %
                                            static_cast<long long>(N));
        double u = (0.5 * (cl + cr) - lo) / (hi - lo) * static_cast<double>(knots);
        auto k = std::min(static_cast<std::size_t>(u), knots - 1);
        double t = u - static_cast<double>(k);
        double fac = (1.0 - t) * factor[k] + t * factor[k + 1];
        mass.add(d.mu[idx] * (cr - cl) / cell * fac);
    }
    return mass.value();
}

/// Proof-shaped constant e^{(L+1) kappa_f Omega(1/2)}.
inline double gibbs_ceiling(double kappa_f, double rho1, double Omega_half) {
    double L = static_cast<double>(cover_size(rho1));
    return std::exp((L + 1.0) * kappa_f * Omega_half);
}

struct GibbsRow {
    double x = 0.0;
    std::size_t n = 0;
    double r = 0.0;
    double ball_left = 0.0;
    double ball_right = 0.0;
    double ball_mass = 0.0;
    double direct_mass = 0.0;  // pro-rated cells of the ball itself
    double birkhoff = 0.0;
    double ratio = 0.0;
    bool resolved = false;
};

struct GibbsBand {
    std::size_t n = 0;
    double low = 0.0;
    double high = 0.0;
    double spread() const { return high / low; }
};

struct GibbsReport {
    double r = 0.0;
    std::vector<GibbsRow> rows;
    std::vector<GibbsBand> bands;  // per depth, resolved rows only
    double K_low = 0.0;
    double K_high = 0.0;
    double ceiling = std::numeric_limits<double>::quiet_NaN();  // e^{(L+1) kappa_f Omega(1/2)}
    std::size_t unresolved = 0;
};

inline GibbsReport gibbs_report(const CircleMap& map, const Potential& f, const SpectralData& d, double r,
                                const std::vector<double>& x_samples, std::size_t n_max, double rho1,
                                double Omega_half = std::numeric_limits<double>::quiet_NaN(),
                                double min_cells = 10.0) {
    if (!(r < rho1)) throw RadiusError("gibbs_report: r must be below the working radius rho1");
    GibbsReport rep;
    rep.r = r;
    const double P = std::log(d.chi);
    const double N = static_cast<double>(d.mu.resolution());
    rep.K_low = std::numeric_limits<double>::infinity();
    rep.K_high = 0.0;
    rep.bands.resize(n_max + 1);
    for (std::size_t n = 0; n <= n_max; ++n) {
        rep.bands[n] = {n, std::numeric_limits<double>::infinity(), 0.0};
    }
    for (double x : x_samples) {
        for (std::size_t n = 0; n <= n_max; ++n) {
            auto b = dynamic_ball(map, x, n, r, rho1);
            GibbsRow row;
            row.x = b.x;
            row.n = n;
            row.r = r;
            row.ball_left = b.left;
            row.ball_right = b.right;
            row.birkhoff = birkhoff_sum(map, f, b.x, n);
            row.ball_mass = ball_mass_transported(map, f, d, b);
            row.direct_mass = d.mu.arc_mass(b.left, b.right);
            row.ratio = row.ball_mass / std::exp(row.birkhoff - static_cast<double>(n) * P);
            row.resolved = (b.image_hi - b.image_lo) * N >= min_cells;
            if (row.resolved) {
                rep.K_low = std::min(rep.K_low, row.ratio);
                rep.K_high = std::max(rep.K_high, row.ratio);
                rep.bands[n].low = std::min(rep.bands[n].low, row.ratio);
                rep.bands[n].high = std::max(rep.bands[n].high, row.ratio);
            } else {
                ++rep.unresolved;
            }
            rep.rows.push_back(row);
        }
    }
    if (std::isfinite(f.kappa_f) && std::isfinite(Omega_half)) rep.ceiling = gibbs_ceiling(f.kappa_f, rho1, Omega_half);
    return rep;
}

}  // namespace rpf
