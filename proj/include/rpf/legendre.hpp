/**
 * @file legendre.hpp
 * @brief Concave conjugates on sampled data and the majorant built from omega / V.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "rpf/errors.hpp"
#include "rpf/maps.hpp"
#include "rpf/moduli.hpp"

namespace rpf {

/// Indices of the upper hull of (xs, ys), xs strictly ascending. Collinear points are dropped.
inline std::vector<std::size_t> upper_hull(const std::vector<double>& xs, const std::vector<double>& ys) {
    std::vector<std::size_t> h;
    h.reserve(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        while (h.size() >= 2) {
            std::size_t a = h[h.size() - 2], b = h.back();
            // keep b only if it lies strictly above the chord a -> i
            double cross = (xs[b] - xs[a]) * (ys[i] - ys[a]) - (ys[b] - ys[a]) * (xs[i] - xs[a]);
            if (cross >= 0.0) h.pop_back();
            else break;
        }
        h.push_back(i);
    }
    return h;
}

/// Piecewise-linear interpolation of the hull through the given vertices.
inline std::vector<double> hull_values(const std::vector<double>& xs, const std::vector<double>& ys,
                                       const std::vector<std::size_t>& hull) {
    std::vector<double> out(xs.size());
    std::size_t seg = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        while (seg + 1 < hull.size() && xs[hull[seg + 1]] < xs[i]) ++seg;
        if (seg + 1 >= hull.size()) {
            out[i] = ys[hull.back()];
            continue;
        }
        std::size_t a = hull[seg], b = hull[seg + 1];
        if (i == a) { out[i] = ys[a]; continue; }
        if (i == b) { out[i] = ys[b]; continue; }
        double t = (xs[i] - xs[a]) / (xs[b] - xs[a]);
        out[i] = (1.0 - t) * ys[a] + t * ys[b];
    }
    return out;
}

/// min_j [q * a_j - b_j] for each query q; a ascending, queries ascending and >= 0.
inline std::vector<double> concave_conjugate(const std::vector<double>& a, const std::vector<double>& b,
                                             const std::vector<double>& queries) {
    const auto hull = upper_hull(a, b);
    std::vector<double> out(queries.size());
    std::size_t ptr = hull.size() - 1;
    auto val = [&](std::size_t k, double q) { return q * a[hull[k]] - b[hull[k]]; };
    for (std::size_t i = 0; i < queries.size(); ++i) {
        const double q = queries[i];
        while (ptr > 0 && val(ptr - 1, q) <= val(ptr, q)) --ptr;
        out[i] = val(ptr, q);
    }
    return out;
}

struct LegendreResult {
    Modulus Omega;
    double tau = 0.0;
    std::vector<double> y;             // 0 followed by log-spaced nodes up to tau
    std::vector<double> theta0;        // omega / V
    std::vector<double> theta1;        // running max of theta0
    std::vector<double> slopes;        // 0 followed by log-spaced slopes
    std::vector<double> theta1_star;   // conjugate on the slope grid
    std::vector<double> theta1_star2;  // double conjugate on y
    std::vector<double> Omega_grid;    // theta1_star2 + max theta1_star
    std::vector<double> hull;          // monotone-chain hull of theta1 on y
    double max_theta1_star = 0.0;
    double hull_gap = 0.0;  // sup |Omega_grid - hull|
};

namespace detail {

inline Modulus grid_modulus(std::shared_ptr<const std::vector<double>> xs,
                            std::shared_ptr<const std::vector<double>> vs, double tau) {
    auto fn = [xs, vs](double x) {
        const auto& X = *xs;
        const auto& Vv = *vs;
        auto it = std::upper_bound(X.begin(), X.end(), x);
        if (it == X.end()) return Vv.back();
        auto j = static_cast<std::size_t>(it - X.begin());
        if (j == 0) return Vv.front();
        double t = (x - X[j - 1]) / (X[j] - X[j - 1]);
        return (1.0 - t) * Vv[j - 1] + t * Vv[j];
    };
    Provenance p{ModulusKind::legendre_built, {{"tau", tau}, {"nodes", static_cast<double>(xs->size())}}, {}};
    return Modulus(fn, tau, std::move(p));
}

}  // namespace detail

/// Double conjugate of sampled theta1 (theta1[0] = 0 at y[0] = 0), returned as a grid modulus.
inline LegendreResult concave_envelope(std::vector<double> y, std::vector<double> theta1,
                                       std::size_t slope_count) {
    if (y.size() < 3 || y.size() != theta1.size() || y[0] != 0.0)
        throw InvalidParameters("concave_envelope: need y[0] = 0 and matching sizes");
    LegendreResult r;
    r.tau = y.back();

    double p_hi = 0.0;
    for (std::size_t j = 1; j < y.size(); ++j) p_hi = std::max(p_hi, theta1[j] / y[j]);
    r.slopes.push_back(0.0);
    if (p_hi > 0.0) {
        p_hi *= 1.0 + 1e-9;
        double p_lo = p_hi;
        for (std::size_t j = 1; j < y.size(); ++j) {
            double s = (theta1[j] - theta1[j - 1]) / (y[j] - y[j - 1]);
            if (s > 0.0) p_lo = std::min(p_lo, s);
        }
        p_lo = std::max(p_lo, p_hi * 1e-14);
        const double la = std::log(p_lo), lb = std::log(p_hi);
        for (std::size_t k = 0; k < slope_count; ++k)
            r.slopes.push_back(std::exp(la + (lb - la) * static_cast<double>(k) / static_cast<double>(slope_count - 1)));
        r.slopes.back() = p_hi;
    }

    r.theta1_star = concave_conjugate(y, theta1, r.slopes);
    r.max_theta1_star = *std::max_element(r.theta1_star.begin(), r.theta1_star.end());
    r.theta1_star2 = concave_conjugate(r.slopes, r.theta1_star, y);
    r.Omega_grid.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) r.Omega_grid[i] = r.theta1_star2[i] + r.max_theta1_star;

    r.hull = hull_values(y, theta1, upper_hull(y, theta1));
    for (std::size_t i = 0; i < y.size(); ++i)
        r.hull_gap = std::max(r.hull_gap, std::fabs(r.Omega_grid[i] - r.hull[i]));

    auto xs = std::make_shared<const std::vector<double>>(y);
    auto vs = std::make_shared<const std::vector<double>>(r.Omega_grid);
    r.Omega = detail::grid_modulus(xs, vs, r.tau);
    r.y = std::move(y);
    r.theta1 = std::move(theta1);
    return r;
}

inline LegendreResult build_omega_legendre(const CircleMap& map, const Modulus& omega, double tau,
                                           std::size_t grid_size, double y_lo = 1e-14) {
    if (!(tau > 0.0)) throw InvalidParameters("build_omega_legendre: tau must be positive");
    if (grid_size < 1000) throw InvalidParameters("build_omega_legendre: grid_size must be >= 1000");
    if (!(y_lo > 0.0 && y_lo < tau)) throw InvalidParameters("build_omega_legendre: need 0 < y_lo < tau");
    std::vector<double> y(grid_size + 1);
    y[0] = 0.0;
    const double la = std::log(y_lo), lb = std::log(tau);
    for (std::size_t i = 0; i < grid_size; ++i)
        y[i + 1] = std::exp(la + (lb - la) * static_cast<double>(i) / static_cast<double>(grid_size - 1));
    y.back() = tau;

    std::vector<double> t0(y.size(), 0.0), t1(y.size(), 0.0);
    double run = 0.0;
    for (std::size_t i = 1; i < y.size(); ++i) {
        double v = map.V()(y[i]);
        if (!(v > 0.0)) throw DivisionError("build_omega_legendre: V vanishes at an interior node");
        t0[i] = omega(y[i]) / v;
        run = std::max(run, t0[i]);
        t1[i] = run;
    }
    LegendreResult r = concave_envelope(y, t1, grid_size);
    r.theta0 = std::move(t0);
    return r;
}

}  // namespace rpf
