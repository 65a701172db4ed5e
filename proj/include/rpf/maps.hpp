/**
 * @file maps.hpp
 * @brief Circle maps T(x) = x(1 + V(x)) mod 1 with an indifferent fixed point at 0.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "rpf/circle.hpp"
#include "rpf/errors.hpp"

namespace rpf {

enum class VFamily { power, iterated_log, custom };

/// k-fold iterated logarithm of 1/x; NaN once an intermediate value drops to or below zero.
inline double iterated_log_inv(int k, double x) {
    double v = -std::log(x);
    for (int i = 1; i < k; ++i) {
        if (!(v > 0.0)) return std::numeric_limits<double>::quiet_NaN();
        v = std::log(v);
    }
    return v;
}

class VaryingFunction {
public:
    /// V(x) = x^s.
    static VaryingFunction power(double s) {
        if (!(s > 0.0) || !std::isfinite(s)) throw InvalidParameters("power family needs s > 0");
        VaryingFunction v;
        v.family_ = VFamily::power;
        v.sigma_ = s;
        v.s_ = s;
        v.fn_ = [s](double x) { return x <= 0.0 ? 0.0 : std::pow(x, s); };
        v.label_ = "mp";
        v.validate();
        return v;
    }

    /// V(x) = A / log^k(1/x) on (0, x_c], then linear up to V(1) = 1.
    /// x_c is fixed by W_k(x_c) = 1/2, i.e. log^k(1/x_c) = 2A.
    static VaryingFunction iterated_log(int k, double A) {
        if (k < 1) throw InvalidParameters("iterated-log family needs k >= 1");
        if (!(A > 0.0) || !std::isfinite(A)) throw InvalidParameters("iterated-log family needs A > 0");
        double e = 2.0 * A;
        for (int i = 0; i < k; ++i) e = std::exp(e);
        if (!std::isfinite(e)) throw InvalidParameters("iterated-log junction underflows for this (k, A)");
        const double xc = 1.0 / e;
        if (!(xc > 0.0) || xc >= 1.0) throw InvalidParameters("iterated-log junction outside (0,1)");
        VaryingFunction v;
        v.family_ = VFamily::iterated_log;
        v.sigma_ = 0.0;
        v.k_ = k;
        v.A_ = A;
        v.xc_ = xc;
        const double slope = 0.5 / (1.0 - xc);
        v.fn_ = [k, A, xc, slope](double x) {
            if (x <= 0.0) return 0.0;
            if (x <= xc) return A / iterated_log_inv(k, x);
            return 0.5 + slope * (x - xc);
        };
        v.label_ = "ilog";
        v.validate();
        return v;
    }

    static VaryingFunction custom(std::function<double(double)> fn, double sigma,
                                  std::string label = "custom") {
        if (!(sigma >= 0.0)) throw InvalidParameters("custom varying function must declare sigma >= 0");
        VaryingFunction v;
        v.family_ = VFamily::custom;
        v.sigma_ = sigma;
        v.fn_ = std::move(fn);
        v.label_ = std::move(label);
        v.validate();
        return v;
    }

    double operator()(double x) const { return fn_(x); }
    double sigma() const { return sigma_; }
    VFamily family() const { return family_; }
    const std::string& label() const { return label_; }
    double exponent() const { return s_; }
    int log_depth() const { return k_; }
    double amplitude() const { return A_; }
    double junction() const { return xc_; }
    int top_value() const { return top_; }

private:
    VaryingFunction() = default;

    void validate() {
        if (std::fabs(fn_(0.0)) > 1e-15) throw InvalidMapError("V(0) must be 0");
        const double v1 = fn_(1.0);
        const double r = std::round(v1);
        if (r < 1.0 || std::fabs(v1 - r) > 1e-12) throw InvalidMapError("V(1) must be a positive integer");
        top_ = static_cast<int>(r);
        constexpr int n = 4096;
        double prev = 0.0;
        for (int i = 1; i <= n; ++i) {
            double x = static_cast<double>(i) / n;
            double v = fn_(x);
            if (!std::isfinite(v) || v < prev) throw InvalidMapError("V must be finite and non-decreasing");
            prev = v;
        }
    }

    std::function<double(double)> fn_;
    double sigma_ = 0.0;
    VFamily family_ = VFamily::custom;
    std::string label_;
    double s_ = 0.0;
    int k_ = 0;
    double A_ = 0.0;
    double xc_ = 0.0;
    int top_ = 1;
};

class CircleMap {
public:
    explicit CircleMap(VaryingFunction v) : V_(std::move(v)), nv_(1 + V_.top_value()) {}

    static CircleMap manneville_pomeau(double s) { return CircleMap(VaryingFunction::power(s)); }
    static CircleMap iterated_log(int k, double A) {
        return CircleMap(VaryingFunction::iterated_log(k, A));
    }

    const VaryingFunction& V() const { return V_; }
    int branch_count() const { return nv_; }
    double sigma() const { return V_.sigma(); }

    /// g(x) = x(1 + V(x)) on [0, 1].
    double lift(double x) const { return x * (1.0 + V_(x)); }

    /// Degree-N_V extension of g to the real line.
    double lift_ext(double x) const {
        double fl = std::floor(x);
        return lift(x - fl) + static_cast<double>(nv_) * fl;
    }

    double apply(double x) const { return wrap(lift(wrap(x))); }

    /// Root of g(x) = v in [lo, hi] by bisection, run down to adjacent doubles.
    double lift_inverse(double v, double tol = 1e-13, double lo = 0.0, double hi = 1.0) const {
        double glo = lift(lo), ghi = lift(hi);
        if (v < glo - tol || v > ghi + tol) throw InvalidMapError("lift_inverse: target outside bracket");
        if (v <= glo) return lo;
        if (v >= ghi) return hi;
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            double gm = lift(mid);
            if (gm < glo || gm > ghi) throw InvalidMapError("non-monotone lift detected during bisection");
            if (gm < v) {
                lo = mid;
                glo = gm;
            } else {
                hi = mid;
                ghi = gm;
            }
        }
        double root = (v - glo <= ghi - v) ? lo : hi;
        if (std::fabs(lift(root) - v) > tol) throw InvalidMapError("lift_inverse: residual above tolerance");
        return root;
    }

    /// Inverse of lift_ext on the real line.
    double lift_ext_inverse(double v, double tol = 1e-13) const {
        const double nv = static_cast<double>(nv_);
        double fl = std::floor(v / nv);
        double r = v - nv * fl;
        if (r >= nv) {
            r -= nv;
            fl += 1.0;
        }
        return fl + lift_inverse(r, tol);
    }

    /// The N_V roots of g(x) = y + k, ascending.
    std::vector<double> preimages(double y, double tol = 1e-13) const {
        if (!(tol > 0.0)) throw InvalidParameters("preimages: tol must be positive");
        const double yy = wrap(y);
        std::vector<double> out(static_cast<std::size_t>(nv_));
        double lo = 0.0;
        for (int k = 0; k < nv_; ++k) {
            out[static_cast<std::size_t>(k)] = lift_inverse(yy + k, tol, lo, 1.0);
            lo = out[static_cast<std::size_t>(k)];
        }
        return out;
    }

    /// Branch endpoints a_k = g^{-1}(k), k = 0..N_V.
    std::vector<double> branch_endpoints(double tol = 1e-13) const {
        std::vector<double> a(static_cast<std::size_t>(nv_) + 1);
        for (int k = 0; k <= nv_; ++k) a[static_cast<std::size_t>(k)] = lift_inverse(k, tol);
        return a;
    }

    /// Local inverse through x: the preimage of x_image + delta that lies next to x,
    /// returned as an offset from x.
    double pull_offset(double x, double delta, double tol = 1e-13) const {
        return lift_ext_inverse(lift(x) + delta, tol) - x;
    }

    /// Forward image of the offset delta at x, as an offset from T(x).
    double push_offset(double x, double delta) const { return lift_ext(x + delta) - lift(x); }

private:
    VaryingFunction V_;
    int nv_;
};

struct PairedPreorbit {
    std::vector<double> y;
    bool contraction_ok = true;
    std::size_t first_violation = 0;  // index k of the first d(x_k,y_k) > d(x_0,y_0), 0 if none
};

/// Pair a backward orbit of x0 with one of y0 by always taking the local inverse next to x_k.
inline PairedPreorbit paired_preorbit(const CircleMap& map, const std::vector<double>& x_preorbit,
                                      double y0, std::size_t depth, double rho1,
                                      bool check_ambiguity = true, double tol = 1e-13) {
    if (x_preorbit.size() < depth + 1) throw InvalidParameters("paired_preorbit: x pre-orbit too short");
    const double d0 = circle_dist(x_preorbit[0], y0);
    if (!(d0 < rho1)) throw InvalidParameters("paired_preorbit: d(x0, y0) must be below rho1");
    PairedPreorbit out;
    out.y.reserve(depth + 1);
    out.y.push_back(wrap(y0));
    for (std::size_t k = 1; k <= depth; ++k) {
        const double xk = x_preorbit[k];
        const double xprev = x_preorbit[k - 1];
        if (circle_dist(map.apply(xk), xprev) > 1e-9)
            throw InvalidParameters("paired_preorbit: x pre-orbit is not a pre-orbit");
        const double yprev = out.y.back();
        const double delta = signed_offset(xprev, yprev);
        const double yk = wrap(xk + map.pull_offset(xk, delta, tol));
        if (check_ambiguity) {
            int close = 0;
            for (double p : map.preimages(yprev, tol))
                if (circle_dist(p, xk) < rho1) ++close;
            if (close > 1) throw PairingError("two pre-images within rho1 of x_k");
        }
        if (out.contraction_ok && circle_dist(xk, yk) > d0 * (1.0 + 1e-12) + 1e-300) {
            out.contraction_ok = false;
            out.first_violation = k;
        }
        out.y.push_back(yk);
    }
    return out;
}

struct ExpansionConstants {
    double rho0_hat = 0.0;
    double rho_V_hat = 0.0;
    double rho1 = 0.0;  // working radius, rho0_hat / 2 unless overridden
    VaryingFunction V = VaryingFunction::power(1.0);
    double lambda(double eps) const { return 1.0 + V(eps); }
};

/// Expansion inequality for one pair; slack absorbs rounding of values in [0, 2].
inline bool expansion_holds(const CircleMap& map, double x, double y, double slack = 1e-15) {
    const double d = circle_dist(x, y);
    const double lhs = circle_dist(map.apply(x), map.apply(y));
    const double rhs = d * (1.0 + std::exp2(-(map.sigma() + 2.0)) * map.V()(d));
    return lhs >= rhs - slack;
}

namespace detail {

inline double largest_dyadic_below(double bound, double cap) {
    double r = cap;
    while (r > bound) r *= 0.5;
    return r;
}

}  // namespace detail

/// Monte Carlo estimate of the expansion radii.
inline ExpansionConstants estimate_rho0(const CircleMap& map, std::size_t samples,
                                        std::uint64_t seed = 42) {
    if (samples < 1000) throw InvalidParameters("estimate_rho0 needs at least 1000 samples");
    constexpr double cap = 0.25;
    constexpr double floor_r = 1e-6;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    auto draw_d = [&] {
        return (U(rng) < 0.5) ? cap * U(rng) : std::exp(std::log(1e-8) + U(rng) * std::log(cap / 1e-8));
    };
    auto draw_x = [&] {
        double u = U(rng);
        if (u < 0.5) return U(rng);
        double t = std::exp(std::log(1e-10) + U(rng) * std::log(0.1 / 1e-10));
        return u < 0.75 ? t : wrap(1.0 - t);
    };

    double min_fail = cap * 2.0;
    for (std::size_t i = 0; i < samples; ++i) {
        double x = draw_x();
        double d = draw_d();
        double y = wrap(U(rng) < 0.5 ? x + d : x - d);
        if (!expansion_holds(map, x, y)) min_fail = std::min(min_fail, circle_dist(x, y));
    }
    const double rho0_raw = detail::largest_dyadic_below(min_fail, cap);

    // local expansion by 1 + V(eps) for eps <= y < x < 1, no wrap
    double min_fail_v = cap * 2.0;
    for (std::size_t i = 0; i < samples; ++i) {
        double eps = std::exp(std::log(1e-8) + U(rng) * std::log(0.5 / 1e-8));
        double d = draw_d();
        double y = eps + (1.0 - eps) * U(rng);
        double x = y + d;
        if (x >= 1.0) continue;
        double lhs = circle_dist(map.apply(x), map.apply(y));
        if (lhs < (1.0 + map.V()(eps)) * d - 1e-15) min_fail_v = std::min(min_fail_v, d);
    }
    const double rho_v = detail::largest_dyadic_below(min_fail_v, cap);

    ExpansionConstants ec{.rho0_hat = std::min(rho0_raw, rho_v), .rho_V_hat = rho_v, .rho1 = 0.0, .V = map.V()};
    if (ec.rho0_hat < floor_r) throw DegenerateMapError("no expansion radius found down to 1e-6");
    ec.rho1 = 0.5 * ec.rho0_hat;
    return ec;
}

}  // namespace rpf
