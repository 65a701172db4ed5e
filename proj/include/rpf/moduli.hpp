/**
 * @file moduli.hpp
 * @brief Concave moduli of continuity and the compatibility tests against a circle map.
 */
#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "rpf/errors.hpp"
#include "rpf/maps.hpp"

namespace rpf {

enum class ModulusKind { omega_ab, ilog_composite, legendre_built, custom };

struct Provenance {
    ModulusKind kind = ModulusKind::custom;
    std::map<std::string, double> params;
    std::vector<double> powers;  // iterated-log exponents, ilog_composite only
    std::string describe() const {
        switch (kind) {
            case ModulusKind::omega_ab: return "omega_ab";
            case ModulusKind::ilog_composite: return "ilog-composite";
            case ModulusKind::legendre_built: return "legendre-built";
            default: return "custom";
        }
    }
};

/// Non-decreasing, concave on [0, window], held constant beyond the window.
class Modulus {
public:
    Modulus() = default;
    Modulus(std::function<double(double)> core, double window, Provenance prov)
        : core_(std::move(core)), window_(window), top_(core_(window)), prov_(std::move(prov)) {}

    double operator()(double x) const {
        if (!(x > 0.0)) return 0.0;
        if (x >= window_) return top_;
        return core_(x);
    }
    double window() const { return window_; }
    const Provenance& provenance() const { return prov_; }

private:
    std::function<double(double)> core_;
    double window_ = 0.0;
    double top_ = 0.0;
    Provenance prov_;
};

inline double omega_ab_raw(double alpha, double beta, double x) {
    if (!(x > 0.0)) return 0.0;
    double v = std::pow(x, alpha);
    if (beta != 0.0) v *= std::pow(-std::log(x), -beta);
    return v;
}

/// Midpoint concavity of fn on (0, x0]: log-spaced consecutive pairs plus pairs anchored at 0.
inline bool midpoint_concave(const std::function<double(double)>& fn, double x0, int samples = 400,
                             double lo = 1e-14, double slack = 1e-12) {
    std::vector<double> xs;
    xs.reserve(static_cast<std::size_t>(samples) + 1);
    const double la = std::log(lo), lb = std::log(x0);
    for (int i = 0; i <= samples; ++i) xs.push_back(std::exp(la + (lb - la) * i / samples));
    xs.back() = x0;
    for (double x : xs)
        if (!std::isfinite(fn(x))) return false;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        double a = xs[i], b = xs[i + 1];
        if (fn(0.5 * (a + b)) < 0.5 * (fn(a) + fn(b)) - slack) return false;
        if (fn(0.5 * b) < 0.5 * fn(b) - slack) return false;  // pair (0, b), fn(0) = 0
        if (fn(b) < fn(a) - slack) return false;              // monotone
    }
    for (std::size_t step : {7u, 31u, 97u}) {
        for (std::size_t i = 0; i + step < xs.size(); i += step) {
            double a = xs[i], b = xs[i + step];
            if (fn(0.5 * (a + b)) < 0.5 * (fn(a) + fn(b)) - slack) return false;
        }
    }
    return true;
}

namespace detail {
inline double dyadic_concavity_sweep(const std::function<double(double)>& fn, double cap) {
    double x0 = std::exp2(std::floor(std::log2(cap)));
    const double smallest = std::exp2(-60.0);
    while (x0 > smallest) {
        if (midpoint_concave(fn, x0)) return x0;
        x0 *= 0.5;
    }
    return smallest;
}
}  // namespace detail

inline double concavity_threshold(double alpha, double beta) {
    const double cap = std::exp(-2.0);
    if (beta == 0.0) return cap;
    return detail::dyadic_concavity_sweep([=](double x) { return omega_ab_raw(alpha, beta, x); }, cap);
}

inline Modulus omega_ab(double alpha, double beta) {
    if (!(alpha >= 0.0 && alpha < 1.0) || !(beta >= 0.0)) throw InvalidParameters("omega_ab: need 0 <= alpha < 1, beta >= 0");
    if (!(alpha + beta > 0.0)) throw InvalidParameters("omega_ab: alpha + beta must be positive");
    const double x0 = concavity_threshold(alpha, beta);
    Provenance p{ModulusKind::omega_ab, {{"alpha", alpha}, {"beta", beta}, {"x0", x0}}, {}};
    return Modulus([=](double x) { return omega_ab_raw(alpha, beta, x); }, x0, std::move(p));
}

/// prod_i (log^i 1/x)^{-powers[i-1]}.
inline double ilog_product(const std::vector<double>& powers, double x) {
    if (!(x > 0.0)) return 0.0;
    double v = 1.0;
    double l = -std::log(x);
    for (std::size_t i = 0; i < powers.size(); ++i) {
        if (i > 0) l = std::log(l);
        if (!(l > 0.0)) return std::numeric_limits<double>::quiet_NaN();
        if (powers[i] != 0.0) v *= std::pow(l, -powers[i]);
    }
    return v;
}

inline Modulus ilog_composite(std::vector<double> powers) {
    if (powers.empty()) throw InvalidParameters("ilog_composite: empty exponent list");
    double total = 0.0;
    for (double p : powers) {
        if (!(p >= 0.0)) throw InvalidParameters("ilog_composite: exponents must be >= 0");
        total += p;
    }
    if (!(total > 0.0)) throw InvalidParameters("ilog_composite: all exponents vanish");
    std::function<double(double)> fn = [powers](double x) { return ilog_product(powers, x); };
    // every nested log must stay above 1 below the cap
    double cap = std::exp(-2.0);
    double e = 1.0;
    for (std::size_t i = 1; i < powers.size(); ++i) e = std::exp(e);
    cap = std::min(cap, 0.5 / e);
    const double x0 = detail::dyadic_concavity_sweep(fn, cap);
    Provenance p{ModulusKind::ilog_composite, {{"x0", x0}}, powers};
    return Modulus(fn, x0, std::move(p));
}

/// omega paired with the iterated-log map: (log^k 1/x)^{-1} (log 1/x)^{-1} (log^2 1/x)^{-2}.
inline Modulus ilog_pair_omega(int k) {
    if (k < 1) throw InvalidParameters("ilog_pair_omega: k >= 1");
    std::vector<double> pw(static_cast<std::size_t>(std::max(k, 2)), 0.0);
    pw[0] += 1.0;
    pw[1] += 2.0;
    pw[static_cast<std::size_t>(k - 1)] += 1.0;
    return ilog_composite(std::move(pw));
}

/// Omega paired with the iterated-log map: (log^2 1/x)^{-1}.
inline Modulus ilog_pair_Omega() { return ilog_composite({0.0, 1.0}); }

inline Modulus custom_modulus(std::function<double(double)> fn, double window) {
    return Modulus(std::move(fn), window, Provenance{});
}

enum class Verdict { positive_evidence, vanishing, inconclusive };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::positive_evidence: return "positive-evidence";
        case Verdict::vanishing: return "vanishing";
        default: return "inconclusive";
    }
}

struct CompatibilityReport {
    double c = 0.0;
    std::vector<double> grid;    // descending
    std::vector<double> values;  // (V/omega)(Omega((1+c)x) - Omega(x))
    double liminf_estimate = 0.0;
    double C1 = 0.0;
    double last_decade_min = 0.0;
    double prev_decade_min = 0.0;
    double tail_slope = 0.0;  // least-squares slope of log value against log x over the tail
    Verdict verdict = Verdict::inconclusive;
};

inline double default_c(const CircleMap& map) {
    return std::min(0.1, std::exp2(-(map.sigma() + 2.0)));
}

inline CompatibilityReport check_compatibility(const CircleMap& map, const Modulus& omega,
                                               const Modulus& Omega, double c, double x_min = 1e-12,
                                               int points_per_decade = 20) {
    const double cmax = std::exp2(-(map.sigma() + 2.0));
    if (!(c > 0.0) || c > cmax * (1.0 + 1e-12)) throw InvalidParameters("check_compatibility: need 0 < c <= 2^-(sigma+2)");
    if (!(x_min > 0.0)) throw InvalidParameters("check_compatibility: x_min must be positive");
    const double x_top = std::min(0.1, Omega.window() / (1.0 + c));
    if (x_min * (1.0 + c) > Omega.window() || x_top <= x_min)
        throw WindowError("check_compatibility: Omega((1+c)x) leaves the concavity window");

    CompatibilityReport rep;
    rep.c = c;
    const double decades = std::log10(x_top / x_min);
    const int n = std::max(2, static_cast<int>(std::ceil(decades * points_per_decade)) + 1);
    const double step = std::log(x_top / x_min) / (n - 1);
    for (int i = 0; i < n; ++i) {
        double x = (i == n - 1) ? x_min : x_top * std::exp(-step * i);
        double w = omega(x);
        double v = map.V()(x);
        double q = (w > 0.0) ? v / w * (Omega((1.0 + c) * x) - Omega(x)) : std::numeric_limits<double>::quiet_NaN();
        rep.grid.push_back(x);
        rep.values.push_back(q);
    }

    bool finite = true;
    double last = std::numeric_limits<double>::infinity();
    double prev = std::numeric_limits<double>::infinity();
    double tail = std::numeric_limits<double>::infinity();
    const double last_cut = x_min * 10.0, prev_cut = x_min * 100.0;
    for (std::size_t i = 0; i < rep.grid.size(); ++i) {
        double x = rep.grid[i], q = rep.values[i];
        if (!std::isfinite(q)) {
            finite = false;
            continue;
        }
        if (x <= last_cut) last = std::min(last, q);
        else if (x <= prev_cut) prev = std::min(prev, q);
        if (x <= prev_cut) tail = std::min(tail, q);
    }
    rep.last_decade_min = last;
    rep.prev_decade_min = prev;
    rep.liminf_estimate = tail;
    {
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        int m = 0;
        for (std::size_t i = 0; i < rep.grid.size(); ++i) {
            if (rep.grid[i] > prev_cut || !(rep.values[i] > 0.0)) continue;
            double lx = std::log(rep.grid[i]), ly = std::log(rep.values[i]);
            sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
            ++m;
        }
        if (m >= 3) rep.tail_slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    }
    const bool enough = std::isfinite(last) && std::isfinite(prev);
    const bool trending = enough && (last < 0.5 * prev || rep.tail_slope > 0.05);
    if (!finite || !enough)
        rep.verdict = Verdict::inconclusive;
    else if (tail > 1e-8 && !trending)
        rep.verdict = Verdict::positive_evidence;
    else if (trending || last <= 0.0)
        rep.verdict = Verdict::vanishing;
    else
        rep.verdict = Verdict::inconclusive;
    rep.C1 = rep.verdict == Verdict::positive_evidence ? 0.5 * tail : 0.0;
    return rep;
}

struct RatioConditionResult {
    bool holds = false;
    std::vector<std::pair<double, double>> table;  // (xi, c(xi))
};

inline RatioConditionResult check_ratio_condition(const CircleMap& map, const Modulus& omega,
                                                  const std::vector<double>& xi_grid, double eta,
                                                  double x_lo = 1e-12, int samples = 600,
                                                  double margin = 1e-12) {
    if (!(eta > 0.0)) throw InvalidParameters("check_ratio_condition: eta must be positive");
    RatioConditionResult res;
    res.holds = true;
    auto q = [&](double x) { return omega(x) / map.V()(x); };
    for (double xi : xi_grid) {
        if (!(xi > 1.0)) throw InvalidParameters("check_ratio_condition: every xi must exceed 1");
        double inf = std::numeric_limits<double>::infinity();
        const double la = std::log(std::min(x_lo, eta * 0.5)), lb = std::log(eta);
        for (int i = 0; i < samples; ++i) {
            double x = std::exp(la + (lb - la) * i / samples);
            inf = std::min(inf, q(xi * x) / q(x));
        }
        res.table.emplace_back(xi, inf);
        if (!(inf > 1.0 + margin)) res.holds = false;
    }
    return res;
}

}  // namespace rpf
