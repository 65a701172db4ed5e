/**
 * @file circle.hpp
 * @brief Points of R/Z, the quotient metric, node-sampled functions and cell measures.
 *
 * Functions live on the nodes i/N and are read back by periodic linear
 * interpolation. Measures live on the cells [i/N, (i+1)/N); the pairing of a
 * function with a measure uses the node value i/N for cell i.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rpf/errors.hpp"

namespace rpf {

/// Reduce a real to [0, 1).
inline double wrap(double x) {
    double r = x - std::floor(x);
    if (r >= 1.0) r = 0.0;  // floor rounding for x just below an integer
    return r;
}

class CirclePoint {
public:
    CirclePoint() = default;
    CirclePoint(double x) : v_(wrap(x)) {}  // NOLINT implicit on purpose
    double value() const { return v_; }
    operator double() const { return v_; }

private:
    double v_ = 0.0;
};

/// Signed representative of y - x in [-1/2, 1/2).
inline double signed_offset(double x, double y) {
    double d = y - x;
    d -= std::floor(d + 0.5);
    return d;
}

inline double circle_dist(double x, double y) {
    double d = std::fabs(wrap(x) - wrap(y));
    return std::min(d, 1.0 - d);
}

/// Neumaier compensated sum in fixed index order.
class CompensatedSum {
public:
    void add(double v) {
        double t = s_ + v;
        if (std::fabs(s_) >= std::fabs(v))
            c_ += (s_ - t) + v;
        else
            c_ += (v - t) + s_;
        s_ = t;
    }
    double value() const { return s_ + c_; }

private:
    double s_ = 0.0;
    double c_ = 0.0;
};

inline double stable_sum(std::span<const double> xs) {
    CompensatedSum s;
    for (double v : xs) s.add(v);
    return s.value();
}

class GridFunction {
public:
    GridFunction() = default;
    explicit GridFunction(std::vector<double> values) : values_(std::move(values)) {
        if (values_.size() < 2) throw DimensionError("GridFunction needs at least 2 nodes");
    }
    GridFunction(std::size_t n, double fill) : GridFunction(std::vector<double>(n, fill)) {}

    template <class F>
    static GridFunction sample(std::size_t n, F&& fn) {
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = fn(node(i, n));
        return GridFunction(std::move(v));
    }

    static double node(std::size_t i, std::size_t n) {
        return static_cast<double>(i) / static_cast<double>(n);
    }

    std::size_t resolution() const { return values_.size(); }
    const std::vector<double>& values() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    double node(std::size_t i) const { return node(i, values_.size()); }

    double operator()(double x) const {
        const std::size_t n = values_.size();
        double u = wrap(x) * static_cast<double>(n);
        auto j = static_cast<std::size_t>(u);
        if (j >= n) j = n - 1;
        double t = u - static_cast<double>(j);
        if (t == 0.0) return values_[j];
        std::size_t k = (j + 1 == n) ? 0 : j + 1;
        return (1.0 - t) * values_[j] + t * values_[k];
    }

    double max() const { return *std::max_element(values_.begin(), values_.end()); }
    double min() const { return *std::min_element(values_.begin(), values_.end()); }

private:
    std::vector<double> values_;
};

inline double gf_eval(const GridFunction& f, CirclePoint x) { return f(x.value()); }

class DiscreteMeasure {
public:
    DiscreteMeasure() = default;
    explicit DiscreteMeasure(std::vector<double> weights, bool probability = true)
        : w_(std::move(weights)), probability_(probability) {
        if (w_.empty()) throw DimensionError("DiscreteMeasure needs at least one cell");
        for (double v : w_)
            if (!(v >= 0.0)) throw DomainError("negative or NaN cell weight");
        if (probability_) {
            double s = stable_sum(w_);
            if (std::fabs(s - 1.0) > 1e-12) throw DomainError("probability weights do not sum to 1");
        }
        build_prefix();
    }

    /// Normalize non-negative weights to a probability measure.
    static DiscreteMeasure normalized(std::vector<double> w) {
        double s = stable_sum(w);
        if (!(s > 0.0)) throw DomainError("cannot normalize zero mass");
        for (double& v : w) v /= s;
        // one more pass absorbs the rounding of the first division
        double s2 = stable_sum(w);
        for (double& v : w) v /= s2;
        return DiscreteMeasure(std::move(w), true);
    }

    static DiscreteMeasure uniform(std::size_t n) {
        return normalized(std::vector<double>(n, 1.0));
    }

    static DiscreteMeasure dirac(std::size_t n, std::size_t i) {
        std::vector<double> w(n, 0.0);
        w.at(i) = 1.0;
        return DiscreteMeasure(std::move(w), true);
    }

    std::size_t resolution() const { return w_.size(); }
    const std::vector<double>& weights() const { return w_; }
    double operator[](std::size_t i) const { return w_[i]; }
    bool is_probability() const { return probability_; }

    /// Mass of [0, x) for x in [0, 1], cells treated as uniform densities.
    double cdf(double x) const {
        const std::size_t n = w_.size();
        if (x <= 0.0) return 0.0;
        if (x >= 1.0) return total();
        double u = x * static_cast<double>(n);
        auto j = static_cast<std::size_t>(u);
        if (j >= n) j = n - 1;
        return prefix_[j] + (u - static_cast<double>(j)) * w_[j];
    }

    /// Mass of the arc from a to b (lift coordinates, b - a in [0, 1]).
    double arc_mass(double a, double b) const {
        if (b - a >= 1.0) return total();
        if (b <= a) return 0.0;
        double fa = std::floor(a);
        double lo = a - fa, hi = b - fa;
        if (hi <= 1.0) return cdf(hi) - cdf(lo);
        return (total() - cdf(lo)) + cdf(hi - 1.0);
    }

    double total() const { return prefix_.empty() ? 0.0 : prefix_.back(); }

private:
    void build_prefix() {
        prefix_.assign(w_.size() + 1, 0.0);
        CompensatedSum s;
        for (std::size_t i = 0; i < w_.size(); ++i) {
            s.add(w_[i]);
            prefix_[i + 1] = s.value();
        }
    }

    std::vector<double> w_;
    bool probability_ = true;
    std::vector<double> prefix_;
};

inline double integrate(const GridFunction& f, const DiscreteMeasure& m) {
    if (f.resolution() != m.resolution())
        throw DimensionError("integrate: resolution mismatch " + std::to_string(f.resolution()) +
                             " vs " + std::to_string(m.resolution()));
    CompensatedSum s;
    for (std::size_t i = 0; i < f.resolution(); ++i) s.add(f[i] * m[i]);
    return s.value();
}

/// Total-variation distance (sum of absolute differences) between equal-size weight vectors.
inline double tv_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("tv_distance: size mismatch");
    CompensatedSum s;
    for (std::size_t i = 0; i < a.size(); ++i) s.add(std::fabs(a[i] - b[i]));
    return s.value();
}

inline double sup_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("sup_distance: size mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

}  // namespace rpf
