/**
 * @file spectral.hpp
 * @brief Transfer operator on a node mesh, leading eigendata, normalized dual and its stationary measure.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include "rpf/circle.hpp"
#include "rpf/errors.hpp"
#include "rpf/maps.hpp"
#include "rpf/moduli.hpp"

namespace rpf {

// ---------------------------------------------------------------- potential

struct Potential {
    GridFunction f;
    Modulus omega;
    double omega_seminorm_est = 0.0;
    double kappa_f = std::numeric_limits<double>::quiet_NaN();

    double operator()(double x) const { return f(x); }
    void set_C1(double C1) {
        if (!(C1 > 0.0)) throw InvalidParameters("set_C1: C1 must be positive");
        kappa_f = omega_seminorm_est / C1;
    }
};

/// sup |f(x) - f(y)| / omega(d(x, y)) over node pairs of a coarse subgrid plus random close pairs.
inline double estimate_seminorm(const GridFunction& f, const Modulus& omega, std::uint64_t seed = 42,
                                std::size_t random_pairs = 20000) {
    const std::size_t n = f.resolution();
    const std::size_t stride = std::max<std::size_t>(1, n / 512);
    double best = 0.0;
    auto consider = [&](double x, double y, double fx, double fy) {
        double d = circle_dist(x, y);
        double w = omega(d);
        if (w > 0.0) best = std::max(best, std::fabs(fx - fy) / w);
    };
    for (std::size_t i = 0; i < n; i += stride)
        for (std::size_t j = i + stride; j < n; j += stride) consider(f.node(i), f.node(j), f[i], f[j]);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t j = (i + 1) % n;
        consider(f.node(i), f.node(j), f[i], f[j]);
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (std::size_t k = 0; k < random_pairs; ++k) {
        double x = U(rng);
        double d = std::exp(std::log(1e-9) + U(rng) * std::log(0.5 / 1e-9));
        double y = wrap(x + d);
        consider(x, y, f(x), f(y));
    }
    return best;
}

inline Potential make_potential(GridFunction f, Modulus omega, std::uint64_t seed = 42) {
    Potential p{std::move(f), std::move(omega), 0.0, std::numeric_limits<double>::quiet_NaN()};
    p.omega_seminorm_est = estimate_seminorm(p.f, p.omega, seed);
    return p;
}

/// Constant potential with a Lipschitz-type modulus; handy for tests.
inline Potential constant_potential(std::size_t n, double c) {
    return Potential{GridFunction(n, c), omega_ab(0.75, 0.0), 0.0, std::numeric_limits<double>::quiet_NaN()};
}

inline double birkhoff_sum(const CircleMap& map, const Potential& f, double x, std::size_t n) {
    CompensatedSum s;
    double z = wrap(x);
    for (std::size_t j = 0; j < n; ++j) {
        s.add(f(z));
        z = map.apply(z);
    }
    return s.value();
}

// --------------------------------------------------------------------- mesh

/// Sorted nodes on [0, 1) starting at 0, read by periodic linear interpolation.
class Mesh {
public:
    static Mesh uniform(std::size_t n) {
        if (n < 2) throw DimensionError("Mesh: need at least 2 nodes");
        Mesh m;
        m.uniform_ = true;
        m.nodes_.resize(n);
        for (std::size_t i = 0; i < n; ++i) m.nodes_[i] = GridFunction::node(i, n);
        return m;
    }

    /// Spacing 1/n on [1/2, 1), halved on each dyadic scale [2^-(k+1), 2^-k) for k = 1..levels,
    /// constant below 2^-(levels+1).
    static Mesh refined(std::size_t n, int levels) {
        if (n < 4 || n % 2 != 0 || levels < 1) throw InvalidParameters("Mesh::refined: need even n >= 4, levels >= 1");
        Mesh m;
        m.uniform_ = false;
        const std::size_t half = n / 2;
        const double base = 1.0 / static_cast<double>(n);
        double lo = std::exp2(-(levels + 1));
        for (std::size_t i = 0; i < half; ++i) m.nodes_.push_back(lo * static_cast<double>(i) / static_cast<double>(half));
        for (int k = levels; k >= 1; --k) {
            double a = std::exp2(-(k + 1));
            double h = base * std::exp2(-k);
            for (std::size_t i = 0; i < half; ++i) m.nodes_.push_back(a + h * static_cast<double>(i));
        }
        for (std::size_t i = 0; i < half; ++i) m.nodes_.push_back(0.5 + base * static_cast<double>(i));
        return m;
    }

    std::size_t size() const { return nodes_.size(); }
    bool is_uniform() const { return uniform_; }
    double operator[](std::size_t i) const { return nodes_[i]; }
    const std::vector<double>& nodes() const { return nodes_; }

    /// Cell index j and weight t toward node j+1 (cyclic) for a point of [0, 1).
    std::pair<std::size_t, double> locate(double x) const {
        const std::size_t n = nodes_.size();
        x = wrap(x);
        if (uniform_) {
            double u = x * static_cast<double>(n);
            auto j = static_cast<std::size_t>(u);
            if (j >= n) j = n - 1;
            return {j, u - static_cast<double>(j)};
        }
        auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
        auto j = static_cast<std::size_t>(it - nodes_.begin()) - 1;
        double right = (j + 1 < n) ? nodes_[j + 1] : 1.0;
        return {j, (x - nodes_[j]) / (right - nodes_[j])};
    }

    double interpolate(const std::vector<double>& v, double x) const {
        auto [j, t] = locate(x);
        if (t == 0.0) return v[j];
        std::size_t k = (j + 1 == nodes_.size()) ? 0 : j + 1;
        return (1.0 - t) * v[j] + t * v[k];
    }

private:
    std::vector<double> nodes_;
    bool uniform_ = true;
};

// --------------------------------------------------------- transfer operator

/// L phi(z_i) = sum over pre-images y of z_i of e^{f(y)} phi(y), phi read by interpolation.
class TransferOperator {
public:
    struct Entry {
        double y;       // pre-image
        std::size_t j;  // mesh cell holding y
        double t;       // interpolation weight toward j+1
        double w;       // e^{f(y)}
    };

    template <class F>
    TransferOperator(const CircleMap& map, F&& potential, Mesh mesh, double tol = 1e-13)
        : mesh_(std::move(mesh)), nv_(static_cast<std::size_t>(map.branch_count())) {
        const std::size_t n = mesh_.size();
        entries_.resize(n * nv_);
        for (std::size_t i = 0; i < n; ++i) {
            auto pre = map.preimages(mesh_[i], tol);
            for (std::size_t k = 0; k < nv_; ++k) {
                const double y = pre[k];
                auto [j, t] = mesh_.locate(y);
                entries_[i * nv_ + k] = Entry{y, j, t, std::exp(potential(y))};
            }
        }
    }

    TransferOperator(const CircleMap& map, const Potential& f, Mesh mesh, double tol = 1e-13)
        : TransferOperator(map, [&f](double y) { return f(y); }, std::move(mesh), tol) {}

    const Mesh& mesh() const { return mesh_; }
    std::size_t size() const { return mesh_.size(); }
    std::size_t branches() const { return nv_; }
    const Entry& entry(std::size_t i, std::size_t k) const { return entries_[i * nv_ + k]; }

    std::vector<double> apply(const std::vector<double>& phi) const {
        const std::size_t n = mesh_.size();
        if (phi.size() != n) throw DimensionError("TransferOperator::apply: size mismatch");
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t k = 0; k < nv_; ++k) {
                const Entry& e = entries_[i * nv_ + k];
                std::size_t j1 = (e.j + 1 == n) ? 0 : e.j + 1;
                s += e.w * ((1.0 - e.t) * phi[e.j] + e.t * phi[j1]);
            }
            out[i] = s;
        }
        return out;
    }

private:
    Mesh mesh_;
    std::size_t nv_;
    std::vector<Entry> entries_;
};

inline GridFunction transfer_apply(const CircleMap& map, const Potential& f, const GridFunction& phi) {
    if (f.f.resolution() != phi.resolution()) throw DimensionError("transfer_apply: resolutions differ");
    TransferOperator op(map, f, Mesh::uniform(phi.resolution()));
    return GridFunction(op.apply(phi.values()));
}

// ----------------------------------------------------------- power iteration

struct PowerResult {
    double chi = 0.0;
    std::vector<double> h;  // sup-normalized nodal values
    double eigen_residual = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

inline double sup_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

inline PowerResult power_iterate(const TransferOperator& op, double tol = 1e-10, std::size_t max_iter = 5000) {
    if (!(tol > 0.0)) throw InvalidParameters("power_iterate: tol must be positive");
    PowerResult r;
    std::vector<double> phi(op.size(), 1.0);
    double diff_mark = std::numeric_limits<double>::infinity();
    for (std::size_t it = 1; it <= max_iter; ++it) {
        auto psi = op.apply(phi);
        double s = *std::max_element(psi.begin(), psi.end());
        for (double& v : psi) v /= s;
        double diff = sup_distance(psi, phi);
        phi.swap(psi);
        r.iterations = it;
        if (diff < tol) {
            r.converged = true;
            break;
        }
        if (it % 100 == 0) {
            if (diff_mark - diff < 1e-3 * tol) break;  // stagnation
            diff_mark = diff;
        }
    }
    auto lphi = op.apply(phi);
    r.chi = *std::max_element(lphi.begin(), lphi.end()) / *std::max_element(phi.begin(), phi.end());
    double res = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) res = std::max(res, std::fabs(lphi[i] / r.chi - phi[i]));
    r.eigen_residual = res / sup_norm(phi);
    r.h = std::move(phi);
    return r;
}

inline PowerResult power_iterate(const CircleMap& map, const Potential& f, std::size_t N, double tol = 1e-10,
                                 std::size_t max_iter = 5000) {
    if (N < 256) throw InvalidParameters("power_iterate: N must be >= 256");
    if (f.f.resolution() != N) throw DimensionError("power_iterate: potential resolution differs from N");
    return power_iterate(TransferOperator(map, f, Mesh::uniform(N)), tol, max_iter);
}

// ------------------------------------------------------- normalized potential

inline GridFunction normalized_potential(const CircleMap& map, const Potential& f, const GridFunction& h,
                                         double chi) {
    if (!(chi > 0.0)) throw DomainError("normalized_potential: chi must be positive");
    if (!(h.min() > 0.0)) throw DomainError("normalized_potential: h must be positive");
    if (h.resolution() != f.f.resolution()) throw DimensionError("normalized_potential: resolutions differ");
    const double lc = std::log(chi);
    std::vector<double> v(h.resolution());
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = f.f[i] + std::log(h[i]) - std::log(h(map.apply(h.node(i)))) - lc;
    return GridFunction(std::move(v));
}

/// sup |L_g 1 - 1| for a potential g given on the nodes.
inline double normalization_defect(const CircleMap& map, const GridFunction& g) {
    TransferOperator op(map, [&g](double y) { return g(y); }, Mesh::uniform(g.resolution()));
    auto one = op.apply(std::vector<double>(g.resolution(), 1.0));
    double m = 0.0;
    for (double v : one) m = std::max(m, std::fabs(v - 1.0));
    return m;
}

// --------------------------------------------------------------- Ulam chain

/// Row-stochastic sparse matrix, row i listing (column, probability).
struct StochasticRows {
    std::size_t n = 0;
    std::vector<std::size_t> offsets;  // n + 1
    std::vector<std::size_t> cols;
    std::vector<double> probs;

    std::vector<double> left_multiply(const std::vector<double>& v) const {
        std::vector<double> out(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double vi = v[i];
            for (std::size_t e = offsets[i]; e < offsets[i + 1]; ++e) out[cols[e]] += vi * probs[e];
        }
        return out;
    }
};

namespace detail {

/// Rows built from the operator's interpolation stencil, weight(i, k, node) per piece, then normalized.
template <class W>
StochasticRows stencil_rows(const TransferOperator& op, W&& weight) {
    StochasticRows P;
    const std::size_t n = op.size();
    P.n = n;
    P.offsets.resize(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t start = P.cols.size();
        double total = 0.0;
        for (std::size_t k = 0; k < op.branches(); ++k) {
            const auto& e = op.entry(i, k);
            std::size_t j1 = (e.j + 1 == n) ? 0 : e.j + 1;
            double a = (1.0 - e.t) * weight(i, k, e.j);
            double b = e.t * weight(i, k, j1);
            if (a > 0.0) { P.cols.push_back(e.j); P.probs.push_back(a); total += a; }
            if (b > 0.0) { P.cols.push_back(j1); P.probs.push_back(b); total += b; }
        }
        if (!(total > 0.0)) throw DomainError("Ulam row with zero mass");
        for (std::size_t e = start; e < P.cols.size(); ++e) P.probs[e] /= total;
        P.offsets[i + 1] = P.cols.size();
    }
    return P;
}

}  // namespace detail

struct UlamResult {
    DiscreteMeasure mu;
    std::size_t iterations = 0;
    double defect = 0.0;  // TV change of the last dual step
    bool converged = false;
    bool irreducible = true;
    StochasticRows P;
};

inline UlamResult stationary_distribution(StochasticRows P, double tol, std::size_t max_iter = 200000) {
    UlamResult r;
    const std::size_t n = P.n;
    std::vector<double> pi(n, 1.0 / static_cast<double>(n));
    for (std::size_t it = 1; it <= max_iter; ++it) {
        auto next = P.left_multiply(pi);
        double s = stable_sum(next);
        for (double& v : next) v /= s;
        r.defect = tv_distance(next, pi);
        pi.swap(next);
        r.iterations = it;
        if (r.defect <= tol) {
            r.converged = true;
            break;
        }
    }
    r.irreducible = *std::min_element(pi.begin(), pi.end()) > 0.0;
    r.mu = DiscreteMeasure::normalized(std::move(pi));
    r.P = std::move(P);
    return r;
}

/// Each cell sends its mass to the cells of its pre-images, proportionally to e^{f_tilde}.
inline UlamResult ulam_invariant_measure(const CircleMap& map, const GridFunction& f_tilde, std::size_t N,
                                         double tol = 1e-13) {
    if (f_tilde.resolution() != N) throw DimensionError("ulam_invariant_measure: resolution mismatch");
    if (normalization_defect(map, f_tilde) >= 0.05)
        throw DomainError("ulam_invariant_measure: potential is not normalized (defect >= 0.05)");
    TransferOperator op(map, [&f_tilde](double y) { return f_tilde(y); }, Mesh::uniform(N));
    auto P = detail::stencil_rows(op, [&](std::size_t i, std::size_t k, std::size_t) { return op.entry(i, k).w; });
    return stationary_distribution(std::move(P), tol);
}

/// Same chain written as the exact similarity transform D_h^{-1} L D_h / chi of the discrete operator,
/// so that mu / h is the left eigenvector of that operator.
inline UlamResult ulam_from_eigendata(const TransferOperator& op, const std::vector<double>& h, double chi,
                                      double tol = 1e-14) {
    if (h.size() != op.size()) throw DimensionError("ulam_from_eigendata: size mismatch");
    auto P = detail::stencil_rows(op, [&](std::size_t i, std::size_t k, std::size_t j) {
        return op.entry(i, k).w * h[j] / (chi * h[i]);
    });
    return stationary_distribution(std::move(P), tol);
}

/// Second-largest eigenvalue modulus of P by power iteration with the stationary direction removed.
inline double spectral_gap_estimate(const StochasticRows& P, const std::vector<double>& pi,
                                    std::size_t iters = 400, std::uint64_t seed = 7) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::vector<double> v(P.n);
    for (double& x : v) x = U(rng);
    auto deflate = [&](std::vector<double>& w) {
        double s = stable_sum(w);
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= s * pi[i];
        double nrm = 0.0;
        for (double x : w) nrm += std::fabs(x);
        return nrm;
    };
    double n0 = deflate(v);
    for (double& x : v) x /= n0;
    const std::size_t window = iters / 4;
    double log_growth = 0.0;
    std::size_t counted = 0;
    for (std::size_t it = 1; it <= iters; ++it) {
        v = P.left_multiply(v);
        double nrm = deflate(v);
        if (!(nrm > 1e-300)) return 0.0;
        for (double& x : v) x /= nrm;
        if (it > iters - window) {
            log_growth += std::log(nrm);
            ++counted;
        }
    }
    return std::exp(log_growth / static_cast<double>(counted));
}

// ------------------------------------------------------------- eigenmeasure

struct EigenmeasureResult {
    DiscreteMeasure nu;
    GridFunction h;  // rescaled so that sum h_i nu_i = 1
};

inline EigenmeasureResult eigenmeasure(const DiscreteMeasure& mu, const GridFunction& h) {
    if (mu.resolution() != h.resolution()) throw DimensionError("eigenmeasure: resolution mismatch");
    if (!(h.min() > 0.0)) throw DomainError("eigenmeasure: h must be positive");
    std::vector<double> w(mu.resolution());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = mu[i] / h[i];
    const double z = stable_sum(w);
    auto nu = DiscreteMeasure::normalized(std::move(w));
    std::vector<double> hv(h.values());
    for (double& v : hv) v *= z;
    GridFunction hs(std::move(hv));
    // absorb the last rounding so that sum h nu = 1 to machine precision
    const double pair = integrate(hs, nu);
    std::vector<double> hv2(hs.values());
    for (double& v : hv2) v /= pair;
    return {std::move(nu), GridFunction(std::move(hv2))};
}

/// sup over a fixed 8-function basis of |int L phi dnu - chi int phi dnu|.
inline double dual_residual(const TransferOperator& op, const DiscreteMeasure& nu, double chi) {
    const std::size_t n = op.size();
    double worst = 0.0;
    const double tau = 2.0 * std::numbers::pi;
    std::vector<std::function<double(double)>> basis = {
        [](double) { return 1.0; },
        [=](double x) { return std::cos(tau * x); },     [=](double x) { return std::sin(tau * x); },
        [=](double x) { return std::cos(2 * tau * x); }, [=](double x) { return std::sin(2 * tau * x); },
        [=](double x) { return std::cos(3 * tau * x); }, [=](double x) { return std::sin(3 * tau * x); },
        [=](double x) { return std::cos(8 * tau * x); }};
    for (const auto& b : basis) {
        std::vector<double> phi(n);
        for (std::size_t i = 0; i < n; ++i) phi[i] = b(op.mesh()[i]);
        auto lphi = op.apply(phi);
        CompensatedSum a, c;
        for (std::size_t i = 0; i < n; ++i) {
            a.add(lphi[i] * nu[i]);
            c.add(phi[i] * nu[i]);
        }
        worst = std::max(worst, std::fabs(a.value() - chi * c.value()) / chi);
    }
    return worst;
}

/// sup_j |mu(T^{-1} C_j) - mu(C_j)|, cells C_j = [j/N, (j+1)/N), partial cells pro-rated.
inline double invariance_residual(const CircleMap& map, const DiscreteMeasure& mu, double tol = 1e-13) {
    const std::size_t n = mu.resolution();
    const int nv = map.branch_count();
    std::vector<double> roots(static_cast<std::size_t>(nv) * n + 1);
    for (std::size_t m = 0; m + 1 < roots.size(); ++m) {
        double v = static_cast<double>(m) / static_cast<double>(n);
        roots[m] = map.lift_inverse(v, tol);
    }
    roots.back() = 1.0;
    double worst = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double mass = 0.0;
        for (int k = 0; k < nv; ++k) {
            std::size_t m = static_cast<std::size_t>(k) * n + j;
            mass += mu.cdf(roots[m + 1]) - mu.cdf(roots[m]);
        }
        worst = std::max(worst, std::fabs(mass - mu[j]));
    }
    return worst;
}

/// sup over cos/sin(2 pi k x), k = 1..8, of |int phi o T dmu - int phi dmu|, node values as cell representatives.
inline double weak_invariance_residual(const CircleMap& map, const DiscreteMeasure& mu) {
    const std::size_t n = mu.resolution();
    const double tau = 2.0 * std::numbers::pi;
    std::vector<double> x(n), tx(n);
    for (std::size_t j = 0; j < n; ++j) {
        x[j] = static_cast<double>(j) / static_cast<double>(n);
        tx[j] = map.apply(x[j]);
    }
    double worst = 0.0;
    for (int k = 1; k <= 8; ++k) {
        CompensatedSum c0, c1, s0, s1;
        for (std::size_t j = 0; j < n; ++j) {
            c0.add(mu[j] * std::cos(tau * k * tx[j]));
            c1.add(mu[j] * std::cos(tau * k * x[j]));
            s0.add(mu[j] * std::sin(tau * k * tx[j]));
            s1.add(mu[j] * std::sin(tau * k * x[j]));
        }
        worst = std::max({worst, std::fabs(c0.value() - c1.value()), std::fabs(s0.value() - s1.value())});
    }
    return worst;
}

// ------------------------------------------------------------ spectral data

struct SpectralData {
    double chi = 0.0;
    GridFunction h;
    DiscreteMeasure nu;
    DiscreteMeasure mu;
    double eigen_residual = 0.0;
    double invariance_residual = 0.0;
    double weak_invariance_residual = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    double spectral_gap_est = 0.0;
    double normalized_defect = 0.0;  // sup |L_{f~} 1 - 1|
    double dual_residual = 0.0;
    std::size_t ulam_iterations = 0;
    bool ulam_converged = false;
    bool ulam_irreducible = true;
};

struct SpectralOptions {
    double tol = 1e-10;
    std::size_t max_iter = 5000;
    double ulam_tol = 1e-14;
    double preimage_tol = 1e-13;
};

inline SpectralData solve_spectral(const CircleMap& map, const Potential& f, const TransferOperator& op,
                                   const SpectralOptions& opt = {}) {
    if (!op.mesh().is_uniform() || op.size() != f.f.resolution())
        throw DimensionError("solve_spectral: needs the uniform mesh of the potential");
    SpectralData d;
    auto pr = power_iterate(op, opt.tol, opt.max_iter);
    d.chi = pr.chi;
    d.eigen_residual = pr.eigen_residual;
    d.iterations = pr.iterations;
    d.converged = pr.converged;
    if (!(*std::min_element(pr.h.begin(), pr.h.end()) > 0.0)) throw DomainError("solve_spectral: h not positive");

    auto ulam = ulam_from_eigendata(op, pr.h, pr.chi, opt.ulam_tol);
    d.ulam_iterations = ulam.iterations;
    d.ulam_converged = ulam.converged;
    d.ulam_irreducible = ulam.irreducible;
    d.spectral_gap_est = spectral_gap_estimate(ulam.P, ulam.mu.weights());

    auto em = eigenmeasure(ulam.mu, GridFunction(pr.h));
    d.nu = std::move(em.nu);
    d.h = std::move(em.h);
    d.mu = std::move(ulam.mu);
    d.invariance_residual = invariance_residual(map, d.mu, opt.preimage_tol);
    d.weak_invariance_residual = weak_invariance_residual(map, d.mu);
    d.normalized_defect = normalization_defect(map, normalized_potential(map, f, d.h, d.chi));
    d.dual_residual = dual_residual(op, d.nu, d.chi);
    return d;
}

inline SpectralData solve_spectral(const CircleMap& map, const Potential& f, const SpectralOptions& opt = {}) {
    TransferOperator op(map, f, Mesh::uniform(f.f.resolution()), opt.preimage_tol);
    return solve_spectral(map, f, op, opt);
}

// ------------------------------------------------------ convergence of iterates

namespace detail {
inline double nu_pairing(const std::vector<double>& v, const DiscreteMeasure& nu) {
    CompensatedSum a;
    for (std::size_t i = 0; i < v.size(); ++i) a.add(v[i] * nu[i]);
    return a.value();
}
}  // namespace detail

/// sup |chi^{-n} L^n phi - h int phi dnu| for each n in n_list (ascending), evaluated as
/// (L/chi - h (x) nu)^n phi: the h-component is removed once and then after every step.
inline std::vector<double> iterate_convergence(const TransferOperator& op, const std::vector<double>& phi,
                                               const SpectralData& data, const std::vector<std::size_t>& n_list) {
    const std::size_t n = op.size();
    if (phi.size() != n || data.h.resolution() != n) throw DimensionError("iterate_convergence: size mismatch");
    auto deflate = [&](std::vector<double>& v) {
        const double m = detail::nu_pairing(v, data.nu);
        for (std::size_t i = 0; i < n; ++i) v[i] -= data.h[i] * m;
    };
    std::vector<double> cur = phi;
    deflate(cur);
    std::vector<double> out;
    std::size_t done = 0;
    for (std::size_t target : n_list) {
        if (target < done) throw InvalidParameters("iterate_convergence: n_list must be ascending");
        for (; done < target; ++done) {
            cur = op.apply(cur);
            for (double& v : cur) v /= data.chi;
            deflate(cur);
        }
        out.push_back(sup_norm(cur));
    }
    return out;
}

/// Same quantity by literal iteration of phi; floors at roughly n * eigen_residual.
inline std::vector<double> iterate_convergence_literal(const TransferOperator& op, const std::vector<double>& phi,
                                                       const SpectralData& data,
                                                       const std::vector<std::size_t>& n_list) {
    const std::size_t n = op.size();
    if (phi.size() != n || data.h.resolution() != n) throw DimensionError("iterate_convergence: size mismatch");
    const double mass = detail::nu_pairing(phi, data.nu);
    std::vector<double> limit(n);
    for (std::size_t i = 0; i < n; ++i) limit[i] = data.h[i] * mass;
    std::vector<double> cur = phi;
    std::vector<double> out;
    std::size_t done = 0;
    for (std::size_t target : n_list) {
        if (target < done) throw InvalidParameters("iterate_convergence: n_list must be ascending");
        for (; done < target; ++done) {
            cur = op.apply(cur);
            for (double& v : cur) v /= data.chi;
        }
        out.push_back(sup_distance(cur, limit));
    }
    return out;
}

/// Number of arcs of length rho1 needed to cover the circle with overlapping open arcs.
inline std::size_t cover_size(double rho1) {
    if (!(rho1 > 0.0)) throw InvalidParameters("cover_size: rho1 must be positive");
    return static_cast<std::size_t>(std::floor(1.0 / rho1)) + 1;
}

}  // namespace rpf
