// Stage runner behind the command-line front-end: artifact I/O, the five stages and the run summary.
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rpf/config.hpp"
#include "rpf/legendre.hpp"
#include "rpf/thermo.hpp"

namespace rpf::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// ------------------------------------------------------------------ artifacts

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_text(const fs::path& p, const std::string& s) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw Error("cannot write " + p.string());
    os << s;
}

inline void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

inline void write_columns(const fs::path& p, const std::string& header, const std::vector<double>& a,
                          const std::vector<double>& b) {
    std::string s = header + "\n";
    for (std::size_t i = 0; i < a.size(); ++i) s += fmt(a[i]) + "," + fmt(b[i]) + "\n";
    write_text(p, s);
}

inline std::string read_text(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw DependencyError("missing prior artifact: " + p.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

/// Second column of a two-column CSV with a header line.
inline std::vector<double> read_column(const fs::path& p) {
    std::istringstream is(read_text(p));
    std::string line;
    std::getline(is, line);
    std::vector<double> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos) throw DependencyError("malformed artifact: " + p.string());
        out.push_back(std::strtod(line.c_str() + comma + 1, nullptr));
    }
    return out;
}

inline json read_json(const fs::path& p) {
    try {
        return json::parse(read_text(p));
    } catch (const json::exception&) {
        throw DependencyError("malformed artifact: " + p.string());
    }
}

inline double num(const json& j) {
    return j.is_number() ? j.get<double>() : std::numeric_limits<double>::quiet_NaN();
}

// ------------------------------------------------------------------- context

struct Options {
    fs::path out;
    bool plot_data = false;
};

struct StageResult {
    std::string name;
    std::string status = "ok";  // ok | property-failed | skipped | error
    std::string reason;
    std::vector<std::string> artifacts;
    json properties = json::object();
    json headline = json::object();
    double seconds = 0.0;

    void check(const std::string& prop, bool ok) {
        properties[prop] = ok;
        if (!ok && status == "ok") status = "property-failed";
    }
};

/// Objects every stage rebuilds from the configuration alone (cheap, deterministic).
struct Setup {
    CircleMap map;
    Modulus omega;
    Modulus Omega;
    std::optional<LegendreResult> legendre;
    std::vector<double> cs;
    std::vector<CompatibilityReport> compat;
    std::string verdict;
    double C1 = 0.0;
    config::Expression potential_expr;
};

inline std::string overall_verdict(const std::vector<CompatibilityReport>& reps) {
    bool all_pos = true, any_van = false;
    for (const auto& r : reps) {
        all_pos = all_pos && r.verdict == Verdict::positive_evidence;
        any_van = any_van || r.verdict == Verdict::vanishing;
    }
    if (all_pos) return to_string(Verdict::positive_evidence);
    return any_van ? to_string(Verdict::vanishing) : to_string(Verdict::inconclusive);
}

inline Setup make_setup(const config::RunConfig& cfg) {
    Setup s{cfg.map.build(), cfg.omega.build(), Modulus{}, std::nullopt, {}, {}, "", 0.0, cfg.potential_expr()};
    if (cfg.Omega.is_legendre()) {
        const double tau = cfg.Omega.tau.value_or(std::min(s.omega.window(), 0.25));
        s.legendre = build_omega_legendre(s.map, s.omega, tau, cfg.Omega.grid);
        s.Omega = s.legendre->Omega;
    } else {
        s.Omega = cfg.Omega.build();
    }
    s.cs = cfg.c_sweep.empty() ? std::vector<double>{default_c(s.map)} : cfg.c_sweep;
    s.C1 = std::numeric_limits<double>::infinity();
    for (double c : s.cs) {
        s.compat.push_back(check_compatibility(s.map, s.omega, s.Omega, c, cfg.x_min));
        s.C1 = std::min(s.C1, s.compat.back().C1);
    }
    s.verdict = overall_verdict(s.compat);
    if (!(s.C1 > 0.0)) s.C1 = 0.0;
    return s;
}

inline Potential make_f(const Setup& s, std::size_t N, std::uint64_t seed) {
    const config::Expression& e = s.potential_expr;
    auto f = make_potential(GridFunction::sample(N, [&e](double x) { return e(x); }), s.omega, seed);
    if (s.C1 > 0.0) f.set_C1(s.C1);
    return f;
}

inline SpectralData load_spectral(const fs::path& out, std::size_t expected_N) {
    const json diag = read_json(out / "diagnostics.json");
    auto h = read_column(out / "h.csv");
    auto nu = read_column(out / "nu.csv");
    auto mu = read_column(out / "mu.csv");
    const auto N = diag.at("N").get<std::size_t>();
    if (h.size() != N || nu.size() != N || mu.size() != N)
        throw DependencyError("artifacts in " + out.string() + " disagree on the grid size");
    if (N != expected_N)
        throw DependencyError("artifacts in " + out.string() + " were computed at N = " + std::to_string(N) +
                              ", requested N = " + std::to_string(expected_N));
    SpectralData d;
    d.chi = diag.at("chi").get<double>();
    d.h = GridFunction(std::move(h));
    d.nu = DiscreteMeasure(std::move(nu));
    d.mu = DiscreteMeasure(std::move(mu));
    d.eigen_residual = num(diag.at("eigen_residual"));
    d.invariance_residual = num(diag.at("invariance_residual"));
    d.iterations = diag.at("iterations").get<std::size_t>();
    return d;
}

inline std::vector<double> cell_lefts(std::size_t n) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = GridFunction::node(i, n);
    return x;
}

// -------------------------------------------------------------------- stages

inline void stage_compat(const config::RunConfig&, const Setup& s, const Options& o, StageResult& r) {
    json reports = json::array();
    std::string csv = "c,x,value\n";
    for (const auto& rep : s.compat) {
        reports.push_back({{"c", rep.c},
                           {"liminf_estimate", rep.liminf_estimate},
                           {"C1", rep.C1},
                           {"last_decade_min", rep.last_decade_min},
                           {"prev_decade_min", rep.prev_decade_min},
                           {"tail_slope", rep.tail_slope},
                           {"verdict", to_string(rep.verdict)}});
        for (std::size_t i = 0; i < rep.grid.size(); ++i)
            csv += fmt(rep.c) + "," + fmt(rep.grid[i]) + "," + fmt(rep.values[i]) + "\n";
    }
    json j = {{"verdict", s.verdict},
              {"C1", s.C1},
              {"omega", s.omega.provenance().describe()},
              {"Omega", s.Omega.provenance().describe()},
              {"reports", reports}};
    write_json(o.out / "compat.json", j);
    write_text(o.out / "compat.csv", csv);
    r.artifacts = {"compat.json", "compat.csv"};
    r.headline["compat_verdict"] = s.verdict;
    r.headline["compat_liminf"] = s.compat.front().liminf_estimate;
    r.check("positive_evidence", s.verdict == to_string(Verdict::positive_evidence));
}

inline void stage_omega(const config::RunConfig&, const Setup& s, const Options& o, StageResult& r) {
    std::vector<double> xs, vs;
    json j = {{"kind", s.Omega.provenance().describe()}, {"window", s.Omega.window()}};
    if (s.legendre) {
        xs = s.legendre->y;
        vs = s.legendre->Omega_grid;
        j["tau"] = s.legendre->tau;
        j["nodes"] = xs.size();
        j["max_theta1_star"] = s.legendre->max_theta1_star;
        j["hull_gap"] = s.legendre->hull_gap;
    } else {
        const double la = std::log(1e-14), lb = std::log(s.Omega.window());
        xs.push_back(0.0);
        for (int i = 0; i < 2000; ++i) xs.push_back(std::exp(la + (lb - la) * i / 1999.0));
        for (double x : xs) vs.push_back(s.Omega(x));
    }
    const bool concave = midpoint_concave([&](double x) { return s.Omega(x); }, s.Omega.window(), 400, 1e-14, 1e-9);
    j["Omega_half"] = s.Omega(0.5);
    j["concave"] = concave;
    write_columns(o.out / "Omega.csv", "x,Omega", xs, vs);
    write_json(o.out / "omega.json", j);
    r.artifacts = {"Omega.csv", "omega.json"};
    r.check("concave", concave);
    if (s.legendre) r.check("hull_agrees", s.legendre->hull_gap <= 1e-6 * (1.0 + vs.back()));
}

inline void stage_rpf(const config::RunConfig& cfg, const Setup& s, const Options& o, StageResult& r) {
    const std::size_t N = cfg.grid;
    auto f = make_f(s, N, cfg.seed);
    TransferOperator op(s.map, f, Mesh::uniform(N));
    SpectralOptions so;
    so.tol = cfg.tol;
    so.max_iter = cfg.max_iter;
    auto d = solve_spectral(s.map, f, op, so);
    auto ft = normalized_potential(s.map, f, d.h, d.chi);

    std::vector<double> phi(N);
    for (std::size_t i = 0; i < N; ++i) phi[i] = std::cos(2.0 * std::numbers::pi * GridFunction::node(i, N));
    const std::vector<std::size_t> ns = {50, 100, 150, 200};
    auto conv = iterate_convergence(op, phi, d, ns);
    bool decays = conv.back() <= 0.5 * conv.front();
    for (std::size_t i = 1; i < conv.size(); ++i) decays = decays && conv[i] <= conv[i - 1];

    const auto ec = estimate_rho0(s.map, 20000, cfg.seed);

    json j = {{"chi", d.chi},
              {"eigen_residual", d.eigen_residual},
              {"invariance_residual", d.invariance_residual},
              {"iterations", d.iterations},
              {"spectral_gap_est", d.spectral_gap_est},
              {"N", N},
              {"converged", d.converged},
              {"weak_invariance_residual", d.weak_invariance_residual},
              {"normalized_defect", d.normalized_defect},
              {"dual_residual", d.dual_residual},
              {"ulam_iterations", d.ulam_iterations},
              {"ulam_converged", d.ulam_converged},
              {"ulam_irreducible", d.ulam_irreducible},
              {"h_min", d.h.min()},
              {"h_max", d.h.max()},
              {"omega_seminorm_est", f.omega_seminorm_est},
              {"kappa_f", f.kappa_f},
              {"rho0_hat", ec.rho0_hat},
              {"rho_V_hat", ec.rho_V_hat},
              {"rho1", ec.rho1},
              {"convergence_n", ns},
              {"convergence_sup", conv}};
    if (cfg.refine_levels > 0) {
        TransferOperator ref(s.map, f, Mesh::refined(N, static_cast<int>(cfg.refine_levels)));
        auto pr = power_iterate(ref, cfg.tol, cfg.max_iter);
        j["chi_refined"] = pr.chi;
        j["refine_levels"] = cfg.refine_levels;
        r.check("refined_grid_agrees", std::fabs(pr.chi - d.chi) <= 5e-4 * d.chi);
    }

    const auto x = cell_lefts(N);
    write_columns(o.out / "h.csv", "x,value", x, d.h.values());
    write_columns(o.out / "f_tilde.csv", "x,value", x, ft.values());
    write_columns(o.out / "nu.csv", "cell_left,weight", x, d.nu.weights());
    write_columns(o.out / "mu.csv", "cell_left,weight", x, d.mu.weights());
    write_json(o.out / "diagnostics.json", j);
    r.artifacts = {"h.csv", "f_tilde.csv", "nu.csv", "mu.csv", "diagnostics.json"};
    if (o.plot_data) {
        write_columns(o.out / "plot_h.csv", "x,h", x, d.h.values());
        std::vector<std::size_t> all_n;
        for (std::size_t n = 0; n <= 200; n += 5) all_n.push_back(n);
        auto a = iterate_convergence(op, phi, d, all_n);
        auto b = iterate_convergence_literal(op, phi, d, all_n);
        std::string csv = "n,sup_distance,sup_distance_literal\n";
        for (std::size_t i = 0; i < all_n.size(); ++i)
            csv += std::to_string(all_n[i]) + "," + fmt(a[i]) + "," + fmt(b[i]) + "\n";
        write_text(o.out / "plot_convergence.csv", csv);
        r.artifacts.push_back("plot_h.csv");
        r.artifacts.push_back("plot_convergence.csv");
    }
    r.headline["chi"] = d.chi;
    r.headline["eigen_residual"] = d.eigen_residual;
    r.check("converged", d.converged);
    r.check("eigen_residual", d.eigen_residual <= 1e-2);
    r.check("h_positive", d.h.min() > 0.0);
    r.check("ulam_converged", d.ulam_converged && d.ulam_irreducible);
    r.check("normalized", d.normalized_defect < 0.05);
    r.check("iterates_converge", decays);
}

inline void stage_thermo(const config::RunConfig& cfg, const Setup& s, const Options& o, StageResult& r) {
    auto d = load_spectral(o.out, cfg.grid);
    auto f = make_f(s, cfg.grid, cfg.seed);
    auto t = thermo_report(s.map, f, d, cfg.cover_n_max, cfg.seed);
    json j = {{"pressure", t.pressure},
              {"entropy", t.entropy},
              {"f_integral", t.f_integral},
              {"identity_gap", t.identity_gap},
              {"dirac_margin", t.dirac_margin},
              {"cover_pressure_lower", t.cover_pressure_lower},
              {"cover_pressures", t.cover_pressures},
              {"reciprocal_defect", t.reciprocal_defect}};
    if (f.f.max() - f.f.min() > 1e-12) {
        // equilibrium state of the zero potential as the competitor
        auto zero = constant_potential(cfg.grid, 0.0);
        auto dz = solve_spectral(s.map, zero);
        const double fe = free_energy_of(s.map, zero, dz, f);
        j["competitor_free_energy"] = fe;
        r.check("strict_for_competitor", fe <= t.pressure - 1e-3);
    }
    write_json(o.out / "thermo.json", j);
    r.artifacts = {"thermo.json"};
    r.headline["pressure"] = t.pressure;
    r.headline["entropy"] = t.entropy;
    r.headline["identity_gap"] = t.identity_gap;
    r.check("identity_gap", t.identity_gap <= 5e-2);
    r.check("dirac_margin", t.dirac_margin > 0.0);
    r.check("cover_lower_bound", t.cover_pressure_lower >= t.pressure - 0.05);
}

inline void stage_gibbs(const config::RunConfig& cfg, const Setup& s, const Options& o, StageResult& r) {
    auto d = load_spectral(o.out, cfg.grid);
    auto f = make_f(s, cfg.grid, cfg.seed);
    const auto ec = estimate_rho0(s.map, 20000, cfg.seed);
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<double> xs(cfg.gibbs.centers);
    for (double& x : xs) x = U(rng);
    std::sort(xs.begin(), xs.end());
    auto g = gibbs_report(s.map, f, d, cfg.gibbs.r, xs, cfg.gibbs.n_max, ec.rho1, s.Omega(0.5));

    std::string csv = "x,n,r,ball_left,ball_right,ball_mass,birkhoff,ratio,resolved\n";
    for (const auto& row : g.rows)
        csv += fmt(row.x) + "," + std::to_string(row.n) + "," + fmt(row.r) + "," + fmt(row.ball_left) + "," +
               fmt(row.ball_right) + "," + fmt(row.ball_mass) + "," + fmt(row.birkhoff) + "," + fmt(row.ratio) +
               "," + (row.resolved ? "1" : "0") + "\n";
    json bands = json::array();
    std::string spread_csv = "n,low,high,spread\n";
    for (const auto& b : g.bands) {
        bool any = std::isfinite(b.low) && b.high > 0.0;
        bands.push_back({{"n", b.n}, {"low", b.low}, {"high", b.high}, {"spread", any ? b.spread() : 0.0}});
        if (any) spread_csv += std::to_string(b.n) + "," + fmt(b.low) + "," + fmt(b.high) + "," + fmt(b.spread()) + "\n";
    }
    const auto& last = g.bands.back();
    const auto& ref = g.bands[std::min<std::size_t>(4, cfg.gibbs.n_max)];
    const bool band_ok = g.K_low > 0.0 && std::isfinite(g.K_high) && std::isfinite(g.K_low);
    const bool spread_ok = band_ok && std::isfinite(last.low) && std::isfinite(ref.low) &&
                           last.spread() <= 3.0 * ref.spread();
    json j = {{"r", g.r},
              {"rho1", ec.rho1},
              {"centers", xs.size()},
              {"n_max", cfg.gibbs.n_max},
              {"K_low", g.K_low},
              {"K_high", g.K_high},
              {"ceiling", g.ceiling},
              {"unresolved", g.unresolved},
              {"bands", bands}};
    write_text(o.out / "gibbs.csv", csv);
    write_json(o.out / "gibbs.json", j);
    r.artifacts = {"gibbs.csv", "gibbs.json"};
    if (o.plot_data) {
        write_text(o.out / "plot_gibbs_spread.csv", spread_csv);
        r.artifacts.push_back("plot_gibbs_spread.csv");
    }
    r.headline["gibbs_spread"] = band_ok ? last.spread() : std::numeric_limits<double>::quiet_NaN();
    r.check("positive_finite_band", band_ok);
    r.check("spread_bounded", spread_ok);
}

// ----------------------------------------------------------------------- run

struct RunSummary {
    std::vector<StageResult> stages;
    int exit_code = 0;
};

using StageFn = void (*)(const config::RunConfig&, const Setup&, const Options&, StageResult&);

inline StageFn stage_by_name(const std::string& n) {
    if (n == "compat") return stage_compat;
    if (n == "omega") return stage_omega;
    if (n == "rpf") return stage_rpf;
    if (n == "thermo") return stage_thermo;
    if (n == "gibbs") return stage_gibbs;
    throw InvalidParameters("unknown stage " + n);
}

inline void write_summary(const config::RunConfig& cfg, const Options& o, const RunSummary& s) {
    json stages = json::array();
    json head = json::object();
    for (const auto& st : s.stages) {
        json e = {{"stage", st.name}, {"status", st.status}};
        if (!st.reason.empty()) e["reason"] = st.reason;
        e["artifacts"] = st.artifacts;
        e["properties"] = st.properties;
        stages.push_back(e);
        for (const auto& [k, v] : st.headline.items()) head[k] = v;
    }
    json j = {{"seed", cfg.seed}, {"grid", cfg.grid}, {"exit_code", s.exit_code}, {"stages", stages}, {"headline", head}};
    write_json(o.out / "summary.json", j);

    std::string txt;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-8s %-16s %9s  %s\n", "stage", "status", "seconds", "detail");
    txt += buf;
    for (const auto& st : s.stages) {
        std::string detail = st.reason;
        for (const auto& [k, v] : st.properties.items())
            if (!v.get<bool>()) detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + k;
        std::snprintf(buf, sizeof buf, "%-8s %-16s %9.3f  %s\n", st.name.c_str(), st.status.c_str(), st.seconds,
                      detail.c_str());
        txt += buf;
    }
    txt += "\nseed " + std::to_string(cfg.seed) + ", grid " + std::to_string(cfg.grid) + "\n";
    for (const auto& [k, v] : head.items()) txt += k + " = " + v.dump() + "\n";
    write_text(o.out / "summary.txt", txt);
}

/// Runs the named stages in order. Errors halt downstream stages; `all` skips the
/// spectral stages when the compatibility verdict is not positive.
inline RunSummary run(const config::RunConfig& cfg, const Options& o, const std::vector<std::string>& names,
                      bool gate_on_compat) {
    RunSummary sum;
    fs::create_directories(o.out);
    std::optional<Setup> setup;
    std::string halt;
    for (const auto& name : names) {
        StageResult r;
        r.name = name;
        if (!halt.empty()) {
            r.status = "skipped";
            r.reason = halt;
            sum.stages.push_back(r);
            continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        try {
            if (!setup) setup = make_setup(cfg);
            const bool spectral = name == "rpf" || name == "thermo" || name == "gibbs";
            if (gate_on_compat && spectral && setup->verdict != to_string(Verdict::positive_evidence)) {
                r.status = "skipped";
                r.reason = "compat verdict is " + setup->verdict + ", no compatible pair for the construction";
            } else {
                stage_by_name(name)(cfg, *setup, o, r);
            }
        } catch (const std::exception& e) {
            r.status = "error";
            r.reason = "[" + name + "] " + e.what();
            halt = "upstream stage " + name + " failed";
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        sum.stages.push_back(r);
    }
    for (const auto& st : sum.stages) {
        if (st.status == "error") sum.exit_code = 1;
        else if (sum.exit_code == 0 && st.status != "ok") sum.exit_code = 2;
    }
    write_summary(cfg, o, sum);
    return sum;
}

}  // namespace rpf::pipeline
