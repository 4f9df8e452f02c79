#pragma once

// Command-line front end. Every command reads one JSON config, computes
// everything in memory, and only then writes its outputs (never replacing
// existing files) followed by a manifest.
//
// Exit codes: 0 success, 1 a check failed, 2 configuration or input error.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "lbd/boundary.hpp"
#include "lbd/discrete.hpp"
#include "lbd/error.hpp"
#include "lbd/io.hpp"
#include "lbd/model.hpp"
#include "lbd/simulate.hpp"
#include "lbd/svg.hpp"
#include "lbd/value.hpp"

namespace lbd::app {

using io::Json;
namespace fs = std::filesystem;

enum ExitCode : int { kSuccess = 0, kCheckFailure = 1, kInputError = 2 };

struct Options {
    std::string config;
    std::string out = "out";
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t grid = 0;
    bool grid_set = false;
    bool quiet = false;
    std::string boundary;             ///< verify: CSV to check instead of solving
    std::vector<std::string> inputs;  ///< plot: CSV files
};

namespace detail {

/// Outputs staged in memory and written together at the end of a command.
class Outputs {
public:
    explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

    void add(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }

    void commit(io::RunManifest& manifest, std::chrono::steady_clock::time_point start) {
        const std::string manifest_name = "manifest_" + manifest.command + ".json";
        for (const auto& f : files_)
            if (fs::exists(dir_ / f.first))
                throw ConfigError("refusing to overwrite existing output '" + (dir_ / f.first).string() + "'");
        if (fs::exists(dir_ / manifest_name))
            throw ConfigError("refusing to overwrite existing output '" + (dir_ / manifest_name).string() + "'");
        for (const auto& f : files_) {
            io::write_new_file(dir_ / f.first, f.second);
            manifest.outputs.push_back(f.first);
        }
        manifest.wall_clock_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        io::write_new_file(dir_ / manifest_name, manifest.to_json().dump(2) + "\n");
    }

    const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
    std::vector<std::pair<std::string, std::string>> files_;
};

inline io::RunConfig effective_config(const Options& opt) {
    if (opt.config.empty()) throw ConfigError("--config is required for this command");
    auto cfg = io::load_config(opt.config);
    if (opt.seed_set) cfg.sim.seed = opt.seed;
    if (opt.grid_set) cfg.grid = opt.grid;
    return cfg;
}

inline io::RunManifest make_manifest(const std::string& command, const io::RunConfig& cfg) {
    io::RunManifest m;
    m.command = command;
    m.config = io::config_to_json(cfg);
    m.config_hash = io::config_hash(cfg);
    return m;
}

inline Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json conditions_json(const ConditionReport& c, const AssumptionReport& a) {
    Json j;
    j["rho_positive"] = a.rho_positive;
    j["rho_increasing"] = a.rho_increasing;
    j["gamma_above_one"] = a.gamma_above_one;
    j["gamma_decreasing"] = a.gamma_decreasing;
    j["cond1"] = c.cond1;
    j["cond2"] = c.cond2;
    j["B_increasing"] = c.B_increasing;
    j["gamma_concave"] = c.gamma_concave;
    j["cond_gamma"] = c.cond_gamma ? Json(*c.cond_gamma) : Json(nullptr);
    j["max_discriminant"] = c.max_discriminant;
    j["max_abs_discriminant"] = c.max_abs_discriminant;
    j["route"] = std::string(to_string(c.route));
    j["monotone_expected"] = c.monotone_expected();
    return j;
}

inline Json curve_check_json(const CurveCheck& c) {
    return Json{{"terminal_error", c.terminal_error}, {"min_margin", c.min_margin},
                {"max_ode_residual", c.max_ode_residual}, {"ode_tolerance", c.ode_tolerance},
                {"terminal_ok", c.terminal_ok}, {"bounds_ok", c.bounds_ok}, {"ode_ok", c.ode_ok}};
}

inline io::Table boundary_table(const BoundaryCurve& curve) {
    io::Table t{{"u", "b"}, {}};
    for (std::size_t i = 0; i < curve.size(); ++i) t.rows.push_back({curve.u[i], curve.b[i]});
    return t;
}

inline io::Table curves_table(const RateSpec& spec, const ModelParams& p, const BoundaryCurve& curve) {
    io::Table t{{"u", "b", "c", "B", "k"}, {}};
    for (std::size_t i = 0; i < curve.size(); ++i) {
        const auto B = zero_level_B(spec, p, curve.u[i]);
        t.rows.push_back({curve.u[i], curve.b[i], curve.c[i], B ? *B : std::nan(""), p.k});
    }
    return t;
}

inline io::Table ladder_table(const DiscreteLadder& L) {
    io::Table t{{"n", "u", "gamma", "c", "b", "A"}, {}};
    for (std::size_t n = 0; n <= L.N; ++n)
        t.rows.push_back({static_cast<double>(n), L.u[n], L.gamma[n], L.c[n], L.b[n], L.A[n]});
    return t;
}

class Console {
public:
    Console(std::ostream& out, bool quiet) : out_(out), quiet_(quiet) {}
    template <class... Args>
    void line(Args&&... args) {
        if (quiet_) return;
        (out_ << ... << args);
        out_ << "\n";
    }

private:
    std::ostream& out_;
    bool quiet_;
};

inline std::string fmt(double v, int prec = 10) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

inline int cmd_solve(const Options& opt, std::ostream& out) {
    const auto start = std::chrono::steady_clock::now();
    const auto cfg = detail::effective_config(opt);
    detail::Console con(out, opt.quiet);
    const auto curve = solve_boundary(cfg.rate, cfg.model, cfg.grid);
    const auto check = validate_curve(curve);
    const auto conds = check_conditions(cfg.rate, cfg.model);
    const auto assum = check_assumptions(cfg.rate, cfg.model);
    const auto crossings = level_crossings(curve, cfg.model.k);

    Json rep;
    rep["family"] = std::string(cfg.rate.family_name());
    rep["grid"] = cfg.grid;
    rep["b0"] = curve.front();
    rep["b1"] = curve.back();
    rep["c1"] = curve.c.back();
    rep["monotone"] = curve.monotone;
    rep["above_k"] = curve.above_k;
    rep["k_crossings"] = crossings;
    rep["conditions"] = detail::conditions_json(conds, assum);
    rep["curve_check"] = detail::curve_check_json(check);

    auto manifest = detail::make_manifest("solve", cfg);
    manifest.check("terminal_condition", check.terminal_ok);
    manifest.check("existence_bounds", check.bounds_ok);
    manifest.check("ode_consistency", check.ode_ok);
    manifest.checks["monotone"] = curve.monotone;
    rep["status"] = manifest.success ? "pass" : "fail";

    detail::Outputs outputs(opt.out);
    outputs.add("boundary.csv", io::to_csv(detail::boundary_table(curve)));
    outputs.add("curves.csv", io::to_csv(detail::curves_table(cfg.rate, cfg.model, curve)));
    outputs.add("conditions.json", rep.dump(2) + "\n");
    outputs.commit(manifest, start);

    con.line("solve: ", cfg.name, " b(0)=", detail::fmt(curve.front()), " b(1)=", detail::fmt(curve.back()),
             " monotone=", curve.monotone ? "true" : "false", " route=", to_string(conds.route));
    con.line("solve: ", manifest.success ? "all checks passed" : "CHECK FAILED", " -> ", outputs.dir().string());
    return manifest.success ? kSuccess : kCheckFailure;
}

inline int cmd_verify(const Options& opt, std::ostream& out) {
    const auto start = std::chrono::steady_clock::now();
    const auto cfg = detail::effective_config(opt);
    detail::Console con(out, opt.quiet);
    auto manifest = detail::make_manifest("verify", cfg);
    Json rep;
    rep["family"] = std::string(cfg.rate.family_name());

    BoundaryCurve curve;
    bool curve_loaded = true;
    if (!opt.boundary.empty()) {
        const auto table = io::read_csv(opt.boundary);
        rep["boundary_source"] = fs::path(opt.boundary).filename().string();
        rep["boundary_hash"] = io::fnv1a_hex(io::read_text(opt.boundary));
        manifest.config["boundary_hash"] = rep["boundary_hash"];
        try {
            curve = curve_from_samples(cfg.rate, cfg.model, table.values("u"), table.values("b"));
        } catch (const GuardError& e) {
            curve_loaded = false;
            rep["boundary_error"] = e.what();
        }
    } else {
        rep["boundary_source"] = "solved";
        curve = solve_boundary(cfg.rate, cfg.model, cfg.grid);
    }
    manifest.check("boundary_in_strip", curve_loaded);

    if (curve_loaded) {
        const auto check = validate_curve(curve);
        rep["curve_check"] = detail::curve_check_json(check);
        manifest.check("terminal_condition", check.terminal_ok);
        manifest.check("existence_bounds", check.bounds_ok);
        manifest.check("ode_consistency", check.ode_ok);
        manifest.check("boundary_monotone", curve.monotone);
        const auto conds = check_conditions(cfg.rate, cfg.model);
        rep["route"] = std::string(to_string(conds.route));
        if (curve.monotone) {
            const ValueSurface surface(cfg.rate, cfg.model, curve);
            const auto d = run_value_diagnostics(surface, cfg.diagnostics);
            Json dj;
            dj["smooth_fit_value_matching"] = d.max_value_matching;
            dj["smooth_fit_mixed"] = d.max_mixed;
            dj["pi_derivative_jump"] = d.max_pi_jump;
            dj["pde_below_relative"] = d.max_pde_below;
            dj["pde_above_signed"] = detail::finite_or_null(d.max_pde_above);
            dj["pde_points_below"] = d.pde_below_points;
            dj["pde_points_above"] = d.pde_above_points;
            dj["pde_points_excluded"] = d.pde_excluded;
            dj["gradient_violation"] = d.gradient.value;
            dj["gradient_worst"] = {d.gradient.at.u, d.gradient.at.pi};
            dj["premium_violation"] = d.premium.value;
            dj["premium_worst"] = {d.premium.at.u, d.premium.at.pi};
            dj["A_min"] = d.A_min;
            dj["hypotheses_verified"] = d.hypotheses_verified;
            dj["V_hat_0_half"] = value_hat(surface, 0.0, 0.5);
            rep["diagnostics"] = dj;
            manifest.check("smooth_fit", d.smooth_fit_ok);
            manifest.check("c1_in_pi", d.c1_ok);
            manifest.check("pde_below", d.pde_below_ok);
            manifest.check("pde_above", d.pde_above_ok);
            manifest.check("gradient_bound", d.gradient_ok);
            manifest.check("learning_premium", d.premium_ok);
            manifest.check("A_positive", d.A_positive);
            manifest.checks["hypotheses_verified"] = d.hypotheses_verified;
            con.line("verify: route=", to_string(conds.route), " smooth_fit=", detail::fmt(d.max_mixed, 3),
                     " pde_below=", detail::fmt(d.max_pde_below, 3), " pde_above=", detail::fmt(d.max_pde_above, 3),
                     " gradient=", detail::fmt(d.gradient.value, 3), " premium=", detail::fmt(d.premium.value, 3));
        } else {
            rep["note"] = "boundary is not monotone; the candidate value function is undefined";
        }
    }
    rep["status"] = manifest.success ? "pass" : "fail";

    detail::Outputs outputs(opt.out);
    outputs.add("diagnostics.json", rep.dump(2) + "\n");
    outputs.commit(manifest, start);
    for (const auto& [name, ok] : manifest.checks.items())
        if (!ok.get<bool>()) con.line("verify: FAILED ", name);
    con.line("verify: ", manifest.success ? "all checks passed" : "CHECK FAILED", " -> ", outputs.dir().string());
    return manifest.success ? kSuccess : kCheckFailure;
}

inline Json estimate_json(const Estimate& e) {
    return Json{{"mean", e.mean}, {"std_error", e.std_error}, {"paths", e.n}, {"tail_bound", e.tail_bound}};
}

/// Paired comparison with a 3 standard-error band.
inline std::string compare_status(double diff, double se) {
    if (diff > 3.0 * se) return "dominates";
    if (diff >= -3.0 * se) return "tie";
    return "worse";
}

inline int cmd_simulate(const Options& opt, std::ostream& out) {
    const auto start = std::chrono::steady_clock::now();
    const auto cfg = detail::effective_config(opt);
    detail::Console con(out, opt.quiet);
    cfg.sim.validate(cfg.model);
    auto manifest = detail::make_manifest("simulate", cfg);
    const auto curve = solve_boundary(cfg.rate, cfg.model, cfg.grid);
    if (!curve.monotone) throw GuardError("simulate: boundary is not monotone; the reflecting strategy is undefined");
    const ValueSurface surface(cfg.rate, cfg.model, curve);
    const double u0 = cfg.sim.start_u, pi0 = cfg.sim.start_pi;

    const auto refl = simulate_reflecting(surface, cfg.sim);
    const auto stop = simulate_baseline(Baseline::StopAtC, cfg.rate, cfg.model, cfg.sim);
    const auto full = simulate_baseline(Baseline::FullNow, cfg.rate, cfg.model, cfg.sim);
    const double vhat = value_hat(surface, u0, pi0);
    const double v_stop = (1.0 - u0) * stopping_value_v(cfg.rate, cfg.model, u0, pi0);

    const double se_rs = std::hypot(refl.std_error, stop.std_error);
    const double se_rf = std::hypot(refl.std_error, full.std_error);
    const std::string vs_stop = compare_status(refl.mean - stop.mean, se_rs);
    const std::string vs_full = compare_status(refl.mean - full.mean, se_rf);

    Json rep;
    rep["start"] = {{"u", u0}, {"pi", pi0}};
    rep["reflecting"] = estimate_json(refl);
    rep["stop_at_c"] = estimate_json(stop);
    rep["full_now"] = estimate_json(full);
    rep["V_hat"] = vhat;
    rep["stop_at_c_value"] = v_stop;
    rep["reflecting_minus_V_hat"] = refl.mean - vhat;
    rep["reflecting_vs_stop_at_c"] = {{"difference", refl.mean - stop.mean}, {"combined_se", se_rs}, {"status", vs_stop}};
    rep["reflecting_vs_full_now"] = {{"difference", refl.mean - full.mean}, {"combined_se", se_rf}, {"status", vs_full}};

    manifest.check("reflecting_matches_V_hat", std::abs(refl.mean - vhat) <= 3.0 * refl.std_error);
    manifest.check("reflecting_not_worse_than_stop_at_c", vs_stop != "worse");
    manifest.check("reflecting_not_worse_than_full_now", vs_full != "worse");
    manifest.check("stop_at_c_matches_v", std::abs(stop.mean - v_stop) <= 3.0 * stop.std_error);

    if (cfg.calibration) {
        SimConfig cc = cfg.sim;
        cc.n_paths = cfg.calibration->paths;
        cc.horizon = cfg.calibration->horizon;
        cc.start_pi = cfg.calibration->pi;
        const auto cal = filter_calibration(cfg.rate, cfg.model, cc, cfg.calibration->u);
        Json cj;
        cj["frozen_u"] = cfg.calibration->u;
        cj["start_pi"] = cal.start_pi;
        cj["mean_terminal_pi"] = cal.mean_terminal_pi;
        cj["std_error"] = cal.std_error;
        cj["martingale_ok"] = cal.martingale_ok;
        Json buckets = Json::array();
        for (const auto& b : cal.buckets)
            buckets.push_back({{"count", b.count}, {"mean_pi", b.mean_pi}, {"theta_fraction", b.theta_fraction},
                               {"tolerance", b.tolerance}, {"ok", b.ok}});
        cj["deciles"] = buckets;
        cj["calibration_ok"] = cal.calibration_ok;
        rep["filter_calibration"] = cj;
        manifest.check("filter_martingale", cal.martingale_ok);
        manifest.check("filter_calibration", cal.calibration_ok);
    }
    rep["status"] = manifest.success ? "pass" : "fail";

    const auto traj = simulate_trajectory(surface, cfg.sim, 0, cfg.trajectory_stride);
    io::Table tt{{"t", "u", "pi"}, {}};
    for (const auto& p : traj) tt.rows.push_back({p.t, p.u, p.pi});

    detail::Outputs outputs(opt.out);
    outputs.add("estimates.json", rep.dump(2) + "\n");
    outputs.add("trajectory.csv", io::to_csv(tt));
    outputs.commit(manifest, start);
    con.line("simulate: reflecting=", detail::fmt(refl.mean, 6), " +- ", detail::fmt(refl.std_error, 3),
             " V_hat=", detail::fmt(vhat, 6), " stop_at_c=", detail::fmt(stop.mean, 6), " (", vs_stop,
             ") full_now=", detail::fmt(full.mean, 6), " (", vs_full, ")");
    con.line("simulate: ", manifest.success ? "all checks passed" : "CHECK FAILED", " -> ", outputs.dir().string());
    return manifest.success ? kSuccess : kCheckFailure;
}

inline DiscreteLadder ladder_from_config(const io::RunConfig& cfg) {
    if (cfg.discrete.gamma) return solve_ladder(*cfg.discrete.gamma, cfg.model);
    return solve_ladder(cfg.rate, cfg.model, cfg.discrete.N);
}

inline int cmd_discrete(const Options& opt, std::ostream& out) {
    const auto start = std::chrono::steady_clock::now();
    const auto cfg = detail::effective_config(opt);
    detail::Console con(out, opt.quiet);
    const auto L = ladder_from_config(cfg);
    const auto mono = check_discrete_monotone(L);
    const auto ver = discrete_verification_suite(L);

    double max_res = 0.0;
    for (double r : L.residual) max_res = std::max(max_res, std::abs(r));
    Json rep;
    rep["N"] = L.N;
    rep["gamma_source"] = cfg.discrete.gamma ? "array" : "rate_family";
    rep["max_root_residual"] = max_res;
    rep["terminal_error"] = std::abs(L.b[L.N] - L.c[L.N]);
    rep["monotone"] = L.monotone;
    Json lv = Json::array();
    for (const auto& l : mono.levels)
        lv.push_back({{"n", l.n}, {"condition", l.condition}, {"condition_holds", l.condition_holds},
                      {"H_at_c_next", l.H_at_c}, {"H_at_zero", l.H_at_zero}, {"H_at_b_next", l.H_at_b},
                      {"observed_monotone", l.observed_monotone}});
    rep["monotone_condition"] = {{"all_hold", mono.all_conditions_hold}, {"levels", lv}};
    rep["verification"] = {{"obstacle_violation", ver.max_obstacle_violation},
                           {"generator_max", detail::finite_or_null(ver.max_generator)},
                           {"smooth_fit", ver.max_smooth_fit},
                           {"continuity_gap", ver.max_continuity_gap},
                           {"hypotheses_verified", ver.hypotheses_verified},
                           {"note", ver.note}};

    auto manifest = detail::make_manifest("discrete", cfg);
    manifest.check("terminal_condition", std::abs(L.b[L.N] - L.c[L.N]) <= 1e-12);
    manifest.check("root_residuals", max_res <= kRootTolerance);
    manifest.check("obstacle_inequality", ver.obstacle_ok);
    manifest.check("generator_inequality", ver.generator_ok);
    manifest.check("smooth_fit", ver.smooth_fit_ok);
    manifest.check("continuity", ver.continuity_ok);
    if (mono.all_conditions_hold) manifest.check("certified_monotone", L.monotone);
    manifest.checks["monotone"] = L.monotone;
    rep["status"] = manifest.success ? "pass" : "fail";

    detail::Outputs outputs(opt.out);
    outputs.add("ladder.csv", io::to_csv(detail::ladder_table(L)));
    outputs.add("discrete.json", rep.dump(2) + "\n");
    outputs.commit(manifest, start);
    std::string bs;
    for (double b : L.b) bs += detail::fmt(b, 8) + " ";
    con.line("discrete: N=", L.N, " b = ", bs, "monotone=", L.monotone ? "true" : "false");
    if (!ver.note.empty()) con.line("discrete: ", ver.note);
    con.line("discrete: ", manifest.success ? "all checks passed" : "CHECK FAILED", " -> ", outputs.dir().string());
    return manifest.success ? kSuccess : kCheckFailure;
}

inline svg::Plot compare_plot(const io::Table& t, double k) {
    svg::Plot p("Discrete ladder against the continuous boundary", "u", "belief");
    p.add({"b(u) continuous", t.values("u"), t.values("b_continuous"), "black"});
    p.add({"b_n discrete", t.values("u"), t.values("b_discrete"), "black", false, true});
    p.add({"c_n", t.values("u"), t.values("c"), "blue", false, true});
    const auto u = t.values("u");
    p.add({"k", {u.front(), u.back()}, {k, k}, "black", true});
    return p;
}

inline int cmd_compare(const Options& opt, std::ostream& out) {
    const auto start = std::chrono::steady_clock::now();
    const auto cfg = detail::effective_config(opt);
    detail::Console con(out, opt.quiet);
    const auto curve = solve_boundary(cfg.rate, cfg.model, cfg.grid);
    const auto L = solve_ladder(cfg.rate, cfg.model, cfg.discrete.N);
    io::Table t{{"n", "u", "b_discrete", "b_continuous", "c", "k"}, {}};
    double max_gap = 0.0;
    for (std::size_t n = 0; n <= L.N; ++n) {
        const double bc = curve.value<double>(L.u[n]);
        t.rows.push_back({static_cast<double>(n), L.u[n], L.b[n], bc, L.c[n], cfg.model.k});
        max_gap = std::max(max_gap, std::abs(L.b[n] - bc));
    }
    Json rep;
    rep["N"] = L.N;
    rep["max_abs_gap"] = max_gap;
    rep["note"] = "exploratory: no convergence of b_n to b(u_n) is asserted";

    auto manifest = detail::make_manifest("compare", cfg);
    detail::Outputs outputs(opt.out);
    outputs.add("compare.csv", io::to_csv(t));
    outputs.add("compare.json", rep.dump(2) + "\n");
    outputs.add("compare.svg", compare_plot(t, cfg.model.k).render());
    outputs.commit(manifest, start);
    con.line("compare: N=", L.N, " max |b_n - b(u_n)| = ", detail::fmt(max_gap, 4), " -> ", outputs.dir().string());
    return kSuccess;
}

/// Chooses the plot layout from the CSV columns.
inline svg::Plot plot_for_table(const io::Table& t) {
    auto col = [&](const char* c) { return t.values(c); };
    if (t.has_column("b_discrete")) return compare_plot(t, t.rows.front()[t.column("k")]);
    if (t.has_column("gamma") && t.has_column("A")) {
        svg::Plot p("Discrete boundaries b_n and thresholds c_n", "n", "belief");
        p.add({"b_n", col("n"), col("b"), "black", false, true});
        p.add({"c_n", col("n"), col("c"), "blue", false, true});
        // k recovered from c_0 = k gamma_0 / (k + gamma_0 - 1).
        const auto& r0 = t.rows.front();
        const double g = r0[t.column("gamma")], c = r0[t.column("c")];
        const double k = c * (g - 1.0) / (g - c);
        const auto n = col("n");
        p.add({"k", {n.front(), n.back()}, {k, k}, "black", true});
        return p;
    }
    if (t.has_column("t") && t.has_column("pi")) {
        svg::Plot p("Reflecting strategy: control and belief", "t", "level");
        p.add({"U_t", col("t"), col("u"), "black", false, false, true});
        p.add({"Pi_t", col("t"), col("pi"), "#1f77b4"});
        p.set_yrange(0.0, 1.0);
        return p;
    }
    if (t.has_column("u") && t.has_column("b")) {
        svg::Plot p("Investment boundary", "u", "belief");
        p.add({"b", col("u"), col("b"), "black"});
        if (t.has_column("c")) p.add({"c", col("u"), col("c"), "blue"});
        if (t.has_column("B")) {
            std::vector<double> uu, bb;
            const auto u = col("u"), B = col("B");
            for (std::size_t i = 0; i < u.size(); ++i)
                if (std::isfinite(B[i]) && B[i] > 0.0 && B[i] < 1.0) {
                    uu.push_back(u[i]);
                    bb.push_back(B[i]);
                }
            if (!uu.empty()) p.add({"B", uu, bb, "red"});
        }
        if (t.has_column("k")) {
            const auto u = col("u");
            const double k = t.rows.front()[t.column("k")];
            p.add({"k", {u.front(), u.back()}, {k, k}, "black", true});
        }
        p.set_yrange(0.0, 1.0);
        return p;
    }
    throw ConfigError("plot: unrecognized CSV layout");
}

inline int cmd_plot(const Options& opt, std::ostream& out) {
    const auto start = std::chrono::steady_clock::now();
    detail::Console con(out, opt.quiet);
    if (opt.inputs.empty()) throw ConfigError("plot: at least one --input CSV is required");
    io::RunManifest manifest;
    manifest.command = "plot";
    std::string all;
    detail::Outputs outputs(opt.out);
    Json inputs = Json::array();
    for (const auto& in : opt.inputs) {
        const std::string text = io::read_text(in);
        const auto table = io::parse_csv(text, in);
        const std::string name = fs::path(in).stem().string() + ".svg";
        outputs.add(name, plot_for_table(table).render());
        inputs.push_back({{"file", fs::path(in).filename().string()}, {"hash", io::fnv1a_hex(text)}});
        all += text;
    }
    manifest.config = {{"inputs", inputs}};
    manifest.config_hash = io::fnv1a_hex(all);
    outputs.commit(manifest, start);
    con.line("plot: wrote ", opt.inputs.size(), " figure(s) -> ", outputs.dir().string());
    return kSuccess;
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Learning-by-doing investment boundary toolkit", "lbd"};
    app.set_version_flag("--version", io::kToolVersion);
    app.require_subcommand(1);
    Options opt;
    app.add_option("--config", opt.config, "Run configuration (JSON)");
    app.add_option("--out", opt.out, "Output directory")->capture_default_str();
    auto* seed = app.add_option("--seed", opt.seed, "Random seed (overrides the config)");
    auto* grid = app.add_option("--grid", opt.grid, "Boundary grid size (overrides the config)")
                     ->check(CLI::Range(static_cast<std::size_t>(5), static_cast<std::size_t>(10'000'000)));
    app.add_flag("--quiet", opt.quiet, "Suppress the summary on stdout");

    auto* solve = app.add_subcommand("solve", "Solve the free boundary and write the curve")->fallthrough();
    auto* verify = app.add_subcommand("verify", "Run the value-function diagnostics")->fallthrough();
    verify->add_option("--boundary", opt.boundary, "Check this (u,b) CSV instead of solving");
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo check of the reflecting strategy")->fallthrough();
    auto* discrete = app.add_subcommand("discrete", "Solve and verify the discrete ladder")->fallthrough();
    auto* compare = app.add_subcommand("compare", "Discrete ladder against the continuous boundary")->fallthrough();
    auto* plot = app.add_subcommand("plot", "Render CSV outputs as SVG")->fallthrough();
    plot->add_option("--input", opt.inputs, "CSV file(s) to plot")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kInputError;
    }
    opt.seed_set = seed->count() > 0;
    opt.grid_set = grid->count() > 0;

    try {
        if (solve->parsed()) return cmd_solve(opt, out);
        if (verify->parsed()) return cmd_verify(opt, out);
        if (simulate->parsed()) return cmd_simulate(opt, out);
        if (discrete->parsed()) return cmd_discrete(opt, out);
        if (compare->parsed()) return cmd_compare(opt, out);
        if (plot->parsed()) return cmd_plot(opt, out);
    } catch (const ConfigError& e) {
        err << "lbd: input error: " << e.what() << "\n";
        return kInputError;
    } catch (const DomainError& e) {
        err << "lbd: input error: " << e.what() << "\n";
        return kInputError;
    } catch (const PreconditionError& e) {
        err << "lbd: precondition error: " << e.what() << "\n";
        return kInputError;
    } catch (const fs::filesystem_error& e) {
        err << "lbd: file error: " << e.what() << "\n";
        return kInputError;
    } catch (const GuardError& e) {
        err << "lbd: check failed: " << e.what() << "\n";
        return kCheckFailure;
    } catch (const BracketError& e) {
        err << "lbd: check failed: " << e.what() << "\n";
        return kCheckFailure;
    }
    return kInputError;
}

}  // namespace lbd::app
