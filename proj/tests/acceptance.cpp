// Acceptance checks: one PASS/FAIL line per criterion, exit 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "lbd/app.hpp"
#include "lbd/discrete.hpp"
#include "lbd/simulate.hpp"
#include "lbd/value.hpp"
#include "oracles/value_iteration.hpp"

using namespace lbd;
namespace fs = std::filesystem;

namespace {

const ModelParams kParams{0.1, 0.5};
const RateSpec kLinear(LinearNoise{0.25, 0.9});
const RateSpec kHyper(HyperbolicGamma{1.25, 0.2});
const RateSpec kQuad(QuadraticNoise{0.25, 0.1, 0.8});

struct Outcome {
    bool pass = true;
    std::string detail;
    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
};

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

Outcome terminal_condition() {
    Outcome o;
    const auto curve = solve_boundary(kLinear, kParams, 2001);
    const double g1 = gamma(kLinear, kParams, 1.0);
    const double c1 = kParams.k * g1 / (kParams.k + g1 - 1.0);
    const double rho2 = 1.0 / (4.0 * (1.0 - 0.9));
    o.require(std::abs(curve.b.back() - c1) <= 1e-8, "b(1) - c(1) = " + fmt(curve.b.back() - c1));
    o.require(std::abs(curve.b.back() - 0.935194139889244595) <= 1e-8, "b(1) = " + fmt(curve.b.back()));
    o.require(std::abs(g1 * g1 - g1 - 2.0 * kParams.r / rho2) <= 1e-12, "gamma(1) quadratic residual");
    return o;
}

Outcome existence_bounds() {
    Outcome o;
    const auto a = solve_boundary(kLinear, kParams, 2001);
    const auto chk = validate_curve(a, 1e-10);
    o.require(chk.bounds_ok, "min margin " + fmt(chk.min_margin));
    const auto b = solve_boundary(kLinear, kParams, 4001);
    double diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, std::abs(a.b[i] - b.b[2 * i]));
    o.require(diff <= 1e-8, "grid doubling changes b by " + fmt(diff));
    return o;
}

Outcome monotone_regimes() {
    Outcome o;
    const auto lin = solve_boundary(kLinear, kParams, 2001);
    o.require(lin.monotone, "linear: b not increasing");
    o.require(lin.above_k, "linear: b < k somewhere");
    double bmax = 0.0;
    for (double u : lin.u) {
        const double g = gamma(kLinear, kParams, u), k = kParams.k;
        const auto B = zero_level_B(kLinear, kParams, u);
        bmax = B ? std::max(bmax, std::abs(*B - (3 * g - 1) * k / (3 * g + k - 2))) : 1.0;
    }
    o.require(bmax <= 1e-10, "linear: B closed form mismatch " + fmt(bmax));

    const auto hc = check_conditions(kHyper, kParams);
    o.require(hc.cond1 && hc.max_abs_discriminant <= 1e-12, "hyperbolic: cond1 discriminant " + fmt(hc.max_abs_discriminant));
    const auto hyp = solve_boundary(kHyper, kParams, 2001);
    o.require(hyp.monotone, "hyperbolic: b not increasing");
    o.require(hyp.b.front() < kParams.k, "hyperbolic: b(0) >= k");
    const auto x = level_crossings(hyp, kParams.k);
    o.require(x.size() == 1 && x[0] > 0.0 && x[0] < 1.0, "hyperbolic: expected one crossing of k");

    o.require(!solve_boundary(kQuad, kParams, 2001).monotone, "non-monotone family flagged monotone");
    return o;
}

Outcome value_diagnostics() {
    Outcome o;
    for (const auto* spec : {&kLinear, &kHyper}) {
        const ValueSurface s(*spec, kParams, solve_boundary(*spec, kParams, 2001));
        const auto d = run_value_diagnostics(s);
        const std::string tag(spec->family_name());
        o.require(d.smooth_fit_ok, tag + ": smooth fit " + fmt(d.max_mixed));
        o.require(d.pde_below_ok, tag + ": pde below " + fmt(d.max_pde_below));
        o.require(d.pde_above_ok, tag + ": pde above " + fmt(d.max_pde_above));
        o.require(d.gradient_ok, tag + ": gradient " + fmt(d.gradient.value));
        o.require(d.premium_ok, tag + ": premium " + fmt(d.premium.value));
        o.require(d.pde_below_points + d.pde_above_points + d.pde_excluded == 10000, tag + ": sample count");
    }
    return o;
}

SimConfig acceptance_sim() {
    SimConfig c;
    c.dt = 0.005;
    c.horizon = 150.0;
    c.n_paths = 20000;
    c.seed = 20240611;
    c.start_u = 0.0;
    c.start_pi = 0.5;
    c.threads = std::max(1u, std::thread::hardware_concurrency());
    return c;
}

bool dominates_or_ties(const Estimate& a, const Estimate& b) {
    const double se = std::hypot(a.std_error, b.std_error);
    return a.mean - b.mean > 3 * se || std::abs(a.mean - b.mean) <= 3 * se;
}

Outcome monte_carlo() {
    Outcome o;
    const ValueSurface s(kLinear, kParams, solve_boundary(kLinear, kParams, 2001));
    const auto c = acceptance_sim();
    const auto refl = simulate_reflecting(s, c);
    const auto stop = simulate_baseline(Baseline::StopAtC, kLinear, kParams, c);
    const auto full = simulate_baseline(Baseline::FullNow, kLinear, kParams, c);
    const double vhat = value_hat(s, 0.0, 0.5);
    const double v = stopping_value_v(kLinear, kParams, 0.0, 0.5);
    o.require(std::abs(refl.mean - vhat) <= 3 * refl.std_error,
              "reflecting " + fmt(refl.mean) + " vs " + fmt(vhat) + " se " + fmt(refl.std_error));
    o.require(dominates_or_ties(refl, stop), "reflecting below stop-at-c");
    o.require(dominates_or_ties(refl, full), "reflecting below full-now");
    o.require(std::abs(stop.mean - v) <= 3 * stop.std_error, "stop-at-c " + fmt(stop.mean) + " vs " + fmt(v));
    o.detail += (o.detail.empty() ? "" : "; ") + std::string("mean ") + fmt(refl.mean) + " +- " + fmt(refl.std_error);
    return o;
}

Outcome filter_sanity() {
    Outcome o;
    SimConfig c;
    c.dt = 0.005;
    c.horizon = 10.0;
    c.n_paths = 50000;
    c.seed = 20240611;
    c.start_pi = 0.5;
    c.threads = std::max(1u, std::thread::hardware_concurrency());
    const auto rep = filter_calibration(kLinear, kParams, c, 0.5);
    o.require(rep.martingale_ok, "mean terminal belief " + fmt(rep.mean_terminal_pi));
    o.require(rep.calibration_ok, "decile calibration");
    return o;
}

Outcome discrete_ladder() {
    Outcome o;
    std::vector<double> g;
    for (int n = 0; n <= 5; ++n) g.push_back(1.25 / (n / 5.0 + 0.2));
    const auto L = solve_ladder(g, kParams);
    o.require(std::abs(L.b[5] - L.c[5]) <= 1e-10 && std::abs(L.b[5] - 0.9615385) <= 5e-8, "b_5 != c_5");
    for (std::size_t n = 0; n < 5; ++n) {
        o.require(std::abs(boundary_equation_fn(L, n, L.b[n])) <= 1e-13, "f_n(b_n) residual at n=" + std::to_string(n));
        o.require(L.b[n] < L.b[n + 1], "b_n not increasing at n=" + std::to_string(n));
    }
    const auto mono = check_discrete_monotone(L);
    o.require(mono.all_conditions_hold, "discrete monotone condition fails");
    const auto v = discrete_verification_suite(L);
    o.require(v.obstacle_ok, "obstacle inequality " + fmt(v.max_obstacle_violation));
    o.require(v.generator_ok, "generator inequality " + fmt(v.max_generator));
    o.require(v.smooth_fit_ok && v.continuity_ok, "smooth fit");
    return o;
}

Outcome discrete_oracle() {
    Outcome o;
    const auto L = solve_ladder(kLinear, kParams, 2);
    const oracle::ValueIteration vi(L.gamma, kParams.r, kParams.k);
    double worst = 0.0;
    for (int j = 0; j < 20; ++j) {
        const double pi = 0.025 + 0.05 * j;
        worst = std::max(worst, std::abs(eval_Vn(L, 0, pi) - vi.value(0, pi)));
    }
    o.require(worst <= 2e-3, "max gap " + fmt(worst));
    if (o.pass) o.detail = "max gap " + fmt(worst);
    return o;
}

int cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"lbd"};
    for (const auto& a : args) argv.push_back(a.c_str());
    argv.push_back("--quiet");
    std::ostringstream out, err;
    return app::run(static_cast<int>(argv.size()), argv.data(), out, err);
}

// Manifests carry wall-clock timings; everything else must match byte for byte.
std::string comparable(const fs::path& p) {
    auto text = io::read_text(p);
    if (p.filename().string().starts_with("manifest_")) {
        auto j = io::Json::parse(text);
        j.erase("wall_clock_seconds");
        text = j.dump();
    }
    return text;
}

Outcome reproducibility() {
    Outcome o;
    const fs::path configs = LBD_CONFIG_DIR;
    const auto root = fs::temp_directory_path() / "lbd_acceptance_repro";
    fs::remove_all(root);
    const auto cfg_dir = root / "cfg";
    fs::create_directories(cfg_dir);
    auto j = io::Json::parse(io::read_text(configs / "fig2_linear.json"));
    j["simulate"]["paths"] = 2000;
    j["simulate"].erase("calibration");
    std::ofstream(cfg_dir / "fig2.json") << j.dump(2);
    const std::string fig2 = (cfg_dir / "fig2.json").string();
    const std::string fig4 = (configs / "fig4_discrete.json").string();

    for (const char* run : {"a", "b"}) {
        const auto out = (root / run).string();
        for (const auto& cmd : std::vector<std::vector<std::string>>{
                 {"solve", "--config", fig2}, {"verify", "--config", fig2}, {"simulate", "--config", fig2},
                 {"discrete", "--config", fig4}, {"compare", "--config", fig2}}) {
            auto args = cmd;
            args.insert(args.end(), {"--out", out});
            const int rc = cli(args);
            o.require(rc == 0, cmd[0] + " exited " + std::to_string(rc));
        }
        o.require(cli({"plot", "--input", out + "/curves.csv", "--input", out + "/ladder.csv", "--out", out + "/figs"}) == 0,
                  "plot failed");
    }
    std::size_t compared = 0;
    for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), root / "a");
        const auto other = root / "b" / rel;
        if (!fs::exists(other) || comparable(e.path()) != comparable(other)) o.require(false, rel.string() + " differs");
        ++compared;
    }
    o.require(compared >= 15, "only " + std::to_string(compared) + " files compared");
    if (o.pass) o.detail = std::to_string(compared) + " files identical";
    fs::remove_all(root);
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"terminal condition", terminal_condition},
        {"existence bounds", existence_bounds},
        {"monotone regimes", monotone_regimes},
        {"value diagnostics", value_diagnostics},
        {"monte carlo optimality", monte_carlo},
        {"filter sanity", filter_sanity},
        {"discrete ladder", discrete_ladder},
        {"discrete oracle", discrete_oracle},
        {"reproducibility", reproducibility},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s %zu %s (%.1fs)%s%s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), secs,
                    o.detail.empty() ? "" : ": ", o.detail.c_str());
        std::fflush(stdout);
        failures += o.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
