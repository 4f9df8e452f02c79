#pragma once

// Monte Carlo engine for the filtered belief process.
//
// theta ~ Bernoulli(pi) is drawn per path and the normalized observation
// increment dX = theta rho(U) dt + sqrt(dt) Z is simulated directly. With U
// frozen over a step, the log-odds Phi = log(pi / (1 - pi)) moves by exactly
//   dPhi = rho dX - rho^2 dt / 2,
// so the belief stays in (0,1) without clipping. The control is updated
// after each step from the running maximum of the belief.
//
// Every path draws from its own generator seeded by (seed, path index), so
// results do not depend on the number of threads or the order of evaluation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "lbd/boundary.hpp"
#include "lbd/error.hpp"
#include "lbd/model.hpp"
#include "lbd/value.hpp"

namespace lbd {

struct SimConfig {
    double dt = 0.005;
    double horizon = 150.0;
    std::size_t n_paths = 20000;
    std::uint64_t seed = 1;
    double start_u = 0.0;
    double start_pi = 0.5;
    bool record_paths = false;
    double tail_tolerance = 1e-6;
    unsigned threads = 1;  ///< 0 = hardware concurrency

    /// e^{-rT} (1 - k): bound on the payoff that can still accrue after T.
    double tail_bound(const ModelParams& p) const { return std::exp(-p.r * horizon) * (1.0 - p.k); }

    void validate(const ModelParams& p) const {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("simulate: dt must be positive");
        if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw ConfigError("simulate: horizon must be >= 0");
        if (horizon > 0.0 && horizon < dt) throw ConfigError("simulate: horizon must be at least dt");
        if (n_paths < 1) throw ConfigError("simulate: n_paths must be at least 1");
        if (!(start_u >= 0.0 && start_u <= 1.0)) throw ConfigError("simulate: start u must lie in [0,1]");
        if (!(start_pi > 0.0 && start_pi < 1.0)) throw ConfigError("simulate: start pi must lie in (0,1)");
        if (!(tail_tolerance > 0.0)) throw ConfigError("simulate: tail_tolerance must be positive");
        if (tail_bound(p) > tail_tolerance)
            throw ConfigError("simulate: horizon too short, e^{-rT}(1-k) = " + std::to_string(tail_bound(p)) +
                              " exceeds tail_tolerance");
    }

    std::size_t steps() const {
        return static_cast<std::size_t>(std::floor(horizon / dt + 1e-9));
    }
};

struct PathResult {
    double payoff = 0.0;        ///< discounted payoff, in [-k, 1-k]
    double initial_jump = 0.0;  ///< size of the control jump at t = 0
    double terminal_u = 0.0;
    double terminal_pi = 0.0;
    int theta = 0;
    double stop_time = 0.0;     ///< time the path ended (U = 1, stopping, or T)
};

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
    double tail_bound = 0.0;
    std::vector<PathResult> paths;  ///< filled when record_paths is set
};

enum class Baseline { FullNow, StopAtC, Frozen };

inline std::string_view to_string(Baseline b) {
    switch (b) {
        case Baseline::FullNow: return "full_now";
        case Baseline::StopAtC: return "stop_at_c";
        case Baseline::Frozen: return "frozen";
    }
    return "frozen";
}

/// Log-odds increment over one step with rho frozen, given the standard
/// normal draw z. Mean (theta - 1/2) rho^2 dt, variance rho^2 dt.
inline double log_odds_increment(int theta, double rho, double dt, double z) {
    const double dX = theta * rho * dt + std::sqrt(dt) * z;
    return rho * dX - 0.5 * rho * rho * dt;
}

inline double logistic(double phi) {
    return phi >= 0.0 ? 1.0 / (1.0 + std::exp(-phi)) : std::exp(phi) / (1.0 + std::exp(phi));
}

inline double logit(double pi) { return std::log(pi / (1.0 - pi)); }

/// Per-path random stream: mt19937_64 seeded from (seed, path index).
class PathRng {
public:
    PathRng(std::uint64_t seed, std::uint64_t path) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32),
                          0x6c62645fU};
        engine_.seed(seq);
    }

    double uniform() { return std::generate_canonical<double, 53>(engine_); }
    double normal() { return normal_(engine_); }
    int bernoulli(double p) { return uniform() < p ? 1 : 0; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

namespace detail {

/// Evaluate `path_fn(index)` for every path, possibly in parallel, and
/// aggregate the payoffs in path order with compensated summation.
template <class PathFn>
Estimate run_paths(const SimConfig& cfg, const ModelParams& params, PathFn&& path_fn) {
    std::vector<PathResult> results(cfg.n_paths);
    unsigned threads = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.threads;
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, cfg.n_paths));
    if (threads <= 1) {
        for (std::size_t i = 0; i < cfg.n_paths; ++i) results[i] = path_fn(i);
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (cfg.n_paths + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t lo = t * chunk, hi = std::min(cfg.n_paths, lo + chunk);
            pool.emplace_back([&, lo, hi] {
                for (std::size_t i = lo; i < hi; ++i) results[i] = path_fn(i);
            });
        }
    }
    // Neumaier summation of payoffs and squared deviations.
    auto kahan_sum = [&](auto&& term) {
        double sum = 0.0, comp = 0.0;
        for (const auto& r : results) {
            const double x = term(r);
            const double t = sum + x;
            comp += (std::abs(sum) >= std::abs(x)) ? (sum - t) + x : (x - t) + sum;
            sum = t;
        }
        return sum + comp;
    };
    Estimate est;
    est.n = cfg.n_paths;
    est.mean = kahan_sum([](const PathResult& r) { return r.payoff; }) / static_cast<double>(est.n);
    if (est.n > 1) {
        const double ss = kahan_sum([&](const PathResult& r) { return (r.payoff - est.mean) * (r.payoff - est.mean); });
        est.std_error = std::sqrt(ss / static_cast<double>(est.n - 1) / static_cast<double>(est.n));
    }
    est.tail_bound = cfg.tail_bound(params);
    if (cfg.record_paths) est.paths = std::move(results);
    return est;
}

}  // namespace detail

/// One path of the reflecting strategy U_t = u v h(max_{s<=t} Pi_s).
/// `on_step(t, U, Pi)` is invoked at t = 0 and after every step.
template <class OnStep>
PathResult reflecting_path(const ValueSurface& surface, const SimConfig& cfg, std::size_t index, OnStep&& on_step) {
    const auto& spec = surface.spec();
    const auto& params = surface.params();
    PathRng rng(cfg.seed, index);
    PathResult res;
    res.theta = rng.bernoulli(cfg.start_pi);

    double U = cfg.start_u;
    const double pi0 = cfg.start_pi;
    const double h0 = surface.h(pi0);
    if (h0 > U) {
        res.initial_jump = h0 - U;
        res.payoff += (pi0 - params.k) * (h0 - U);
        U = h0;
    }
    double phi = logit(pi0);
    double phi_max = phi;
    double rho = std::sqrt(spec.rho2(params.r, U));
    on_step(0.0, U, pi0);

    const std::size_t steps = cfg.steps();
    double t = 0.0;
    for (std::size_t s = 1; s <= steps && U < 1.0; ++s) {
        t = static_cast<double>(s) * cfg.dt;
        phi += log_odds_increment(res.theta, rho, cfg.dt, rng.normal());
        if (phi > phi_max) {
            phi_max = phi;
            const double pi = logistic(phi);
            const double hn = surface.h(pi);
            if (hn > U) {
                res.payoff += std::exp(-params.r * t) * (pi - params.k) * (hn - U);
                U = hn;
                rho = std::sqrt(spec.rho2(params.r, U));
            }
        }
        on_step(t, U, logistic(phi));
    }
    res.terminal_u = U;
    res.terminal_pi = logistic(phi);
    res.stop_time = t;
    return res;
}

inline PathResult reflecting_path(const ValueSurface& surface, const SimConfig& cfg, std::size_t index) {
    return reflecting_path(surface, cfg, index, [](double, double, double) {});
}

/// Expected discounted payoff of the reflecting strategy from (start_u, start_pi).
inline Estimate simulate_reflecting(const ValueSurface& surface, const SimConfig& cfg) {
    cfg.validate(surface.params());
    return detail::run_paths(cfg, surface.params(),
                             [&](std::size_t i) { return reflecting_path(surface, cfg, i); });
}

inline PathResult baseline_path(Baseline kind, const RateSpec& spec, const ModelParams& params, const SimConfig& cfg,
                                std::size_t index) {
    PathRng rng(cfg.seed, index);
    PathResult res;
    res.theta = rng.bernoulli(cfg.start_pi);
    const double u = cfg.start_u, pi0 = cfg.start_pi;
    res.terminal_u = u;
    res.terminal_pi = pi0;
    switch (kind) {
        case Baseline::Frozen: return res;
        case Baseline::FullNow:
            res.payoff = (pi0 - params.k) * (1.0 - u);
            res.initial_jump = 1.0 - u;
            res.terminal_u = 1.0;
            return res;
        case Baseline::StopAtC: break;
    }
    const double c = stopping_threshold_c(spec, params, u);
    if (pi0 >= c) {
        res.payoff = (pi0 - params.k) * (1.0 - u);
        res.initial_jump = 1.0 - u;
        res.terminal_u = 1.0;
        return res;
    }
    const double rho = std::sqrt(spec.rho2(params.r, u));
    const double phi_c = logit(c);
    double phi = logit(pi0);
    const std::size_t steps = cfg.steps();
    double t = 0.0;
    for (std::size_t s = 1; s <= steps; ++s) {
        t = static_cast<double>(s) * cfg.dt;
        phi += log_odds_increment(res.theta, rho, cfg.dt, rng.normal());
        if (phi >= phi_c) {
            const double pi = logistic(phi);
            res.payoff = std::exp(-params.r * t) * (pi - params.k) * (1.0 - u);
            res.terminal_u = 1.0;
            break;
        }
    }
    res.terminal_pi = logistic(phi);
    res.stop_time = t;
    return res;
}

/// Benchmarks: invest everything now, invest everything at the first time
/// the belief reaches c(u) (rho frozen at rho(u)), or never invest.
inline Estimate simulate_baseline(Baseline kind, const RateSpec& spec, const ModelParams& params,
                                  const SimConfig& cfg) {
    params.validate();
    cfg.validate(params);
    return detail::run_paths(cfg, params,
                             [&](std::size_t i) { return baseline_path(kind, spec, params, cfg, i); });
}

struct TrajectoryPoint {
    double t = 0.0;
    double u = 0.0;
    double pi = 0.0;
};

/// One recorded reflecting path, sampled every `stride` steps (and at the end).
inline std::vector<TrajectoryPoint> simulate_trajectory(const ValueSurface& surface, const SimConfig& cfg,
                                                        std::size_t path_index = 0, std::size_t stride = 1) {
    cfg.validate(surface.params());
    if (stride == 0) throw ConfigError("trajectory stride must be positive");
    std::vector<TrajectoryPoint> out;
    std::size_t count = 0;
    TrajectoryPoint last;
    reflecting_path(surface, cfg, path_index, [&](double t, double U, double pi) {
        last = {t, U, pi};
        if (count++ % stride == 0) out.push_back(last);
    });
    if (out.empty() || out.back().t != last.t) out.push_back(last);
    return out;
}

// ---------------------------------------------------------------------------
// Filter calibration
// ---------------------------------------------------------------------------

struct CalibrationBucket {
    std::size_t count = 0;
    double mean_pi = 0.0;       ///< mean terminal belief in the bucket
    double theta_fraction = 0.0;
    double tolerance = 0.0;     ///< 3 binomial standard errors
    bool ok = false;
};

struct CalibrationReport {
    double mean_terminal_pi = 0.0;
    double std_error = 0.0;
    double start_pi = 0.0;
    bool martingale_ok = false;
    std::vector<CalibrationBucket> buckets;
    bool calibration_ok = false;
    bool ok() const { return martingale_ok && calibration_ok; }
};

/// With U frozen at u, checks that the terminal belief has mean pi and that
/// it is calibrated: among paths whose belief ends near p, a fraction p has
/// theta = 1.
inline CalibrationReport filter_calibration(const RateSpec& spec, const ModelParams& params, SimConfig cfg,
                                            double frozen_u, std::size_t n_buckets = 10) {
    params.validate();
    detail::check_unit_interval(frozen_u, "filter_calibration");
    // The martingale check is independent of the payoff tail bound.
    cfg.tail_tolerance = std::max(cfg.tail_tolerance, 1.0);
    cfg.validate(params);
    const double rho = std::sqrt(spec.rho2(params.r, frozen_u));
    cfg.record_paths = true;
    auto est = detail::run_paths(cfg, params, [&](std::size_t i) {
        PathRng rng(cfg.seed, i);
        PathResult res;
        res.theta = rng.bernoulli(cfg.start_pi);
        double phi = logit(cfg.start_pi);
        for (std::size_t s = 1; s <= cfg.steps(); ++s) phi += log_odds_increment(res.theta, rho, cfg.dt, rng.normal());
        res.terminal_u = frozen_u;
        res.terminal_pi = logistic(phi);
        res.payoff = res.terminal_pi;  // aggregated as the terminal-belief mean
        res.stop_time = cfg.horizon;
        return res;
    });
    CalibrationReport rep;
    rep.start_pi = cfg.start_pi;
    rep.mean_terminal_pi = est.mean;
    rep.std_error = est.std_error;
    rep.martingale_ok = std::abs(est.mean - cfg.start_pi) <= 3.0 * est.std_error + 1e-15;

    auto& paths = est.paths;
    std::stable_sort(paths.begin(), paths.end(),
                     [](const PathResult& a, const PathResult& b) { return a.terminal_pi < b.terminal_pi; });
    const std::size_t n = paths.size();
    n_buckets = std::max<std::size_t>(1, std::min(n_buckets, n));
    rep.calibration_ok = true;
    for (std::size_t bkt = 0; bkt < n_buckets; ++bkt) {
        const std::size_t lo = bkt * n / n_buckets, hi = (bkt + 1) * n / n_buckets;
        CalibrationBucket cb;
        cb.count = hi - lo;
        double sp = 0.0, st = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            sp += paths[i].terminal_pi;
            st += paths[i].theta;
        }
        cb.mean_pi = sp / static_cast<double>(cb.count);
        cb.theta_fraction = st / static_cast<double>(cb.count);
        cb.tolerance = 3.0 * std::sqrt(cb.mean_pi * (1.0 - cb.mean_pi) / static_cast<double>(cb.count));
        cb.ok = std::abs(cb.theta_fraction - cb.mean_pi) <= cb.tolerance;
        rep.calibration_ok = rep.calibration_ok && cb.ok;
        rep.buckets.push_back(cb);
    }
    return rep;
}

}  // namespace lbd
