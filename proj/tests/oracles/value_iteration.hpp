#pragma once

// Brute-force dynamic program for the multiple-stopping recursion, used only
// as a test oracle. The belief is discretized in log-odds on a fixed grid and
// moved by a moment-matched trinomial step under the observation filtration:
//   dPhi = rho^2 (pi - 1/2) dt + rho dW.
// Each level is solved by value iteration on
//   V = max(payoff, e^{-r dt} E[V(next)]).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace oracle {

struct ValueIterationOptions {
    std::size_t nodes = 2000;
    double dt = 1e-3;
    double tolerance = 1e-10;
    std::size_t max_iterations = 5'000'000;
};

class ValueIteration {
public:
    /// gamma_n for n = 0..N and the discount rate r; rho_n^2 = 2r/(gamma_n(gamma_n - 1)).
    ValueIteration(std::vector<double> gamma, double r, double k, ValueIterationOptions opt = {})
        : gamma_(std::move(gamma)), r_(r), k_(k), opt_(opt) {
        double rho_max = 0.0;
        for (double g : gamma_) rho_max = std::max(rho_max, std::sqrt(2.0 * r_ / (g * (g - 1.0))));
        const double n1 = static_cast<double>(opt_.nodes - 1);
        half_width_ = std::max(12.0, n1 * rho_max * std::sqrt(opt_.dt) / 2.0 * 1.01);
        dx_ = 2.0 * half_width_ / n1;
        solve();
    }

    double half_width() const { return half_width_; }

    /// V_n at belief pi, by linear interpolation in log-odds.
    double value(std::size_t n, double pi) const {
        const double phi = std::log(pi / (1.0 - pi));
        const double x = (phi + half_width_) / dx_;
        if (x <= 0.0) return values_[n].front();
        const auto last = static_cast<double>(opt_.nodes - 1);
        if (x >= last) return values_[n].back();
        const auto i = static_cast<std::size_t>(x);
        const double w = x - static_cast<double>(i);
        return (1.0 - w) * values_[n][i] + w * values_[n][i + 1];
    }

private:
    void solve() {
        const std::size_t M = opt_.nodes, N = gamma_.size() - 1;
        std::vector<double> pi(M);
        for (std::size_t i = 0; i < M; ++i) {
            const double phi = -half_width_ + dx_ * static_cast<double>(i);
            pi[i] = 1.0 / (1.0 + std::exp(-phi));
        }
        values_.assign(N + 1, std::vector<double>(M, 0.0));
        const double disc = std::exp(-r_ * opt_.dt);
        for (std::size_t n = N + 1; n-- > 0;) {
            const double rho2 = 2.0 * r_ / (gamma_[n] * (gamma_[n] - 1.0));
            std::vector<double> pu(M), pd(M), payoff(M);
            for (std::size_t i = 0; i < M; ++i) {
                const double m = rho2 * (pi[i] - 0.5) * opt_.dt, s2 = rho2 * opt_.dt;
                const double a = (s2 + m * m) / (2.0 * dx_ * dx_), b = m / (2.0 * dx_);
                pu[i] = a + b;
                pd[i] = a - b;
                if (pu[i] < 0.0 || pd[i] < 0.0 || pu[i] + pd[i] > 1.0)
                    throw std::runtime_error("value iteration: invalid transition probabilities");
                payoff[i] = pi[i] - k_ + (n < N ? values_[n + 1][i] : 0.0);
            }
            std::vector<double> v = payoff, next(M);
            double change = 1.0;
            std::size_t it = 0;
            while (change > opt_.tolerance) {
                if (++it > opt_.max_iterations) throw std::runtime_error("value iteration: no convergence");
                change = 0.0;
                for (std::size_t i = 0; i < M; ++i) {
                    const double up = v[std::min(i + 1, M - 1)], down = v[i == 0 ? 0 : i - 1];
                    const double cont = disc * (pu[i] * up + pd[i] * down + (1.0 - pu[i] - pd[i]) * v[i]);
                    next[i] = std::max(payoff[i], cont);
                    change = std::max(change, std::abs(next[i] - v[i]));
                }
                v.swap(next);
            }
            values_[n] = std::move(v);
        }
    }

    std::vector<double> gamma_;
    double r_, k_;
    ValueIterationOptions opt_;
    double half_width_ = 0.0, dx_ = 0.0;
    std::vector<std::vector<double>> values_;
};

}  // namespace oracle
