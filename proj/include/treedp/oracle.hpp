#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "treedp/errors.hpp"
#include "treedp/problem.hpp"
#include "treedp/tree.hpp"

namespace treedp {

struct EnumerationResult {
    double min_cost = 0.0;
    std::vector<int> argmin_sequence; // N control indices, lexicographically smallest argmin
    std::int64_t sequences_evaluated = 0;
};

/// Exhaustive reference: rolls out every piecewise-constant control sequence
/// with explicit Euler and evaluates the discrete discounted cost. Depth-first
/// in control order, so strict-improvement updates keep the lexicographically
/// smallest minimizer. Guarded at M^N <= 1e7.
inline EnumerationResult brute_force_value(const ControlProblem& problem,
                                           const DiscreteControlSet& controls,
                                           std::span<const double> x0, double dt) {
    problem.validate();
    // N = 0 (terminal-cost-only) is a legal degenerate case here
    const double ratio = (problem.T - problem.t0) / dt;
    if (!(dt > 0.0) || std::abs(ratio - std::round(ratio)) > 1e-9)
        throw std::invalid_argument("brute_force_value: (T - t0)/dt must be integral");
    const int N = static_cast<int>(std::round(ratio));
    const int d = problem.state_dim;
    const std::int64_t M = static_cast<std::int64_t>(controls.size());

    double total = 1.0;
    for (int k = 0; k < N; ++k) {
        total *= static_cast<double>(M);
        if (total > 1e7)
            throw capacity_error("brute_force_value: M^N exceeds 1e7 (M=" + std::to_string(M) +
                                 ", N=" + std::to_string(N) + ")");
    }

    EnumerationResult res;
    res.sequences_evaluated = static_cast<std::int64_t>(total);

    // incremental rollout: states[k] is the state before step k
    std::vector<std::vector<double>> states(N + 1, std::vector<double>(d));
    std::vector<double> partial_cost(N + 1, 0.0);
    states[0].assign(x0.begin(), x0.end());
    std::vector<int> seq(N, 0);
    bool have_best = false;

    const double lambda = problem.discount;
    auto recurse = [&](auto&& self, int k) -> void {
        if (k == N) {
            const double cost = partial_cost[N] +
                                problem.terminal_cost(states[N]) *
                                    std::exp(-lambda * (problem.T - problem.t0));
            if (!have_best || cost < res.min_cost) {
                have_best = true;
                res.min_cost = cost;
                res.argmin_sequence = seq;
            }
            return;
        }
        const double t = problem.t0 + k * dt;
        for (std::int64_t j = 0; j < M; ++j) {
            seq[k] = static_cast<int>(j);
            const auto u = controls.control(j);
            euler_step(problem, states[k], u, t, dt, states[k + 1]);
            partial_cost[k + 1] = partial_cost[k] +
                                  dt * problem.running_cost(states[k], u, t) *
                                      std::exp(-lambda * (t - problem.t0));
            self(self, k + 1);
        }
    };
    recurse(recurse, 0);
    return res;
}

} // namespace treedp
