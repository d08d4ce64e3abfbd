#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "treedp/errors.hpp"
#include "treedp/problem.hpp"
#include "treedp/tree.hpp"

namespace treedp {

struct ValueSweepResult {
    std::vector<std::vector<double>> values;      // aligned with tree levels
    std::vector<std::vector<int>> argmin_control; // levels 0..N-1
    double root_value = 0.0;
};

struct SynthesizedTrajectory {
    std::vector<std::vector<double>> states; // N+1 states along chosen edges
    std::vector<int> control_indices;        // N entries
    double accumulated_cost = 0.0;
};

namespace detail {
template <typename Fn>
void parallel_for(std::int64_t count, int threads, Fn&& fn) {
    if (threads <= 1 || count < 4096) {
        fn(0, count);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    const std::int64_t chunk = (count + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const std::int64_t lo = t * chunk;
        const std::int64_t hi = std::min(count, lo + chunk);
        if (lo >= hi)
            break;
        pool.emplace_back([&fn, &err = errors[t], lo, hi] {
            try {
                fn(lo, hi);
            } catch (...) {
                err = std::current_exception();
            }
        });
    }
    for (auto& th : pool)
        th.join();
    for (auto& err : errors)
        if (err)
            std::rethrow_exception(err);
}
} // namespace detail

/// Backward value recursion over the tree: terminal values g on the last
/// level, then per node the minimum over its M stored child edges of
/// exp(-lambda*dt)*V(child) + dt*L. Ties go to the smallest control index.
/// Node minimizations within a level are independent; the result does not
/// depend on the thread count.
inline ValueSweepResult backward_sweep(const Tree& tree, const ControlProblem& problem,
                                       int threads = 1) {
    const int N = tree.depth();
    const std::int64_t M = static_cast<std::int64_t>(tree.controls.size());
    const double disc = std::exp(-problem.discount * tree.dt);

    ValueSweepResult res;
    res.values.resize(N + 1);
    res.argmin_control.resize(N);

    const TreeLevel& last = tree.levels[N];
    res.values[N].resize(last.count);
    detail::parallel_for(last.count, threads, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i)
            res.values[N][i] = problem.terminal_cost(tree.state(N, i));
    });

    for (int n = N - 1; n >= 0; --n) {
        const TreeLevel& lv = tree.levels[n];
        const double t = tree.time(n);
        res.values[n].resize(lv.count);
        res.argmin_control[n].resize(lv.count);
        const std::vector<double>& next = res.values[n + 1];
        detail::parallel_for(lv.count, threads, [&](std::int64_t lo, std::int64_t hi) {
            for (std::int64_t i = lo; i < hi; ++i) {
                const auto x = tree.state(n, i);
                double best = 0.0;
                int best_j = -1;
                for (std::int64_t j = 0; j < M; ++j) {
                    const double cand = disc * next[lv.children[i * M + j]] +
                                        tree.dt * problem.running_cost(x, tree.controls.control(j), t);
                    if (best_j < 0 || cand < best) {
                        best = cand;
                        best_j = static_cast<int>(j);
                    }
                }
                if (!std::isfinite(best))
                    throw numerical_error("backward_sweep: non-finite value at level " +
                                          std::to_string(n) + ", node " + std::to_string(i));
                res.values[n][i] = best;
                res.argmin_control[n][i] = best_j;
            }
        });
    }
    res.root_value = res.values[0][0];
    return res;
}

/// Greedy descent along argmin edges; on a tree this path attains the DP
/// minimum exactly (including merge perturbations baked into stored edges).
inline SynthesizedTrajectory synthesize_trajectory(const Tree& tree, const ValueSweepResult& sweep,
                                                   const ControlProblem& problem) {
    const int N = tree.depth();
    SynthesizedTrajectory traj;
    traj.states.reserve(N + 1);

    std::int64_t i = 0;
    double cost = 0.0;
    for (int n = 0; n < N; ++n) {
        const auto x = tree.state(n, i);
        traj.states.emplace_back(x.begin(), x.end());
        const int j = sweep.argmin_control[n][i];
        traj.control_indices.push_back(j);
        const double t = tree.time(n);
        cost += tree.dt * problem.running_cost(x, tree.controls.control(j), t) *
                std::exp(-problem.discount * (t - tree.t0));
        i = tree.child(n, i, static_cast<std::size_t>(j));
    }
    const auto xN = tree.state(N, i);
    traj.states.emplace_back(xN.begin(), xN.end());
    cost += problem.terminal_cost(xN) * std::exp(-problem.discount * (problem.T - tree.t0));
    traj.accumulated_cost = cost;
    return traj;
}

} // namespace treedp
