#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "treedp/dp.hpp"
#include "treedp/errors.hpp"
#include "treedp/problem.hpp"
#include "treedp/tree.hpp"

namespace treedp {

struct LevelError {
    int level = 0;
    double e2 = 0.0;
    bool absolute = false; // relative norm degenerated; absolute l2 reported instead
};

struct StudyRow {
    double dt = 0.0;
    std::int64_t nodes = 0;
    double cpu_s = 0.0;
    double err22 = 0.0;
    double errinf2 = 0.0;
    std::optional<double> order22;
    std::optional<double> orderinf2;
    double eps = 0.0; // resolved merge tolerance for this row
};

struct ConvergenceReport {
    std::string benchmark;
    std::vector<double> x0;
    std::string pruning; // PruningPolicy::describe()
    std::vector<StudyRow> rows;
    bool absolute_fallback = false;       // some level used the absolute-error fallback
    std::string capacity_error_message;   // nonempty when the study stopped early
};

/// Relative l2 error of the sweep values against the exact value function over
/// the retained nodes of level n. Throws degenerate_norm_error when the exact
/// norm on the level vanishes.
inline LevelError level_error(const Tree& tree, const ValueSweepResult& sweep,
                              const ExactValueFn& exact, int n) {
    if (n < 0 || n > tree.depth())
        throw std::invalid_argument("level_error: level out of range");
    const double t = tree.time(n);
    double num = 0.0, den = 0.0;
    for (std::int64_t i = 0; i < tree.levels[n].count; ++i) {
        const double v = exact(tree.state(n, i), t);
        const double diff = v - sweep.values[n][i];
        num += diff * diff;
        den += v * v;
    }
    if (den == 0.0)
        throw degenerate_norm_error(n, "level_error: exact-solution norm is zero on level " +
                                           std::to_string(n));
    return {n, std::sqrt(num / den), false};
}

/// Absolute l2 fallback for levels where the relative denominator vanishes.
inline LevelError level_error_absolute(const Tree& tree, const ValueSweepResult& sweep,
                                       const ExactValueFn& exact, int n) {
    const double t = tree.time(n);
    double num = 0.0;
    for (std::int64_t i = 0; i < tree.levels[n].count; ++i) {
        const double diff = exact(tree.state(n, i), t) - sweep.values[n][i];
        num += diff * diff;
    }
    return {n, std::sqrt(num), true};
}

/// Time-l2 aggregation sqrt(dt * sum_n E2(t_n)^2).
inline double err_22(std::span<const LevelError> levels, double dt) {
    double sum = 0.0;
    for (const auto& le : levels)
        sum += le.e2 * le.e2;
    return std::sqrt(dt * sum);
}

/// Time-linf aggregation max_n E2(t_n).
inline double err_inf2(std::span<const LevelError> levels) {
    double mx = 0.0;
    for (const auto& le : levels)
        mx = std::max(mx, le.e2);
    return mx;
}

/// Observed order between a dt run and a dt/2 run: log2(coarse/fine).
inline double estimate_order(double err_coarse, double err_fine) {
    if (!(err_coarse > 0.0) || !(err_fine > 0.0))
        throw std::invalid_argument("estimate_order: errors must be positive");
    return std::log2(err_coarse / err_fine);
}

inline std::vector<LevelError> all_level_errors(const Tree& tree, const ValueSweepResult& sweep,
                                                const ExactValueFn& exact, bool* used_fallback) {
    std::vector<LevelError> levels;
    levels.reserve(tree.depth() + 1);
    for (int n = 0; n <= tree.depth(); ++n) {
        try {
            levels.push_back(level_error(tree, sweep, exact, n));
        } catch (const degenerate_norm_error&) {
            levels.push_back(level_error_absolute(tree, sweep, exact, n));
            if (used_fallback)
                *used_fallback = true;
        }
    }
    return levels;
}

/// Multi-dt study: for each dt builds the tree, sweeps, and records errors and
/// observed orders. dt_list must be strictly halving and divide the horizon.
/// On a capacity error the rows computed so far are kept and the message is
/// recorded in the report.
inline ConvergenceReport run_study(const BenchmarkProblem& benchmark, std::span<const double> x0,
                                   std::span<const double> dt_list, const PruningPolicy& pruning,
                                   std::int64_t node_cap = 50'000'000, int threads = 1) {
    if (dt_list.empty())
        throw std::invalid_argument("run_study: dt list is empty");
    for (std::size_t i = 1; i < dt_list.size(); ++i)
        if (std::abs(dt_list[i] - dt_list[i - 1] / 2.0) > 1e-12 * dt_list[i - 1])
            throw std::invalid_argument("run_study: dt list must strictly halve");
    for (double dt : dt_list)
        horizon_steps(benchmark.problem.t0, benchmark.problem.T, dt);

    ConvergenceReport report;
    report.benchmark = benchmark.name;
    report.x0.assign(x0.begin(), x0.end());
    report.pruning = pruning.describe();

    for (double dt : dt_list) {
        StudyRow row;
        row.dt = dt;
        row.eps = pruning.tolerance(dt);
        const auto start = std::chrono::steady_clock::now();
        try {
            Tree tree = build_tree(benchmark.problem, benchmark.default_control_set, x0, dt,
                                   pruning, node_cap);
            ValueSweepResult sweep = backward_sweep(tree, benchmark.problem, threads);
            const auto levels =
                all_level_errors(tree, sweep, benchmark.exact_min_value, &report.absolute_fallback);
            row.nodes = tree.total_nodes();
            row.err22 = err_22(levels, dt);
            row.errinf2 = err_inf2(levels);
        } catch (const capacity_error& e) {
            report.capacity_error_message = e.what();
            break;
        }
        row.cpu_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!report.rows.empty()) {
            const StudyRow& prev = report.rows.back();
            row.order22 = estimate_order(prev.err22, row.err22);
            row.orderinf2 = estimate_order(prev.errinf2, row.errinf2);
        }
        report.rows.push_back(row);
    }
    return report;
}

} // namespace treedp
