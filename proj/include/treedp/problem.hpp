#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace treedp {

using DynamicsFn = std::function<void(std::span<const double> x, std::span<const double> u,
                                      double t, std::span<double> out)>;
using RunningCostFn = std::function<double(std::span<const double> x, std::span<const double> u,
                                           double t)>;
using TerminalCostFn = std::function<double(std::span<const double> x)>;
using ExactValueFn = std::function<double(std::span<const double> x, double t)>;

/// Finite-horizon control problem: minimize the discounted running+terminal
/// cost of an ODE trajectory driven by a control signal.
struct ControlProblem {
    int state_dim = 0;
    int control_dim = 0;
    DynamicsFn dynamics;
    RunningCostFn running_cost;
    TerminalCostFn terminal_cost;
    double discount = 0.0;
    double t0 = 0.0;
    double T = 0.0;

    void validate() const {
        if (state_dim < 1)
            throw std::invalid_argument("ControlProblem: state_dim must be >= 1");
        if (control_dim < 1)
            throw std::invalid_argument("ControlProblem: control_dim must be >= 1");
        if (discount < 0.0)
            throw std::invalid_argument("ControlProblem: discount must be >= 0");
        if (!(T > t0))
            throw std::invalid_argument("ControlProblem: horizon requires T > t0");
        if (!dynamics || !running_cost || !terminal_cost)
            throw std::invalid_argument("ControlProblem: dynamics/costs must be set");
    }
};

/// Finite list of control vectors, stored flat, with a fixed deterministic order.
struct DiscreteControlSet {
    int dim = 0;
    std::vector<double> flat; // size() * dim entries

    std::size_t size() const { return dim > 0 ? flat.size() / dim : 0; }
    std::span<const double> control(std::size_t j) const {
        return {flat.data() + j * dim, static_cast<std::size_t>(dim)};
    }
};

/// Bounds (2.3)-(2.5)-style constants; consumed only by test-side bound checks.
struct RegularityConstants {
    std::optional<double> M_f, M_L, M_g;
    std::optional<double> L_f, L_L, L_g;

    void validate() const {
        for (const auto& c : {M_f, M_L, M_g, L_f, L_L, L_g})
            if (c && *c < 0.0)
                throw std::invalid_argument("RegularityConstants: values must be >= 0");
    }
};

struct BenchmarkProblem {
    ControlProblem problem;
    ExactValueFn exact_min_value;
    std::string name;
    DiscreteControlSet default_control_set;
};

/// Tensor grid over [lower, upper] with step `du` in every coordinate.
/// The upper endpoint is always part of each axis; ordering is lexicographic
/// with the first coordinate varying slowest.
inline DiscreteControlSet discretize_controls(std::span<const double> lower,
                                              std::span<const double> upper, double du) {
    if (!(du > 0.0))
        throw std::invalid_argument("discretize_controls: step must be positive");
    if (lower.size() != upper.size() || lower.empty())
        throw std::invalid_argument("discretize_controls: bounds must be nonempty and equal-sized");

    const int m = static_cast<int>(lower.size());
    std::vector<std::vector<double>> axes(m);
    for (int i = 0; i < m; ++i) {
        if (lower[i] > upper[i])
            throw std::invalid_argument("discretize_controls: empty range, lower > upper");
        const double scale = std::max({1.0, std::abs(lower[i]), std::abs(upper[i])});
        const double tol = 1e-12 * scale;
        for (int k = 0;; ++k) {
            const double v = lower[i] + k * du;
            if (v >= upper[i] - tol)
                break;
            axes[i].push_back(v);
        }
        axes[i].push_back(upper[i]);
    }

    DiscreteControlSet set;
    set.dim = m;
    std::vector<std::size_t> idx(m, 0);
    for (;;) {
        for (int i = 0; i < m; ++i)
            set.flat.push_back(axes[i][idx[i]]);
        int i = m - 1;
        while (i >= 0 && ++idx[i] == axes[i].size())
            idx[i--] = 0;
        if (i < 0)
            break;
    }
    return set;
}

namespace detail {
inline DiscreteControlSet bang_bang_set() {
    const double lo[] = {-1.0};
    const double hi[] = {1.0};
    return discretize_controls(lo, hi, 2.0);
}
} // namespace detail

/// 2-d benchmark with dynamics (u, x1^2), terminal cost -x2 on [0,1].
/// The value function is known in closed form and has a |x1| kink.
inline BenchmarkProblem make_test1() {
    BenchmarkProblem b;
    b.name = "test1";
    b.problem.state_dim = 2;
    b.problem.control_dim = 1;
    b.problem.t0 = 0.0;
    b.problem.T = 1.0;
    b.problem.discount = 0.0;
    b.problem.dynamics = [](std::span<const double> x, std::span<const double> u, double,
                            std::span<double> out) {
        out[0] = u[0];
        out[1] = x[0] * x[0];
    };
    b.problem.running_cost = [](std::span<const double>, std::span<const double>, double) {
        return 0.0;
    };
    b.problem.terminal_cost = [](std::span<const double> x) { return -x[1]; };
    const double T = b.problem.T;
    b.exact_min_value = [T](std::span<const double> x, double t) {
        const double h = T - t;
        return -x[1] - x[0] * x[0] * h - h * h * h / 3.0 - std::abs(x[0]) * h * h;
    };
    b.default_control_set = detail::bang_bang_set();
    return b;
}

/// Linear pendulum benchmark: dynamics (x2, -x1+u), terminal cost -x1 on [0,1].
/// The closed-form value stored here is the negated maximal displacement, so
/// the solver's minimization convention applies unchanged.
inline BenchmarkProblem make_test2() {
    BenchmarkProblem b;
    b.name = "test2";
    b.problem.state_dim = 2;
    b.problem.control_dim = 1;
    b.problem.t0 = 0.0;
    b.problem.T = 1.0;
    b.problem.discount = 0.0;
    b.problem.dynamics = [](std::span<const double> x, std::span<const double> u, double,
                            std::span<double> out) {
        out[0] = x[1];
        out[1] = -x[0] + u[0];
    };
    b.problem.running_cost = [](std::span<const double>, std::span<const double>, double) {
        return 0.0;
    };
    b.problem.terminal_cost = [](std::span<const double> x) { return -x[0]; };
    const double T = b.problem.T;
    b.exact_min_value = [T](std::span<const double> x, double t) {
        const double h = T - t;
        const double c = std::cos(h);
        const double s = std::sin(h);
        return -(x[0] * c + x[1] * s + std::abs(c - 1.0));
    };
    b.default_control_set = detail::bang_bang_set();
    return b;
}

inline BenchmarkProblem make_benchmark(const std::string& name) {
    if (name == "test1")
        return make_test1();
    if (name == "test2")
        return make_test2();
    throw std::invalid_argument("unknown benchmark: " + name);
}

} // namespace treedp
