#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "treedp/dp.hpp"
#include "treedp/metrics.hpp"
#include "treedp/problem.hpp"
#include "treedp/tree.hpp"

using namespace treedp;

TEST_CASE("level error vanishes when the sweep equals the exact values") {
    auto b = make_test2();
    const double x0[] = {1.0, 1.0};
    auto tree = build_tree(b.problem, b.default_control_set, x0, 0.25, PruningPolicy::off_policy());
    auto sweep = backward_sweep(tree, b.problem);
    // overwrite with the exact values
    for (int n = 0; n <= tree.depth(); ++n)
        for (std::int64_t i = 0; i < tree.levels[n].count; ++i)
            sweep.values[n][i] = b.exact_min_value(tree.state(n, i), tree.time(n));
    for (int n = 0; n <= tree.depth(); ++n)
        CHECK(level_error(tree, sweep, b.exact_min_value, n).e2 == 0.0);
}

TEST_CASE("terminal level error is zero up to rounding") {
    for (const auto& b : {make_test1(), make_test2()}) {
        const double x0[] = {1.0, 1.0};
        auto tree = build_tree(b.problem, b.default_control_set, x0, 0.2,
                               PruningPolicy::off_policy());
        auto sweep = backward_sweep(tree, b.problem);
        CHECK(level_error(tree, sweep, b.exact_min_value, tree.depth()).e2 <= 1e-15);
    }
}

TEST_CASE("root level error is the single-node relative error") {
    auto b = make_test1();
    const double x0[] = {1.0, 1.0};
    auto tree = build_tree(b.problem, b.default_control_set, x0, 0.2, PruningPolicy::off_policy());
    auto sweep = backward_sweep(tree, b.problem);
    const double v = b.exact_min_value(x0, 0.0);
    const double expect = std::abs(v - sweep.root_value) / std::abs(v);
    CHECK(level_error(tree, sweep, b.exact_min_value, 0).e2 ==
          Catch::Approx(expect).epsilon(1e-14));
}

TEST_CASE("zero exact norm raises a degenerate-norm error naming the level") {
    auto b = make_test1();
    const double x0[] = {1.0, 1.0};
    auto tree = build_tree(b.problem, b.default_control_set, x0, 0.5, PruningPolicy::off_policy());
    auto sweep = backward_sweep(tree, b.problem);
    auto zero = [](std::span<const double>, double) { return 0.0; };
    try {
        level_error(tree, sweep, zero, 1);
        FAIL("expected degenerate_norm_error");
    } catch (const degenerate_norm_error& e) {
        CHECK(e.level() == 1);
    }
}

TEST_CASE("err aggregations: closed forms") {
    std::vector<LevelError> levels;
    for (int n = 0; n <= 5; ++n)
        levels.push_back({n, 0.0, false});
    CHECK(err_22(levels, 0.2) == 0.0);
    CHECK(err_inf2(levels) == 0.0);

    const double c = 0.37;
    for (auto& le : levels)
        le.e2 = c;
    CHECK(err_22(levels, 0.2) == Catch::Approx(c * std::sqrt(0.2 * 6)).epsilon(1e-14));
    CHECK(err_inf2(levels) == c);

    for (std::size_t n = 0; n < levels.size(); ++n)
        levels[n].e2 = 0.1 * static_cast<double>(n + 1);
    CHECK(err_inf2(levels) == Catch::Approx(0.6).epsilon(1e-14));
}

TEST_CASE("estimate_order") {
    CHECK(estimate_order(9.0e-2, 4.4e-2) == Catch::Approx(1.0324).margin(5e-4));
    CHECK(std::abs(estimate_order(9.0e-2, 4.4e-2) - 1.04) <= 0.05);
    CHECK(estimate_order(0.5, 0.25) == 1.0);
    CHECK(estimate_order(0.8, 0.2) == 2.0);
    CHECK_THROWS_AS(estimate_order(0.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(estimate_order(0.1, -1.0), std::invalid_argument);
}

TEST_CASE("aggregate error bounds hold on a real run") {
    auto b = make_test2();
    const double x0[] = {1.0, 1.0};
    auto tree = build_tree(b.problem, b.default_control_set, x0, 0.1, PruningPolicy::off_policy());
    auto sweep = backward_sweep(tree, b.problem);
    auto levels = all_level_errors(tree, sweep, b.exact_min_value, nullptr);
    const double e22 = err_22(levels, tree.dt);
    const double einf = err_inf2(levels);
    for (const auto& le : levels)
        CHECK(einf >= le.e2);
    CHECK(e22 <= std::sqrt(tree.dt * (tree.depth() + 1)) * einf + 1e-15);
}

TEST_CASE("error metrics are invariant under global negation") {
    auto b = make_test2();
    const double x0[] = {1.0, 1.0};
    auto tree = build_tree(b.problem, b.default_control_set, x0, 0.2, PruningPolicy::off_policy());
    auto sweep = backward_sweep(tree, b.problem);
    auto levels = all_level_errors(tree, sweep, b.exact_min_value, nullptr);

    auto negated = sweep;
    for (auto& lv : negated.values)
        for (auto& v : lv)
            v = -v;
    auto neg_exact = [&b](std::span<const double> x, double t) {
        return -b.exact_min_value(x, t);
    };
    auto neg_levels = all_level_errors(tree, negated, neg_exact, nullptr);
    REQUIRE(levels.size() == neg_levels.size());
    for (std::size_t n = 0; n < levels.size(); ++n)
        CHECK(levels[n].e2 == Catch::Approx(neg_levels[n].e2).epsilon(1e-13));
    CHECK(err_22(levels, tree.dt) == Catch::Approx(err_22(neg_levels, tree.dt)).epsilon(1e-13));
    CHECK(err_inf2(levels) == Catch::Approx(err_inf2(neg_levels)).epsilon(1e-13));
}

TEST_CASE("run_study reproduces the full-tree node column") {
    auto b = make_test1();
    const double x0[] = {1.0, 1.0};
    const double dts[] = {0.2, 0.1, 0.05};
    auto report = run_study(b, x0, dts, PruningPolicy::off_policy(), 50'000'000, 4);
    REQUIRE(report.rows.size() == 3);
    CHECK(report.rows[0].nodes == 63);
    CHECK(report.rows[1].nodes == 2047);
    CHECK(report.rows[2].nodes == 2097151);
    CHECK(!report.rows[0].order22.has_value());
    CHECK(report.rows[1].order22.has_value());
    CHECK(report.capacity_error_message.empty());
}

TEST_CASE("pruned and unpruned root values stay within the tolerance-rule gap") {
    auto b = make_test2();
    const double x0[] = {1.0, 1.0};
    for (double dt : {0.2, 0.1, 0.05}) {
        auto full = build_tree(b.problem, b.default_control_set, x0, dt,
                               PruningPolicy::off_policy());
        auto pruned = build_tree(b.problem, b.default_control_set, x0, dt,
                                 PruningPolicy::power(1.0, 2.0));
        const double vf = backward_sweep(full, b.problem).root_value;
        const double vp = backward_sweep(pruned, b.problem).root_value;
        CHECK(std::abs(vf - vp) <= 10.0 * dt);
    }
}

TEST_CASE("run_study rejects non-halving dt lists") {
    auto b = make_test1();
    const double x0[] = {1.0, 1.0};
    const double bad[] = {0.2, 0.05};
    CHECK_THROWS_AS(run_study(b, x0, bad, PruningPolicy::off_policy()), std::invalid_argument);
    const double empty[] = {0.2};
    CHECK_NOTHROW(run_study(b, x0, std::span<const double>{empty, 1},
                            PruningPolicy::off_policy()));
}

TEST_CASE("run_study keeps partial rows when the node cap hits") {
    auto b = make_test1();
    const double x0[] = {1.0, 1.0};
    const double dts[] = {0.2, 0.1, 0.05};
    auto report = run_study(b, x0, dts, PruningPolicy::off_policy(), 5000);
    REQUIRE(report.rows.size() == 2);
    CHECK(!report.capacity_error_message.empty());
}

TEST_CASE("run_study falls back to absolute errors on degenerate exact norms") {
    auto b = make_test1();
    b.exact_min_value = [](std::span<const double>, double) { return 0.0; };
    const double x0[] = {1.0, 1.0};
    const double dts[] = {0.5, 0.25};
    auto report = run_study(b, x0, dts, PruningPolicy::off_policy());
    CHECK(report.absolute_fallback);
    REQUIRE(report.rows.size() == 2);
    CHECK(report.rows[0].err22 > 0.0);
}
