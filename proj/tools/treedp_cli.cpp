// treedp command-line front end: solve / convergence / prune-study /
// trajectory / verify over the built-in benchmark problems.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "treedp/treedp.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitCapacity = 3;
constexpr int kExitNumerical = 4;
constexpr int kExitMismatch = 5;

std::vector<double> parse_doubles(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        std::size_t pos = 0;
        const double v = std::stod(tok, &pos);
        if (pos != tok.size() || !std::isfinite(v))
            throw std::invalid_argument("bad number in list: '" + tok + "'");
        out.push_back(v);
    }
    if (out.empty())
        throw std::invalid_argument("empty number list");
    return out;
}

// off | eps=NUMBER | eps=[C*]dt[^p]
treedp::PruningPolicy parse_prune(const std::string& spec) {
    using treedp::PruningPolicy;
    if (spec == "off")
        return PruningPolicy::off_policy();
    if (!spec.starts_with("eps="))
        throw std::invalid_argument("bad pruning spec '" + spec +
                                    "' (want off, eps=VALUE or eps=C*dt^p)");
    std::string body = spec.substr(4);
    double coeff = 1.0;
    if (auto star = body.find("*dt"); star != std::string::npos) {
        coeff = std::stod(body.substr(0, star));
        body = body.substr(star + 1);
    }
    if (body.starts_with("dt")) {
        double p = 1.0;
        if (body.size() > 2) {
            if (body[2] != '^')
                throw std::invalid_argument("bad pruning spec '" + spec + "'");
            p = std::stod(body.substr(3));
        }
        return PruningPolicy::power(coeff, p);
    }
    return PruningPolicy::fixed(std::stod(body));
}

struct Options {
    std::string benchmark = "test1";
    std::string x0_spec = "1,1";
    std::optional<double> t0, T;
    double dt = 0.0; // 0 means "not given"; solve/trajectory/verify need it
    std::string dts_spec;
    int controls_m = 0;
    std::string control_list;
    double du = 0.0, umin = -1.0, umax = 1.0;
    std::vector<std::string> prune_specs{"off"};
    std::string out;
    std::string format = "csv";
    std::int64_t node_cap = 50'000'000;
    int threads = static_cast<int>(std::thread::hardware_concurrency());
    std::string dump_tree;
    std::string config;
};

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos)
        return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// flat key=value file; keys mirror the long flags, explicit flags win
void apply_config(const CLI::App* cmd, Options& opt) {
    std::ifstream is(opt.config);
    if (!is)
        throw std::invalid_argument("cannot open config file '" + opt.config + "'");
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';')
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        const auto* known = cmd->get_option_no_throw("--" + key);
        if (known == nullptr || key == "config")
            throw std::invalid_argument("config key '" + key + "' is not valid for " +
                                        cmd->get_name());
        if (known->count() > 0)
            continue;
        if (key == "benchmark") opt.benchmark = val;
        else if (key == "x0") opt.x0_spec = val;
        else if (key == "t0") opt.t0 = std::stod(val);
        else if (key == "T") opt.T = std::stod(val);
        else if (key == "dt") opt.dt = std::stod(val);
        else if (key == "dts") opt.dts_spec = val;
        else if (key == "controls") opt.controls_m = std::stoi(val);
        else if (key == "control-list") opt.control_list = val;
        else if (key == "du") opt.du = std::stod(val);
        else if (key == "umin") opt.umin = std::stod(val);
        else if (key == "umax") opt.umax = std::stod(val);
        else if (key == "prune") opt.prune_specs = {val};
        else if (key == "out") opt.out = val;
        else if (key == "format") opt.format = val;
        else if (key == "node-cap") opt.node_cap = std::stoll(val);
        else if (key == "threads") opt.threads = std::stoi(val);
        else if (key == "dump-tree") opt.dump_tree = val;
        else
            throw std::invalid_argument("config key '" + key + "' is not supported");
    }
}

void add_common(CLI::App* cmd, Options& opt) {
    cmd->add_option("--benchmark", opt.benchmark, "Benchmark problem (test1|test2)")
        ->check(CLI::IsMember({"test1", "test2"}));
    cmd->add_option("--x0", opt.x0_spec, "Initial state, comma separated");
    cmd->add_option("--t0", opt.t0, "Override horizon start");
    cmd->add_option("--T", opt.T, "Override horizon end");
    cmd->add_option("--controls", opt.controls_m, "Evenly spaced control count over [umin,umax]");
    cmd->add_option("--control-list", opt.control_list, "Explicit 1-d control values");
    cmd->add_option("--du", opt.du, "Control grid step over [umin,umax]");
    cmd->add_option("--umin", opt.umin, "Control lower bound");
    cmd->add_option("--umax", opt.umax, "Control upper bound");
    cmd->add_option("--node-cap", opt.node_cap, "Tree node budget");
    cmd->add_option("--threads", opt.threads, "Max worker threads");
    cmd->add_option("--config", opt.config, "Flat key=value config file (flags win)");
}

treedp::BenchmarkProblem make_benchmark(const Options& opt) {
    auto b = treedp::make_benchmark(opt.benchmark);
    if (opt.t0)
        b.problem.t0 = *opt.t0;
    if (opt.T)
        b.problem.T = *opt.T;
    b.problem.validate();

    if (!opt.control_list.empty()) {
        const auto vals = parse_doubles(opt.control_list);
        treedp::DiscreteControlSet set;
        set.dim = 1;
        set.flat = vals;
        b.default_control_set = set;
    } else if (opt.du > 0.0) {
        const double lo[] = {opt.umin}, hi[] = {opt.umax};
        b.default_control_set = treedp::discretize_controls(lo, hi, opt.du);
    } else if (opt.controls_m > 0) {
        if (opt.controls_m == 1) {
            const double mid[] = {(opt.umin + opt.umax) / 2.0};
            treedp::DiscreteControlSet set;
            set.dim = 1;
            set.flat.assign(mid, mid + 1);
            b.default_control_set = set;
        } else {
            const double lo[] = {opt.umin}, hi[] = {opt.umax};
            b.default_control_set = treedp::discretize_controls(
                lo, hi, (opt.umax - opt.umin) / (opt.controls_m - 1));
        }
    }
    return b;
}

void require_dt(const Options& opt) {
    if (!(opt.dt > 0.0))
        throw std::invalid_argument("--dt is required and must be positive");
}

void require_dts(const Options& opt) {
    if (opt.dts_spec.empty())
        throw std::invalid_argument("--dts is required");
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os)
        throw std::invalid_argument("cannot open output file '" + path + "'");
    return os;
}

void emit_report(const treedp::ConvergenceReport& report, const std::string& out,
                 const std::string& format) {
    const auto write = [&](std::ostream& os) {
        if (format == "json")
            treedp::write_report_json(report, os);
        else
            treedp::write_report_csv(report, os);
    };
    if (out.empty()) {
        write(std::cout);
    } else {
        auto os = open_out(out);
        write(os);
        std::cout << "wrote " << out << "\n";
    }
}

int cmd_solve(const Options& opt) {
    require_dt(opt);
    const auto b = make_benchmark(opt);
    const auto x0 = parse_doubles(opt.x0_spec);
    const auto pruning = parse_prune(opt.prune_specs.front());
    const auto tree = treedp::build_tree(b.problem, b.default_control_set, x0, opt.dt, pruning,
                                         opt.node_cap);
    const auto sweep = treedp::backward_sweep(tree, b.problem, opt.threads);
    std::cout << "root_value " << treedp::detail::fmt(sweep.root_value) << "\n"
              << "nodes " << tree.total_nodes() << "\n"
              << "merges " << tree.merge_count << "\n";
    if (!opt.dump_tree.empty()) {
        auto os = open_out(opt.dump_tree);
        treedp::write_tree_csv(tree, os);
        std::cout << "wrote " << opt.dump_tree << "\n";
    }
    return 0;
}

int cmd_convergence(const Options& opt) {
    require_dts(opt);
    const auto b = make_benchmark(opt);
    const auto x0 = parse_doubles(opt.x0_spec);
    const auto dts = parse_doubles(opt.dts_spec);
    const auto pruning = parse_prune(opt.prune_specs.front());
    const auto report = treedp::run_study(b, x0, dts, pruning, opt.node_cap, opt.threads);
    emit_report(report, opt.out, opt.format);
    if (!report.capacity_error_message.empty()) {
        std::cerr << report.capacity_error_message << "\n";
        return kExitCapacity;
    }
    return 0;
}

int cmd_prune_study(const Options& opt) {
    require_dts(opt);
    const auto b = make_benchmark(opt);
    const auto x0 = parse_doubles(opt.x0_spec);
    const auto dts = parse_doubles(opt.dts_spec);
    int rc = 0;
    for (std::size_t i = 0; i < opt.prune_specs.size(); ++i) {
        const auto pruning = parse_prune(opt.prune_specs[i]);
        const auto report = treedp::run_study(b, x0, dts, pruning, opt.node_cap, opt.threads);
        std::string out = opt.out;
        if (!out.empty() && opt.prune_specs.size() > 1)
            out += "." + std::to_string(i) + "." + opt.format;
        if (out.empty())
            std::cout << "# pruning " << pruning.describe() << "\n";
        emit_report(report, out, opt.format);
        if (!report.capacity_error_message.empty()) {
            std::cerr << report.capacity_error_message << "\n";
            rc = kExitCapacity;
        }
    }
    return rc;
}

int cmd_trajectory(const Options& opt) {
    require_dt(opt);
    const auto b = make_benchmark(opt);
    const auto x0 = parse_doubles(opt.x0_spec);
    const auto pruning = parse_prune(opt.prune_specs.front());
    const auto tree = treedp::build_tree(b.problem, b.default_control_set, x0, opt.dt, pruning,
                                         opt.node_cap);
    const auto sweep = treedp::backward_sweep(tree, b.problem, opt.threads);
    const auto traj = treedp::synthesize_trajectory(tree, sweep, b.problem);
    if (opt.out.empty()) {
        treedp::write_trajectory_csv(tree, sweep, traj, std::cout);
    } else {
        auto os = open_out(opt.out);
        treedp::write_trajectory_csv(tree, sweep, traj, os);
        std::cout << "wrote " << opt.out << "\n";
    }
    return 0;
}

int cmd_verify(const Options& opt) {
    require_dt(opt);
    const auto b = make_benchmark(opt);
    const auto x0 = parse_doubles(opt.x0_spec);
    const auto tree = treedp::build_tree(b.problem, b.default_control_set, x0, opt.dt,
                                         treedp::PruningPolicy::off_policy(), opt.node_cap);
    const auto sweep = treedp::backward_sweep(tree, b.problem, opt.threads);
    const auto oracle = treedp::brute_force_value(b.problem, b.default_control_set, x0, opt.dt);
    const double scale = std::max({1.0, std::abs(sweep.root_value), std::abs(oracle.min_cost)});
    const double rel = std::abs(sweep.root_value - oracle.min_cost) / scale;
    std::cout << "dp_root_value " << treedp::detail::fmt(sweep.root_value) << "\n"
              << "oracle_min_cost " << treedp::detail::fmt(oracle.min_cost) << "\n"
              << "sequences " << oracle.sequences_evaluated << "\n"
              << "rel_diff " << treedp::detail::fmt(rel) << "\n";
    if (rel > 1e-12) {
        std::cerr << "verification mismatch: rel_diff " << rel << " > 1e-12\n";
        return kExitMismatch;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finite-horizon optimal control on trees of Euler-reachable states"};
    app.require_subcommand(1);

    Options opt;
    auto* solve = app.add_subcommand("solve", "Build tree, run the value sweep, print the root value");
    auto* conv = app.add_subcommand("convergence", "Multi-dt error/order study");
    auto* prune = app.add_subcommand("prune-study", "Convergence study per pruning rule");
    auto* traj = app.add_subcommand("trajectory", "Synthesize the optimal discrete trajectory");
    auto* verify = app.add_subcommand("verify", "Check the value sweep against brute-force enumeration");

    for (auto* cmd : {solve, conv, prune, traj, verify})
        add_common(cmd, opt);
    for (auto* cmd : {solve, traj, verify})
        cmd->add_option("--dt", opt.dt, "Time step (required)");
    for (auto* cmd : {conv, prune})
        cmd->add_option("--dts", opt.dts_spec, "Halving dt list, comma separated (required)");
    for (auto* cmd : {solve, conv, traj}) {
        cmd->add_option("--prune", opt.prune_specs,
                        "Pruning rule: off, eps=VALUE or eps=C*dt^p")
            ->expected(1);
    }
    prune->add_option("--prune", opt.prune_specs, "Pruning rules (repeatable)");
    for (auto* cmd : {conv, prune, traj})
        cmd->add_option("--out", opt.out, "Output file (default stdout)");
    for (auto* cmd : {conv, prune})
        cmd->add_option("--format", opt.format, "Report format")
            ->check(CLI::IsMember({"csv", "json"}));
    solve->add_option("--dump-tree", opt.dump_tree, "Write a per-node tree CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        for (auto* cmd : {solve, conv, prune, traj, verify})
            if (cmd->parsed() && !opt.config.empty())
                apply_config(cmd, opt);
        if (solve->parsed())
            return cmd_solve(opt);
        if (conv->parsed())
            return cmd_convergence(opt);
        if (prune->parsed())
            return cmd_prune_study(opt);
        if (traj->parsed())
            return cmd_trajectory(opt);
        if (verify->parsed())
            return cmd_verify(opt);
    } catch (const treedp::capacity_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCapacity;
    } catch (const treedp::numerical_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const treedp::degenerate_norm_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
