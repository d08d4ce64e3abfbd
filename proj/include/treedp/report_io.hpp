#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "treedp/dp.hpp"
#include "treedp/metrics.hpp"
#include "treedp/tree.hpp"

namespace treedp {

namespace detail {
// shortest decimal form that round-trips a double exactly
inline std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    double back;
    std::sscanf(buf, "%lf", &back);
    if (back == v) {
        for (int prec = 1; prec < 17; ++prec) {
            char shorter[64];
            std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
            std::sscanf(shorter, "%lf", &back);
            if (back == v)
                return shorter;
        }
    }
    return buf;
}
} // namespace detail

inline void write_report_csv(const ConvergenceReport& report, std::ostream& os) {
    os << "dt,nodes,cpu_s,err22,errinf2,order22,orderinf2\n";
    for (const auto& r : report.rows) {
        os << detail::fmt(r.dt) << ',' << r.nodes << ',' << detail::fmt(r.cpu_s) << ','
           << detail::fmt(r.err22) << ',' << detail::fmt(r.errinf2) << ',';
        if (r.order22)
            os << detail::fmt(*r.order22);
        os << ',';
        if (r.orderinf2)
            os << detail::fmt(*r.orderinf2);
        os << '\n';
    }
}

inline ConvergenceReport read_report_csv(std::istream& is) {
    ConvergenceReport report;
    std::string line;
    std::getline(is, line); // header
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ','))
            fields.push_back(f);
        fields.resize(7);
        StudyRow r;
        r.dt = std::stod(fields[0]);
        r.nodes = std::stoll(fields[1]);
        r.cpu_s = std::stod(fields[2]);
        r.err22 = std::stod(fields[3]);
        r.errinf2 = std::stod(fields[4]);
        if (!fields[5].empty())
            r.order22 = std::stod(fields[5]);
        if (!fields[6].empty())
            r.orderinf2 = std::stod(fields[6]);
        report.rows.push_back(r);
    }
    return report;
}

inline void write_report_json(const ConvergenceReport& report, std::ostream& os) {
    nlohmann::json j;
    j["benchmark"] = report.benchmark;
    j["x0"] = report.x0;
    j["pruning"] = report.pruning;
    j["absolute_fallback"] = report.absolute_fallback;
    if (!report.capacity_error_message.empty())
        j["capacity_error"] = report.capacity_error_message;
    j["rows"] = nlohmann::json::array();
    for (const auto& r : report.rows) {
        nlohmann::json row;
        row["dt"] = r.dt;
        row["nodes"] = r.nodes;
        row["cpu_s"] = r.cpu_s;
        row["err22"] = r.err22;
        row["errinf2"] = r.errinf2;
        row["order22"] = r.order22 ? nlohmann::json(*r.order22) : nlohmann::json();
        row["orderinf2"] = r.orderinf2 ? nlohmann::json(*r.orderinf2) : nlohmann::json();
        row["eps"] = r.eps;
        j["rows"].push_back(row);
    }
    os << j.dump(2) << '\n';
}

/// One row per node: level, index, state coordinates, child indices.
inline void write_tree_csv(const Tree& tree, std::ostream& os) {
    const std::size_t M = tree.controls.size();
    os << "level,index";
    for (int k = 0; k < tree.dim; ++k)
        os << ",x" << k;
    for (std::size_t j = 0; j < M; ++j)
        os << ",child" << j;
    os << '\n';
    for (int n = 0; n <= tree.depth(); ++n) {
        for (std::int64_t i = 0; i < tree.levels[n].count; ++i) {
            os << n << ',' << i;
            const auto x = tree.state(n, i);
            for (int k = 0; k < tree.dim; ++k)
                os << ',' << detail::fmt(x[k]);
            for (std::size_t j = 0; j < M; ++j) {
                os << ',';
                if (n < tree.depth())
                    os << tree.child(n, i, j);
            }
            os << '\n';
        }
    }
}

/// Columns: n, t, state coordinates, control coordinates, value along the path.
inline void write_trajectory_csv(const Tree& tree, const ValueSweepResult& sweep,
                                 const SynthesizedTrajectory& traj, std::ostream& os) {
    const int m = tree.controls.dim;
    os << "n,t";
    for (int k = 0; k < tree.dim; ++k)
        os << ",x" << k;
    for (int k = 0; k < m; ++k)
        os << ",u" << k;
    os << ",value\n";

    std::int64_t node = 0;
    for (std::size_t n = 0; n < traj.states.size(); ++n) {
        os << n << ',' << detail::fmt(tree.time(static_cast<int>(n)));
        for (double v : traj.states[n])
            os << ',' << detail::fmt(v);
        if (n < traj.control_indices.size()) {
            const auto u = tree.controls.control(traj.control_indices[n]);
            for (double v : u)
                os << ',' << detail::fmt(v);
        } else {
            for (int k = 0; k < m; ++k)
                os << ',';
        }
        os << ',' << detail::fmt(sweep.values[n][node]) << '\n';
        if (n < traj.control_indices.size())
            node = tree.child(static_cast<int>(n), node, traj.control_indices[n]);
    }
}

} // namespace treedp
