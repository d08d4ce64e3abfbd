#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "treedp/errors.hpp"
#include "treedp/problem.hpp"

namespace treedp {

/// Same-level node merge rule. `power` resolves eps = C * dt^p at build time.
struct PruningPolicy {
    enum class Mode { off, fixed, power };

    Mode mode = Mode::off;
    double eps = 0.0;      // fixed mode
    double coeff = 1.0;    // power mode
    double exponent = 2.0; // power mode

    static PruningPolicy off_policy() { return {}; }
    static PruningPolicy fixed(double eps) {
        if (eps < 0.0)
            throw std::invalid_argument("PruningPolicy: eps must be >= 0");
        return {Mode::fixed, eps, 1.0, 2.0};
    }
    static PruningPolicy power(double coeff, double exponent) {
        if (coeff < 0.0)
            throw std::invalid_argument("PruningPolicy: coefficient must be >= 0");
        return {Mode::power, 0.0, coeff, exponent};
    }

    double tolerance(double dt) const {
        switch (mode) {
        case Mode::off: return 0.0;
        case Mode::fixed: return eps;
        case Mode::power: return coeff * std::pow(dt, exponent);
        }
        return 0.0;
    }

    std::string describe() const {
        switch (mode) {
        case Mode::off: return "off";
        case Mode::fixed: return "eps=" + std::to_string(eps);
        case Mode::power:
            return "eps=" + std::to_string(coeff) + "*dt^" + std::to_string(exponent);
        }
        return "off";
    }
};

/// Uniform hash grid with cell edge eps over one tree level. A nearest-within
/// query inspects the 3^d cells around the query point, which covers every
/// node at distance <= eps.
class SpatialIndex {
public:
    SpatialIndex(const std::vector<double>& flat_states, int dim, double eps)
        : store_(flat_states), dim_(dim), cell_(eps > 0.0 ? eps : 1.0) {}

    void insert(std::int64_t idx, std::span<const double> x) {
        cells_[key_of(x)].push_back(idx);
    }

    /// Index of the nearest node within `eps` of x (Euclidean), ties broken by
    /// smallest index; -1 when no node qualifies.
    std::int64_t nearest_within(std::span<const double> x, double eps) const {
        std::vector<std::int64_t> cell(dim_);
        for (int i = 0; i < dim_; ++i)
            cell[i] = coord_cell(x[i]);
        std::int64_t best = -1;
        double best_d2 = std::numeric_limits<double>::infinity();
        const double eps2 = eps * eps;
        std::vector<std::int64_t> probe(dim_);
        std::vector<int> off(dim_, -1);
        for (;;) {
            for (int i = 0; i < dim_; ++i)
                probe[i] = cell[i] + off[i];
            if (auto it = cells_.find(hash_key(probe)); it != cells_.end()) {
                for (std::int64_t idx : it->second) {
                    double d2 = 0.0;
                    const double* s = store_.data() + idx * dim_;
                    for (int i = 0; i < dim_; ++i) {
                        const double diff = x[i] - s[i];
                        d2 += diff * diff;
                    }
                    if (d2 <= eps2 && (d2 < best_d2 || (d2 == best_d2 && idx < best))) {
                        best = idx;
                        best_d2 = d2;
                    }
                }
            }
            int i = dim_ - 1;
            while (i >= 0 && ++off[i] == 2)
                off[i--] = -1;
            if (i < 0)
                break;
        }
        return best;
    }

private:
    std::int64_t coord_cell(double v) const {
        return static_cast<std::int64_t>(std::floor(v / cell_));
    }
    std::uint64_t key_of(std::span<const double> x) const {
        std::vector<std::int64_t> cell(dim_);
        for (int i = 0; i < dim_; ++i)
            cell[i] = coord_cell(x[i]);
        return hash_key(cell);
    }
    static std::uint64_t hash_key(const std::vector<std::int64_t>& cell) {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (std::int64_t c : cell) {
            h ^= static_cast<std::uint64_t>(c);
            h *= 0x100000001b3ull;
            h ^= h >> 31;
        }
        return h;
    }

    const std::vector<double>& store_;
    int dim_;
    double cell_;
    // hashed cell -> node indices; collisions are harmless (distances filter)
    std::unordered_map<std::uint64_t, std::vector<std::int64_t>> cells_;
};

struct TreeLevel {
    std::vector<double> states;        // count * dim, flat
    std::vector<std::int64_t> children; // count * M, flat; empty on the last level
    std::int64_t count = 0;
};

/// Leveled store of Euler-reachable states: level n holds the nodes at time
/// t0 + n*dt, each interior node with one child edge per control.
struct Tree {
    std::vector<TreeLevel> levels;
    double dt = 0.0;
    double t0 = 0.0;
    int dim = 0;
    DiscreteControlSet controls;
    PruningPolicy pruning;
    double eps = 0.0; // resolved merge tolerance (0 when pruning is off)
    std::int64_t merge_count = 0;
    double max_perturbation = 0.0; // largest candidate-to-merge-target distance

    int depth() const { return static_cast<int>(levels.size()) - 1; }
    double time(int n) const { return t0 + n * dt; }

    std::span<const double> state(int level, std::int64_t i) const {
        return {levels[level].states.data() + i * dim, static_cast<std::size_t>(dim)};
    }
    std::int64_t child(int level, std::int64_t i, std::size_t control) const {
        return levels[level].children[i * static_cast<std::int64_t>(controls.size()) + control];
    }
    std::int64_t total_nodes() const {
        std::int64_t n = 0;
        for (const auto& lv : levels)
            n += lv.count;
        return n;
    }
};

/// One explicit Euler step of the problem dynamics.
inline void euler_step(const ControlProblem& p, std::span<const double> x,
                       std::span<const double> u, double t, double dt, std::span<double> out) {
    p.dynamics(x, u, t, out);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = x[i] + dt * out[i];
        if (!std::isfinite(out[i]))
            throw numerical_error("euler_step: non-finite state at t=" + std::to_string(t));
    }
}

inline std::vector<double> euler_step(const ControlProblem& p, std::span<const double> x,
                                      std::span<const double> u, double t, double dt) {
    std::vector<double> out(x.size());
    euler_step(p, x, u, t, dt, out);
    return out;
}

/// Merge lookup against the indexed candidates of one level.
inline std::int64_t prune_lookup(const SpatialIndex& index, std::span<const double> candidate,
                                 double eps) {
    return index.nearest_within(candidate, eps);
}

/// Sum of M^i for i = 0..N (node count of the full tree).
inline std::int64_t unpruned_cardinality(int M, int N) {
    if (M < 1 || N < 0)
        throw std::invalid_argument("unpruned_cardinality: need M >= 1, N >= 0");
    std::int64_t total = 0, term = 1;
    for (int i = 0; i <= N; ++i) {
        total += term;
        term *= M;
    }
    return total;
}

inline int horizon_steps(double t0, double T, double dt) {
    if (!(dt > 0.0))
        throw std::invalid_argument("build_tree: dt must be positive");
    const double ratio = (T - t0) / dt;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-9 || rounded < 1.0)
        throw std::invalid_argument("build_tree: (T - t0)/dt must be a positive integer, got " +
                                    std::to_string(ratio));
    return static_cast<int>(rounded);
}

/// Builds the full reachability tree. Parents are visited in index order and
/// controls in control order; with pruning active, a candidate landing within
/// eps of ANY earlier candidate of the same level (retained or itself merged)
/// is absorbed: its edge points to the node that earlier candidate resolved
/// to, and no node is created. Retained nodes therefore stay pairwise more
/// than eps apart, while merge chains can displace an edge target slightly
/// beyond eps (tracked in max_perturbation). The construction is
/// bit-deterministic.
inline Tree build_tree(const ControlProblem& problem, const DiscreteControlSet& controls,
                       std::span<const double> x0, double dt, const PruningPolicy& pruning,
                       std::int64_t node_cap = 50'000'000) {
    problem.validate();
    if (static_cast<int>(x0.size()) != problem.state_dim)
        throw std::invalid_argument("build_tree: x0 has wrong dimension");
    if (controls.size() == 0)
        throw std::invalid_argument("build_tree: empty control set");
    const int N = horizon_steps(problem.t0, problem.T, dt);
    const int d = problem.state_dim;
    const std::int64_t M = static_cast<std::int64_t>(controls.size());

    Tree tree;
    tree.dt = dt;
    tree.t0 = problem.t0;
    tree.dim = d;
    tree.controls = controls;
    tree.pruning = pruning;
    tree.eps = pruning.tolerance(dt);
    const bool merging = pruning.mode != PruningPolicy::Mode::off && tree.eps > 0.0;

    tree.levels.resize(N + 1);
    tree.levels[0].states.assign(x0.begin(), x0.end());
    tree.levels[0].count = 1;

    std::int64_t total = 1;
    std::vector<double> cand(d);
    for (int n = 0; n < N; ++n) {
        TreeLevel& cur = tree.levels[n];
        TreeLevel& next = tree.levels[n + 1];
        const double t = tree.time(n);
        cur.children.reserve(cur.count * M);
        // candidate pool of this level (retained and merged) with the node
        // index each one resolved to
        std::vector<double> seen_states;
        std::vector<std::int64_t> seen_target;
        SpatialIndex index(seen_states, d, tree.eps);

        for (std::int64_t i = 0; i < cur.count; ++i) {
            const std::span<const double> parent{cur.states.data() + i * d,
                                                 static_cast<std::size_t>(d)};
            for (std::int64_t j = 0; j < M; ++j) {
                try {
                    euler_step(problem, parent, controls.control(j), t, dt, cand);
                } catch (const numerical_error&) {
                    throw numerical_error("build_tree: non-finite dynamics at level " +
                                          std::to_string(n + 1) + ", control " +
                                          std::to_string(j));
                }
                if (merging) {
                    const std::int64_t k = prune_lookup(index, cand, tree.eps);
                    if (k >= 0) {
                        const std::int64_t target = seen_target[k];
                        cur.children.push_back(target);
                        ++tree.merge_count;
                        double d2 = 0.0;
                        const double* s = next.states.data() + target * d;
                        for (int c = 0; c < d; ++c)
                            d2 += (cand[c] - s[c]) * (cand[c] - s[c]);
                        tree.max_perturbation = std::max(tree.max_perturbation, std::sqrt(d2));
                        seen_states.insert(seen_states.end(), cand.begin(), cand.end());
                        index.insert(static_cast<std::int64_t>(seen_target.size()), cand);
                        seen_target.push_back(target);
                        continue;
                    }
                }
                const std::int64_t idx = next.count;
                next.states.insert(next.states.end(), cand.begin(), cand.end());
                ++next.count;
                cur.children.push_back(idx);
                if (merging) {
                    seen_states.insert(seen_states.end(), cand.begin(), cand.end());
                    index.insert(static_cast<std::int64_t>(seen_target.size()), cand);
                    seen_target.push_back(idx);
                }
                if (++total > node_cap)
                    throw capacity_error("build_tree: node cap " + std::to_string(node_cap) +
                                         " exceeded at level " + std::to_string(n + 1));
            }
        }
    }
    return tree;
}

} // namespace treedp
