#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "gridmtd/case.hpp"
#include "gridmtd/errors.hpp"
#include "gridmtd/linalg.hpp"

namespace gridmtd {

/// Live-branch mask; entry l is true when branch l is in service.
using BranchMask = std::vector<char>;

inline BranchMask all_live(int num_branches) { return BranchMask(num_branches, 1); }

/// Immutable branch-bus structure of a grid. Branch orientation is fixed
/// (from -> to as written in the case); queries never mutate, so a
/// snapshot can be shared across threads. Removing branches is expressed
/// through masks, not by editing the snapshot.
class Topology {
public:
    Topology() = default;

    explicit Topology(const GridCase& grid) {
        n_buses_ = grid.num_buses();
        ends_.reserve(grid.branches.size());
        for (const auto& br : grid.branches)
            ends_.emplace_back(grid.bus_index(br.from_bus), grid.bus_index(br.to_bus));
        build_adjacency();
    }

    /// Construct directly from 0-based endpoint pairs.
    Topology(int n_buses, std::vector<std::pair<int, int>> ends)
        : n_buses_(n_buses), ends_(std::move(ends)) {
        build_adjacency();
    }

    int num_buses() const { return n_buses_; }
    int num_branches() const { return static_cast<int>(ends_.size()); }
    int from(int l) const { return ends_[l].first; }
    int to(int l) const { return ends_[l].second; }

    /// Incidence entry A[bus][branch]: +1 at the from end, -1 at the to end.
    double incidence(int bus, int l) const {
        if (ends_[l].first == bus) return 1.0;
        if (ends_[l].second == bus) return -1.0;
        return 0.0;
    }

    /// Branches incident to a bus, ascending branch index.
    const std::vector<int>& branches_at(int bus) const { return adjacency_[bus]; }

    int other_end(int l, int bus) const {
        return ends_[l].first == bus ? ends_[l].second : ends_[l].first;
    }

    /// Connected components of the live subgraph, as groups of bus indices.
    std::vector<std::vector<int>> islands(const BranchMask& live) const {
        std::vector<int> comp(n_buses_, -1);
        std::vector<std::vector<int>> groups;
        for (int start = 0; start < n_buses_; ++start) {
            if (comp[start] >= 0) continue;
            const int id = static_cast<int>(groups.size());
            groups.emplace_back();
            std::vector<int> stack{start};
            comp[start] = id;
            while (!stack.empty()) {
                const int v = stack.back();
                stack.pop_back();
                groups[id].push_back(v);
                for (int l : adjacency_[v]) {
                    if (!live[l]) continue;
                    const int w = other_end(l, v);
                    if (comp[w] < 0) {
                        comp[w] = id;
                        stack.push_back(w);
                    }
                }
            }
            std::sort(groups[id].begin(), groups[id].end());
        }
        return groups;
    }

    bool connected(const BranchMask& live) const { return islands(live).size() == 1; }

    /// True when buses a and b are connected through live branches.
    bool connected_between(const BranchMask& live, int a, int b) const {
        if (a == b) return true;
        std::vector<char> seen(n_buses_, 0);
        std::vector<int> stack{a};
        seen[a] = 1;
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            for (int l : adjacency_[v]) {
                if (!live[l]) continue;
                const int w = other_end(l, v);
                if (w == b) return true;
                if (!seen[w]) {
                    seen[w] = 1;
                    stack.push_back(w);
                }
            }
        }
        return false;
    }

private:
    void build_adjacency() {
        adjacency_.assign(n_buses_, {});
        for (int l = 0; l < num_branches(); ++l) {
            adjacency_[ends_[l].first].push_back(l);
            adjacency_[ends_[l].second].push_back(l);
        }
    }

    int n_buses_ = 0;
    std::vector<std::pair<int, int>> ends_;
    std::vector<std::vector<int>> adjacency_;
};

/// Nodal susceptance structure for one reactance assignment: the diagonal
/// of 1/x_l over live branches and the reduced B = A D Aᵀ with the
/// reference row/column deleted, prefactorized for repeated solves.
class Susceptance {
public:
    static Susceptance build(const Topology& topo, const Vec& reactance, const BranchMask& live,
                             int ref_index) {
        Susceptance s;
        s.ref_ = ref_index;
        s.n_ = topo.num_buses();
        s.b_full_ = Mat(s.n_, s.n_);
        for (int l = 0; l < topo.num_branches(); ++l) {
            if (!live[l]) continue;
            const double y = 1.0 / reactance[l];
            const int i = topo.from(l);
            const int j = topo.to(l);
            s.b_full_(i, i) += y;
            s.b_full_(j, j) += y;
            s.b_full_(i, j) -= y;
            s.b_full_(j, i) -= y;
        }
        Mat reduced(s.n_ - 1, s.n_ - 1);
        for (int r = 0, rr = 0; r < s.n_; ++r) {
            if (r == ref_index) continue;
            for (int c = 0, cc = 0; c < s.n_; ++c) {
                if (c == ref_index) continue;
                reduced(rr, cc) = s.b_full_(r, c);
                ++cc;
            }
            ++rr;
        }
        auto chol = CholeskyFactor::compute(reduced);
        if (!chol)
            throw IslandingError("nodal susceptance matrix is singular: live graph disconnected",
                                 topo.islands(live));
        s.factor_ = std::move(*chol);
        return s;
    }

    const Mat& full() const { return b_full_; }

    /// Solve B θ = p with θ[ref] pinned to zero.
    Vec solve(const Vec& injections) const {
        Vec rhs;
        rhs.reserve(n_ - 1);
        for (int i = 0; i < n_; ++i)
            if (i != ref_) rhs.push_back(injections[i]);
        const Vec reduced_theta = factor_.solve(rhs);
        Vec theta(n_, 0.0);
        for (int i = 0, k = 0; i < n_; ++i)
            if (i != ref_) theta[i] = reduced_theta[k++];
        return theta;
    }

private:
    int n_ = 0;
    int ref_ = 0;
    Mat b_full_;
    CholeskyFactor factor_;
};

struct FlowSolution {
    Vec theta; ///< per-bus angle; reference pinned to 0
    Vec flows; ///< per-branch MW, 0 on out-of-service branches
};

/// DC power flow at fixed injections. Flow on branch l is
/// (theta_from - theta_to) / x_l; angles carry the MW-flow scaling of the
/// injections. Throws IslandingError (with the island partition) when the
/// live graph is disconnected.
inline FlowSolution dc_flow(const Topology& topo, const Vec& reactance, const Vec& injections_mw,
                            const BranchMask& live, int ref_index) {
    double total = 0.0, scale = 1.0;
    for (double p : injections_mw) {
        total += p;
        scale = std::max(scale, std::abs(p));
    }
    if (std::abs(total) > 1e-6 * scale)
        throw ValidationError("injections must sum to zero (imbalance " +
                              detail::format_double(total) + " MW)");
    if (!topo.connected(live))
        throw IslandingError("cannot solve flows on a disconnected live graph",
                             topo.islands(live));

    const auto susceptance = Susceptance::build(topo, reactance, live, ref_index);
    FlowSolution sol;
    sol.theta = susceptance.solve(injections_mw);
    sol.flows.assign(topo.num_branches(), 0.0);
    for (int l = 0; l < topo.num_branches(); ++l)
        if (live[l])
            sol.flows[l] = (sol.theta[topo.from(l)] - sol.theta[topo.to(l)]) / reactance[l];
    return sol;
}

inline FlowSolution dc_flow(const GridCase& grid, const Vec& injections_mw,
                            const BranchMask& live) {
    Topology topo(grid);
    Vec x(grid.branches.size());
    for (std::size_t l = 0; l < x.size(); ++l) x[l] = grid.branches[l].reactance;
    return dc_flow(topo, x, injections_mw, live, grid.reference_index());
}

/// Per-island DC flow used by cascade evaluation: each island's imbalance
/// is absorbed at its lowest-index bus (the island slack) so that flows
/// are defined even after removals split the grid.
inline FlowSolution dc_flow_islanded(const Topology& topo, const Vec& reactance,
                                     const Vec& injections_mw, const BranchMask& live) {
    FlowSolution sol;
    sol.theta.assign(topo.num_buses(), 0.0);
    sol.flows.assign(topo.num_branches(), 0.0);
    for (const auto& island : topo.islands(live)) {
        if (island.size() == 1) continue;
        const int slack = island.front();
        double imbalance = 0.0;
        for (int b : island) imbalance += injections_mw[b];
        Vec local = injections_mw;
        local[slack] -= imbalance;
        // zero out everything outside the island, then solve it alone
        std::vector<char> in_island(topo.num_buses(), 0);
        for (int b : island) in_island[b] = 1;
        BranchMask sub_live(live.size(), 0);
        for (int l = 0; l < topo.num_branches(); ++l)
            if (live[l] && in_island[topo.from(l)]) sub_live[l] = 1;
        // build a compacted topology for the island
        std::vector<int> to_local(topo.num_buses(), -1);
        for (std::size_t k = 0; k < island.size(); ++k) to_local[island[k]] = static_cast<int>(k);
        std::vector<std::pair<int, int>> ends;
        std::vector<int> branch_ids;
        Vec x_local;
        for (int l = 0; l < topo.num_branches(); ++l)
            if (sub_live[l]) {
                ends.emplace_back(to_local[topo.from(l)], to_local[topo.to(l)]);
                branch_ids.push_back(l);
                x_local.push_back(reactance[l]);
            }
        Topology sub(static_cast<int>(island.size()), std::move(ends));
        Vec inj_local(island.size());
        for (std::size_t k = 0; k < island.size(); ++k) inj_local[k] = local[island[k]];
        const auto local_sol =
            dc_flow(sub, x_local, inj_local, all_live(sub.num_branches()), to_local[slack]);
        for (std::size_t k = 0; k < island.size(); ++k) sol.theta[island[k]] = local_sol.theta[k];
        for (std::size_t k = 0; k < branch_ids.size(); ++k)
            sol.flows[branch_ids[k]] = local_sol.flows[k];
    }
    return sol;
}

inline constexpr int kDefaultPathCap = 10000;

/// All simple paths between the endpoints of a tripped branch in the
/// residual graph (every live branch except the tripped one). Each path is
/// a branch-index sequence ordered from the branch's from-bus to its
/// to-bus. Enumeration order is deterministic: depth-first, ascending
/// branch index. Returns an empty list for radial branches.
inline std::vector<std::vector<int>> alternative_paths(const Topology& topo, int tripped,
                                                       const BranchMask& live,
                                                       int max_paths = kDefaultPathCap) {
    if (tripped < 0 || tripped >= topo.num_branches())
        throw ValidationError("tripped branch index out of range");
    const int source = topo.from(tripped);
    const int target = topo.to(tripped);

    std::vector<std::vector<int>> paths;
    std::vector<int> branch_stack;
    std::vector<char> visited(topo.num_buses(), 0);
    visited[source] = 1;

    // explicit DFS over (bus, next branch cursor) to keep deep graphs safe
    struct Frame {
        int bus;
        std::size_t cursor;
    };
    std::vector<Frame> frames{{source, 0}};
    while (!frames.empty()) {
        Frame& f = frames.back();
        const auto& incident = topo.branches_at(f.bus);
        bool descended = false;
        while (f.cursor < incident.size()) {
            const int l = incident[f.cursor++];
            if (l == tripped || !live[l]) continue;
            const int w = topo.other_end(l, f.bus);
            if (w == target) {
                branch_stack.push_back(l);
                paths.push_back(branch_stack);
                branch_stack.pop_back();
                if (static_cast<int>(paths.size()) > max_paths)
                    throw PathOverflowError("alternative path enumeration exceeded cap of " +
                                            std::to_string(max_paths));
                continue;
            }
            if (visited[w]) continue;
            visited[w] = 1;
            branch_stack.push_back(l);
            frames.push_back({w, 0});
            descended = true;
            break;
        }
        if (!descended) {
            if (frames.size() > 1) {
                visited[f.bus] = 0;
                branch_stack.pop_back();
            }
            frames.pop_back();
        }
    }
    return paths;
}

inline std::vector<std::vector<int>> alternative_paths(const Topology& topo, int tripped,
                                                       int max_paths = kDefaultPathCap) {
    return alternative_paths(topo, tripped, all_live(topo.num_branches()), max_paths);
}

namespace detail {

class UnionFind {
public:
    explicit UnionFind(int n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
    int find(int v) {
        while (parent_[v] != v) {
            parent_[v] = parent_[parent_[v]];
            v = parent_[v];
        }
        return v;
    }
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent_[a] = b;
        return true;
    }

private:
    std::vector<int> parent_;
};

} // namespace detail

/// Maximum-weight spanning tree (Kruskal). Ties broken deterministically:
/// branches considered in descending weight, then ascending branch index.
/// Returns the N-1 tree branch indices in ascending order.
inline std::vector<int> max_weight_spanning_tree(const Topology& topo, const Vec& weights) {
    if (static_cast<int>(weights.size()) != topo.num_branches())
        throw ValidationError("weight vector must cover every branch");
    std::vector<int> order(topo.num_branches());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (weights[a] != weights[b]) return weights[a] > weights[b];
        return a < b;
    });
    detail::UnionFind uf(topo.num_buses());
    std::vector<int> tree;
    for (int l : order)
        if (uf.unite(topo.from(l), topo.to(l))) tree.push_back(l);
    if (static_cast<int>(tree.size()) != topo.num_buses() - 1)
        throw ValidationError("graph is disconnected: no spanning tree exists");
    std::sort(tree.begin(), tree.end());
    return tree;
}

} // namespace gridmtd
