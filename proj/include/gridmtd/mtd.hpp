#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "gridmtd/case.hpp"
#include "gridmtd/errors.hpp"
#include "gridmtd/network.hpp"

namespace gridmtd {

/// Sign assignment for reactance perturbations across the active set.
enum class SignRule {
    Alternating, ///< +eta, -eta, ... in ascending branch order (default)
    AllPositive,
    AllNegative,
};

/// A D-FACTS operating plan: where devices sit, which are active this
/// period, and how hard they push.
struct DfactsPlan {
    std::vector<int> deployment; ///< branch indices carrying D-FACTS, ascending
    std::vector<int> perturbed;  ///< active subset for this period, ascending
    double eta = 0.0;            ///< fractional reactance change per active branch
    SignRule signs = SignRule::Alternating;

    void validate(int num_branches) const {
        auto check_set = [&](const std::vector<int>& s, const char* what) {
            for (std::size_t k = 0; k < s.size(); ++k) {
                if (s[k] < 0 || s[k] >= num_branches)
                    throw ValidationError(std::string(what) + " contains an out-of-range branch");
                if (k > 0 && s[k] <= s[k - 1])
                    throw ValidationError(std::string(what) + " must be strictly ascending");
            }
        };
        check_set(deployment, "deployment set");
        check_set(perturbed, "perturbation set");
        if (!std::includes(deployment.begin(), deployment.end(), perturbed.begin(),
                           perturbed.end()))
            throw ValidationError("perturbation set must be a subset of the deployment set");
        if (!(eta >= 0.0)) throw ValidationError("eta must be nonnegative");
    }
};

/// Minimum-size deployment enabling protection of every branch: the
/// complement of a maximum-weight spanning tree (a minimum-weight feedback
/// edge set). The residual graph is a spanning tree, so each deployed
/// branch closes exactly one independent cycle; |set| = L - N + 1.
inline std::vector<int> deploy_dfacts(const Topology& topo, const Vec& weights) {
    const auto tree = max_weight_spanning_tree(topo, weights);
    std::vector<char> in_tree(topo.num_branches(), 0);
    for (int l : tree) in_tree[l] = 1;
    std::vector<int> deployment;
    for (int l = 0; l < topo.num_branches(); ++l)
        if (!in_tree[l]) deployment.push_back(l);
    return deployment;
}

inline std::vector<int> deploy_dfacts(const Topology& topo) {
    return deploy_dfacts(topo, Vec(topo.num_branches(), 1.0));
}

/// True when a masking attack against `link` is infeasible under the
/// active perturbation set: either the link's own reactance is perturbed,
/// or every alternative path between its endpoints crosses a perturbed
/// branch. The path condition is evaluated as connectivity: the endpoints
/// must not reconnect once the link and the perturbed branches are
/// removed.
inline bool is_protected(const Topology& topo, int link, const std::vector<int>& perturbed) {
    if (link < 0 || link >= topo.num_branches())
        throw ValidationError("link index out of range");
    for (int l : perturbed)
        if (l == link) return true;
    BranchMask live = all_live(topo.num_branches());
    live[link] = 0;
    for (int l : perturbed) live[l] = 0;
    return !topo.connected_between(live, topo.from(link), topo.to(link));
}

struct PerturbationResult {
    Vec reactance;            ///< per-branch perturbed values
    std::vector<int> clipped; ///< branches clamped at a range limit
};

/// Apply x_l * (1 + s_l * eta) on the active set, clamped into the
/// hardware range. Branches outside the active set keep nominal values.
inline PerturbationResult apply_perturbation(const GridCase& grid, const DfactsPlan& plan,
                                             const DfactsConfig& cfg) {
    plan.validate(grid.num_branches());
    cfg.validate(grid);

    PerturbationResult out;
    out.reactance.resize(grid.branches.size());
    for (std::size_t l = 0; l < grid.branches.size(); ++l)
        out.reactance[l] = grid.branches[l].reactance;

    int zero_width = 0;
    for (std::size_t k = 0; k < plan.perturbed.size(); ++k) {
        const int l = plan.perturbed[k];
        double sign = 1.0;
        switch (plan.signs) {
            case SignRule::Alternating:
                sign = (k % 2 == 0) ? 1.0 : -1.0;
                break;
            case SignRule::AllPositive:
                sign = 1.0;
                break;
            case SignRule::AllNegative:
                sign = -1.0;
                break;
        }
        const double target = grid.branches[l].reactance * (1.0 + sign * plan.eta);
        const double clamped = std::clamp(target, cfg.x_min[l], cfg.x_max[l]);
        if (clamped != target) out.clipped.push_back(l);
        if (cfg.x_max[l] - cfg.x_min[l] <= 0.0) ++zero_width;
        out.reactance[l] = clamped;
    }
    if (plan.eta > 0.0 && !plan.perturbed.empty() &&
        zero_width == static_cast<int>(plan.perturbed.size()))
        throw ValidationError(
            "degenerate D-FACTS ranges: every active branch is pinned at both limits");
    return out;
}

} // namespace gridmtd
