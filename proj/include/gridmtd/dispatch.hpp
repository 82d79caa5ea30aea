#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gridmtd/case.hpp"
#include "gridmtd/errors.hpp"
#include "gridmtd/mtd.hpp"
#include "gridmtd/network.hpp"
#include "gridmtd/simplex.hpp"

namespace gridmtd {

/// Overload test is strict with a small relative guard so solver noise at
/// a binding limit never triggers a spurious cascade.
inline constexpr double kOverloadSlack = 1e-9;

struct DispatchResult {
    Vec generation;   ///< per generator, MW
    Vec shed;         ///< per bus, MW (zero when shedding disabled)
    Vec theta;        ///< per bus angle (MW-flow scaling)
    Vec flows;        ///< per branch MW, zero on out-of-service branches
    double cost = 0.0;
    bool feasible = false;
};

/// Minimum-cost dispatch at fixed reactances over the live network:
/// nodal balance, line limits, generator limits, optional load shedding
/// priced per bus. Reactances are inputs, never decision variables.
inline DispatchResult solve_opf(const GridCase& grid, const Vec& reactance,
                                const BranchMask& live, bool allow_shedding) {
    const int n_bus = grid.num_buses();
    const int n_gen = static_cast<int>(grid.generators.size());
    const int n_branch = grid.num_branches();
    if (static_cast<int>(reactance.size()) != n_branch)
        throw ValidationError("reactance vector must cover every branch");
    if (static_cast<int>(live.size()) != n_branch)
        throw ValidationError("live mask must cover every branch");

    const int num_shed = allow_shedding ? n_bus : 0;
    const int theta0 = n_gen + num_shed;
    const int num_vars = theta0 + n_bus;

    LpProblem lp;
    lp.objective.assign(num_vars, 0.0);
    lp.lower.assign(num_vars, 0.0);
    lp.upper.assign(num_vars, 0.0);

    for (int g = 0; g < n_gen; ++g) {
        lp.objective[g] = grid.generators[g].cost_per_mwh;
        lp.lower[g] = grid.generators[g].p_min_mw;
        lp.upper[g] = grid.generators[g].p_max_mw;
    }
    for (int b = 0; b < num_shed; ++b) {
        lp.objective[n_gen + b] = grid.shed_costs[b];
        lp.lower[n_gen + b] = 0.0;
        lp.upper[n_gen + b] = std::max(0.0, grid.buses[b].load_mw);
    }
    for (int b = 0; b < n_bus; ++b) {
        lp.lower[theta0 + b] = -kLpInfinity;
        lp.upper[theta0 + b] = kLpInfinity;
    }
    // pin the reference angle; islands created by removals keep a floating
    // shift, which changes no flow and no cost
    lp.lower[theta0 + grid.reference_index()] = 0.0;
    lp.upper[theta0 + grid.reference_index()] = 0.0;

    // nodal balance: sum(g at bus) + shed - (B theta) = load
    std::vector<Vec> balance(n_bus, Vec(num_vars, 0.0));
    for (int g = 0; g < n_gen; ++g)
        balance[grid.bus_index(grid.generators[g].bus)][g] += 1.0;
    for (int b = 0; b < num_shed; ++b) balance[b][n_gen + b] += 1.0;
    for (int l = 0; l < n_branch; ++l) {
        if (!live[l]) continue;
        const double y = 1.0 / reactance[l];
        const int i = grid.bus_index(grid.branches[l].from_bus);
        const int j = grid.bus_index(grid.branches[l].to_bus);
        balance[i][theta0 + i] -= y;
        balance[i][theta0 + j] += y;
        balance[j][theta0 + j] -= y;
        balance[j][theta0 + i] += y;
    }
    for (int b = 0; b < n_bus; ++b) lp.add_row(std::move(balance[b]), '=', grid.buses[b].load_mw);

    // line limits: |(theta_i - theta_j)/x| <= f_max
    for (int l = 0; l < n_branch; ++l) {
        if (!live[l]) continue;
        const double y = 1.0 / reactance[l];
        const int i = grid.bus_index(grid.branches[l].from_bus);
        const int j = grid.bus_index(grid.branches[l].to_bus);
        Vec fwd(num_vars, 0.0);
        fwd[theta0 + i] = y;
        fwd[theta0 + j] = -y;
        Vec rev = fwd;
        for (auto& v : rev) v = -v;
        lp.add_row(std::move(fwd), '<', grid.branches[l].flow_limit_mw);
        lp.add_row(std::move(rev), '<', grid.branches[l].flow_limit_mw);
    }

    const LpSolution lp_sol = solve_lp(lp);
    DispatchResult out;
    if (lp_sol.status == LpStatus::Unbounded)
        throw NumericalError("dispatch LP reported unbounded; objective is malformed");
    if (lp_sol.status == LpStatus::Infeasible) {
        out.feasible = false;
        return out;
    }

    out.feasible = true;
    out.cost = lp_sol.objective;
    out.generation.assign(lp_sol.x.begin(), lp_sol.x.begin() + n_gen);
    if (allow_shedding)
        out.shed.assign(lp_sol.x.begin() + n_gen, lp_sol.x.begin() + n_gen + n_bus);
    else
        out.shed.assign(n_bus, 0.0);
    out.theta.assign(lp_sol.x.begin() + theta0, lp_sol.x.begin() + theta0 + n_bus);
    out.flows.assign(n_branch, 0.0);
    for (int l = 0; l < n_branch; ++l)
        if (live[l])
            out.flows[l] = (out.theta[grid.bus_index(grid.branches[l].from_bus)] -
                            out.theta[grid.bus_index(grid.branches[l].to_bus)]) /
                           reactance[l];
    return out;
}

inline DispatchResult solve_opf(const GridCase& grid, const Vec& reactance, bool allow_shedding) {
    return solve_opf(grid, reactance, all_live(grid.num_branches()), allow_shedding);
}

/// Post-attack cost evaluation for one (attack action, defense action)
/// cell, following the fixed sequence: perturb reactances, dispatch the
/// intact grid, and -- only when the attack beats the protection predicate
/// -- redistribute flows at the frozen dispatch, remove the one round of
/// overloaded branches, and re-dispatch with shedding on what remains.
struct Algorithm1Result {
    double baseline_cost = 0.0; ///< C(a_0, d_n)
    double attacked_cost = 0.0; ///< C(a_m, d_n); equals baseline when the attack fails
    bool attack_successful = false;
    std::vector<int> cascade_removed; ///< overloaded branches disconnected after the trip
    DispatchResult baseline;
    DispatchResult final_dispatch;
};

inline Algorithm1Result algorithm1_cost(const GridCase& grid, const Topology& topo,
                                        const DfactsConfig& dfacts,
                                        const std::vector<int>& tripped,
                                        const DfactsPlan& defense) {
    for (int l : tripped)
        if (l < 0 || l >= grid.num_branches())
            throw ValidationError("tripped set contains an out-of-range branch");

    Algorithm1Result out;
    const Vec x = apply_perturbation(grid, defense, dfacts).reactance;

    out.baseline = solve_opf(grid, x, all_live(grid.num_branches()), true);
    if (!out.baseline.feasible)
        throw NumericalError("baseline dispatch with shedding reported infeasible");
    out.baseline_cost = out.baseline.cost;

    out.attack_successful = false;
    for (int l : tripped)
        if (!is_protected(topo, l, defense.perturbed)) {
            out.attack_successful = true;
            break;
        }
    if (!out.attack_successful) {
        out.attacked_cost = out.baseline_cost;
        out.final_dispatch = out.baseline;
        return out;
    }

    // flows redistribute at the frozen pre-attack dispatch
    BranchMask live = all_live(grid.num_branches());
    for (int l : tripped) live[l] = 0;
    Vec injections = grid.injections(out.baseline.generation);
    for (int b = 0; b < grid.num_buses(); ++b) injections[b] += out.baseline.shed[b];
    const FlowSolution redistributed = dc_flow_islanded(topo, x, injections, live);

    for (int l = 0; l < grid.num_branches(); ++l)
        if (live[l] && std::abs(redistributed.flows[l]) >
                           grid.branches[l].flow_limit_mw * (1.0 + kOverloadSlack))
            out.cascade_removed.push_back(l);
    for (int l : out.cascade_removed) live[l] = 0;

    out.final_dispatch = solve_opf(grid, x, live, true);
    if (!out.final_dispatch.feasible)
        throw NumericalError("post-attack dispatch with shedding reported infeasible");
    out.attacked_cost = out.final_dispatch.cost;
    return out;
}

} // namespace gridmtd
