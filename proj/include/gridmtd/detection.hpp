#pragma once

#include <cstdint>
#include <vector>

#include "gridmtd/attack.hpp"
#include "gridmtd/case.hpp"
#include "gridmtd/dispatch.hpp"
#include "gridmtd/errors.hpp"
#include "gridmtd/estimation.hpp"
#include "gridmtd/mtd.hpp"
#include "gridmtd/network.hpp"
#include "gridmtd/rng.hpp"

namespace gridmtd {

/// Whether the attacker's reactance snapshot predates the current
/// perturbation (the situation the defense engineers for) or tracks it.
enum class KnowledgeMode { PreMtdSnapshot, Fresh };

struct AttackConfig {
    int tripped = -1; ///< branch index
    KnowledgeMode knowledge = KnowledgeMode::PreMtdSnapshot;
    PathRule path_rule = PathRule::first();
};

/// One full evaluation scenario, fixed across trials: the defender's
/// perturbed model and dispatch, the true post-trip flows, and the
/// attacker's masking vector. Only sensor noise varies per trial.
struct DetectionScenario {
    MeasurementModel model;
    Vec noiseless_post_attack; ///< H_post * theta_post, before noise
    Vec attack;                ///< masking vector a
    CcpaVector ccpa;

    static DetectionScenario build(const GridCase& grid, const Topology& topo,
                                   const DfactsConfig& dfacts, const DfactsPlan& plan,
                                   const AttackConfig& attack, double sigma, double alpha,
                                   bool weighted_residual = true) {
        if (attack.tripped < 0 || attack.tripped >= grid.num_branches())
            throw ValidationError("attack trips an out-of-range branch");

        const Vec x_nominal = [&] {
            Vec x(grid.branches.size());
            for (std::size_t l = 0; l < x.size(); ++l) x[l] = grid.branches[l].reactance;
            return x;
        }();
        const Vec x_current = apply_perturbation(grid, plan, dfacts).reactance;

        // the defender knows its own perturbation: detection runs against
        // the perturbed model
        MeasurementModel model = MeasurementModel::build(topo, x_current, grid.reference_index(),
                                                         sigma, alpha, weighted_residual);

        // dispatch after the perturbation, held fixed through the trip
        const DispatchResult dispatch = solve_opf(grid, x_current, false);
        if (!dispatch.feasible)
            throw NumericalError("pre-attack dispatch infeasible at the perturbed reactances");
        const Vec injections = grid.injections(dispatch.generation);

        BranchMask live = all_live(grid.num_branches());
        live[attack.tripped] = 0;
        FlowSolution post;
        try {
            post = dc_flow(topo, x_current, injections, live, grid.reference_index());
        } catch (const IslandingError&) {
            throw RadialTripError("branch " + std::to_string(attack.tripped + 1) +
                                  " trip islands the grid: not attackable");
        }

        AttackerKnowledge knowledge;
        knowledge.reactances =
            attack.knowledge == KnowledgeMode::Fresh ? x_current : x_nominal;
        knowledge.observed_flows = post.flows; // true sensor readings
        const CcpaVector ccpa = build_ccpa(topo, attack.tripped, knowledge, attack.path_rule);

        DetectionScenario scenario{std::move(model), {}, ccpa.a, ccpa};
        const auto& layout = scenario.model.layout();
        scenario.noiseless_post_attack.assign(layout.rows(), 0.0);
        for (int l = 0; l < topo.num_branches(); ++l) {
            scenario.noiseless_post_attack[layout.forward_row(l)] = post.flows[l];
            scenario.noiseless_post_attack[layout.reverse_row(l)] = -post.flows[l];
        }
        for (int b = 0; b < topo.num_buses(); ++b)
            scenario.noiseless_post_attack[layout.injection_row(b)] = injections[b];
        return scenario;
    }

    /// Residual test on one noisy sample.
    BddResult evaluate(Rng& rng) const {
        Vec z = noiseless_post_attack;
        for (int r = 0; r < model.layout().rows(); ++r)
            z[r] += model.sigma(r) * rng.normal() + attack[r];
        return bdd_residual(model, z);
    }

    /// Residual of the noiseless attacked measurement (masking quality).
    double noiseless_residual() const {
        Vec z = noiseless_post_attack;
        for (int r = 0; r < model.layout().rows(); ++r) z[r] += attack[r];
        return bdd_residual(model, z).residual;
    }
};

/// Alarm fraction over seeded Monte Carlo trials of the full loop:
/// perturb, re-model, dispatch, trip, mask, detect. Deterministic for a
/// fixed seed; trials use independent derived streams, so evaluation
/// order cannot change the result.
inline double detection_probability(const GridCase& grid, const Topology& topo,
                                    const DfactsConfig& dfacts, const DfactsPlan& plan,
                                    const AttackConfig& attack, double sigma, double alpha,
                                    int trials, std::uint64_t seed,
                                    bool weighted_residual = true) {
    if (trials < 1) throw ValidationError("trial count must be at least 1");
    const DetectionScenario scenario =
        DetectionScenario::build(grid, topo, dfacts, plan, attack, sigma, alpha,
                                 weighted_residual);
    int alarms = 0;
    for (int t = 0; t < trials; ++t) {
        Rng rng = Rng::for_trial(seed, static_cast<std::uint64_t>(t));
        if (scenario.evaluate(rng).alarm) ++alarms;
    }
    return static_cast<double>(alarms) / trials;
}

} // namespace gridmtd
