#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "gridmtd/case.hpp"
#include "gridmtd/dispatch.hpp"
#include "gridmtd/errors.hpp"
#include "gridmtd/linalg.hpp"
#include "gridmtd/mtd.hpp"
#include "gridmtd/network.hpp"

namespace gridmtd {

/// Two-player finite game between the defender (rows: perturbation sets)
/// and the attacker (columns: trip sets). Index 0 on both sides is the
/// do-nothing action; payoffs are benchmarked so cell (0, 0) is (0, 0).
struct GameSpec {
    std::vector<std::vector<int>> defender_actions; ///< perturbation sets, branch indices
    std::vector<std::vector<int>> attacker_actions; ///< trip sets, branch indices
    Mat u_defender;
    Mat u_attacker;
    Mat success; ///< 1 when the attack beats the protection predicate
    Vec defender_baseline_costs; ///< C(a_0, d_j) per defender action
    double benchmark_cost = 0.0; ///< C(a_0, d_0)

    int num_defender() const { return static_cast<int>(defender_actions.size()); }
    int num_attacker() const { return static_cast<int>(attacker_actions.size()); }
};

namespace detail {

inline std::vector<std::vector<int>> with_null_action(std::vector<std::vector<int>> actions,
                                                      const char* who) {
    int empties = 0;
    for (const auto& a : actions)
        if (a.empty()) ++empties;
    if (empties > 1) throw ValidationError(std::string(who) + " action list repeats the null action");
    if (empties == 1) {
        if (!actions.front().empty())
            throw ValidationError(std::string(who) + " null action must come first");
        return actions;
    }
    actions.insert(actions.begin(), std::vector<int>{});
    return actions;
}

} // namespace detail

/// Evaluate every payoff cell through the cost computation: a failed
/// attack costs the defender only its own perturbation, a successful one
/// costs the post-cascade dispatch; the attacker gains exactly what the
/// defender loses beyond the benchmark, and nothing on failure.
inline GameSpec build_game(const GridCase& grid, const Topology& topo, const DfactsConfig& dfacts,
                           const std::vector<int>& deployment,
                           std::vector<std::vector<int>> defender_sets,
                           std::vector<std::vector<int>> attacker_sets, double eta,
                           SignRule signs = SignRule::Alternating) {
    GameSpec game;
    game.defender_actions = detail::with_null_action(std::move(defender_sets), "defender");
    game.attacker_actions = detail::with_null_action(std::move(attacker_sets), "attacker");

    for (const auto& set : game.defender_actions)
        for (int l : set)
            if (!std::binary_search(deployment.begin(), deployment.end(), l))
                throw ValidationError("defender set uses branch " + std::to_string(l + 1) +
                                      " outside the deployment set");

    const int nd = game.num_defender();
    const int na = game.num_attacker();
    game.u_defender = Mat(nd, na);
    game.u_attacker = Mat(nd, na);
    game.success = Mat(nd, na);
    game.defender_baseline_costs.assign(nd, 0.0);

    for (int j = 0; j < nd; ++j) {
        DfactsPlan plan;
        plan.deployment = deployment;
        plan.perturbed = game.defender_actions[j];
        plan.eta = eta;
        plan.signs = signs;

        for (int i = 0; i < na; ++i) {
            const Algorithm1Result cell =
                algorithm1_cost(grid, topo, dfacts, game.attacker_actions[i], plan);
            if (i == 0) game.defender_baseline_costs[j] = cell.baseline_cost;
            if (j == 0 && i == 0) game.benchmark_cost = cell.baseline_cost;
            game.success(j, i) = cell.attack_successful ? 1.0 : 0.0;
            if (cell.attack_successful) {
                game.u_defender(j, i) = game.benchmark_cost - cell.attacked_cost;
                game.u_attacker(j, i) = cell.attacked_cost - game.benchmark_cost;
            } else {
                game.u_defender(j, i) = game.benchmark_cost - cell.baseline_cost;
                game.u_attacker(j, i) = 0.0;
            }
        }
    }
    return game;
}

/// Bilinear expected payoffs at a mixed profile.
inline std::pair<double, double> expected_payoffs(const GameSpec& game, const Vec& p_defender,
                                                  const Vec& p_attacker) {
    if (static_cast<int>(p_defender.size()) != game.num_defender() ||
        static_cast<int>(p_attacker.size()) != game.num_attacker())
        throw ValidationError("mixed profile dimensions do not match the game");
    double ud = 0.0, ua = 0.0;
    for (int j = 0; j < game.num_defender(); ++j)
        for (int i = 0; i < game.num_attacker(); ++i) {
            const double w = p_defender[j] * p_attacker[i];
            ud += w * game.u_defender(j, i);
            ua += w * game.u_attacker(j, i);
        }
    return {ud, ua};
}

inline constexpr double kNeSlack = 1e-8;

/// All cells that are simultaneous best responses (weak inequalities).
inline std::vector<std::pair<int, int>> pure_ne(const GameSpec& game) {
    std::vector<std::pair<int, int>> out;
    for (int j = 0; j < game.num_defender(); ++j)
        for (int i = 0; i < game.num_attacker(); ++i) {
            bool best = true;
            for (int jj = 0; best && jj < game.num_defender(); ++jj)
                if (game.u_defender(jj, i) > game.u_defender(j, i) + kNeSlack) best = false;
            for (int ii = 0; best && ii < game.num_attacker(); ++ii)
                if (game.u_attacker(j, ii) > game.u_attacker(j, i) + kNeSlack) best = false;
            if (best) out.emplace_back(j, i);
        }
    return out;
}

struct MixedProfile {
    Vec p_defender;
    Vec p_attacker;
    std::vector<int> support_defender;
    std::vector<int> support_attacker;
    double payoff_defender = 0.0;
    double payoff_attacker = 0.0;
};

struct MixedNeOptions {
    std::size_t max_pairs = 1'000'000; ///< support pairs examined before truncating
    double slack = kNeSlack;           ///< weak-inequality tolerance
    double support_tol = 1e-9;         ///< membership threshold for probabilities
};

struct MixedNeResult {
    std::vector<MixedProfile> equilibria;
    bool truncated = false;
    std::size_t pairs_examined = 0;
    std::size_t degenerate_skips = 0;
};

namespace detail {

/// Lexicographic k-subsets of {0..n-1}.
inline bool next_combination(std::vector<int>& comb, int n) {
    const int k = static_cast<int>(comb.size());
    for (int i = k - 1; i >= 0; --i) {
        if (comb[i] < n - k + i) {
            ++comb[i];
            for (int jj = i + 1; jj < k; ++jj) comb[jj] = comb[jj - 1] + 1;
            return true;
        }
    }
    return false;
}

inline std::vector<int> first_combination(int k) {
    std::vector<int> comb(k);
    for (int i = 0; i < k; ++i) comb[i] = i;
    return comb;
}

/// Solve one player's indifference system: the opponent mix over
/// `opp_support` that equalizes this player's payoffs across
/// `own_support`. Payoff lookup maps (own action, opponent action).
template <typename Payoff>
inline std::optional<Vec> indifference_mix(const std::vector<int>& own_support,
                                           const std::vector<int>& opp_support, Payoff&& u) {
    const int k = static_cast<int>(opp_support.size());
    const int rows = static_cast<int>(own_support.size());
    Mat m(rows, k);
    Vec rhs(rows, 0.0);
    for (int r = 0; r + 1 < rows; ++r)
        for (int c = 0; c < k; ++c)
            m(r, c) = u(own_support[r], opp_support[c]) - u(own_support[r + 1], opp_support[c]);
    for (int c = 0; c < k; ++c) m(rows - 1, c) = 1.0;
    rhs[rows - 1] = 1.0;
    return solve_unique(std::move(m), std::move(rhs));
}

} // namespace detail

/// Support enumeration with the indifference principle. Support pairs are
/// walked in increasing total size (so pure equilibria surface first); for
/// each pair the two indifference systems are solved, candidates with
/// negative or vanishing in-support probabilities are dropped, and the
/// weak best-response conditions are verified against every pure
/// deviation. Unequal-size supports admit no isolated indifference
/// solution and are skipped; singular equal-size systems count as
/// degenerate skips. Throws NumericalError when a complete (untruncated)
/// enumeration finds nothing.
inline MixedNeResult mixed_ne(const GameSpec& game, const MixedNeOptions& opts = {}) {
    const int nd = game.num_defender();
    const int na = game.num_attacker();
    MixedNeResult result;

    auto consider = [&](const std::vector<int>& sd, const std::vector<int>& sa) {
        ++result.pairs_examined;
        auto p_att = detail::indifference_mix(
            sd, sa, [&](int j, int i) { return game.u_defender(j, i); });
        auto p_def = detail::indifference_mix(
            sa, sd, [&](int i, int j) { return game.u_attacker(j, i); });
        if (!p_att || !p_def) {
            ++result.degenerate_skips;
            return;
        }
        for (double p : *p_att)
            if (p < opts.support_tol) return;
        for (double p : *p_def)
            if (p < opts.support_tol) return;

        Vec full_d(nd, 0.0), full_a(na, 0.0);
        for (std::size_t k = 0; k < sd.size(); ++k) full_d[sd[k]] = (*p_def)[k];
        for (std::size_t k = 0; k < sa.size(); ++k) full_a[sa[k]] = (*p_att)[k];

        // weak best-response verification against every pure deviation
        const auto [ud, ua] = expected_payoffs(game, full_d, full_a);
        for (int j = 0; j < nd; ++j) {
            double e = 0.0;
            for (int i = 0; i < na; ++i) e += game.u_defender(j, i) * full_a[i];
            if (e > ud + opts.slack) return;
        }
        for (int i = 0; i < na; ++i) {
            double e = 0.0;
            for (int j = 0; j < nd; ++j) e += game.u_attacker(j, i) * full_d[j];
            if (e > ua + opts.slack) return;
        }

        for (const auto& q : result.equilibria) {
            double diff = 0.0;
            for (int j = 0; j < nd; ++j) diff = std::max(diff, std::abs(q.p_defender[j] - full_d[j]));
            for (int i = 0; i < na; ++i) diff = std::max(diff, std::abs(q.p_attacker[i] - full_a[i]));
            if (diff < 1e-8) return; // duplicate
        }

        MixedProfile profile;
        profile.p_defender = std::move(full_d);
        profile.p_attacker = std::move(full_a);
        profile.support_defender = sd;
        profile.support_attacker = sa;
        profile.payoff_defender = ud;
        profile.payoff_attacker = ua;
        result.equilibria.push_back(std::move(profile));
    };

    const int max_size = std::min(nd, na);
    for (int size = 1; size <= max_size && !result.truncated; ++size) {
        auto sd = detail::first_combination(size);
        do {
            auto sa = detail::first_combination(size);
            do {
                if (result.pairs_examined >= opts.max_pairs) {
                    result.truncated = true;
                    break;
                }
                consider(sd, sa);
            } while (!result.truncated && detail::next_combination(sa, na));
        } while (!result.truncated && detail::next_combination(sd, nd));
    }

    if (result.equilibria.empty() && !result.truncated)
        throw NumericalError(
            "support enumeration found no equilibrium: the game is numerically degenerate (" +
            std::to_string(result.degenerate_skips) + " singular support pairs skipped)");
    return result;
}

} // namespace gridmtd
