#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "gridmtd/errors.hpp"
#include "gridmtd/estimation.hpp"
#include "gridmtd/linalg.hpp"
#include "gridmtd/network.hpp"
#include "gridmtd/rng.hpp"

namespace gridmtd {

/// What the attacker knows: a reactance snapshot (possibly stale if the
/// defender has perturbed since it was learned) and the true post-attack
/// branch flows read off the line sensors.
struct AttackerKnowledge {
    Vec reactances;     ///< per-branch, the attacker's learned values
    Vec observed_flows; ///< per-branch MW after the physical attack; NaN where unobserved

    void validate(int num_branches) const {
        if (static_cast<int>(reactances.size()) != num_branches ||
            static_cast<int>(observed_flows.size()) != num_branches)
            throw ValidationError("attacker knowledge must cover every branch");
        for (double x : reactances)
            if (!(x > 0.0)) throw ValidationError("attacker reactance snapshot must be positive");
    }
};

/// A coordinated attack: the tripped branch plus the measurement-space
/// injection that masks it.
struct CcpaVector {
    Vec a;                 ///< length-M additive attack vector
    int tripped = -1;      ///< branch index
    std::vector<int> path; ///< alternative path used for angle reconstruction
    double angle_diff = 0.0; ///< reconstructed theta_i - theta_j after the trip
};

/// Undetectable false-data injection a = H c. Lies in the column space of
/// H by construction, so it leaves the detector residual unchanged.
inline Vec fdi_vector(const MeasurementModel& model, const Vec& c) {
    return model.apply_h(c);
}

/// Change in the measurement matrix caused by removing one branch,
/// computed from the attacker's reactance for it: H - H_post. Nonzero only
/// in the branch's two flow rows and its endpoints' injection rows.
inline Mat delta_h(const Topology& topo, int tripped, double x_known) {
    if (tripped < 0 || tripped >= topo.num_branches())
        throw ValidationError("tripped branch index out of range");
    if (!(x_known > 0.0)) throw ValidationError("tripped branch reactance must be positive");
    MeasurementLayout layout{topo.num_buses(), topo.num_branches()};
    Mat dh(layout.rows(), topo.num_buses());
    const double y = 1.0 / x_known;
    const int i = topo.from(tripped);
    const int j = topo.to(tripped);
    dh(layout.forward_row(tripped), i) = y;
    dh(layout.forward_row(tripped), j) = -y;
    dh(layout.reverse_row(tripped), i) = -y;
    dh(layout.reverse_row(tripped), j) = y;
    dh(layout.injection_row(i), i) = y;
    dh(layout.injection_row(i), j) = -y;
    dh(layout.injection_row(j), j) = y;
    dh(layout.injection_row(j), i) = -y;
    return dh;
}

/// Post-attack angle difference across the tripped branch's endpoints,
/// accumulated from learned reactances and observed flows along one
/// alternative path. Flow signs are adjusted to the traversal direction:
/// walking i -> j, a branch oriented along the walk contributes +x*F, one
/// oriented against it contributes -x*F; the telescoped sum is
/// theta_i - theta_j.
inline double reconstruct_angle_diff(const Topology& topo, const AttackerKnowledge& knowledge,
                                     const std::vector<int>& path, int tripped) {
    knowledge.validate(topo.num_branches());
    if (path.empty()) throw ValidationError("empty alternative path");
    int cursor = topo.from(tripped);
    double diff = 0.0;
    for (int l : path) {
        const double flow = knowledge.observed_flows[l];
        if (std::isnan(flow))
            throw ValidationError("no flow observation for path branch " + std::to_string(l + 1));
        double direction;
        if (topo.from(l) == cursor) {
            direction = 1.0;
            cursor = topo.to(l);
        } else if (topo.to(l) == cursor) {
            direction = -1.0;
            cursor = topo.from(l);
        } else {
            throw ValidationError("path is not contiguous at branch " + std::to_string(l + 1));
        }
        diff += direction * knowledge.reactances[l] * flow;
    }
    if (cursor != topo.to(tripped))
        throw ValidationError("path does not terminate at the tripped branch's far end");
    return diff;
}

/// How the attacker picks among alternative paths.
struct PathRule {
    enum class Kind { First, Specified, Random } kind = Kind::First;
    int index = 0;            ///< for Specified: position in enumeration order
    std::uint64_t seed = 0;   ///< for Random

    static PathRule first() { return {}; }
    static PathRule specified(int idx) { return {Kind::Specified, idx, 0}; }
    static PathRule random(std::uint64_t seed) { return {Kind::Random, 0, seed}; }
};

/// Build the coordinated attack a = dH(x_l) * theta_p for a single-branch
/// trip. Only the endpoint angle difference enters: dH's columns are
/// supported on the two endpoints with opposite signs, so theta_p can be
/// embedded as (diff, 0). Throws RadialTripError when no alternative path
/// exists (the trip would island the grid and cannot be masked).
inline CcpaVector build_ccpa(const Topology& topo, int tripped,
                             const AttackerKnowledge& knowledge,
                             const PathRule& rule = PathRule::first(),
                             const BranchMask& live = {}) {
    knowledge.validate(topo.num_branches());
    const BranchMask mask = live.empty() ? all_live(topo.num_branches()) : live;
    const auto paths = alternative_paths(topo, tripped, mask);
    if (paths.empty())
        throw RadialTripError("branch " + std::to_string(tripped + 1) +
                              " has no alternative path: trip cannot be masked");

    std::size_t pick = 0;
    switch (rule.kind) {
        case PathRule::Kind::First:
            pick = 0;
            break;
        case PathRule::Kind::Specified:
            if (rule.index < 0 || rule.index >= static_cast<int>(paths.size()))
                throw ValidationError("specified path index out of range");
            pick = static_cast<std::size_t>(rule.index);
            break;
        case PathRule::Kind::Random: {
            Rng rng(rule.seed);
            pick = static_cast<std::size_t>(rng.below(paths.size()));
            break;
        }
    }

    CcpaVector out;
    out.tripped = tripped;
    out.path = paths[pick];
    out.angle_diff = reconstruct_angle_diff(topo, knowledge, out.path, tripped);

    MeasurementLayout layout{topo.num_buses(), topo.num_branches()};
    out.a.assign(layout.rows(), 0.0);
    const double y = out.angle_diff / knowledge.reactances[tripped];
    const int i = topo.from(tripped);
    const int j = topo.to(tripped);
    out.a[layout.forward_row(tripped)] = y;
    out.a[layout.reverse_row(tripped)] = -y;
    out.a[layout.injection_row(i)] = y;
    out.a[layout.injection_row(j)] = -y;
    return out;
}

} // namespace gridmtd
