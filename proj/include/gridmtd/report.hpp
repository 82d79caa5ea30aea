#pragma once

#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridmtd/case.hpp"
#include "gridmtd/dispatch.hpp"
#include "gridmtd/game.hpp"

namespace gridmtd {

enum class ReportFormat { Csv, Json };

inline ReportFormat parse_format(const std::string& s) {
    if (s == "csv") return ReportFormat::Csv;
    if (s == "json") return ReportFormat::Json;
    throw ValidationError("unknown format '" + s + "' (expected csv or json)");
}

using OrderedJson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// deployment

struct DeploymentReport {
    std::string case_name;
    int num_buses = 0;
    int num_branches = 0;
    std::vector<int> deployment; ///< 1-based branch ids
};

inline std::string to_csv(const DeploymentReport& r) {
    std::ostringstream out;
    out << "branch\n";
    for (int l : r.deployment) out << l << "\n";
    return out.str();
}

inline OrderedJson to_json(const DeploymentReport& r) {
    OrderedJson j;
    j["case"] = r.case_name;
    j["buses"] = r.num_buses;
    j["branches"] = r.num_branches;
    j["deployment_size"] = r.deployment.size();
    j["deployment"] = r.deployment;
    return j;
}

// ---------------------------------------------------------------------------
// protection matrix

struct ProtectionReport {
    std::vector<int> links;                ///< 1-based
    std::vector<std::string> set_labels;
    std::vector<std::vector<bool>> protected_by; ///< [link][set]
};

inline std::string to_csv(const ProtectionReport& r) {
    std::ostringstream out;
    out << "link";
    for (const auto& s : r.set_labels) out << "," << s;
    out << "\n";
    for (std::size_t row = 0; row < r.links.size(); ++row) {
        out << r.links[row];
        for (bool b : r.protected_by[row]) out << "," << (b ? 1 : 0);
        out << "\n";
    }
    return out.str();
}

inline OrderedJson to_json(const ProtectionReport& r) {
    OrderedJson j;
    j["sets"] = r.set_labels;
    OrderedJson rows = OrderedJson::array();
    for (std::size_t row = 0; row < r.links.size(); ++row) {
        OrderedJson entry;
        entry["link"] = r.links[row];
        entry["protected"] = r.protected_by[row];
        rows.push_back(entry);
    }
    j["links"] = rows;
    return j;
}

// ---------------------------------------------------------------------------
// detection curves

struct DetectionPoint {
    double eta = 0.0;
    double p_detect = 0.0;
};

/// Single-attack detection curve (probability over the eta grid).
struct DetectionCurve {
    std::vector<DetectionPoint> points;
};

inline std::string to_csv(const DetectionCurve& r) {
    std::ostringstream out;
    out << "eta,p_detect\n";
    for (const auto& p : r.points)
        out << detail::format_double(p.eta) << "," << detail::format_double(p.p_detect) << "\n";
    return out.str();
}

inline OrderedJson to_json(const DetectionCurve& r) {
    OrderedJson points = OrderedJson::array();
    for (const auto& p : r.points) points.push_back({{"eta", p.eta}, {"p_detect", p.p_detect}});
    OrderedJson j;
    j["points"] = points;
    return j;
}

/// Multi-link sweep: one row per (link, eta). Radial links are reported
/// per row instead of aborting the sweep.
struct DetectionSweepRow {
    int link = 0; ///< 1-based
    double eta = 0.0;
    double p_detect = 0.0;
    std::string status = "ok"; ///< "ok" or "not-attackable"
};

struct DetectionSweep {
    std::vector<DetectionSweepRow> rows;
};

inline std::string to_csv(const DetectionSweep& r) {
    std::ostringstream out;
    out << "link,eta,p_detect,status\n";
    for (const auto& row : r.rows) {
        out << row.link << "," << detail::format_double(row.eta) << ",";
        if (row.status == "ok") out << detail::format_double(row.p_detect);
        out << "," << row.status << "\n";
    }
    return out.str();
}

inline OrderedJson to_json(const DetectionSweep& r) {
    OrderedJson rows = OrderedJson::array();
    for (const auto& row : r.rows) {
        OrderedJson entry;
        entry["link"] = row.link;
        entry["eta"] = row.eta;
        if (row.status == "ok") entry["p_detect"] = row.p_detect;
        entry["status"] = row.status;
        rows.push_back(entry);
    }
    OrderedJson j;
    j["rows"] = rows;
    return j;
}

// ---------------------------------------------------------------------------
// dispatch / cost cells

struct OpfReport {
    std::string case_name;
    std::vector<int> perturbed;       ///< 1-based
    std::vector<int> tripped;         ///< 1-based
    double eta = 0.0;
    Algorithm1Result result;
};

inline OrderedJson to_json(const OpfReport& r) {
    OrderedJson j;
    j["case"] = r.case_name;
    j["perturbed"] = r.perturbed;
    j["eta"] = r.eta;
    j["tripped"] = r.tripped;
    j["baseline_cost"] = r.result.baseline_cost;
    j["attack_successful"] = r.result.attack_successful;
    std::vector<int> cascade;
    for (int l : r.result.cascade_removed) cascade.push_back(l + 1);
    j["cascade_removed"] = cascade;
    j["cost"] = r.result.attacked_cost;
    j["generation"] = r.result.final_dispatch.generation;
    j["shed"] = r.result.final_dispatch.shed;
    j["flows"] = r.result.final_dispatch.flows;
    return j;
}

inline std::string to_csv(const OpfReport& r) {
    std::ostringstream out;
    out << "field,value\n";
    out << "baseline_cost," << detail::format_double(r.result.baseline_cost) << "\n";
    out << "cost," << detail::format_double(r.result.attacked_cost) << "\n";
    out << "attack_successful," << (r.result.attack_successful ? 1 : 0) << "\n";
    out << "total_shed_mw,"
        << detail::format_double([&] {
               double s = 0.0;
               for (double v : r.result.final_dispatch.shed) s += v;
               return s;
           }())
        << "\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// game / equilibria

struct GameReport {
    std::string case_name;
    GameSpec game;
    MixedNeResult nash;
    double eta = 0.0;

    /// Defense cost of one defender action as a percentage increase over
    /// the benchmark dispatch cost.
    double action_defense_cost_pct(int j) const {
        return 100.0 * (game.defender_baseline_costs[j] - game.benchmark_cost) /
               game.benchmark_cost;
    }

    /// Probability-weighted defense cost of an equilibrium.
    double equilibrium_defense_cost_pct(const MixedProfile& profile) const {
        double pct = 0.0;
        for (int j = 0; j < game.num_defender(); ++j)
            pct += profile.p_defender[j] * action_defense_cost_pct(j);
        return pct;
    }
};

namespace detail {

inline std::string action_label(const std::vector<int>& branches) {
    if (branches.empty()) return "none";
    std::string s;
    for (std::size_t k = 0; k < branches.size(); ++k) {
        if (k) s += "+";
        s += std::to_string(branches[k] + 1);
    }
    return s;
}

} // namespace detail

inline OrderedJson to_json(const GameReport& r) {
    OrderedJson j;
    j["case"] = r.case_name;
    j["eta"] = r.eta;
    j["benchmark_cost"] = r.game.benchmark_cost;

    OrderedJson defender = OrderedJson::array();
    for (int dj = 0; dj < r.game.num_defender(); ++dj) {
        OrderedJson a;
        a["label"] = detail::action_label(r.game.defender_actions[dj]);
        std::vector<int> ids;
        for (int l : r.game.defender_actions[dj]) ids.push_back(l + 1);
        a["branches"] = ids;
        a["baseline_cost"] = r.game.defender_baseline_costs[dj];
        a["defense_cost_pct"] = r.action_defense_cost_pct(dj);
        defender.push_back(a);
    }
    j["defender_actions"] = defender;

    OrderedJson attacker = OrderedJson::array();
    for (int ai = 0; ai < r.game.num_attacker(); ++ai) {
        std::vector<int> ids;
        for (int l : r.game.attacker_actions[ai]) ids.push_back(l + 1);
        attacker.push_back({{"label", detail::action_label(r.game.attacker_actions[ai])},
                            {"branches", ids}});
    }
    j["attacker_actions"] = attacker;

    auto matrix_json = [&](const Mat& m) {
        OrderedJson rows = OrderedJson::array();
        for (int dj = 0; dj < r.game.num_defender(); ++dj) {
            OrderedJson row = OrderedJson::array();
            for (int ai = 0; ai < r.game.num_attacker(); ++ai) row.push_back(m(dj, ai));
            rows.push_back(row);
        }
        return rows;
    };
    j["u_defender"] = matrix_json(r.game.u_defender);
    j["u_attacker"] = matrix_json(r.game.u_attacker);

    OrderedJson eqs = OrderedJson::array();
    for (const auto& profile : r.nash.equilibria) {
        OrderedJson e;
        e["p_defender"] = profile.p_defender;
        e["p_attacker"] = profile.p_attacker;
        std::vector<std::string> sd, sa;
        for (int dj : profile.support_defender)
            sd.push_back(detail::action_label(r.game.defender_actions[dj]));
        for (int ai : profile.support_attacker)
            sa.push_back(detail::action_label(r.game.attacker_actions[ai]));
        e["support_defender"] = sd;
        e["support_attacker"] = sa;
        e["payoff_defender"] = profile.payoff_defender;
        e["payoff_attacker"] = profile.payoff_attacker;
        e["defense_cost_pct"] = r.equilibrium_defense_cost_pct(profile);
        eqs.push_back(e);
    }
    j["equilibria"] = eqs;
    j["truncated"] = r.nash.truncated;
    j["support_pairs_examined"] = r.nash.pairs_examined;
    return j;
}

/// CSV form: the two payoff matrices as labeled blocks.
inline std::string to_csv(const GameReport& r) {
    std::ostringstream out;
    auto emit = [&](const char* name, const Mat& m) {
        out << name;
        for (int ai = 0; ai < r.game.num_attacker(); ++ai)
            out << "," << detail::action_label(r.game.attacker_actions[ai]);
        out << "\n";
        for (int dj = 0; dj < r.game.num_defender(); ++dj) {
            out << detail::action_label(r.game.defender_actions[dj]);
            for (int ai = 0; ai < r.game.num_attacker(); ++ai)
                out << "," << detail::format_double(m(dj, ai));
            out << "\n";
        }
    };
    emit("u_defender", r.game.u_defender);
    emit("u_attacker", r.game.u_attacker);
    return out.str();
}

// ---------------------------------------------------------------------------

/// Serialize any report in the requested format. JSON output is indented
/// and key order is fixed, so identical results give identical bytes.
template <typename Report>
std::string write_report(const Report& report, ReportFormat format) {
    if (format == ReportFormat::Csv) return to_csv(report);
    return to_json(report).dump(2) + "\n";
}

} // namespace gridmtd
