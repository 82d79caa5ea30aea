#pragma once

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gridmtd/case.hpp"
#include "gridmtd/detection.hpp"
#include "gridmtd/dispatch.hpp"
#include "gridmtd/errors.hpp"
#include "gridmtd/game.hpp"
#include "gridmtd/mtd.hpp"
#include "gridmtd/network.hpp"
#include "gridmtd/report.hpp"

namespace gridmtd {

/// Exit codes: 0 success, 1 usage error, 2 data/validation error,
/// 3 numerical failure.
enum ExitCode { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumerical = 3 };

namespace cli_detail {

inline std::vector<int> parse_branch_list(const std::string& text, int num_branches) {
    std::vector<int> out;
    std::istringstream in(text);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        tok.erase(0, tok.find_first_not_of(" \t"));
        tok.erase(tok.find_last_not_of(" \t") + 1);
        if (tok.empty()) continue;
        std::size_t used = 0;
        int id = 0;
        try {
            id = std::stoi(tok, &used);
        } catch (...) {
            throw ValidationError("invalid branch id '" + tok + "'");
        }
        if (used != tok.size()) throw ValidationError("invalid branch id '" + tok + "'");
        if (id < 1 || id > num_branches)
            throw ValidationError("branch id " + tok + " out of range 1.." +
                                  std::to_string(num_branches));
        out.push_back(id - 1);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline std::vector<std::vector<int>> parse_branch_sets(const std::string& text,
                                                       int num_branches) {
    std::vector<std::vector<int>> out;
    std::istringstream in(text);
    std::string set;
    while (std::getline(in, set, ';')) out.push_back(parse_branch_list(set, num_branches));
    return out;
}

inline std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::istringstream in(text);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        try {
            out.push_back(std::stod(tok));
        } catch (...) {
            throw ValidationError("invalid number '" + tok + "'");
        }
    }
    return out;
}

struct Workspace {
    GridCase grid;
    SidecarConfig config;
    Topology topology;
    DfactsConfig dfacts;

    static Workspace load(const std::string& case_path, const std::string& config_path) {
        Workspace w;
        w.grid = load_case(case_path);
        if (!config_path.empty()) w.config = SidecarConfig::load(config_path);
        apply_config(w.grid, w.config);
        w.topology = Topology(w.grid);
        w.dfacts = DfactsConfig::symmetric(w.grid, w.config.range_fraction);
        return w;
    }

    /// Deployment set: explicit flag, else config, else computed minimum.
    std::vector<int> deployment(const std::string& flag_value) const {
        if (!flag_value.empty()) return parse_branch_list(flag_value, grid.num_branches());
        if (config.deployment) {
            std::vector<int> d;
            for (int id : *config.deployment) {
                if (id < 1 || id > grid.num_branches())
                    throw ValidationError("configured deployment branch " + std::to_string(id) +
                                          " out of range");
                d.push_back(id - 1);
            }
            std::sort(d.begin(), d.end());
            d.erase(std::unique(d.begin(), d.end()), d.end());
            return d;
        }
        return deploy_dfacts(topology);
    }

    std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag_seed) const {
        if (flag_seed) return *flag_seed;
        if (const char* env = std::getenv("GRIDMTD_SEED")) {
            try {
                return std::stoull(env);
            } catch (...) {
                throw ValidationError("GRIDMTD_SEED is not a valid seed");
            }
        }
        return config.seed;
    }
};

inline void emit(std::ostream& out, const std::string& text, const std::string& output_path) {
    if (output_path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(output_path);
    if (!f) throw ValidationError("cannot open output file '" + output_path + "'");
    f << text;
}

} // namespace cli_detail

/// Run the command-line front end. Kept out of main() so tests can drive
/// the exact byte stream a user would see.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"power-grid moving-target-defense simulation toolkit", "gridmtd"};
    app.require_subcommand(1);

    std::string case_path, config_path, output_path;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--case", case_path, "case file")->required();
        cmd->add_option("--config", config_path, "sidecar config (JSON)");
        cmd->add_option("-o,--output", output_path, "write the report here instead of stdout");
    };

    std::string format_deploy = "json";
    auto* cmd_deploy = app.add_subcommand("deploy", "compute the minimum D-FACTS deployment set");
    add_common(cmd_deploy);
    cmd_deploy->add_option("--format", format_deploy, "csv|json");

    std::string format_protect = "csv", protect_links, protect_sets;
    auto* cmd_protect =
        app.add_subcommand("protect", "protection matrix: links x candidate perturbation sets");
    add_common(cmd_protect);
    cmd_protect->add_option("--links", protect_links, "links to test (default: all)");
    cmd_protect->add_option("--sets", protect_sets,
                            "semicolon-separated perturbation sets (default: full deployment)");
    cmd_protect->add_option("--format", format_protect, "csv|json");

    std::string format_detect = "csv", detect_links, detect_grid = "0,0.01,0.02,0.03,0.04,0.05,0.06",
                detect_ldw, detect_deployment, detect_path_rule = "first",
                detect_knowledge = "stale";
    int detect_trials = 1000;
    std::optional<std::uint64_t> flag_seed;
    auto* cmd_detect =
        app.add_subcommand("detect", "Monte Carlo detection probability over an eta grid");
    add_common(cmd_detect);
    cmd_detect->add_option("--links", detect_links, "links to attack (default: all)");
    cmd_detect->add_option("--eta-grid", detect_grid, "comma-separated eta values");
    cmd_detect->add_option("--trials", detect_trials, "Monte Carlo trials per point");
    cmd_detect->add_option("--seed", flag_seed, "master seed (fallback: GRIDMTD_SEED, config)");
    cmd_detect->add_option("--ldw", detect_ldw, "active perturbation set (default: full deployment)");
    cmd_detect->add_option("--deployment", detect_deployment,
                           "deployment override (default: config or computed)");
    cmd_detect->add_option("--path-rule", detect_path_rule, "first|random");
    cmd_detect->add_option("--knowledge", detect_knowledge,
                           "attacker reactance snapshot: stale (pre-perturbation) | fresh");
    cmd_detect->add_option("--format", format_detect, "csv|json");

    std::string format_opf = "json", opf_perturb, opf_trip, opf_deployment;
    double opf_eta = -1.0;
    auto* cmd_opf = app.add_subcommand("opf", "dispatch cost for one attack/defense cell");
    add_common(cmd_opf);
    cmd_opf->add_option("--perturb", opf_perturb, "perturbation set (default: none)");
    cmd_opf->add_option("--eta", opf_eta, "perturbation magnitude (default: config game_eta)");
    cmd_opf->add_option("--trip", opf_trip, "tripped set (default: none)");
    cmd_opf->add_option("--deployment", opf_deployment, "deployment override");
    cmd_opf->add_option("--format", format_opf, "csv|json");

    std::string format_game = "json", game_defender, game_attacker, game_deployment;
    double game_eta = -1.0;
    std::size_t game_max_pairs = 1'000'000;
    auto* cmd_game =
        app.add_subcommand("game", "bimatrix game construction and Nash equilibria");
    add_common(cmd_game);
    cmd_game->add_option("--defender-sets", game_defender,
                         "semicolon-separated perturbation sets")
        ->required();
    cmd_game->add_option("--attacker-sets", game_attacker,
                         "semicolon-separated trip sets (default: every single link)");
    cmd_game->add_option("--eta", game_eta, "perturbation magnitude (default: config game_eta)");
    cmd_game->add_option("--deployment", game_deployment, "deployment override");
    cmd_game->add_option("--max-pairs", game_max_pairs, "support enumeration cap");
    cmd_game->add_option("--format", format_game, "csv|json");

    // CLI11 wants argc/argv
    std::vector<std::string> argv_store;
    argv_store.push_back("gridmtd");
    for (const auto& a : args) argv_store.push_back(a);
    std::vector<char*> argv;
    for (auto& s : argv_store) argv.push_back(s.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        using cli_detail::Workspace;
        const Workspace w = Workspace::load(case_path, config_path);
        const int num_branches = w.grid.num_branches();

        if (cmd_deploy->parsed()) {
            const auto deployment = deploy_dfacts(w.topology);
            DeploymentReport r;
            r.case_name = w.grid.name;
            r.num_buses = w.grid.num_buses();
            r.num_branches = num_branches;
            for (int l : deployment) r.deployment.push_back(l + 1);
            cli_detail::emit(out, write_report(r, parse_format(format_deploy)), output_path);
            return kExitOk;
        }

        if (cmd_protect->parsed()) {
            std::vector<int> links;
            if (protect_links.empty())
                for (int l = 0; l < num_branches; ++l) links.push_back(l);
            else
                links = cli_detail::parse_branch_list(protect_links, num_branches);
            std::vector<std::vector<int>> sets;
            if (protect_sets.empty())
                sets.push_back(w.deployment(""));
            else
                sets = cli_detail::parse_branch_sets(protect_sets, num_branches);

            ProtectionReport r;
            for (const auto& s : sets) r.set_labels.push_back(detail::action_label(s));
            for (int link : links) {
                r.links.push_back(link + 1);
                std::vector<bool> row;
                for (const auto& s : sets) row.push_back(is_protected(w.topology, link, s));
                r.protected_by.push_back(std::move(row));
            }
            cli_detail::emit(out, write_report(r, parse_format(format_protect)), output_path);
            return kExitOk;
        }

        if (cmd_detect->parsed()) {
            if (detect_trials < 1) throw ValidationError("--trials must be at least 1");
            std::vector<int> links;
            if (detect_links.empty())
                for (int l = 0; l < num_branches; ++l) links.push_back(l);
            else
                links = cli_detail::parse_branch_list(detect_links, num_branches);
            const auto grid_values = cli_detail::parse_double_list(detect_grid);
            for (double e : grid_values)
                if (e < 0.0) throw ValidationError("eta grid values must be nonnegative");
            const auto deployment = w.deployment(detect_deployment);
            const auto ldw = detect_ldw.empty()
                                 ? deployment
                                 : cli_detail::parse_branch_list(detect_ldw, num_branches);
            const std::uint64_t seed = w.resolve_seed(flag_seed);

            PathRule rule = PathRule::first();
            if (detect_path_rule == "random")
                rule = PathRule::random(seed);
            else if (detect_path_rule != "first")
                throw ValidationError("--path-rule must be first or random");
            KnowledgeMode knowledge = KnowledgeMode::PreMtdSnapshot;
            if (detect_knowledge == "fresh")
                knowledge = KnowledgeMode::Fresh;
            else if (detect_knowledge != "stale")
                throw ValidationError("--knowledge must be stale or fresh");

            DetectionSweep sweep;
            std::uint64_t mix_state = seed;
            for (int link : links) {
                for (double eta : grid_values) {
                    const std::uint64_t row_seed = detail::splitmix64(mix_state);
                    DfactsPlan plan{deployment, ldw, eta, SignRule::Alternating};
                    AttackConfig attack{link, knowledge, rule};
                    DetectionSweepRow row;
                    row.link = link + 1;
                    row.eta = eta;
                    try {
                        row.p_detect = detection_probability(
                            w.grid, w.topology, w.dfacts, plan, attack, w.config.sigma,
                            w.config.alpha, detect_trials, row_seed,
                            w.config.weighted_residual);
                    } catch (const RadialTripError&) {
                        row.status = "not-attackable";
                    }
                    sweep.rows.push_back(row);
                }
            }
            cli_detail::emit(out, write_report(sweep, parse_format(format_detect)), output_path);
            return kExitOk;
        }

        if (cmd_opf->parsed()) {
            const auto deployment = w.deployment(opf_deployment);
            const auto perturbed = opf_perturb.empty()
                                       ? std::vector<int>{}
                                       : cli_detail::parse_branch_list(opf_perturb, num_branches);
            const auto tripped = opf_trip.empty()
                                     ? std::vector<int>{}
                                     : cli_detail::parse_branch_list(opf_trip, num_branches);
            const double eta = opf_eta >= 0.0 ? opf_eta : w.config.game_eta;
            DfactsPlan plan{deployment, perturbed, eta, SignRule::Alternating};
            OpfReport r;
            r.case_name = w.grid.name;
            r.eta = eta;
            for (int l : perturbed) r.perturbed.push_back(l + 1);
            for (int l : tripped) r.tripped.push_back(l + 1);
            r.result = algorithm1_cost(w.grid, w.topology, w.dfacts, tripped, plan);
            cli_detail::emit(out, write_report(r, parse_format(format_opf)), output_path);
            return kExitOk;
        }

        if (cmd_game->parsed()) {
            const auto deployment = w.deployment(game_deployment);
            auto defender_sets = cli_detail::parse_branch_sets(game_defender, num_branches);
            std::vector<std::vector<int>> attacker_sets;
            if (game_attacker.empty())
                for (int l = 0; l < num_branches; ++l) attacker_sets.push_back({l});
            else
                attacker_sets = cli_detail::parse_branch_sets(game_attacker, num_branches);
            const double eta = game_eta >= 0.0 ? game_eta : w.config.game_eta;

            GameReport r;
            r.case_name = w.grid.name;
            r.eta = eta;
            r.game = build_game(w.grid, w.topology, w.dfacts, deployment, defender_sets,
                                attacker_sets, eta);
            MixedNeOptions opts;
            opts.max_pairs = game_max_pairs;
            r.nash = mixed_ne(r.game, opts);
            if (r.nash.truncated)
                err << "warning: support enumeration truncated after "
                    << r.nash.pairs_examined << " pairs; equilibria may be incomplete\n";
            cli_detail::emit(out, write_report(r, parse_format(format_game)), output_path);
            return kExitOk;
        }

        err << "usage error: no subcommand selected\n";
        return kExitUsage;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    }
}

} // namespace gridmtd
