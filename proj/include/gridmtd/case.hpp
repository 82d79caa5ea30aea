#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "gridmtd/errors.hpp"

namespace gridmtd {

/// Flow limit used when a case file marks a branch as unlimited (rateA = 0
/// in the long MATPOWER form).
inline constexpr double kUnlimitedFlow = 1e9;

/// Default linear load-shedding coefficient, $/MWh. Deliberately above
/// every generator cost in the bundled cases so shedding is a last resort.
inline constexpr double kDefaultShedCost = 100.0;

struct BusRecord {
    int id = 0;          ///< external bus id as written in the case file
    double load_mw = 0.0;
};

struct BranchRecord {
    int from_bus = 0;          ///< external id
    int to_bus = 0;            ///< external id
    double reactance = 0.0;    ///< per-unit
    double flow_limit_mw = 0.0;
};

struct GenRecord {
    int bus = 0;               ///< external id
    double p_min_mw = 0.0;
    double p_max_mw = 0.0;
    double cost_per_mwh = 0.0; ///< linear coefficient, $/MWh
};

/// Static grid description: buses, branches, generators, shedding costs.
/// Branch k of the file is "link k+1" in reports (1-based, file order).
struct GridCase {
    std::string name;
    std::vector<BusRecord> buses;
    std::vector<BranchRecord> branches;
    std::vector<GenRecord> generators;
    std::vector<double> shed_costs; ///< per bus, $/MWh
    int reference_bus = 0;          ///< external id

    int num_buses() const { return static_cast<int>(buses.size()); }
    int num_branches() const { return static_cast<int>(branches.size()); }

    /// 0-based index of an external bus id; -1 if unknown.
    int bus_index(int external_id) const {
        auto it = bus_index_.find(external_id);
        return it == bus_index_.end() ? -1 : it->second;
    }
    int reference_index() const { return bus_index(reference_bus); }

    double total_load() const {
        double s = 0.0;
        for (const auto& b : buses) s += b.load_mw;
        return s;
    }
    double total_capacity() const {
        double s = 0.0;
        for (const auto& g : generators) s += g.p_max_mw;
        return s;
    }

    /// Per-bus net injection (generation minus load) for a given dispatch.
    std::vector<double> injections(const std::vector<double>& generation) const {
        std::vector<double> inj(buses.size(), 0.0);
        for (std::size_t g = 0; g < generators.size(); ++g)
            inj[bus_index(generators[g].bus)] += generation[g];
        for (std::size_t b = 0; b < buses.size(); ++b) inj[b] -= buses[b].load_mw;
        return inj;
    }

    void rebuild_index() {
        bus_index_.clear();
        for (std::size_t i = 0; i < buses.size(); ++i)
            bus_index_[buses[i].id] = static_cast<int>(i);
    }

private:
    std::unordered_map<int, int> bus_index_;
};

/// Per-branch reactance range achievable by D-FACTS hardware.
struct DfactsConfig {
    std::vector<double> x_min;
    std::vector<double> x_max;

    /// Symmetric range x_l * (1 ± fraction) around nominal.
    static DfactsConfig symmetric(const GridCase& grid, double fraction) {
        if (!(fraction >= 0.0 && fraction < 1.0))
            throw ValidationError("D-FACTS range fraction must lie in [0, 1)");
        DfactsConfig cfg;
        cfg.x_min.reserve(grid.branches.size());
        cfg.x_max.reserve(grid.branches.size());
        for (const auto& br : grid.branches) {
            cfg.x_min.push_back(br.reactance * (1.0 - fraction));
            cfg.x_max.push_back(br.reactance * (1.0 + fraction));
        }
        return cfg;
    }

    void validate(const GridCase& grid) const {
        if (x_min.size() != grid.branches.size() || x_max.size() != grid.branches.size())
            throw ValidationError("D-FACTS range vectors must cover every branch");
        for (std::size_t l = 0; l < x_min.size(); ++l) {
            if (!(x_min[l] > 0.0))
                throw ValidationError("D-FACTS lower reactance bound must be positive (branch " +
                                      std::to_string(l + 1) + ")");
            if (x_min[l] > grid.branches[l].reactance || grid.branches[l].reactance > x_max[l])
                throw ValidationError("nominal reactance outside D-FACTS range (branch " +
                                      std::to_string(l + 1) + ")");
        }
    }
};

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    // trim to the shortest representation that round-trips
    for (int prec = 1; prec < 17; ++prec) {
        char shorter[40];
        std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
        if (std::strtod(shorter, nullptr) == v) return shorter;
    }
    return buf;
}

struct CaseToken {
    double value = 0.0;
    int line = 0;
    int column = 0;
};

using CaseRow = std::vector<CaseToken>;

struct CaseTables {
    std::map<std::string, std::vector<CaseRow>> tables;
    std::map<std::string, int> table_line; // line where each table starts
    std::string name;
};

inline bool parse_number(const std::string& tok, double& out) {
    char* end = nullptr;
    out = std::strtod(tok.c_str(), &end);
    return end == tok.c_str() + tok.size();
}

/// Tokenize the MATPOWER-style file into named numeric tables.
inline CaseTables scan_case_tables(const std::string& text, const std::string& filename) {
    CaseTables result;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    std::string open_table;

    while (std::getline(in, line)) {
        ++line_no;
        if (auto cut = line.find('%'); cut != std::string::npos) line.resize(cut);

        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;

        if (open_table.empty()) {
            if (line.compare(first, 9, "function ") == 0) {
                auto eq = line.find('=', first);
                if (eq != std::string::npos) {
                    std::string n = line.substr(eq + 1);
                    n.erase(0, n.find_first_not_of(" \t"));
                    n.erase(n.find_last_not_of(" \t\r;") + 1);
                    result.name = n;
                }
                continue;
            }
            if (line.compare(first, 4, "mpc.") != 0)
                throw ParseError(filename, line_no, static_cast<int>(first) + 1,
                                 "expected 'mpc.<table> = [' or a comment");
            auto eq = line.find('=', first);
            if (eq == std::string::npos)
                throw ParseError(filename, line_no, static_cast<int>(line.size()),
                                 "expected '=' after field name");
            std::string field = line.substr(first + 4, eq - first - 4);
            field.erase(field.find_last_not_of(" \t") + 1);
            std::string rest = line.substr(eq + 1);
            auto bracket = rest.find('[');
            if (bracket == std::string::npos) continue; // scalar field (version, baseMVA): ignored
            open_table = field;
            result.tables[field];
            result.table_line[field] = line_no;
            rest = rest.substr(bracket + 1);
            line = rest;
            first = 0;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        }

        // inside a table: numeric rows, ';' row terminators, '];' to close
        std::istringstream row_in(line);
        std::string tok;
        CaseRow row;
        std::size_t pos = 0;
        bool closed = false;
        while (row_in >> tok) {
            pos = line.find(tok, pos);
            const int col = static_cast<int>(pos) + 1;
            pos += tok.size();

            bool row_done = false;
            if (tok == "];" || tok == "]") {
                closed = true;
                break;
            }
            while (!tok.empty() && (tok.back() == ';' || tok.back() == ',')) {
                tok.pop_back();
                row_done = true;
            }
            if (!tok.empty() && tok.back() == ']') {
                tok.pop_back();
                closed = true;
            }
            if (!tok.empty()) {
                double v;
                if (!parse_number(tok, v))
                    throw ParseError(filename, line_no, col, "expected a number, got '" + tok + "'");
                row.push_back({v, line_no, col});
            }
            if (row_done && !row.empty()) {
                result.tables[open_table].push_back(row);
                row.clear();
            }
            if (closed) break;
        }
        if (!row.empty()) result.tables[open_table].push_back(row);
        if (closed) open_table.clear();
    }
    if (!open_table.empty())
        throw ParseError(filename, line_no, 1, "unterminated table 'mpc." + open_table + "'");
    return result;
}

inline void check_connected_or_throw(const GridCase& grid);

} // namespace detail

/// Validate every GridCase invariant; throws ValidationError naming the
/// first violated one. Never repairs the case.
inline void validate_case(const GridCase& grid) {
    if (grid.buses.empty()) throw ValidationError("case has no buses");
    {
        std::unordered_map<int, int> seen;
        for (const auto& b : grid.buses)
            if (!seen.emplace(b.id, 1).second)
                throw ValidationError("duplicate bus id " + std::to_string(b.id));
    }
    for (std::size_t l = 0; l < grid.branches.size(); ++l) {
        const auto& br = grid.branches[l];
        const std::string tag = "branch " + std::to_string(l + 1);
        if (grid.bus_index(br.from_bus) < 0)
            throw ValidationError(tag + " references unknown bus " + std::to_string(br.from_bus));
        if (grid.bus_index(br.to_bus) < 0)
            throw ValidationError(tag + " references unknown bus " + std::to_string(br.to_bus));
        if (br.from_bus == br.to_bus)
            throw ValidationError(tag + " is a self-loop at bus " + std::to_string(br.from_bus));
        if (!(br.reactance > 0.0))
            throw ValidationError(tag + " has non-positive reactance");
        if (!(br.flow_limit_mw > 0.0))
            throw ValidationError(tag + " has non-positive flow limit");
    }
    for (std::size_t g = 0; g < grid.generators.size(); ++g) {
        const auto& gen = grid.generators[g];
        const std::string tag = "generator " + std::to_string(g + 1);
        if (grid.bus_index(gen.bus) < 0)
            throw ValidationError(tag + " references unknown bus " + std::to_string(gen.bus));
        if (gen.p_min_mw > gen.p_max_mw)
            throw ValidationError(tag + " has p_min > p_max");
    }
    if (grid.shed_costs.size() != grid.buses.size())
        throw ValidationError("shed cost vector must cover every bus");
    if (grid.bus_index(grid.reference_bus) < 0)
        throw ValidationError("reference bus " + std::to_string(grid.reference_bus) + " not found");
    detail::check_connected_or_throw(grid);
    if (grid.total_capacity() < grid.total_load() - 1e-9)
        throw ValidationError("total generation capacity " +
                              detail::format_double(grid.total_capacity()) +
                              " MW is below total load " +
                              detail::format_double(grid.total_load()) +
                              " MW; the unshed dispatch problem is infeasible");
}

namespace detail {

inline void check_connected_or_throw(const GridCase& grid) {
    const int n = grid.num_buses();
    std::vector<std::vector<int>> adj(n);
    for (const auto& br : grid.branches) {
        const int a = grid.bus_index(br.from_bus);
        const int b = grid.bus_index(br.to_bus);
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int w : adj[v])
            if (!seen[w]) {
                seen[w] = 1;
                ++count;
                stack.push_back(w);
            }
    }
    if (count != n) {
        std::vector<int> missing;
        for (int i = 0; i < n; ++i)
            if (!seen[i]) missing.push_back(grid.buses[i].id);
        std::string msg = "branch graph is disconnected; unreachable buses:";
        for (int id : missing) msg += " " + std::to_string(id);
        throw ValidationError(msg);
    }
}

} // namespace detail

/// Parse a case file. Two table widths are accepted per table:
///   bus:    [id load]                        or the 13+ column MATPOWER row
///   branch: [from to x rateA]                or the 13+ column MATPOWER row
///   gen:    [bus p_min p_max cost]           or the 21 column MATPOWER row
///                                            (linear cost read from mpc.gencost)
/// All invariants are validated; nothing is silently repaired.
inline GridCase parse_case(const std::string& text, const std::string& filename = "<case>") {
    const auto scanned = detail::scan_case_tables(text, filename);
    auto require_table = [&](const char* name) -> const std::vector<detail::CaseRow>& {
        auto it = scanned.tables.find(name);
        if (it == scanned.tables.end() || it->second.empty())
            throw ParseError(filename, 1, 1, std::string("missing table 'mpc.") + name + "'");
        return it->second;
    };

    GridCase grid;
    grid.name = scanned.name;
    std::optional<int> wide_reference;

    for (const auto& row : require_table("bus")) {
        if (row.size() == 2) {
            grid.buses.push_back({static_cast<int>(row[0].value), row[1].value});
        } else if (row.size() >= 13) {
            const int id = static_cast<int>(row[0].value);
            const int type = static_cast<int>(row[1].value);
            if (type == 4)
                throw ParseError(filename, row[1].line, row[1].column,
                                 "isolated buses (type 4) are not supported");
            if (type == 3) wide_reference = id;
            grid.buses.push_back({id, row[2].value});
        } else {
            throw ParseError(filename, row[0].line, row[0].column,
                             "bus row must have 2 columns (id, load) or the full MATPOWER width");
        }
    }
    grid.rebuild_index();

    for (const auto& row : require_table("branch")) {
        if (row.size() == 4) {
            grid.branches.push_back({static_cast<int>(row[0].value),
                                     static_cast<int>(row[1].value), row[2].value, row[3].value});
        } else if (row.size() >= 13) {
            if (static_cast<int>(row[10].value) != 1)
                throw ParseError(filename, row[10].line, row[10].column,
                                 "out-of-service branches are not supported");
            const double rate = row[5].value == 0.0 ? kUnlimitedFlow : row[5].value;
            grid.branches.push_back({static_cast<int>(row[0].value),
                                     static_cast<int>(row[1].value), row[3].value, rate});
        } else {
            throw ParseError(filename, row[0].line, row[0].column,
                             "branch row must have 4 columns (from, to, x, rateA) or the full "
                             "MATPOWER width");
        }
    }

    const auto& gen_rows = require_table("gen");
    const bool wide_gen = !gen_rows.empty() && gen_rows.front().size() >= 10;
    for (const auto& row : gen_rows) {
        if (row.size() == 4) {
            grid.generators.push_back(
                {static_cast<int>(row[0].value), row[1].value, row[2].value, row[3].value});
        } else if (row.size() >= 10) {
            if (static_cast<int>(row[7].value) != 1)
                throw ParseError(filename, row[7].line, row[7].column,
                                 "out-of-service generators are not supported");
            grid.generators.push_back(
                {static_cast<int>(row[0].value), row[9].value, row[8].value, 0.0});
        } else {
            throw ParseError(filename, row[0].line, row[0].column,
                             "gen row must have 4 columns (bus, p_min, p_max, cost) or the full "
                             "MATPOWER width");
        }
    }
    if (wide_gen) {
        const auto& cost_rows = require_table("gencost");
        if (cost_rows.size() != grid.generators.size())
            throw ParseError(filename, scanned.table_line.at("gencost"), 1,
                             "gencost must have one row per generator");
        for (std::size_t g = 0; g < cost_rows.size(); ++g) {
            const auto& row = cost_rows[g];
            if (row.size() < 5 || static_cast<int>(row[0].value) != 2)
                throw ParseError(filename, row[0].line, row[0].column,
                                 "only polynomial gencost rows (model 2) are supported");
            const int n_coef = static_cast<int>(row[3].value);
            if (n_coef == 2) {
                grid.generators[g].cost_per_mwh = row[4].value;
            } else if (n_coef == 3 && row[4].value == 0.0) {
                grid.generators[g].cost_per_mwh = row[5].value;
            } else {
                throw ParseError(filename, row[4].line, row[4].column,
                                 "only linear generator costs are supported");
            }
        }
    }

    grid.shed_costs.assign(grid.buses.size(), kDefaultShedCost);
    grid.reference_bus = wide_reference.value_or(grid.buses.front().id);
    validate_case(grid);
    return grid;
}

inline GridCase load_case(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open case file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_case(buf.str(), path);
}

/// Serialize in the compact table form; parse(write_case(g)) reproduces g.
inline std::string write_case(const GridCase& grid) {
    std::ostringstream out;
    out << "function mpc = " << (grid.name.empty() ? "unnamed" : grid.name) << "\n";
    out << "mpc.version = '2';\n";
    out << "mpc.baseMVA = 100;\n\n";
    out << "% bus: id load_mw\n";
    out << "mpc.bus = [\n";
    for (const auto& b : grid.buses)
        out << "\t" << b.id << "\t" << detail::format_double(b.load_mw) << ";\n";
    out << "];\n\n";
    out << "% branch: from to x_pu rate_mw\n";
    out << "mpc.branch = [\n";
    for (const auto& br : grid.branches)
        out << "\t" << br.from_bus << "\t" << br.to_bus << "\t"
            << detail::format_double(br.reactance) << "\t"
            << detail::format_double(br.flow_limit_mw) << ";\n";
    out << "];\n\n";
    out << "% gen: bus p_min_mw p_max_mw cost_per_mwh\n";
    out << "mpc.gen = [\n";
    for (const auto& g : grid.generators)
        out << "\t" << g.bus << "\t" << detail::format_double(g.p_min_mw) << "\t"
            << detail::format_double(g.p_max_mw) << "\t"
            << detail::format_double(g.cost_per_mwh) << ";\n";
    out << "];\n";
    return out.str();
}

/// Experiment-level knobs that ride alongside a case file.
struct SidecarConfig {
    double alpha = 0.05;          ///< bad-data detector false-positive rate
    double sigma = 1.0;           ///< sensor noise standard deviation, MW
    double shed_cost = kDefaultShedCost;
    double range_fraction = 0.2;  ///< symmetric D-FACTS range half-width
    double game_eta = 0.05;       ///< perturbation magnitude used in cost games
    std::uint64_t seed = 1;
    bool weighted_residual = true;
    std::optional<int> reference_bus;
    std::optional<std::vector<int>> deployment; ///< 1-based branch ids; overrides the computed set

    static SidecarConfig from_json(const nlohmann::json& j, const std::string& filename = "<config>") {
        SidecarConfig cfg;
        for (const auto& [key, value] : j.items()) {
            if (key == "alpha")
                cfg.alpha = value.get<double>();
            else if (key == "sigma")
                cfg.sigma = value.get<double>();
            else if (key == "shed_cost")
                cfg.shed_cost = value.get<double>();
            else if (key == "dfacts_range_fraction")
                cfg.range_fraction = value.get<double>();
            else if (key == "game_eta")
                cfg.game_eta = value.get<double>();
            else if (key == "seed")
                cfg.seed = value.get<std::uint64_t>();
            else if (key == "bdd_norm") {
                const auto s = value.get<std::string>();
                if (s != "weighted" && s != "unweighted")
                    throw ValidationError(filename + ": bdd_norm must be 'weighted' or 'unweighted'");
                cfg.weighted_residual = (s == "weighted");
            } else if (key == "reference_bus")
                cfg.reference_bus = value.get<int>();
            else if (key == "deployment")
                cfg.deployment = value.get<std::vector<int>>();
            else
                throw ValidationError(filename + ": unknown config key '" + key + "'");
        }
        cfg.validate(filename);
        return cfg;
    }

    static SidecarConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ValidationError("cannot open config file '" + path + "'");
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(path, 1, static_cast<int>(e.byte), e.what());
        }
        return from_json(j, path);
    }

    void validate(const std::string& filename = "<config>") const {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw ValidationError(filename + ": alpha must lie in (0, 1)");
        if (!(sigma > 0.0)) throw ValidationError(filename + ": sigma must be positive");
        if (!(shed_cost > 0.0)) throw ValidationError(filename + ": shed_cost must be positive");
        if (!(range_fraction >= 0.0 && range_fraction < 1.0))
            throw ValidationError(filename + ": dfacts_range_fraction must lie in [0, 1)");
        if (!(game_eta >= 0.0)) throw ValidationError(filename + ": game_eta must be nonnegative");
    }
};

/// Push config-level values (shed cost, reference override) into a case.
inline void apply_config(GridCase& grid, const SidecarConfig& cfg) {
    grid.shed_costs.assign(grid.buses.size(), cfg.shed_cost);
    if (cfg.reference_bus) {
        if (grid.bus_index(*cfg.reference_bus) < 0)
            throw ValidationError("configured reference bus " +
                                  std::to_string(*cfg.reference_bus) + " not in case");
        grid.reference_bus = *cfg.reference_bus;
    }
}

} // namespace gridmtd
