#include <catch2/catch.hpp>

#include <algorithm>
#include <cmath>

#include "gridmtd/case.hpp"
#include "gridmtd/detection.hpp"
#include "gridmtd/mtd.hpp"
#include "gridmtd/network.hpp"
#include "gridmtd/rng.hpp"
#include "oracles.hpp"

using namespace gridmtd;

namespace {

std::string data_path(const std::string& name) {
    return std::string(GRIDMTD_DATA_DIR) + "/" + name;
}

std::vector<int> subset_from_mask(unsigned mask) {
    std::vector<int> out;
    for (int l = 0; l < 32; ++l)
        if (mask & (1u << l)) out.push_back(l);
    return out;
}

} // namespace

TEST_CASE("deployment sizes follow L - N + 1 on bundled cases", "[mtd]") {
    const std::vector<std::pair<const char*, int>> expected = {
        {"case4.m", 2}, {"case9.m", 1}, {"case14.m", 7}, {"case24.m", 15}, {"case39.m", 8}};
    for (const auto& [name, size] : expected) {
        const GridCase grid = load_case(data_path(name));
        const Topology topo(grid);
        const auto deployment = deploy_dfacts(topo);
        CHECK(static_cast<int>(deployment.size()) == size);
        CHECK(static_cast<int>(deployment.size()) == grid.num_branches() - grid.num_buses() + 1);

        // the residual graph is a spanning tree: acyclic and connected
        BranchMask residual = all_live(grid.num_branches());
        for (int l : deployment) residual[l] = 0;
        CHECK(topo.connected(residual));
        int live_count = 0;
        for (char f : residual) live_count += f;
        CHECK(live_count == grid.num_buses() - 1);
    }
}

TEST_CASE("the paper-style study set is a valid deployment for IEEE-14", "[mtd]") {
    // {1,3,5,8,9,18,19} is one optimal feedback edge set: its complement
    // must also be a spanning tree
    const GridCase grid = load_case(data_path("case14.m"));
    const Topology topo(grid);
    BranchMask residual = all_live(20);
    for (int id : {1, 3, 5, 8, 9, 18, 19}) residual[id - 1] = 0;
    CHECK(topo.connected(residual));
    int live_count = 0;
    for (char f : residual) live_count += f;
    CHECK(live_count == 13);
}

TEST_CASE("is_protected matches the path enumeration oracle on the 4-bus case", "[mtd]") {
    const GridCase grid = load_case(data_path("case4.m"));
    const Topology topo(grid);
    for (int link = 0; link < 5; ++link)
        for (unsigned mask = 0; mask < 32; ++mask) {
            const auto perturbed = subset_from_mask(mask);
            CHECK(is_protected(topo, link, perturbed) ==
                  oracle::protected_by_paths(topo, link, perturbed));
        }
}

TEST_CASE("perturbing branch 4 protects branch 1 of the 4-bus case", "[mtd]") {
    const GridCase grid = load_case(data_path("case4.m"));
    const Topology topo(grid);
    CHECK(is_protected(topo, 0, {3}));   // both detours cross branch 4
    CHECK_FALSE(is_protected(topo, 0, {})); // nothing invalidated
    CHECK_FALSE(is_protected(topo, 0, {2}));
}

TEST_CASE("a full deployment protects every link", "[mtd]") {
    for (const char* name : {"case4.m", "case9.m", "case14.m", "case24.m", "case39.m"}) {
        const GridCase grid = load_case(data_path(name));
        const Topology topo(grid);
        const auto deployment = deploy_dfacts(topo);
        for (int link = 0; link < grid.num_branches(); ++link)
            CHECK(is_protected(topo, link, deployment));
    }
}

TEST_CASE("is_protected matches the oracle on random IEEE-14 subsets", "[mtd]") {
    const GridCase grid = load_case(data_path("case14.m"));
    const Topology topo(grid);
    Rng rng(2718);
    for (int round = 0; round < 200; ++round) {
        const int link = static_cast<int>(rng.below(20));
        std::vector<int> perturbed;
        for (int l = 0; l < 20; ++l)
            if (rng.uniform01() < 0.2) perturbed.push_back(l);
        CHECK(is_protected(topo, link, perturbed) ==
              oracle::protected_by_paths(topo, link, perturbed));
    }
}

TEST_CASE("protection is monotone in the perturbation set", "[mtd]") {
    const GridCase grid = load_case(data_path("case14.m"));
    const Topology topo(grid);
    Rng rng(31415);
    for (int round = 0; round < 100; ++round) {
        std::vector<int> small, large;
        for (int l = 0; l < 20; ++l) {
            const double u = rng.uniform01();
            if (u < 0.15) small.push_back(l);
            if (u < 0.35) large.push_back(l); // superset of small
        }
        for (int link = 0; link < 20; ++link)
            if (is_protected(topo, link, small)) CHECK(is_protected(topo, link, large));
    }
}

TEST_CASE("radial links count as protected", "[mtd]") {
    const GridCase grid = load_case(data_path("case14.m"));
    const Topology topo(grid);
    // branch 14 (7-8) is the only branch at leaf bus 8
    CHECK(is_protected(topo, 13, {}));
}

TEST_CASE("apply_perturbation follows the sign pattern", "[mtd]") {
    const GridCase grid = load_case(data_path("case14.m"));
    const DfactsConfig cfg = DfactsConfig::symmetric(grid, 0.2);

    SECTION("eta zero is the identity") {
        const DfactsPlan plan{{0, 2, 4}, {0, 2, 4}, 0.0, SignRule::Alternating};
        const auto result = apply_perturbation(grid, plan, cfg);
        for (int l = 0; l < 20; ++l)
            CHECK(result.reactance[l] == grid.branches[l].reactance);
        CHECK(result.clipped.empty());
    }
    SECTION("five percent, all positive") {
        const DfactsPlan plan{{0, 2, 4}, {0, 2, 4}, 0.05, SignRule::AllPositive};
        const auto result = apply_perturbation(grid, plan, cfg);
        for (int l : {0, 2, 4})
            CHECK(result.reactance[l] == Approx(1.05 * grid.branches[l].reactance));
        CHECK(result.reactance[1] == grid.branches[1].reactance);
    }
    SECTION("alternating signs in ascending branch order") {
        const DfactsPlan plan{{0, 2, 4}, {0, 2, 4}, 0.05, SignRule::Alternating};
        const auto result = apply_perturbation(grid, plan, cfg);
        CHECK(result.reactance[0] == Approx(1.05 * grid.branches[0].reactance));
        CHECK(result.reactance[2] == Approx(0.95 * grid.branches[2].reactance));
        CHECK(result.reactance[4] == Approx(1.05 * grid.branches[4].reactance));
    }
    SECTION("clipping at the range limit is recorded") {
        const DfactsPlan plan{{0}, {0}, 0.5, SignRule::AllPositive};
        const auto result = apply_perturbation(grid, plan, cfg);
        CHECK(result.reactance[0] == Approx(1.2 * grid.branches[0].reactance));
        CHECK(result.clipped == std::vector<int>{0});
    }
}

TEST_CASE("degenerate zero-width ranges are rejected", "[mtd]") {
    const GridCase grid = load_case(data_path("case4.m"));
    DfactsConfig cfg = DfactsConfig::symmetric(grid, 0.0); // all ranges collapse
    const DfactsPlan plan{{0, 1}, {0, 1}, 0.05, SignRule::AllPositive};
    CHECK_THROWS_WITH(apply_perturbation(grid, plan, cfg), Catch::Contains("degenerate"));
}

TEST_CASE("plan validation rejects malformed sets", "[mtd]") {
    const GridCase grid = load_case(data_path("case4.m"));
    const DfactsConfig cfg = DfactsConfig::symmetric(grid, 0.2);
    DfactsPlan bad;
    bad.deployment = {0, 1};
    bad.perturbed = {2}; // not a subset
    CHECK_THROWS_WITH(apply_perturbation(grid, bad, cfg), Catch::Contains("subset"));
    bad.deployment = {1, 0}; // not ascending
    bad.perturbed = {};
    CHECK_THROWS_WITH(apply_perturbation(grid, bad, cfg), Catch::Contains("ascending"));
}

TEST_CASE("detection probability is deterministic for a fixed seed", "[mtd]") {
    const GridCase grid = load_case(data_path("case14.m"));
    const Topology topo(grid);
    const DfactsConfig cfg = DfactsConfig::symmetric(grid, 0.2);
    const auto deployment = deploy_dfacts(topo);
    const DfactsPlan plan{deployment, deployment, 0.04, SignRule::Alternating};
    const AttackConfig attack{2, KnowledgeMode::PreMtdSnapshot, PathRule::first()};
    const double a = detection_probability(grid, topo, cfg, plan, attack, 0.15, 0.05, 500, 9001);
    const double b = detection_probability(grid, topo, cfg, plan, attack, 0.15, 0.05, 500, 9001);
    CHECK(a == b);
}

TEST_CASE("no perturbation keeps detection at the false-positive rate", "[mtd][slow]") {
    const GridCase grid = load_case(data_path("case14.m"));
    const Topology topo(grid);
    const DfactsConfig cfg = DfactsConfig::symmetric(grid, 0.2);
    const auto deployment = deploy_dfacts(topo);
    const DfactsPlan plan{deployment, deployment, 0.0, SignRule::Alternating};
    const AttackConfig attack{0, KnowledgeMode::PreMtdSnapshot, PathRule::first()};
    const double p = detection_probability(grid, topo, cfg, plan, attack, 0.15, 0.05, 10000, 42);
    CHECK(p == Approx(0.05).margin(0.01));
}

TEST_CASE("a perturbation that misses the attack surface stays blind", "[mtd][slow]") {
    const GridCase grid = load_case(data_path("case14.m"));
    const Topology topo(grid);
    const DfactsConfig cfg = DfactsConfig::symmetric(grid, 0.2);
    // perturb only branch 18 (10-11); link 1's detours run through the
    // left side, so the attacker's knowledge stays valid
    const std::vector<int> ldw = {17};
    REQUIRE_FALSE(is_protected(topo, 0, ldw));
    const DfactsPlan plan{{17}, ldw, 0.06, SignRule::AllPositive};
    const AttackConfig attack{0, KnowledgeMode::PreMtdSnapshot, PathRule::first()};
    const double p = detection_probability(grid, topo, cfg, plan, attack, 0.15, 0.05, 10000, 43);
    CHECK(p == Approx(0.05).margin(3.0 * std::sqrt(0.05 * 0.95 / 10000.0)));
}

TEST_CASE("full perturbation at six percent detects attacks on links 1-3", "[mtd][slow]") {
    const GridCase grid = load_case(data_path("case14.m"));
    const Topology topo(grid);
    const DfactsConfig cfg = DfactsConfig::symmetric(grid, 0.2);
    std::vector<int> deployment;
    for (int id : {1, 3, 5, 8, 9, 18, 19}) deployment.push_back(id - 1);
    const DfactsPlan plan{deployment, deployment, 0.06, SignRule::Alternating};
    for (int link : {0, 1, 2}) {
        const AttackConfig attack{link, KnowledgeMode::PreMtdSnapshot, PathRule::first()};
        const double p =
            detection_probability(grid, topo, cfg, plan, attack, 0.15, 0.05, 4000, 44 + link);
        CHECK(p >= 0.9);
    }
}

TEST_CASE("more trials concentrate the detection estimate", "[mtd][slow]") {
    const GridCase grid = load_case(data_path("case4.m"));
    const Topology topo(grid);
    const DfactsConfig cfg = DfactsConfig::symmetric(grid, 0.2);
    const auto deployment = deploy_dfacts(topo);
    const DfactsPlan plan{deployment, deployment, 0.06, SignRule::Alternating};
    const AttackConfig attack{0, KnowledgeMode::PreMtdSnapshot, PathRule::first()};

    // noise level picked to land mid-curve so the estimates can scatter
    auto spread = [&](int trials) {
        std::vector<double> estimates;
        for (std::uint64_t seed = 100; seed < 110; ++seed)
            estimates.push_back(detection_probability(grid, topo, cfg, plan, attack, 0.5, 0.05,
                                                      trials, seed));
        double mean = 0.0;
        for (double p : estimates) mean += p / estimates.size();
        double var = 0.0;
        for (double p : estimates) var += (p - mean) * (p - mean) / estimates.size();
        return std::sqrt(var);
    };
    CHECK(spread(3200) < spread(200));
}

TEST_CASE("detection propagates radial-trip errors", "[mtd]") {
    const GridCase grid = load_case(data_path("case14.m"));
    const Topology topo(grid);
    const DfactsConfig cfg = DfactsConfig::symmetric(grid, 0.2);
    const DfactsPlan plan;
    const AttackConfig attack{13, KnowledgeMode::PreMtdSnapshot, PathRule::first()}; // 7-8
    CHECK_THROWS_AS(
        detection_probability(grid, topo, cfg, plan, attack, 0.15, 0.05, 10, 1),
        RadialTripError);
}
