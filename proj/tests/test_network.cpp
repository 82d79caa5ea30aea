#include <catch2/catch.hpp>

#include <algorithm>

#include "gridmtd/case.hpp"
#include "gridmtd/network.hpp"
#include "gridmtd/rng.hpp"
#include "oracles.hpp"

using namespace gridmtd;

namespace {

std::string data_path(const std::string& name) {
    return std::string(GRIDMTD_DATA_DIR) + "/" + name;
}

GridCase two_bus(double x = 0.5) {
    GridCase grid;
    grid.name = "twobus";
    grid.buses = {{1, 0.0}, {2, 100.0}};
    grid.branches = {{1, 2, x, 150.0}};
    grid.generators = {{1, 0.0, 200.0, 20.0}};
    grid.shed_costs = {100.0, 100.0};
    grid.reference_bus = 1;
    grid.rebuild_index();
    validate_case(grid);
    return grid;
}

Vec nominal_x(const GridCase& grid) {
    Vec x(grid.branches.size());
    for (std::size_t l = 0; l < x.size(); ++l) x[l] = grid.branches[l].reactance;
    return x;
}

} // namespace

TEST_CASE("incidence columns have one +1 and one -1", "[network]") {
    const GridCase grid = load_case(data_path("case14.m"));
    const Topology topo(grid);
    for (int l = 0; l < topo.num_branches(); ++l) {
        int plus = 0, minus = 0;
        for (int b = 0; b < topo.num_buses(); ++b) {
            const double a = topo.incidence(b, l);
            if (a == 1.0) ++plus;
            if (a == -1.0) ++minus;
        }
        CHECK(plus == 1);
        CHECK(minus == 1);
    }
}

TEST_CASE("dc_flow solves the single-branch case", "[network]") {
    const GridCase grid = two_bus(0.5);
    const auto sol = dc_flow(grid, {100.0, -100.0}, all_live(1));
    CHECK(sol.flows[0] == Approx(100.0));
    CHECK(sol.theta[0] == 0.0);
    CHECK(sol.theta[1] == Approx(-0.5 * 100.0));
}

TEST_CASE("dc_flow with zero injections gives zero everything", "[network]") {
    const GridCase grid = load_case(data_path("case4.m"));
    const auto sol = dc_flow(grid, Vec(4, 0.0), all_live(5));
    CHECK(max_abs(sol.theta) == 0.0);
    CHECK(max_abs(sol.flows) == 0.0);
}

TEST_CASE("dc_flow matches the node-equation oracle on the 4-bus case", "[network]") {
    const GridCase grid = load_case(data_path("case4.m"));
    const Vec injections = {180.0, -40.0, -60.0, -80.0};
    const auto sol = dc_flow(grid, injections, all_live(5));
    const auto ref = oracle::dc_flow_by_node_equations(grid, injections);
    for (int l = 0; l < 5; ++l) CHECK(sol.flows[l] == Approx(ref.flows[l]).margin(1e-9));
    for (int b = 0; b < 4; ++b) CHECK(sol.theta[b] == Approx(ref.theta[b]).margin(1e-9));
}

TEST_CASE("dc_flow satisfies nodal balance on every bundled case", "[network]") {
    Rng rng(404);
    for (const char* name : {"case4.m", "case9.m", "case14.m", "case24.m", "case39.m"}) {
        const GridCase grid = load_case(data_path(name));
        const int n = grid.num_buses();
        Vec injections(n);
        double total = 0.0;
        for (int b = 0; b < n; ++b) total += injections[b] = rng.uniform(-80.0, 80.0);
        for (int b = 0; b < n; ++b) injections[b] -= total / n;
        const Topology topo(grid);
        const auto sol = dc_flow(topo, nominal_x(grid), injections, all_live(grid.num_branches()),
                                 grid.reference_index());
        for (int b = 0; b < n; ++b) {
            double acc = 0.0;
            for (int l = 0; l < grid.num_branches(); ++l) acc += topo.incidence(b, l) * sol.flows[l];
            CHECK(std::abs(acc - injections[b]) < 1e-8);
        }
    }
}

TEST_CASE("reversing a branch orientation negates its flow only", "[network]") {
    GridCase grid = load_case(data_path("case4.m"));
    const Vec injections = {180.0, -40.0, -60.0, -80.0};
    const auto before = dc_flow(grid, injections, all_live(5));
    std::swap(grid.branches[2].from_bus, grid.branches[2].to_bus);
    const auto after = dc_flow(grid, injections, all_live(5));
    for (int l = 0; l < 5; ++l) {
        const double expected = (l == 2) ? -before.flows[l] : before.flows[l];
        CHECK(after.flows[l] == Approx(expected).margin(1e-9));
    }
    for (int b = 0; b < 4; ++b) CHECK(after.theta[b] == Approx(before.theta[b]).margin(1e-9));
}

TEST_CASE("dc_flow reports islanding with the partition", "[network]") {
    const GridCase grid = load_case(data_path("case4.m"));
    BranchMask live = all_live(5);
    live[0] = 0; // 1-4
    live[3] = 0; // 3-4: bus 4 (index 3) is now isolated
    try {
        dc_flow(grid, {180.0, -40.0, -60.0, -80.0}, live);
        FAIL("expected IslandingError");
    } catch (const IslandingError& e) {
        REQUIRE(e.islands().size() == 2);
        CHECK(e.islands()[0] == std::vector<int>{0, 1, 2});
        CHECK(e.islands()[1] == std::vector<int>{3});
    }
}

TEST_CASE("dc_flow rejects unbalanced injections", "[network]") {
    const GridCase grid = two_bus();
    CHECK_THROWS_AS(dc_flow(grid, {100.0, -90.0}, all_live(1)), ValidationError);
}

TEST_CASE("alternative_paths finds both detours in the 4-bus example", "[network]") {
    const GridCase grid = load_case(data_path("case4.m"));
    const Topology topo(grid);
    const auto paths = alternative_paths(topo, 0); // branch 1: buses 1-4
    REQUIRE(paths.size() == 2);
    CHECK(paths[0] == std::vector<int>{1, 2, 3}); // links 2,3,4
    CHECK(paths[1] == std::vector<int>{4, 3});    // links 5,4
}

TEST_CASE("alternative_paths is empty for a radial branch", "[network]") {
    const GridCase grid = two_bus();
    const Topology topo(grid);
    CHECK(alternative_paths(topo, 0).empty());
}

TEST_CASE("alternative_paths matches exhaustive enumeration", "[network]") {
    for (const char* name : {"case4.m", "case9.m", "case14.m"}) {
        const GridCase grid = load_case(data_path(name));
        const Topology topo(grid);
        for (int l = 0; l < topo.num_branches(); ++l) {
            auto got = alternative_paths(topo, l);
            auto expected = oracle::all_simple_paths(topo, l);
            std::sort(got.begin(), got.end());
            std::sort(expected.begin(), expected.end());
            REQUIRE(got.size() == expected.size());
            CHECK(got == expected);
        }
    }
}

TEST_CASE("alternative_paths honors the enumeration cap", "[network]") {
    const GridCase grid = load_case(data_path("case14.m"));
    const Topology topo(grid);
    CHECK_THROWS_AS(alternative_paths(topo, 0, 2), PathOverflowError);
}

TEST_CASE("max_weight_spanning_tree picks the heaviest edges of a triangle", "[network]") {
    Topology triangle(3, {{0, 1}, {1, 2}, {2, 0}});
    const auto tree = max_weight_spanning_tree(triangle, {3.0, 2.0, 1.0});
    CHECK(tree == std::vector<int>{0, 1});
    // exhaustive check over all three spanning trees
    CHECK(oracle::best_spanning_tree_weight(triangle, {3.0, 2.0, 1.0}) == Approx(5.0));
}

TEST_CASE("uniform weights break ties toward low branch indices", "[network]") {
    const GridCase grid = load_case(data_path("case4.m"));
    const Topology topo(grid);
    const auto tree = max_weight_spanning_tree(topo, Vec(5, 1.0));
    CHECK(tree == std::vector<int>{0, 1, 2}); // branches 1,2,3
}

TEST_CASE("spanning tree size and optimality on bundled cases", "[network]") {
    Rng rng(99);
    for (const char* name : {"case4.m", "case9.m", "case14.m"}) {
        const GridCase grid = load_case(data_path(name));
        const Topology topo(grid);
        const auto tree = max_weight_spanning_tree(topo, Vec(topo.num_branches(), 1.0));
        CHECK(static_cast<int>(tree.size()) == topo.num_buses() - 1);
    }
    // random weights, exhaustive optimality on graphs small enough to enumerate
    const GridCase grid = load_case(data_path("case9.m"));
    const Topology topo(grid);
    for (int round = 0; round < 5; ++round) {
        Vec weights(topo.num_branches());
        for (auto& w : weights) w = rng.uniform(0.0, 10.0);
        const auto tree = max_weight_spanning_tree(topo, weights);
        double got = 0.0;
        for (int l : tree) got += weights[l];
        CHECK(got == Approx(oracle::best_spanning_tree_weight(topo, weights)));
    }
}

TEST_CASE("max_weight_spanning_tree fails on disconnected graphs", "[network]") {
    Topology disconnected(4, {{0, 1}, {2, 3}});
    CHECK_THROWS_WITH(max_weight_spanning_tree(disconnected, {1.0, 1.0}),
                      Catch::Contains("disconnected"));
}

TEST_CASE("connectivity queries agree with a breadth-first oracle", "[network]") {
    const GridCase grid = load_case(data_path("case14.m"));
    const Topology topo(grid);
    Rng rng(7);
    for (int round = 0; round < 50; ++round) {
        BranchMask live = all_live(topo.num_branches());
        for (auto& flag : live) flag = rng.uniform01() < 0.6;
        const auto islands = topo.islands(live);
        // breadth-first reachability oracle per bus pair
        std::vector<int> component(topo.num_buses(), -1);
        for (std::size_t g = 0; g < islands.size(); ++g)
            for (int b : islands[g]) component[b] = static_cast<int>(g);
        for (int a = 0; a < topo.num_buses(); ++a)
            for (int b = 0; b < topo.num_buses(); ++b)
                CHECK(topo.connected_between(live, a, b) == (component[a] == component[b]));
    }
}

TEST_CASE("susceptance matrix row sums vanish and reduced matrix is SPD", "[network]") {
    const GridCase grid = load_case(data_path("case14.m"));
    const Topology topo(grid);
    const auto s = Susceptance::build(topo, nominal_x(grid), all_live(grid.num_branches()),
                                      grid.reference_index());
    for (int r = 0; r < grid.num_buses(); ++r) {
        double sum = 0.0;
        for (int c = 0; c < grid.num_buses(); ++c) sum += s.full()(r, c);
        CHECK(std::abs(sum) < 1e-9);
    }
    // SPD held implicitly: build() factorizes; a disconnected mask throws
    BranchMask live = all_live(grid.num_branches());
    live[13] = 0; // 7-8: isolates bus 8
    CHECK_THROWS_AS(Susceptance::build(topo, nominal_x(grid), live, grid.reference_index()),
                    IslandingError);
}
