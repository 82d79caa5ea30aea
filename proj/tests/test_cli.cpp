#include <catch2/catch.hpp>

#include <fstream>
#include <sstream>

#include "gridmtd/cli.hpp"

using namespace gridmtd;

namespace {

std::string data_path(const std::string& name) {
    return std::string(GRIDMTD_DATA_DIR) + "/" + name;
}

struct CliRun {
    int exit_code;
    std::string out;
    std::string err;
};

CliRun run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

TEST_CASE("deploy reports the IEEE-14 deployment", "[cli]") {
    const auto r = run({"deploy", "--case", data_path("case14.m")});
    REQUIRE(r.exit_code == kExitOk);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["deployment_size"] == 7);
    CHECK(j["branches"] == 20);
}

TEST_CASE("deploy rejects a disconnected case with exit code 2", "[cli]") {
    const char* broken = R"(function mpc = broken
mpc.bus = [
	1	0;
	2	50;
	3	0;
];
mpc.branch = [
	1	2	0.1	100;
];
mpc.gen = [
	1	0	100	10;
];
)";
    const std::string path = "/tmp/gridmtd_broken_case.m";
    std::ofstream(path) << broken;
    const auto r = run({"deploy", "--case", path});
    CHECK(r.exit_code == kExitData);
    CHECK_THAT(r.err, Catch::Contains("disconnected"));
}

TEST_CASE("missing case file exits with a data error", "[cli]") {
    const auto r = run({"deploy", "--case", "/nonexistent/nowhere.m"});
    CHECK(r.exit_code == kExitData);
}

TEST_CASE("unknown flags exit with a usage error", "[cli]") {
    const auto r = run({"deploy", "--case", data_path("case14.m"), "--frobnicate"});
    CHECK(r.exit_code == kExitUsage);
    CHECK_THAT(r.err, Catch::Contains("usage error"));
}

TEST_CASE("help is not an error", "[cli]") {
    const auto r = run({"--help"});
    CHECK(r.exit_code == kExitOk);
    CHECK_THAT(r.out, Catch::Contains("deploy"));
    CHECK_THAT(r.out, Catch::Contains("game"));
}

TEST_CASE("protect prints a link-by-set boolean matrix", "[cli]") {
    // every 1-2 detour crosses branch 3, so {3} protects link 2 as well
    const auto r = run({"protect", "--case", data_path("case4.m"), "--sets", "4;3", "--links",
                        "1,2"});
    REQUIRE(r.exit_code == kExitOk);
    CHECK(r.out == "link,4,3\n1,1,0\n2,0,1\n");
}

TEST_CASE("detect emits one row per link and eta", "[cli]") {
    const auto r = run({"detect", "--case", data_path("case14.m"), "--config",
                        data_path("default_config.json"), "--deployment", "1,3,5,8,9,18,19",
                        "--links", "1", "--eta-grid", "0,0.06", "--trials", "400", "--seed",
                        "5"});
    REQUIRE(r.exit_code == kExitOk);
    std::istringstream lines(r.out);
    std::string header, row0, row6;
    std::getline(lines, header);
    std::getline(lines, row0);
    std::getline(lines, row6);
    CHECK(header == "link,eta,p_detect,status");
    CHECK_THAT(row0, Catch::StartsWith("1,0,0.0"));  // calibration row stays near alpha
    CHECK_THAT(row6, Catch::StartsWith("1,0.06,1,ok") || Catch::StartsWith("1,0.06,0.9"));
}

TEST_CASE("fresh attacker knowledge defeats the perturbation", "[cli]") {
    const auto r = run({"detect", "--case", data_path("case14.m"), "--config",
                        data_path("default_config.json"), "--deployment", "1,3,5,8,9,18,19",
                        "--links", "1", "--eta-grid", "0.06", "--trials", "2000", "--seed", "8",
                        "--knowledge", "fresh"});
    REQUIRE(r.exit_code == kExitOk);
    std::istringstream lines(r.out);
    std::string header, row;
    std::getline(lines, header);
    std::getline(lines, row);
    const double p = std::stod(row.substr(row.find(",0.06,") + 6));
    CHECK(p == Approx(0.05).margin(0.02));
}

TEST_CASE("detect reports radial links per-row instead of aborting", "[cli]") {
    const auto r = run({"detect", "--case", data_path("case14.m"), "--links", "14,1",
                        "--eta-grid", "0.02", "--trials", "50", "--seed", "3"});
    REQUIRE(r.exit_code == kExitOk);
    CHECK_THAT(r.out, Catch::Contains("14,0.02,,not-attackable"));
    CHECK_THAT(r.out, Catch::Contains("1,0.02,0."));
}

TEST_CASE("detect is byte-identical for a fixed seed", "[cli]") {
    const std::vector<std::string> args = {
        "detect", "--case", data_path("case4.m"),  "--links", "1,3",
        "--eta-grid", "0,0.04",  "--trials", "300", "--seed",  "11"};
    const auto first = run(args);
    const auto second = run(args);
    REQUIRE(first.exit_code == kExitOk);
    CHECK(first.out == second.out);

    auto different = args;
    different.back() = "12";
    CHECK(run(different).out != first.out);
}

TEST_CASE("detect output matches the golden file", "[cli]") {
    const auto r = run({"detect", "--case", data_path("case4.m"), "--config",
                        data_path("default_config.json"), "--links", "1,2,3,4,5", "--eta-grid",
                        "0,0.02,0.04,0.06", "--trials", "200", "--seed", "42"});
    REQUIRE(r.exit_code == kExitOk);
    CHECK(r.out == read_file(std::string(GRIDMTD_GOLDEN_DIR) + "/detect_case4.csv"));
}

TEST_CASE("opf reports a single attack/defense cost cell", "[cli]") {
    const auto r = run({"opf", "--case", data_path("case14.m"), "--trip", "1"});
    REQUIRE(r.exit_code == kExitOk);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["attack_successful"] == true);
    CHECK(j["cost"].get<double>() > j["baseline_cost"].get<double>());

    const auto csv = run({"opf", "--case", data_path("case14.m"), "--trip", "1", "--format",
                          "csv"});
    REQUIRE(csv.exit_code == kExitOk);
    CHECK_THAT(csv.out, Catch::StartsWith("field,value\nbaseline_cost,"));
    CHECK_THAT(csv.out, Catch::Contains("attack_successful,1"));
}

TEST_CASE("deploy and game support CSV output", "[cli]") {
    const auto deploy = run({"deploy", "--case", data_path("case9.m"), "--format", "csv"});
    REQUIRE(deploy.exit_code == kExitOk);
    CHECK(deploy.out == "branch\n9\n");

    const auto game = run({"game", "--case", data_path("case4.m"), "--defender-sets", "4",
                           "--attacker-sets", "1", "--format", "csv"});
    REQUIRE(game.exit_code == kExitOk);
    CHECK_THAT(game.out, Catch::StartsWith("u_defender,none,1\n"));
    CHECK_THAT(game.out, Catch::Contains("u_attacker,none,1\n"));
}

TEST_CASE("game against a null attacker settles on no defense", "[cli]") {
    const auto r = run({"game", "--case", data_path("case14.m"), "--config",
                        data_path("study_game_config.json"), "--defender-sets",
                        "1;1,3", "--attacker-sets", ";"});
    REQUIRE(r.exit_code == kExitOk);
    const auto j = nlohmann::json::parse(r.out);
    REQUIRE(j["equilibria"].size() >= 1);
    const auto& eq = j["equilibria"][0];
    CHECK(eq["p_defender"][0].get<double>() == Approx(1.0));
    CHECK(eq["support_defender"][0] == "none");
    CHECK(eq["defense_cost_pct"].get<double>() == Approx(0.0).margin(1e-9));
}

TEST_CASE("game reports payoffs and equilibria on the study case", "[cli][slow]") {
    const auto r = run({"game", "--case", data_path("case14_s2.m"), "--config",
                        data_path("study_game_config.json"), "--defender-sets",
                        "1;1,3;1,3,5;1,3,5,8;1,3,5,8,9,18,19"});
    REQUIRE(r.exit_code == kExitOk);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["u_defender"].size() == 6);
    CHECK(j["u_defender"][0].size() == 21);
    CHECK(j["truncated"] == false);
    CHECK(j["equilibria"].size() >= 1);
}

TEST_CASE("game validates defender sets against the deployment", "[cli]") {
    const auto r = run({"game", "--case", data_path("case14.m"), "--defender-sets", "1",
                        "--attacker-sets", "1"});
    // computed deployment for case14 does not contain branch 1
    CHECK(r.exit_code == kExitData);
    CHECK_THAT(r.err, Catch::Contains("outside the deployment"));
}

TEST_CASE("GRIDMTD_SEED is the seed fallback", "[cli]") {
    const std::vector<std::string> args = {"detect", "--case",   data_path("case4.m"),
                                           "--links", "1",       "--eta-grid",
                                           "0.04",    "--trials", "300"};
    setenv("GRIDMTD_SEED", "11", 1);
    const auto from_env = run(args);
    unsetenv("GRIDMTD_SEED");
    auto explicit_args = args;
    explicit_args.push_back("--seed");
    explicit_args.push_back("11");
    const auto from_flag = run(explicit_args);
    REQUIRE(from_env.exit_code == kExitOk);
    CHECK(from_env.out == from_flag.out);

    setenv("GRIDMTD_SEED", "not-a-number", 1);
    CHECK(run(args).exit_code == kExitData);
    unsetenv("GRIDMTD_SEED");
}

TEST_CASE("output lands in a file when requested", "[cli]") {
    const std::string path = "/tmp/gridmtd_deploy_out.json";
    const auto r = run({"deploy", "--case", data_path("case9.m"), "-o", path});
    REQUIRE(r.exit_code == kExitOk);
    CHECK(r.out.empty());
    const auto j = nlohmann::json::parse(read_file(path));
    CHECK(j["deployment_size"] == 1);
}
