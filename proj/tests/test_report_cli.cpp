#include <catch_amalgamated.hpp>

#include <array>
#include <cstdio>
#include <fstream>
#include <string>

#include "cbm/report.hpp"

#include "fixtures.hpp"

using namespace cbm;

namespace {

struct RunResult {
    int exit_code;
    std::string out;
};

RunResult run_tool(const std::string& args) {
    std::string cmd = std::string(CBM_TOOL_PATH) + " " + args + " 2>&1";
    std::array<char, 4096> buf{};
    std::string out;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) out.append(buf.data(), n);
    int status = pclose(p);
    return {WEXITSTATUS(status), out};
}

std::string fx(const std::string& name) { return cbmtest::fixture_path(name); }

std::string strip_timestamp(std::string json) {
    auto pos = json.find("\"timestamp\"");
    if (pos == std::string::npos) return json;
    auto end = json.find('\n', pos);
    json.erase(pos, end - pos + 1);
    return json;
}

} // namespace

TEST_CASE("report JSON round-trips") {
    Report r;
    r.command = "metric";
    r.seed = 7;
    r.config.emplace_back("lts", "P.lts");
    r.note("a note");
    r.add("check.one", CheckStatus::Pass);
    r.add("check.two", CheckStatus::Fail, "witness tuple");
    r.add("check.three", CheckStatus::Skip);
    auto j = r.to_json(false);
    Report r2 = Report::from_json(j);
    CHECK(r2.to_json(false) == j);
    CHECK_FALSE(r2.ok());
    CHECK(r2.entries[1].witness == "witness tuple");

    Report empty;
    empty.command = "noop";
    auto je = empty.to_json(false);
    CHECK(je["checks"].is_array());
    CHECK(je["checks"].empty());
    CHECK(Report::from_json(je).to_json(false) == je);
}

TEST_CASE("cli: metric reproduces the bundled example") {
    auto r = run_tool("metric --lts " + fx("P.lts") + "," + fx("Q.lts") + " --mlts " +
                      fx("S0.mlts") + " p0 q0");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("s0") != std::string::npos);

    auto r2 = run_tool("metric --lts " + fx("P.lts") + "," + fx("Q.lts") + " --mlts " +
                       fx("S0.mlts") + " \"nu a p0\" \"nu a q0\"");
    CHECK(r2.exit_code == 0);
    CHECK(r2.out.substr(0, 3) == "bot");
}

TEST_CASE("cli: check against the grow-only distance state") {
    auto r = run_tool("check --lts " + fx("P.lts") + "," + fx("Q.lts") + " --mlts " +
                      fx("Spp.mlts") + " p0 q0 \"s''0\"");
    CHECK(r.exit_code == 0);
    CHECK(r.out.substr(0, 4) == "true");

    auto r2 = run_tool("check --lts " + fx("P.lts") + "," + fx("Q.lts") + " --mlts " +
                       fx("S0.mlts") + " p0 q0 bot");
    CHECK(r2.exit_code == 1);
    CHECK(r2.out.substr(0, 5) == "false");
}

TEST_CASE("cli: order") {
    auto r = run_tool("order --mlts " + fx("S0.mlts") + "," + fx("Spp.mlts") +
                      " s0 \"s''0\"");
    CHECK(r.exit_code == 0);
    CHECK(r.out.substr(0, 4) == "true");
}

TEST_CASE("cli: exit code contract") {
    // parse error -> 2
    auto r = run_tool("metric --lts /nonexistent.lts --mlts " + fx("S0.mlts") + " p0 q0");
    CHECK(r.exit_code == 2);
    // resource bound -> 3
    auto r2 = run_tool("closure --mlts " + fx("S0.mlts") + " --bounds max_reachable=3");
    CHECK(r2.exit_code == 3);
    // check failure -> 1
    auto r3 = run_tool("compose --lts " + fx("P.lts") + "," + fx("Q.lts") + "," + fx("R.lts") +
                       " --mlts " + fx("S0.mlts") + " --op sum --procs zz");
    CHECK(r3.exit_code == 2); // unknown state is a lookup error
}

TEST_CASE("cli: validate and compose run green on the fixtures") {
    auto r = run_tool("validate --quantale diamond");
    CHECK(r.exit_code == 0);
    auto r2 = run_tool("validate --quantale " + fx("diamond.q"));
    CHECK(r2.exit_code == 0);
    auto r3 = run_tool("compose --lts " + fx("P.lts") + "," + fx("Q.lts") + "," + fx("R.lts") +
                       " --mlts " + fx("S0.mlts") + " --op sum,restrict:a --procs p0,q0,r0");
    CHECK(r3.exit_code == 0);
    auto r4 = run_tool("oracle --count 10 --seed 5");
    CHECK(r4.exit_code == 0);
    auto r5 = run_tool("closure --mlts " + fx("S0.mlts"));
    CHECK(r5.exit_code == 0);
    CHECK(r5.out.find("5 classes") != std::string::npos);
}

TEST_CASE("cli: behavioural workflow") {
    auto r = run_tool("behavioural --lts " + fx("P.lts") + "," + fx("Q.lts") +
                      " --policy canonical --format json");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("styles-agree") != std::string::npos);
}

TEST_CASE("cli: same config and seed give byte-identical JSON minus the timestamp") {
    std::string cmd = "metric --lts " + fx("P.lts") + "," + fx("Q.lts") + " --mlts " +
                      fx("S0.mlts") + " --format json --seed 9 p0 q0";
    auto a = run_tool(cmd);
    auto b = run_tool(cmd);
    CHECK(a.exit_code == 0);
    CHECK(strip_timestamp(a.out) == strip_timestamp(b.out));
}

TEST_CASE("cli: metric json export carries universe, relations and table") {
    auto r = run_tool("metric --lts " + fx("P.lts") + "," + fx("Q.lts") + " --mlts " +
                      fx("S0.mlts") + " --format json p0 q0");
    CHECK(r.exit_code == 0);
    auto body = r.out.substr(r.out.find('{'));
    auto j = nlohmann::json::parse(body);
    REQUIRE(j.contains("results"));
    CHECK(j["results"]["universe"].size() >= 4);
    CHECK(j["results"]["relations"].contains("s0"));
    CHECK(j["results"]["metric"]["p0 ~ q0"] == "s0");
    Report round = Report::from_json(j);
    CHECK(round.to_json(true) == j);
}

TEST_CASE("cli: bounds come from the environment file when set") {
    std::string bounds_file = "/tmp/cbm_bounds_test.txt";
    {
        std::ofstream f(bounds_file);
        f << "max_reachable=3\n";
    }
    std::string cmd = "CBM_BOUNDS_FILE=" + bounds_file + " " + std::string(CBM_TOOL_PATH) +
                      " closure --mlts " + fx("S0.mlts") + " 2>&1";
    std::array<char, 4096> buf{};
    std::string out;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) out.append(buf.data(), n);
    int status = pclose(p);
    CHECK(WEXITSTATUS(status) == 3);
    CHECK(out.find("max_reachable") != std::string::npos);
}

TEST_CASE("cli: validate with random suites is seed-stable") {
    auto a = run_tool("validate --quantale boolean --random 10 --seed 3 --format json");
    auto b = run_tool("validate --quantale boolean --random 10 --seed 3 --format json");
    CHECK(a.exit_code == 0);
    CHECK(strip_timestamp(a.out) == strip_timestamp(b.out));
}
