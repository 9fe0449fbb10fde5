#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args) {
    std::string cmd = std::string(HOPFLAB_BIN) + " " + args + " 2>/dev/null";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
    int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

}  // namespace

TEST_CASE("linking of the k=2 spaghetton") {
    auto r = run("linking --spaghetton 2");
    REQUIRE(r.code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["total_linking"] == 16);
    CHECK(j["config"]["subcommand"] == "linking");
}

TEST_CASE("linking from curve files") {
    std::ofstream("a.json") << R"({"closed":true,"vertices":[[1,0,0],[0,1,0],[-1,0,0],[0,-1,0]]})";
    std::ofstream("b.json") << R"({"closed":true,"vertices":[[0,0,0],[0,-1,1],[0,-2,0],[0,-1,-1]]})";
    auto r = run("linking a.json b.json");
    REQUIRE(r.code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(std::abs(std::abs(j["gauss"].get<double>()) - 1) < 1e-6);
    CHECK(std::abs(j["crossing"].get<long>()) == 1);
}

TEST_CASE("budget rows are monotone") {
    auto r = run("budget --N 1000");
    REQUIRE(r.code == 0);
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    CHECK(line.rfind("# ", 0) == 0);
    std::getline(in, line);
    CHECK(line == "N,c,S1,S2,S3,S2_tail,S3_floor");
    double s2 = 0, s3 = 0;
    int rows = 0;
    while (std::getline(in, line)) {
        double v[7];
        REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf,%lf", &v[0], &v[1], &v[2], &v[3], &v[4], &v[5], &v[6]) == 7);
        CHECK(v[3] > s2);
        CHECK(v[4] > s3);
        s2 = v[3];
        s3 = v[4];
        ++rows;
    }
    CHECK(rows == 3);
}

TEST_CASE("solve is byte identical across runs and thread counts") {
    auto a = run("solve --grid 2,3 --alpha 0.5 --seed 7");
    auto b = run("solve --grid 2,3 --alpha 0.5 --seed 7");
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    auto j = nlohmann::json::parse(a.out);
    CHECK(j["solution"]["value"].get<double>() >= j["solution"]["lower_bound"].get<double>());
    CHECK(j["config"]["model"] == "alpha:0.5");
}

TEST_CASE("solve writes to a file") {
    auto r = run("--out sol.json solve --grid 2,2 --model nu3");
    REQUIRE(r.code == 0);
    CHECK(r.out.empty());
    std::ifstream in("sol.json");
    auto j = nlohmann::json::parse(in);
    CHECK(j["config"]["model"] == "nu3");
}

TEST_CASE("validate-graph") {
    std::ofstream("g.json") << R"({"dim":2,"vertices":[{"id":0,"p":[0.5,0.5]},{"id":1,"p":[0.5,0]}],)"
                               R"("edges":[{"tail":0,"head":1,"d":1}],"sources":[0],)"
                               R"("domain":{"dim":2,"lo":[0,0],"hi":[1,1]}})";
    auto r = run("validate-graph g.json");
    CHECK(r.code == 0);
    CHECK(nlohmann::json::parse(r.out)["boundary_flux"] == 1);
    std::ofstream("bad.json") << R"({"dim":2,"vertices":[{"id":0,"p":[0.5,0.5]}],"edges":[],"sources":[0],)"
                                 R"("domain":{"dim":2,"lo":[0,0],"hi":[1,1]}})";
    CHECK(run("validate-graph bad.json").code == 1);
}

TEST_CASE("hopf subcommand") {
    auto r = run("hopf --field linked-stadia --method preimage --res 96");
    REQUIRE(r.code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["value"] == 2);
    CHECK(j["field"] == "linked-stadia");
    CHECK(j.contains("runtime"));
}

TEST_CASE("exit codes") {
    CHECK(run("bogus").code == 1);
    CHECK(run("linking --spaghetton 2 --frobnicate").code == 1);
    CHECK(run("linking --spaghetton 9").code == 1);
    CHECK(run("solve --grid 2,400").code == 2);
    CHECK(run("grid-scaling --m 2 --ks 1000").code == 2);
    CHECK(run("hopf --field stadium --res 4").code == 1);
}

TEST_CASE("grid scaling csv") {
    auto r = run("grid-scaling --m 2 --ks 2,4 --alpha 0.5");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("\nm,alpha,k,upper,lower,xi_upper,xi_lower,seconds\n") != std::string::npos);
}
