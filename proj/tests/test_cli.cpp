#include <catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "support.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using Catch::Approx;

namespace {

const std::string kConfig1 = std::string(THREENODE_CONFIG_DIR) + "/example1.json";
const std::string kConfig2 = std::string(THREENODE_CONFIG_DIR) + "/example2.json";

fs::path fresh_dir(const std::string& tag) {
    static int counter = 0;
    const auto dir = fs::temp_directory_path() / ("threenode_cli_" + std::to_string(::getpid()) + "_" +
                                                  std::to_string(counter++) + "_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int cli(const std::string& args) {
    const std::string cmd = std::string("\"") + THREENODE_CLI + "\" " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(rc));
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

std::string sha256sum(const fs::path& p) {
    const std::string cmd = "sha256sum \"" + p.string() + "\"";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[128] = {};
    const std::size_t n = std::fread(buf, 1, 64, pipe);
    ::pclose(pipe);
    return std::string(buf, n);
}

void check_manifest(const fs::path& dir, const std::string& command) {
    const auto m = read_json(dir / "manifest.json");
    CHECK(m["command"] == command);
    CHECK(m["tool"] == "threenode");
    CHECK(m.contains("config"));
    REQUIRE(!m["files"].empty());
    for (const auto& f : m["files"]) {
        const auto path = dir / f["path"].get<std::string>();
        REQUIRE(fs::exists(path));
        CHECK(f["sha256"].get<std::string>() == sha256sum(path));
        CHECK(f["bytes"].get<std::uintmax_t>() == fs::file_size(path));
    }
}

std::string write_config(const fs::path& dir, const std::string& text) {
    const auto p = dir / "config.json";
    std::ofstream(p) << text;
    return p.string();
}

}  // namespace

TEST_CASE("cli: equilibria at one q1") {
    const auto dir = fresh_dir("eq");
    REQUIRE(cli("equilibria --config " + kConfig1 + " --contrast 30 --q1 0.5 --out " + dir.string()) == 0);
    const auto j = read_json(dir / "equilibria.json");
    CHECK(j["equilibria"].size() == 3);
    check_manifest(dir, "equilibria");
}

TEST_CASE("cli: equilibrium curve folds") {
    SECTION("contrast 10 folds twice") {
        const auto dir = fresh_dir("curve10");
        REQUIRE(cli("equilibria --config " + kConfig1 + " --contrast 10 --q1-range 0:1:401 --out " + dir.string()) == 0);
        const auto j = read_json(dir / "curve.json");
        CHECK(j["fold_count"] == 2);
        CHECK(j["folds"][0]["q1"].get<double>() + j["folds"][1]["q1"].get<double>() == Approx(1.0).margin(1e-6));
        CHECK(fs::exists(dir / "curve.csv"));
        CHECK(fs::exists(dir / "samples.csv"));
        check_manifest(dir, "equilibria");
    }
    SECTION("contrast 2 does not fold") {
        const auto dir = fresh_dir("curve2");
        REQUIRE(cli("equilibria --config " + kConfig1 + " --contrast 2 --q1-range 0:1:101 --out " + dir.string()) == 0);
        CHECK(read_json(dir / "curve.json")["fold_count"] == 0);
    }
}

TEST_CASE("cli: eigenvalues at the oscillatory example point") {
    const auto c = testing::example1(50.0, 0.5);
    const auto seed = threenode::select_branch(threenode::solve_equilibria(c), threenode::Branch::Negative);
    REQUIRE(seed.has_value());
    const auto dir = fresh_dir("eigs");
    std::ostringstream qc;
    qc.precision(17);
    qc << seed->q_c;
    REQUIRE(cli("eigs --config " + kConfig1 + " --q1 0.5 --qc " + qc.str() + " --out " + dir.string()) == 0);
    const auto j = read_json(dir / "eigenvalues.json");
    bool found = false;
    for (const auto& r : j["roots"]) {
        found |= std::abs(r["sigma"].get<double>() - 0.04) < 0.02 && std::abs(r["omega"].get<double>() - 9.16) < 0.05;
    }
    CHECK(found);
    CHECK(j["stability"] == "oscillatory");
    check_manifest(dir, "eigs");

    SECTION("an empty window is not an error") {
        const auto d2 = fresh_dir("eigs_empty");
        REQUIRE(cli("eigs --config " + kConfig1 + " --q1 0.5 --qc " + qc.str() + " --window 0.5:1:50:60 --grid 40 --out " +
                    d2.string()) == 0);
        CHECK(read_json(d2 / "eigenvalues.json")["roots"].empty());
    }
    SECTION("a q_c far from any equilibrium is a solver error") {
        CHECK(cli("eigs --config " + kConfig1 + " --q1 0.5 --qc 0.3 --out " + fresh_dir("eigs_far").string()) == 3);
    }
}

TEST_CASE("cli: without separation only real roots appear") {
    const auto dir = fresh_dir("nosep");
    const auto cfg = write_config(dir, R"({
      "geometry": {"rA_rC": 1, "rA_rB": 1, "VA_VC": 1, "VA_VB": 1},
      "inlets": {"q1": 0.3, "phi1": 0.82, "phi2": 0.82},
      "viscosity": {"contrast": 50},
      "separation": {"type": "none"}
    })");
    const auto c = threenode::load_config(cfg);
    const auto states = threenode::solve_equilibria(c);
    REQUIRE(states.size() == 1);
    std::ostringstream qc;
    qc.precision(17);
    qc << states[0].q_c;
    REQUIRE(cli("eigs --config " + cfg + " --q1 0.3 --qc " + qc.str() + " --window -2:1:0:40 --grid 200 --out " +
                (dir / "out").string()) == 0);
    const auto j = read_json(dir / "out" / "eigenvalues.json");
    for (const auto& r : j["roots"]) CHECK(std::abs(r["omega"].get<double>()) < 1e-8);
    CHECK(j["unstable_count"] == 0);
}

TEST_CASE("cli: phase diagram smoke run") {
    const auto dir = fresh_dir("pd");
    const auto t0 = std::chrono::steady_clock::now();
    REQUIRE(cli("phase-diagram --config " + kConfig1 + " --q1-grid 2 --contrast-range 2:500:2 --out " + dir.string()) == 0);
    CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() < 10.0);
    const auto meta = read_json(dir / "meta.json");
    CHECK(meta["cells"] == 4);
    CHECK(meta["failed_cells"] == 0);
    check_manifest(dir, "phase-diagram");
}

TEST_CASE("cli: coarse bundles show the expected regions") {
    SECTION("Example 1") {
        const auto dir = fresh_dir("pd1");
        REQUIRE(cli("phase-diagram --config " + kConfig1 + " --q1-grid 41 --contrast-range 2:500:40 --out " + dir.string()) == 0);
        const auto counts = read_json(dir / "meta.json")["region_counts"];
        for (const char* r : {"i", "ii", "iii", "iv", "v"}) CHECK(counts[r].get<int>() > 0);
        CHECK(!read_json(dir / "meta.json")["curves"].empty());
    }
    SECTION("Example 2 has no region v") {
        const auto dir = fresh_dir("pd2");
        REQUIRE(cli("phase-diagram --config " + kConfig2 + " --q1-grid 41 --contrast-range 2:500:40 --no-curves --out " +
                    dir.string()) == 0);
        const auto counts = read_json(dir / "meta.json")["region_counts"];
        CHECK(counts["v"] == 0);
        CHECK(counts["i"].get<int>() > 0);
        CHECK(counts["iii"].get<int>() > 0);
    }
}

TEST_CASE("cli: simulate") {
    SECTION("zero perturbation is a fixed point") {
        const auto dir = fresh_dir("sim0");
        REQUIRE(cli("simulate --config " + kConfig1 + " --q1 0.5 --perturb 0 --t-end 5 --cells 64 --out " + dir.string()) == 0);
        const auto st = read_json(dir / "stats.json");
        CHECK(st["stats"]["fixed_point"] == true);
        CHECK(st["stats"]["period"].is_null());
        CHECK(fs::exists(dir / "series.csv"));
        CHECK(fs::exists(dir / "profile.csv"));
        check_manifest(dir, "simulate");
    }
    SECTION("bad settings are usage errors") {
        CHECK(cli("simulate --config " + kConfig1 + " --q1 0.5 --cells 4 --out " + fresh_dir("sim_bad").string()) == 1);
    }
}

TEST_CASE("cli: outputs are deterministic") {
    const auto a = fresh_dir("det_a"), b = fresh_dir("det_b");
    const std::string args = "simulate --config " + kConfig1 + " --q1 0.5 --t-end 20 --cells 64 --out ";
    REQUIRE(cli(args + a.string()) == 0);
    REQUIRE(cli(args + b.string()) == 0);
    for (const char* f : {"series.csv", "profile.csv", "stats.json"}) CHECK(slurp(a / f) == slurp(b / f));

    const std::string pd = "phase-diagram --config " + kConfig2 + " --q1-grid 9 --contrast-range 2:100:6 --threads 3 --out ";
    const auto c = fresh_dir("det_c"), d = fresh_dir("det_d");
    REQUIRE(cli(pd + c.string()) == 0);
    REQUIRE(cli(pd + d.string()) == 0);
    CHECK(slurp(c / "diagram.csv") == slurp(d / "diagram.csv"));
    CHECK(slurp(c / "meta.json") == slurp(d / "meta.json"));
}

TEST_CASE("cli: exit codes") {
    const auto dir = fresh_dir("errors");
    CHECK(cli("") == 1);
    CHECK(cli("equilibria --q1 0.5") == 1);
    CHECK(cli("equilibria --config " + kConfig1 + " --q1 0.5 --q1-range 0:1:5 --out " + dir.string()) == 1);
    const auto bad = write_config(dir, "{\n  \"geometry\": {,\n}");
    CHECK(cli("equilibria --config " + bad + " --q1 0.5 --out " + (dir / "o").string()) == 2);
    CHECK(cli("equilibria --config /nonexistent.json --q1 0.5 --out " + (dir / "o").string()) == 2);
}
