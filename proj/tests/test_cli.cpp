#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "frisk/config.hpp"
#include "frisk/error.hpp"

using namespace frisk;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) {
        path = fs::temp_directory_path() / name;
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

json base_config(const fs::path& dir) {
    json j;
    j["seed"] = 42;
    j["out_dir"] = (dir / "out").string();
    j["inputs"] = json::array({json{{"kind", "uniform"}, {"lo", 0.0}, {"hi", 1.0}},
                               json{{"kind", "uniform"}, {"lo", 0.0}, {"hi", 1.0}}});
    j["a_bounds"] = json::array({0.0, 2.0});
    j["threshold"] = 1.2;
    j["dataset"] = (dir / "out" / "design.csv").string();
    j["design"] = json{{"n", 40}, {"scheme", "LHS"}};
    j["model"] = json{{"b0", 0.0}, {"b1", 1.0}, {"c", json::array({1.0, 0.5})}};
    j["frc"] = json{{"a_grid", json{{"count", 7}}}, {"n", 400}, {"m", 40}, {"n_clt", 500},
                    {"sim_budget", 700}};
    j["sobol"] = json{{"flavor", "pointwise"}, {"n_pf", 400}, {"B", 100}, {"a", 1.0}};
    j["pli"] = json{{"inputs", json::array({0})}, {"a", 1.0}, {"n", 2000}};
    return j;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(FRISK_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string write_config(const TempDir& dir, const json& j, const char* name = "config.json") {
    const fs::path p = dir.path / name;
    std::ofstream f(p);
    f << j.dump(2);
    return p.string();
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

} // namespace

TEST_CASE("config validation") {
    json j = base_config(TempDir("frisk_cfg_probe").path);

    SUBCASE("round trip of a valid config") {
        const RunConfig cfg = parse_config(j);
        CHECK(cfg.seed == 42);
        CHECK(cfg.input.dim() == 2);
        CHECK(cfg.a_grid.size() == 7);
        CHECK(cfg.frc_options.n == 400);
        CHECK(cfg.resolved.contains("gp"));
        CHECK(cfg.resolved["frc"]["m"] == 40);
        // defaults materialized
        CHECK(cfg.resolved["gp"]["multistarts"] == 10);
        CHECK(cfg.resolved["sobol"]["p"] == 0.9);
    }
    SUBCASE("unknown keys are rejected with the key name") {
        j["frc"]["bogus"] = 1;
        CHECK_THROWS_WITH_AS(parse_config(j), doctest::Contains("bogus"), ConfigError);
    }
    SUBCASE("missing required keys") {
        j.erase("inputs");
        CHECK_THROWS_AS(parse_config(j), ConfigError);
    }
    SUBCASE("bad marginal") {
        j["inputs"][0] = json{{"kind", "uniform"}, {"lo", 1.0}, {"hi", 0.0}};
        CHECK_THROWS_AS(parse_config(j), ConfigError);
    }
    SUBCASE("pli default deltas for uniform inputs follow the range fractions") {
        const RunConfig cfg = parse_config(j);
        REQUIRE(cfg.pli_deltas.size() == 9);
        CHECK(cfg.pli_deltas.front() == doctest::Approx(0.1));
        CHECK(cfg.pli_deltas[4] == doctest::Approx(0.5));
        CHECK(cfg.pli_deltas.back() == doctest::Approx(0.9));
    }
    SUBCASE("gaussian inputs need an explicit pli delta grid") {
        j["inputs"][0] = json{{"kind", "gaussian"}, {"mu", 0.0}, {"sigma", 1.0}};
        j["pli"]["inputs"] = json::array({0});
        CHECK_THROWS_AS(parse_config(j), ConfigError);
        j["pli"]["delta_grid"] = json::array({-0.5, 0.5});
        CHECK_NOTHROW(parse_config(j));
    }
    SUBCASE("stage seeds are distinct and deterministic") {
        const RunConfig cfg = parse_config(j);
        CHECK(cfg.stage_seed("design") != cfg.stage_seed("fit"));
        CHECK(cfg.stage_seed("design") == cfg.stage_seed("design"));
    }
}

TEST_CASE("cli pipeline runs end to end with usable artifacts") {
    TempDir dir("frisk_cli_pipeline");
    const std::string cfg = write_config(dir, base_config(dir.path));

    CHECK(run_cli("-c " + cfg + " simulate-design") == 0);
    CHECK(fs::exists(dir.path / "out" / "design.csv"));
    CHECK(fs::exists(dir.path / "out" / "design.csv.meta.json"));
    CHECK(fs::exists(dir.path / "out" / "resolved_config.json"));

    CHECK(run_cli("-c " + cfg + " fit-gp") == 0);
    CHECK(fs::exists(dir.path / "out" / "gp.json"));

    CHECK(run_cli("-c " + cfg + " curve") == 0);
    CHECK(fs::exists(dir.path / "out" / "curve.csv"));
    {
        const std::string csv = slurp(dir.path / "out" / "curve.csv");
        CHECK(csv.find("a,estimate") == 0);
        CHECK(csv.find("total_lo90") != std::string::npos);
        CHECK(csv.find("\r") == std::string::npos); // LF only
    }

    CHECK(run_cli("-c " + cfg + " berens") == 0);
    CHECK(fs::exists(dir.path / "out" / "berens.csv"));

    CHECK(run_cli("-c " + cfg + " sobol") == 0);
    CHECK(fs::exists(dir.path / "out" / "sobol.csv"));

    CHECK(run_cli("-c " + cfg + " pli") == 0);
    const std::string pli = slurp(dir.path / "out" / "pli.csv");
    CHECK(pli.find("input,delta,a,S,ci_low,ci_high,n_eff") == 0);

    // closed-form oracles need gaussian marginals
    json oracle_cfg = base_config(dir.path);
    oracle_cfg["inputs"] = json::array({json{{"kind", "gaussian"}, {"mu", 0.0}, {"sigma", 1.0}},
                                        json{{"kind", "gaussian"}, {"mu", 0.0}, {"sigma", 1.0}}});
    oracle_cfg["pli"] = json{{"inputs", json::array({0})},
                             {"a", 1.0},
                             {"n", 2000},
                             {"delta_grid", json::array({-0.5, 0.5})}};
    CHECK(run_cli("-c " + write_config(dir, oracle_cfg, "oracle.json.cfg") + " oracle") == 0);
    const json records = json::parse(slurp(dir.path / "out" / "oracle.json"));
    CHECK(records.is_array());
    CHECK(records.size() > 0);
    CHECK(records[0].contains("quantity"));
    CHECK(records[0].contains("value"));
    CHECK(records[0].contains("method"));

    // metadata sidecar carries the resolved settings and the seed
    const json meta = json::parse(slurp(dir.path / "out" / "curve.csv.meta.json"));
    CHECK(meta["command"] == "curve");
    CHECK(meta["seed"] == 42);
    CHECK(meta["settings"]["frc"]["n"] == 400);
    CHECK(meta.contains("wall_time_s"));
}

TEST_CASE("cli determinism: same config and seed give byte-identical csv outputs") {
    TempDir dir("frisk_cli_determinism");
    json j = base_config(dir.path);

    auto run_pipeline = [&](const std::string& out, int threads) {
        json jj = j;
        jj["out_dir"] = (dir.path / out).string();
        jj["dataset"] = (dir.path / out / "design.csv").string();
        jj["threads"] = threads;
        const std::string cfg = write_config(dir, jj, (out + ".json").c_str());
        REQUIRE(run_cli("-c " + cfg + " simulate-design") == 0);
        REQUIRE(run_cli("-c " + cfg + " fit-gp") == 0);
        REQUIRE(run_cli("-c " + cfg + " curve") == 0);
        REQUIRE(run_cli("-c " + cfg + " sobol") == 0);
        REQUIRE(run_cli("-c " + cfg + " pli") == 0);
    };
    run_pipeline("r1", 1);
    run_pipeline("r2", 1);
    run_pipeline("r4", 4);

    for (const char* f : {"design.csv", "gp.json", "curve.csv", "sobol.csv", "pli.csv"}) {
        CAPTURE(f);
        const std::string a = slurp(dir.path / "r1" / f);
        CHECK(a == slurp(dir.path / "r2" / f));
        CHECK(a == slurp(dir.path / "r4" / f));
        CHECK_FALSE(a.empty());
    }
}

TEST_CASE("cli exit codes") {
    TempDir dir("frisk_cli_errors");
    json j = base_config(dir.path);

    SUBCASE("unknown config key -> 2") {
        j["design"]["typo"] = 1;
        CHECK(run_cli("-c " + write_config(dir, j) + " simulate-design") == 2);
    }
    SUBCASE("missing dataset -> 2") {
        j["dataset"] = (dir.path / "nope.csv").string();
        CHECK(run_cli("-c " + write_config(dir, j) + " fit-gp") == 2);
    }
    SUBCASE("missing config file -> 2") {
        CHECK(run_cli("-c " + (dir.path / "absent.json").string() + " curve") == 2);
    }
    SUBCASE("degenerate statistics -> 4") {
        // pointwise indices far outside the transition region
        j["sobol"] = json{{"flavor", "pointwise"}, {"n_pf", 300}, {"B", 100}, {"a", 2.0}};
        j["threshold"] = -1e9;
        const std::string cfg = write_config(dir, j);
        REQUIRE(run_cli("-c " + cfg + " simulate-design") == 0);
        REQUIRE(run_cli("-c " + cfg + " fit-gp") == 0);
        CHECK(run_cli("-c " + cfg + " sobol") == 4);
    }
    SUBCASE("flag overrides beat the file") {
        const std::string cfg = write_config(dir, j);
        REQUIRE(run_cli("-c " + cfg + " simulate-design") == 0);
        REQUIRE(run_cli("-c " + cfg + " --seed 7 fit-gp") == 0);
        const json meta =
            json::parse(slurp(dir.path / "out" / "gp.json.meta.json"));
        CHECK(meta["seed"] == 7);
    }
}
