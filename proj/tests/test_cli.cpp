#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "bdsde/config.hpp"
#include "bdsde/csv.hpp"

using namespace bdsde;

#ifndef BDSDE_CLI_PATH
#define BDSDE_CLI_PATH "bdsde"
#endif

namespace {

const char* kConfigText = R"json({
  "model": {"name": "linear", "a": 2.0, "mu": 1.0, "s0": 1.0},
  "constants": {"mu": 1.0, "K": 0.5, "Kprime": 0.8, "p": 4.0, "C1": 1.0},
  "grid": {"h": 0.01, "T": 0.2},
  "solver": {"paths": 128, "basis": {"kind": "polynomial", "degree": 1}},
  "environments": 8,
  "epsilon": 0.001,
  "seed": 99
})json";

std::filesystem::path write_config(const std::string& name) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream os(path);
    os << kConfigText;
    return path;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(BDSDE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config emit-then-reparse is the identity") {
    const auto path = write_config("bdsde_cfg_roundtrip.json");
    const auto cfg = ExperimentConfig::from_file(path);
    const auto again = ExperimentConfig::from_json(cfg.to_json());
    CHECK(cfg.to_json() == again.to_json());
    CHECK(cfg.hash() == again.hash());
    CHECK(cfg.seed == 99);
    CHECK(cfg.solver.paths == 128);
    CHECK(cfg.grid.h == 0.01);
}

TEST_CASE("catalog names instantiate and unknown ones are rejected") {
    auto cfg = ExperimentConfig::from_file(write_config("bdsde_cfg_catalog.json"));
    CHECK_NOTHROW(cfg.build_model());
    cfg.model_name = "ou";
    CHECK_NOTHROW(cfg.build_model());
    cfg.model_name = "cubic";
    CHECK_NOTHROW(cfg.build_model());
    cfg.model_name = "custom-polynomial";
    cfg.model_params = {{"fy", {0.5, -1.0}}};
    CHECK_NOTHROW(cfg.build_model());
    cfg.model_name = "no-such-model";
    CHECK_THROWS(cfg.build_model());
}

TEST_CASE("cubic catalog driver evaluates its polynomial") {
    ExperimentConfig cfg;
    cfg.model_name = "cubic";
    cfg.model_params = {{"a", 1.0}, {"mu", 1.0}, {"cubic", 2.0}};
    const auto model = cfg.build_model();
    const double x[] = {0.0};
    const double z[] = {0.0};
    CHECK(model.coefficients.driver(x, 0.5, z) ==
          doctest::Approx(1.0 - 0.5 - 2.0 * 0.125));
}

TEST_CASE("check subcommand reports and exits zero on a sound model") {
    const auto cfgp = write_config("bdsde_cfg_check.json");
    const auto out = std::filesystem::temp_directory_path() / "bdsde_cli_check";
    std::filesystem::remove_all(out);
    CHECK(run_cli("check --config " + cfgp.string() + " --out " + out.string()) == 0);
    CHECK(std::filesystem::exists(out / "assumptions.csv"));
    CHECK(std::filesystem::exists(out / "probes.csv"));
    CHECK(std::filesystem::exists(out / "manifest.json"));
}

TEST_CASE("missing config files are a configuration error") {
    CHECK(run_cli("check --config /nonexistent/cfg.json") == 2);
}

TEST_CASE("solve subcommand is byte-deterministic under a fixed seed") {
    const auto cfgp = write_config("bdsde_cfg_solve.json");
    const auto out_a = std::filesystem::temp_directory_path() / "bdsde_cli_solve_a";
    const auto out_b = std::filesystem::temp_directory_path() / "bdsde_cli_solve_b";
    std::filesystem::remove_all(out_a);
    std::filesystem::remove_all(out_b);
    REQUIRE(run_cli("solve --config " + cfgp.string() + " --out " + out_a.string()) == 0);
    REQUIRE(run_cli("solve --config " + cfgp.string() + " --out " + out_b.string()) == 0);
    CHECK(slurp(out_a / "solution_values.csv") == slurp(out_b / "solution_values.csv"));
    CHECK(slurp(out_a / "solution_coefficients.csv") ==
          slurp(out_b / "solution_coefficients.csv"));
    CHECK_FALSE(slurp(out_a / "solution_values.csv").empty());
}

TEST_CASE("seed flag changes the outputs") {
    const auto cfgp = write_config("bdsde_cfg_seed.json");
    const auto out_a = std::filesystem::temp_directory_path() / "bdsde_cli_seed_a";
    const auto out_b = std::filesystem::temp_directory_path() / "bdsde_cli_seed_b";
    std::filesystem::remove_all(out_a);
    std::filesystem::remove_all(out_b);
    REQUIRE(run_cli("solve --config " + cfgp.string() + " --out " + out_a.string()) == 0);
    REQUIRE(run_cli("solve --config " + cfgp.string() + " --seed 7 --out " + out_b.string()) ==
            0);
    CHECK(slurp(out_a / "solution_values.csv") != slurp(out_b / "solution_values.csv"));
}
