#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>

#include "bdsde/backward.hpp"

namespace bdsde {

/// Every numeric default in one place; the config schema document mirrors
/// this table.
namespace defaults {
inline constexpr double h = 1e-2;
inline constexpr std::size_t paths = 10000;
inline constexpr std::size_t environments = 200;
inline constexpr double epsilon = 1e-3;
inline constexpr double svd_tolerance = 1e-10;
inline constexpr double truncation_bound = 1e6;
inline constexpr double horizon = 1.0;
inline constexpr int basis_degree = 1;
inline constexpr std::size_t probe_samples = 20000;
}  // namespace defaults

struct GridConfig {
    double h = defaults::h;
    double T = defaults::horizon;
};

/// Structural constants used when a config document leaves them out.
inline AssumptionConstants default_constants() {
    AssumptionConstants c;
    c.mu = 1;
    c.K = 0.5;
    c.Kprime = 0.8;
    c.p = 4;
    c.C1 = 1;
    return c;
}

/// Parsed experiment configuration; `to_json` emits a canonical document so
/// emit-then-reparse is the identity and the run manifest can hash it.
struct ExperimentConfig {
    std::string model_name = "linear";
    nlohmann::json model_params = nlohmann::json::object();
    AssumptionConstants constants = default_constants();
    GridConfig grid;
    SolverConfig solver;
    std::size_t environments = defaults::environments;
    double epsilon = defaults::epsilon;
    std::uint64_t seed = 1;
    std::filesystem::path out_dir;
    int workers = 0;
    nlohmann::json subcommand_options = nlohmann::json::object();

    static ExperimentConfig from_json(const nlohmann::json& doc);
    static ExperimentConfig from_file(const std::filesystem::path& path);
    nlohmann::json to_json() const;
    std::uint64_t hash() const;

    /// Instantiate the catalog entry named by `model_name` with `model_params`.
    ModelSpec build_model() const;
};

/// Reproducibility record written next to a subcommand's outputs.
class RunManifest {
  public:
    RunManifest(const ExperimentConfig& config, std::string subcommand);

    void stage_done(const std::string& stage, double seconds);
    void add_output(const std::filesystem::path& file);
    void write(const std::filesystem::path& path) const;

  private:
    nlohmann::json doc_;
};

}  // namespace bdsde
