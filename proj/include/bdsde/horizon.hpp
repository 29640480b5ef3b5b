#pragma once

#include <filesystem>
#include <optional>

#include "bdsde/backward.hpp"

namespace bdsde {

/// Noise plumbing for one infinite-horizon solve: which W streams the paths
/// draw from, an optional re-windowing offset (the discrete shift), and the
/// environmental increment process to window onto each truncation grid.
struct NoiseSetup {
    std::uint64_t seed = 0;
    std::uint64_t w_stream_base = 0;
    std::uint64_t eval_stream_base = 0;
    long long shift_steps = 0;
    IncrementArray env;
};

/// W/Bhat/evaluation streams for one environment, keyed by the absolute
/// lattice so shifted and unshifted runs consume identical values.
NoiseSetup make_environment(std::uint64_t seed, std::uint64_t env_index, double h,
                            double env_cover_T, int env_dim);

struct TruncationSchedule {
    std::vector<double> horizon_list;  // increasing solve lengths from the start time
    double epsilon = 1e-3;
    double K = 0, Kprime = 0, p = 0;
};

/// Horizon doubling schedule seeded by the weighted-norm decay rate:
/// L0 = ceil(log(1/eps) / (K' - K)), then L0, 2 L0, 4 L0, ...
TruncationSchedule make_schedule(const AssumptionConstants& c, double epsilon,
                                 int max_doublings = 8);

/// Zero-terminal solve on [t, n]; values past n are identically (0, 0).
BackwardSolution solve_truncated(const ModelSpec& model, double n, double t,
                                 std::span<const double> x, const NoiseSetup& noise, double h,
                                 const SolverConfig& config);

struct CauchyDistance {
    double sup_part = 0;  // E sup_t e^{-Kt} |Y^m - Y^n|^p
    double int_y = 0;     // E int e^{-Kt} |Y^m - Y^n|^2 dt
    double int_z = 0;     // E int e^{-Kt} |Z^m - Z^n|^2 dt
    double sup_se = 0, int_y_se = 0, int_z_se = 0;
    double combined = 0;  // ((sup)^{2/p} + int_y + int_z)^{1/2}
    double combined_se = 0;
};

/// Monte Carlo distance between two truncations in the weighted solution norm,
/// with the shorter solution extended by zero past its horizon.
CauchyDistance cauchy_distance(const BackwardSolution& sol_n, const BackwardSolution& sol_m,
                               double K, double p, const ForwardEnsemble& ensemble,
                               int workers = 1);

struct InfiniteSolveResult {
    BackwardSolution solution;
    double horizon = 0;  // terminal time of the converged truncation
    CauchyDistance achieved;
    std::vector<std::pair<double, CauchyDistance>> trace;  // (horizon, gap) per doubling
};

/// Doubles the truncation horizon until consecutive solves are within epsilon
/// in the weighted norm. Throws (with the distance trace in the message) when
/// the schedule is exhausted, and aborts if the gaps stop shrinking beyond
/// three standard errors.
InfiniteSolveResult solve_infinite(const ModelSpec& model, double t, std::span<const double> x,
                                   double epsilon, const NoiseSetup& noise, double h,
                                   const SolverConfig& config, int max_doublings = 8,
                                   std::size_t eval_paths = 0);

/// Stationary-field samples for one environment: v(t, x) solved at start
/// (T - t, x) from the reversed environmental path.
struct FieldSlice {
    std::uint64_t env_index = 0;
    std::vector<double> values;      // t-major: values[it * nx + ix]
    std::vector<double> horizons;    // converged horizon per (t, x)
    std::vector<double> distances;   // achieved combined gap per (t, x)
};

struct StationaryField {
    double T = 0;
    std::vector<double> t_grid, x_grid;  // x_grid holds 1-d points
    double epsilon = 0;
    std::vector<FieldSlice> slices;

    std::vector<double> samples_at(std::size_t it, std::size_t ix) const;
    void write_csv(const std::filesystem::path& values_path,
                   const std::filesystem::path& manifest_path) const;
};

FieldSlice build_stationary_field(const ModelSpec& model, double T,
                                  std::span<const double> t_grid,
                                  std::span<const double> x_grid, std::uint64_t seed,
                                  std::uint64_t env_index, double epsilon, double h,
                                  const SolverConfig& config);

/// Independent environments solved concurrently (worker count from `workers`;
/// per-environment solves run serially inside).
StationaryField build_stationary_field_ensemble(const ModelSpec& model, double T,
                                                std::span<const double> t_grid,
                                                std::span<const double> x_grid,
                                                std::size_t environments, std::uint64_t seed,
                                                double epsilon, double h,
                                                const SolverConfig& config, int workers = 1);

struct TIndependenceReport {
    double v_T = 0;
    double v_T_prime = 0;
    double deviation = 0;
    double tolerance = 0;  // reported, not asserted
};

/// v built from reversals of the same two-sided B stream at T and T' > T;
/// the deviation is reported against a combined scheme/regression tolerance.
TIndependenceReport check_T_independence(const ModelSpec& model, double t,
                                         std::span<const double> x, double T, double T_prime,
                                         std::uint64_t seed, std::uint64_t env_index,
                                         double epsilon, double h, const SolverConfig& config);

}  // namespace bdsde
