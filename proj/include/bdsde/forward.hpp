#pragma once

#include <span>
#include <vector>

#include "bdsde/grid.hpp"
#include "bdsde/model.hpp"
#include "bdsde/noise.hpp"

namespace bdsde {

/// M Euler-Maruyama sample paths of the state diffusion on a grid. States at
/// nodes before the start time are frozen at the start point.
class ForwardEnsemble {
  public:
    ForwardEnsemble(TimeGrid grid, std::size_t n_paths, int dim, std::size_t start_index);

    const TimeGrid& grid() const { return grid_; }
    std::size_t n_paths() const { return n_paths_; }
    int dim() const { return dim_; }
    std::size_t start_index() const { return start_index_; }

    std::span<double> state(std::size_t path, std::size_t node) {
        return {data_.data() + (path * (grid_.n_steps + 1) + node) * dim_u(),
                dim_u()};
    }
    std::span<const double> state(std::size_t path, std::size_t node) const {
        return {data_.data() + (path * (grid_.n_steps + 1) + node) * dim_u(),
                dim_u()};
    }

    /// W increment consumed over [node(step), node(step+1)] by one path; kept
    /// so the backward pass can correlate against the same noise.
    std::span<double> increment(std::size_t path, std::size_t step) {
        return {incr_.data() + (path * grid_.n_steps + step) * dim_u(), dim_u()};
    }
    std::span<const double> increment(std::size_t path, std::size_t step) const {
        return {incr_.data() + (path * grid_.n_steps + step) * dim_u(), dim_u()};
    }

    std::span<const double> flat() const { return data_; }

    /// Per-node mean and variance of each component.
    struct NodeStats {
        std::vector<double> mean, variance;  // (n_steps+1) x dim
    };
    NodeStats node_stats() const;

  private:
    std::size_t dim_u() const { return static_cast<std::size_t>(dim_); }

    TimeGrid grid_;
    std::size_t n_paths_;
    int dim_;
    std::size_t start_index_;
    std::vector<double> data_;  // paths x (n_steps+1) x dim
    std::vector<double> incr_;  // paths x n_steps x dim
};

/// Produces the W increments consumed by one path. Keeping this a callable
/// lets the same simulation code run on generated, shifted, or windowed
/// streams without copying them around.
using PathNoise =
    std::function<IncrementArray(std::size_t path, const TimeGrid& grid, int dim)>;

/// W streams keyed by absolute lattice step: path m draws from stream
/// (state_noise, base + m), optionally re-windowed by `shift_steps`.
PathNoise lattice_noise(std::uint64_t seed, std::uint64_t stream_base = 0,
                        long long shift_steps = 0);

/// Euler-Maruyama ensemble started at (t, x); t must be a grid node.
/// X_{i+1} = X_i + b(X_i) h + sigma(X_i) dW_i for nodes at or after t,
/// X_i = x before it.
ForwardEnsemble simulate_forward(const ModelSpec& model, const TimeGrid& grid, double t,
                                 std::span<const double> x, const PathNoise& noise,
                                 std::size_t n_paths, int workers = 1);

/// Per-path starts; used by the flow-property check and the solvers.
ForwardEnsemble simulate_forward_from(const ModelSpec& model, const TimeGrid& grid,
                                      std::size_t start_index,
                                      std::span<const std::vector<double>> starts,
                                      const PathNoise& noise, int workers = 1);

/// Serial reference for the path kernel; the parallel version must match it
/// bit for bit.
ForwardEnsemble simulate_forward_serial(const ModelSpec& model, const TimeGrid& grid, double t,
                                        std::span<const double> x, const PathNoise& noise,
                                        std::size_t n_paths);

/// Restarts every path at T_mid from its own simulated state, reusing the same
/// increments, and returns the largest deviation against the original ensemble
/// on [T_mid, end]. Zero under shared increments.
double check_flow_property(const ModelSpec& model, const TimeGrid& grid, double t,
                           std::span<const double> x, double T_mid, const PathNoise& noise,
                           std::size_t n_paths, int workers = 1);

/// Compares the shifted simulation started at (t, x) with the unshifted one
/// started at (t + r, x) on the overlap. Zero when both consume the same
/// lattice-keyed streams.
double check_shift_property(const ModelSpec& model, double t, double horizon_length,
                            std::span<const double> x, long long r_steps, double h,
                            std::uint64_t seed, std::size_t n_paths, int workers = 1);

struct HolderEstimate {
    double estimate = 0;       // E int_0^R e^{-Kr} |X'_r - X_r|^p dr
    double bound_seed = 0;     // |x'-x|^p + |t'-t|^{p/2}
    double tail_bound = 0;     // e^{-KR} * max integrand seen
    double std_error = 0;
};

/// Monte Carlo two-point regularity diagnostic with shared W increments and
/// the infinite integral truncated at R = max(10/K, grid horizon).
HolderEstimate holder_estimate(const ModelSpec& model, double t, std::span<const double> x,
                               double t_prime, std::span<const double> x_prime, double p,
                               double K, std::size_t n_paths, double h, std::uint64_t seed,
                               int workers = 1);

}  // namespace bdsde
