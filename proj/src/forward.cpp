#include "bdsde/forward.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "bdsde/parallel.hpp"
#include "bdsde/stats.hpp"

namespace bdsde {

ForwardEnsemble::ForwardEnsemble(TimeGrid grid, std::size_t n_paths, int dim,
                                 std::size_t start_index)
    : grid_(grid), n_paths_(n_paths), dim_(dim), start_index_(start_index) {
    if (n_paths_ == 0) throw std::invalid_argument("ForwardEnsemble: need at least one path");
    data_.assign(n_paths_ * (grid_.n_steps + 1) * dim_u(), 0.0);
    incr_.assign(n_paths_ * grid_.n_steps * dim_u(), 0.0);
}

ForwardEnsemble::NodeStats ForwardEnsemble::node_stats() const {
    NodeStats s;
    const std::size_t nodes = grid_.n_steps + 1;
    s.mean.assign(nodes * dim_u(), 0.0);
    s.variance.assign(nodes * dim_u(), 0.0);
    std::vector<double> column(n_paths_);
    for (std::size_t node = 0; node < nodes; ++node)
        for (std::size_t c = 0; c < dim_u(); ++c) {
            for (std::size_t m = 0; m < n_paths_; ++m) column[m] = state(m, node)[c];
            const auto mom = sample_moments(column);
            s.mean[node * dim_u() + c] = mom.mean;
            s.variance[node * dim_u() + c] = mom.variance;
        }
    return s;
}

PathNoise lattice_noise(std::uint64_t seed, std::uint64_t stream_base, long long shift_steps) {
    return [seed, stream_base, shift_steps](std::size_t path, const TimeGrid& grid, int dim) {
        auto arr = IncrementArray::generate(
            grid, dim, StreamKey{seed, stream_id(StreamKind::state_noise, stream_base + path)});
        return shift_steps == 0 ? arr : arr.shifted(shift_steps);
    };
}

namespace {

void step_path(const ModelSpec& model, const TimeGrid& grid, std::size_t start_index,
               std::span<const double> x0, const IncrementArray& w, std::size_t path,
               ForwardEnsemble& out) {
    const int d = model.coefficients.state_dim;
    const auto du = static_cast<std::size_t>(d);
    if (w.dim() != d && !(w.dim() == 1 && d == 1))
        throw std::invalid_argument("simulate_forward: increment dimension mismatch");
    std::vector<double> b(du), sig(du * du);
    for (std::size_t i = 0; i <= start_index; ++i) {
        auto s = out.state(path, i);
        for (std::size_t c = 0; c < du; ++c) s[c] = x0[c];
    }
    for (std::size_t i = 0; i < grid.n_steps; ++i) {
        auto stored = out.increment(path, i);
        const auto src = w.at(i);
        for (std::size_t c = 0; c < du; ++c) stored[c] = src[c];
    }
    for (std::size_t i = start_index; i < grid.n_steps; ++i) {
        const auto cur = out.state(path, i);
        auto nxt = out.state(path, i + 1);
        model.coefficients.drift(cur, b);
        model.coefficients.diffusion(cur, sig);
        const auto dw = w.at(i);
        for (std::size_t r = 0; r < du; ++r) {
            double v = cur[r] + b[r] * grid.h;
            for (std::size_t c = 0; c < du; ++c) v += sig[r * du + c] * dw[c];
            if (!std::isfinite(v))
                throw std::runtime_error("simulate_forward: non-finite state at path " +
                                         std::to_string(path) + ", step " + std::to_string(i));
            nxt[r] = v;
        }
    }
}

ForwardEnsemble simulate_impl(const ModelSpec& model, const TimeGrid& grid,
                              std::size_t start_index,
                              std::span<const std::vector<double>> starts,
                              const PathNoise& noise, int workers) {
    const int d = model.coefficients.state_dim;
    ForwardEnsemble out(grid, starts.size(), d, start_index);
    // Paths are independent and each draws its own increments, so the result
    // is identical for any worker count.
    parallel_for(starts.size(), workers, [&](std::size_t m) {
        const auto w = noise(m, grid, d);
        step_path(model, grid, start_index, starts[m], w, m, out);
    });
    return out;
}

}  // namespace

ForwardEnsemble simulate_forward_from(const ModelSpec& model, const TimeGrid& grid,
                                      std::size_t start_index,
                                      std::span<const std::vector<double>> starts,
                                      const PathNoise& noise, int workers) {
    return simulate_impl(model, grid, start_index, starts, noise, workers);
}

ForwardEnsemble simulate_forward(const ModelSpec& model, const TimeGrid& grid, double t,
                                 std::span<const double> x, const PathNoise& noise,
                                 std::size_t n_paths, int workers) {
    if (static_cast<int>(x.size()) != model.coefficients.state_dim)
        throw std::invalid_argument("simulate_forward: start point dimension mismatch");
    const std::size_t start_index = grid.index_of_time(t);
    std::vector<std::vector<double>> starts(n_paths, std::vector<double>(x.begin(), x.end()));
    return simulate_impl(model, grid, start_index, starts, noise, workers);
}

ForwardEnsemble simulate_forward_serial(const ModelSpec& model, const TimeGrid& grid, double t,
                                        std::span<const double> x, const PathNoise& noise,
                                        std::size_t n_paths) {
    return simulate_forward(model, grid, t, x, noise, n_paths, 1);
}

double check_flow_property(const ModelSpec& model, const TimeGrid& grid, double t,
                           std::span<const double> x, double T_mid, const PathNoise& noise,
                           std::size_t n_paths, int workers) {
    if (T_mid < t) throw std::invalid_argument("check_flow_property: T_mid must be >= t");
    const std::size_t mid = grid.index_of_time(T_mid);
    const auto full = simulate_forward(model, grid, t, x, noise, n_paths, workers);
    std::vector<std::vector<double>> mid_states(n_paths);
    for (std::size_t m = 0; m < n_paths; ++m) {
        const auto s = full.state(m, mid);
        mid_states[m].assign(s.begin(), s.end());
    }
    const auto restarted = simulate_forward_from(model, grid, mid, mid_states, noise, workers);
    double dev = 0.0;
    for (std::size_t m = 0; m < n_paths; ++m)
        for (std::size_t i = mid; i <= grid.n_steps; ++i) {
            const auto a = full.state(m, i);
            const auto b = restarted.state(m, i);
            for (std::size_t c = 0; c < a.size(); ++c)
                dev = std::max(dev, std::abs(a[c] - b[c]));
        }
    return dev;
}

double check_shift_property(const ModelSpec& model, double t, double horizon_length,
                            std::span<const double> x, long long r_steps, double h,
                            std::uint64_t seed, std::size_t n_paths, int workers) {
    if (r_steps < 0) throw std::invalid_argument("check_shift_property: r_steps must be >= 0");
    const double r = static_cast<double>(r_steps) * h;
    const TimeGrid grid_a = TimeGrid::from_times(t, t + horizon_length, h);
    const TimeGrid grid_b = TimeGrid::from_times(t + r, t + r + horizon_length, h);
    const auto ens_a = simulate_forward(model, grid_a, t, x, lattice_noise(seed, 0, r_steps),
                                        n_paths, workers);
    const auto ens_b =
        simulate_forward(model, grid_b, t + r, x, lattice_noise(seed), n_paths, workers);
    double dev = 0.0;
    for (std::size_t m = 0; m < n_paths; ++m)
        for (std::size_t i = 0; i <= grid_a.n_steps; ++i) {
            const auto a = ens_a.state(m, i);
            const auto b = ens_b.state(m, i);
            for (std::size_t c = 0; c < a.size(); ++c)
                dev = std::max(dev, std::abs(a[c] - b[c]));
        }
    return dev;
}

HolderEstimate holder_estimate(const ModelSpec& model, double t, std::span<const double> x,
                               double t_prime, std::span<const double> x_prime, double p,
                               double K, std::size_t n_paths, double h, std::uint64_t seed,
                               int workers) {
    if (!(K > 0)) throw std::invalid_argument("holder_estimate: K must be positive");
    const double R = std::max(10.0 / K, std::max(t, t_prime) + 1.0);
    const auto n_steps = static_cast<std::size_t>(std::ceil(R / h));
    const TimeGrid grid{h, 0, n_steps};
    const auto noise = lattice_noise(seed);
    const auto ens_a = simulate_forward(model, grid, t, x, noise, n_paths, workers);
    const auto ens_b = simulate_forward(model, grid, t_prime, x_prime, noise, n_paths, workers);

    std::vector<double> per_path(n_paths, 0.0);
    double max_integrand = 0.0;
    for (std::size_t m = 0; m < n_paths; ++m) {
        double acc = 0.0;
        for (std::size_t i = 0; i <= grid.n_steps; ++i) {
            const auto a = ens_a.state(m, i);
            const auto b = ens_b.state(m, i);
            double d2 = 0.0;
            for (std::size_t c = 0; c < a.size(); ++c) d2 += (a[c] - b[c]) * (a[c] - b[c]);
            const double integrand = std::pow(d2, p / 2.0);
            max_integrand = std::max(max_integrand, integrand);
            acc += std::exp(-K * grid.node(i)) * integrand * h;
        }
        per_path[m] = acc;
    }

    const auto mean = mean_estimate(per_path);
    HolderEstimate out;
    out.estimate = mean.value;
    out.std_error = mean.std_error;
    double dx2 = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) dx2 += (x_prime[c] - x[c]) * (x_prime[c] - x[c]);
    out.bound_seed = std::pow(dx2, p / 2.0) + std::pow(std::abs(t_prime - t), p / 2.0);
    out.tail_bound = std::exp(-K * grid.horizon()) * max_integrand;
    return out;
}

}  // namespace bdsde
