#include "bdsde/horizon.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "bdsde/csv.hpp"
#include "bdsde/parallel.hpp"
#include "bdsde/stats.hpp"

namespace bdsde {

NoiseSetup make_environment(std::uint64_t seed, std::uint64_t env_index, double h,
                            double env_cover_T, int env_dim) {
    // Streams are spaced so one environment's paths never collide with
    // another's; 2^24 paths per environment is far beyond desk scale.
    const std::uint64_t base = env_index << 24;
    const TimeGrid cover = TimeGrid::from_times(0.0, env_cover_T, h);
    NoiseSetup setup{seed, base, base,
                     0,
                     IncrementArray::generate(
                         cover, env_dim, StreamKey{seed, stream_id(StreamKind::env_noise,
                                                                   env_index)})};
    return setup;
}

TruncationSchedule make_schedule(const AssumptionConstants& c, double epsilon,
                                 int max_doublings) {
    if (!(epsilon > 0)) throw std::invalid_argument("make_schedule: epsilon must be positive");
    if (!(c.Kprime > c.K)) throw std::invalid_argument("make_schedule: needs K' > K");
    TruncationSchedule s;
    s.epsilon = epsilon;
    s.K = c.K;
    s.Kprime = c.Kprime;
    s.p = c.p;
    const double L0 = std::ceil(std::log(1.0 / epsilon) / (c.Kprime - c.K));
    double L = std::max(1.0, L0);
    for (int k = 0; k <= max_doublings; ++k) {
        s.horizon_list.push_back(L);
        L *= 2.0;
    }
    return s;
}

BackwardSolution solve_truncated(const ModelSpec& model, double n, double t,
                                 std::span<const double> x, const NoiseSetup& noise, double h,
                                 const SolverConfig& config) {
    if (!(n > t)) throw std::invalid_argument("solve_truncated: horizon must exceed the start");
    const TimeGrid grid = TimeGrid::from_times(t, n, h);
    const auto forward = simulate_forward(
        model, grid, t, x, lattice_noise(noise.seed, noise.w_stream_base, noise.shift_steps),
        config.paths, config.workers);
    IncrementArray bhat = noise.env.window(grid);
    if (noise.shift_steps != 0) bhat = bhat.shifted(noise.shift_steps);
    return solve_finite_horizon(
        model, grid, [](std::span<const double>) { return 0.0; }, forward, bhat, config);
}

namespace {

struct PathAccumulators {
    std::vector<double> sup, int_y, int_z;
};

PathAccumulators accumulate_gaps(const BackwardSolution& sol_n, const BackwardSolution& sol_m,
                                 double K, double p, const ForwardEnsemble& ensemble,
                                 int workers) {
    const auto& grid = sol_m.grid();
    if (!(ensemble.grid() == grid))
        throw std::invalid_argument("cauchy_distance: ensemble must live on the longer grid");
    if (sol_n.grid().h != grid.h || sol_n.grid().first_step != grid.first_step)
        throw std::invalid_argument("cauchy_distance: solutions disagree on the grid start");
    if (sol_n.grid().n_steps > grid.n_steps)
        throw std::invalid_argument("cauchy_distance: first argument must be the shorter solve");

    const std::size_t m_paths = ensemble.n_paths();
    const std::size_t last_n = sol_n.first_node() + sol_n.grid().n_steps;
    PathAccumulators acc;
    acc.sup.assign(m_paths, 0.0);
    acc.int_y.assign(m_paths, 0.0);
    acc.int_z.assign(m_paths, 0.0);

    const std::size_t d = static_cast<std::size_t>(ensemble.dim());
    const std::size_t q = sol_m.node_basis(sol_m.first_node()).size();
    // Node weights are shared by every path.
    std::vector<double> weight(grid.n_steps + 1);
    for (std::size_t node = 0; node <= grid.n_steps; ++node)
        weight[node] = std::exp(-K * grid.node(node));

    parallel_for(m_paths, workers, [&](std::size_t i) {
        thread_local std::vector<double> phi, zm, zn;
        phi.resize(q);
        zm.resize(d);
        zn.resize(d);
        double sup = 0, iy = 0, iz = 0;
        for (std::size_t node = sol_m.first_node(); node <= grid.n_steps; ++node) {
            const auto xs = ensemble.state(i, node);
            double dy = sol_m.evaluate_into(node, xs, false, phi, zm);
            if (node <= last_n) {
                dy -= sol_n.evaluate_into(node, xs, false, phi, zn);
                for (std::size_t k = 0; k < d; ++k) zm[k] -= zn[k];
            }
            const double w = weight[node];
            sup = std::max(sup, w * std::pow(std::abs(dy), p));
            iy += w * dy * dy * grid.h;
            double z2 = 0;
            for (double zk : zm) z2 += zk * zk;
            iz += w * z2 * grid.h;
        }
        acc.sup[i] = sup;
        acc.int_y[i] = iy;
        acc.int_z[i] = iz;
    });
    return acc;
}

}  // namespace

CauchyDistance cauchy_distance(const BackwardSolution& sol_n, const BackwardSolution& sol_m,
                               double K, double p, const ForwardEnsemble& ensemble,
                               int workers) {
    const auto acc = accumulate_gaps(sol_n, sol_m, K, p, ensemble, workers);
    const auto sup = mean_estimate(acc.sup);
    const auto iy = mean_estimate(acc.int_y);
    const auto iz = mean_estimate(acc.int_z);
    CauchyDistance d;
    d.sup_part = sup.value;
    d.int_y = iy.value;
    d.int_z = iz.value;
    d.sup_se = sup.std_error;
    d.int_y_se = iy.std_error;
    d.int_z_se = iz.std_error;
    const double sup_pow = sup.value > 0 ? std::pow(sup.value, 2.0 / p) : 0.0;
    d.combined = std::sqrt(sup_pow + iy.value + iz.value);
    if (d.combined > 0) {
        // Delta method through combined^2 = sup^{2/p} + int_y + int_z.
        const double dsup =
            sup.value > 0 ? (2.0 / p) * std::pow(sup.value, 2.0 / p - 1.0) * sup.std_error : 0.0;
        const double var2 = dsup * dsup + iy.std_error * iy.std_error +
                            iz.std_error * iz.std_error;
        d.combined_se = std::sqrt(var2) / (2.0 * d.combined);
    }
    return d;
}

InfiniteSolveResult solve_infinite(const ModelSpec& model, double t, std::span<const double> x,
                                   double epsilon, const NoiseSetup& noise, double h,
                                   const SolverConfig& config, int max_doublings,
                                   std::size_t eval_paths) {
    if (!check_assumptions(model.constants).gate_pass())
        throw std::invalid_argument(
            "solve_infinite: monotonicity margin condition fails; no infinite-horizon limit");
    const auto schedule = make_schedule(model.constants, epsilon, max_doublings);
    if (eval_paths == 0) eval_paths = config.paths;

    auto held_out = [&](const TimeGrid& grid) {
        return simulate_forward(
            model, grid, t, x,
            lattice_noise(noise.seed, noise.eval_stream_base + (1ull << 23), noise.shift_steps),
            eval_paths, config.workers);
    };

    InfiniteSolveResult out{solve_truncated(model, t + schedule.horizon_list.front(), t, x,
                                            noise, h, config),
                            t + schedule.horizon_list.front(),
                            {},
                            {}};
    for (std::size_t k = 1; k < schedule.horizon_list.size(); ++k) {
        const double horizon = t + schedule.horizon_list[k];
        auto next = solve_truncated(model, horizon, t, x, noise, h, config);
        const auto eval = held_out(next.grid());
        const auto gap = cauchy_distance(out.solution, next, schedule.K, schedule.p, eval,
                                         config.workers);
        out.trace.emplace_back(horizon, gap);
        if (out.trace.size() >= 2) {
            const auto& prev = out.trace[out.trace.size() - 2].second;
            if (gap.combined > prev.combined + 3.0 * (gap.combined_se + prev.combined_se)) {
                std::ostringstream msg;
                msg << "solve_infinite: truncation gaps stopped shrinking (";
                for (const auto& [n, g] : out.trace) msg << " n=" << n << " gap=" << g.combined;
                msg << " )";
                throw std::runtime_error(msg.str());
            }
        }
        out.solution = std::move(next);
        out.horizon = horizon;
        out.achieved = gap;
        if (gap.combined <= epsilon) return out;
    }
    std::ostringstream msg;
    msg << "solve_infinite: did not reach epsilon=" << epsilon << " within schedule;";
    for (const auto& [n, g] : out.trace) msg << " n=" << n << " gap=" << g.combined;
    throw std::runtime_error(msg.str());
}

std::vector<double> StationaryField::samples_at(std::size_t it, std::size_t ix) const {
    std::vector<double> out;
    out.reserve(slices.size());
    for (const auto& s : slices) out.push_back(s.values[it * x_grid.size() + ix]);
    return out;
}

void StationaryField::write_csv(const std::filesystem::path& values_path,
                                const std::filesystem::path& manifest_path) const {
    csv::Writer values(values_path, {"environment", "t", "x", "v"});
    for (const auto& s : slices)
        for (std::size_t it = 0; it < t_grid.size(); ++it)
            for (std::size_t ix = 0; ix < x_grid.size(); ++ix)
                values.row({std::to_string(s.env_index), csv::number(t_grid[it]),
                            csv::number(x_grid[ix]),
                            csv::number(s.values[it * x_grid.size() + ix])});
    csv::Writer manifest(manifest_path, {"environment", "t", "x", "horizon", "achieved_gap"});
    manifest.comment("epsilon=" + csv::number(epsilon) + " T=" + csv::number(T));
    for (const auto& s : slices)
        for (std::size_t it = 0; it < t_grid.size(); ++it)
            for (std::size_t ix = 0; ix < x_grid.size(); ++ix)
                manifest.row({std::to_string(s.env_index), csv::number(t_grid[it]),
                              csv::number(x_grid[ix]),
                              csv::number(s.horizons[it * x_grid.size() + ix]),
                              csv::number(s.distances[it * x_grid.size() + ix])});
}

FieldSlice build_stationary_field(const ModelSpec& model, double T,
                                  std::span<const double> t_grid,
                                  std::span<const double> x_grid, std::uint64_t seed,
                                  std::uint64_t env_index, double epsilon, double h,
                                  const SolverConfig& config) {
    FieldSlice slice;
    slice.env_index = env_index;
    slice.values.resize(t_grid.size() * x_grid.size());
    slice.horizons.resize(slice.values.size());
    slice.distances.resize(slice.values.size());

    // One environmental realisation: B on [0, T], reversed at T. Windowing
    // extends it past T through the same two-sided stream.
    NoiseSetup noise = make_environment(seed, env_index, h, T, model.coefficients.env_dim);
    noise.env = noise.env.reversed(T);

    for (std::size_t it = 0; it < t_grid.size(); ++it) {
        const double start = T - t_grid[it];
        for (std::size_t ix = 0; ix < x_grid.size(); ++ix) {
            const double x0[] = {x_grid[ix]};
            const auto res = solve_infinite(model, start, x0, epsilon, noise, h, config);
            const auto v = res.solution.evaluate_at_time(start, x0);
            const std::size_t flat = it * x_grid.size() + ix;
            slice.values[flat] = v.y;
            slice.horizons[flat] = res.horizon;
            slice.distances[flat] = res.achieved.combined;
        }
    }
    return slice;
}

StationaryField build_stationary_field_ensemble(const ModelSpec& model, double T,
                                                std::span<const double> t_grid,
                                                std::span<const double> x_grid,
                                                std::size_t environments, std::uint64_t seed,
                                                double epsilon, double h,
                                                const SolverConfig& config, int workers) {
    StationaryField field;
    field.T = T;
    field.t_grid.assign(t_grid.begin(), t_grid.end());
    field.x_grid.assign(x_grid.begin(), x_grid.end());
    field.epsilon = epsilon;
    field.slices.resize(environments);
    SolverConfig inner = config;
    inner.workers = 1;  // environments are the parallel axis
    parallel_for(environments, workers, [&](std::size_t e) {
        field.slices[e] = build_stationary_field(model, T, t_grid, x_grid, seed, e, epsilon, h,
                                                 inner);
    });
    return field;
}

TIndependenceReport check_T_independence(const ModelSpec& model, double t,
                                         std::span<const double> x, double T, double T_prime,
                                         std::uint64_t seed, std::uint64_t env_index,
                                         double epsilon, double h, const SolverConfig& config) {
    if (!(T_prime >= T)) throw std::invalid_argument("check_T_independence: need T' >= T");
    auto run = [&](double horizon_T) {
        NoiseSetup noise =
            make_environment(seed, env_index, h, horizon_T, model.coefficients.env_dim);
        noise.env = noise.env.reversed(horizon_T);
        const double start = horizon_T - t;
        const auto res = solve_infinite(model, start, x, epsilon, noise, h, config);
        return res.solution.evaluate_at_time(start, x).y;
    };
    TIndependenceReport rep;
    rep.v_T = run(T);
    rep.v_T_prime = run(T_prime);
    rep.deviation = std::abs(rep.v_T - rep.v_T_prime);
    rep.tolerance = 2.0 * epsilon + 2.0 * h;  // scheme allowance, reported only
    return rep;
}

}  // namespace bdsde
