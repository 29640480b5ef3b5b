#include "bdsde/stationarity.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace bdsde {

ShiftTestReport crude_stationarity_check(const ModelSpec& model, double t, long long r_steps,
                                         std::span<const double> x, std::uint64_t seed,
                                         std::uint64_t env_index, double epsilon, double h,
                                         const SolverConfig& config,
                                         double calibrated_scheme_error,
                                         std::optional<std::uint64_t> misaligned_env) {
    if (r_steps < 0)
        throw std::invalid_argument("crude_stationarity_check: r_steps must be >= 0");
    const double r = static_cast<double>(r_steps) * h;

    // Run A: start (t, x), every stream re-windowed forward by r steps.
    NoiseSetup shifted = make_environment(seed, env_index, h, std::max(t + r, h),
                                          model.coefficients.env_dim);
    shifted.shift_steps = r_steps;
    const auto run_a = solve_infinite(model, t, x, epsilon, shifted, h, config);
    const double value_a = run_a.solution.evaluate_at_time(t, x).y;

    // Run B: start (t + r, x), unshifted streams (optionally mis-seeded as a
    // negative control).
    NoiseSetup plain = make_environment(seed, misaligned_env.value_or(env_index), h,
                                        std::max(t + r, h), model.coefficients.env_dim);
    if (misaligned_env) plain.w_stream_base += 1ull << 22;
    const auto run_b = solve_infinite(model, t + r, x, epsilon, plain, h, config);
    const double value_b = run_b.solution.evaluate_at_time(t + r, x).y;

    ShiftTestReport rep;
    rep.t = t;
    rep.r = r;
    rep.x.assign(x.begin(), x.end());
    rep.value_shifted = value_a;
    rep.value_unshifted = value_b;
    rep.deviation = std::abs(value_a - value_b);
    rep.tolerance = 2.0 * epsilon + calibrated_scheme_error;
    rep.pass = rep.deviation <= rep.tolerance;
    return rep;
}

double calibrate_shift_tolerance(const ModelSpec& model, double t, long long r_steps,
                                 std::span<const double> x, std::uint64_t seed_base,
                                 std::size_t repeats, double epsilon, double h,
                                 const SolverConfig& config) {
    double worst = 0.0;
    for (std::size_t rep = 0; rep < repeats; ++rep) {
        const auto report = crude_stationarity_check(model, t, r_steps, x, seed_base + rep,
                                                     rep, epsilon, h, config);
        worst = std::max(worst, report.deviation);
    }
    return 2.0 * worst;
}

DistributionTest distribution_test(std::span<const double> a, std::span<const double> b) {
    DistributionTest out;
    out.n_a = a.size();
    out.n_b = b.size();
    const auto ks = ks_two_sample(a, b);
    out.statistic = ks.statistic;
    out.p_value = ks.p_value;
    const auto ma = sample_moments(a);
    const auto mb = sample_moments(b);
    out.mean_diff = ma.mean - mb.mean;
    out.variance_diff = ma.variance - mb.variance;
    out.skewness_diff = ma.skewness - mb.skewness;
    out.kurtosis_diff = ma.kurtosis - mb.kurtosis;
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    out.mean_se = std::sqrt(ma.variance / na + mb.variance / nb);
    out.variance_se = std::sqrt(2.0 * ma.variance * ma.variance / (na - 1.0) +
                                2.0 * mb.variance * mb.variance / (nb - 1.0));
    const bool ks_ok = out.p_value > 0.01;
    // Degenerate (near point-mass) slices have vanishing standard errors;
    // compare the moments on an absolute floor in that case.
    const bool mean_ok = std::abs(out.mean_diff) <= 3.0 * out.mean_se + 1e-12;
    const bool var_ok = std::abs(out.variance_diff) <= 3.0 * out.variance_se + 1e-12;
    out.pass = ks_ok && mean_ok && var_ok;
    return out;
}

DistributionTest law_stationarity_test(const StationaryField& field, std::size_t it_a,
                                       std::size_t it_b, std::size_t ix) {
    if (field.slices.size() < 200)
        throw std::invalid_argument(
            "law_stationarity_test: need at least 200 independent environments");
    const auto a = field.samples_at(it_a, ix);
    const auto b = field.samples_at(it_b, ix);
    return distribution_test(a, b);
}

TouchCheckReport viscosity_touch_check(std::span<const double> v_slice, const FlowGrid& flow,
                                       const ModelSpec& model, const TestFunction& phi,
                                       double tol, double touch_tol) {
    const auto& grid = flow.time();
    const std::size_t nt = grid.n_steps + 1;
    const std::size_t nx = flow.x_points().size();
    if (v_slice.size() != nt * nx)
        throw std::invalid_argument("viscosity_touch_check: slice does not match the flow grid");

    // psi = lambda(t, x, phi(t, x)); locate the grid maximiser of v - psi,
    // preferring interior points when the maximum is tied.
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_it = 0, best_ix = 0;
    bool best_interior = false;
    for (std::size_t it = 0; it < nt; ++it)
        for (std::size_t ix = 0; ix < nx; ++ix) {
            const double tv = grid.node(it);
            const double xv = flow.x_points()[ix];
            const double gap = v_slice[it * nx + ix] - flow.value_at(it, ix, phi.value(tv, xv));
            const bool interior = it > 0 && it + 1 < nt && ix > 0 && ix + 1 < nx;
            if (gap > best + 1e-15 || (gap > best - 1e-15 && interior && !best_interior)) {
                best = gap;
                best_it = it;
                best_ix = ix;
                best_interior = interior;
            }
        }

    TouchCheckReport rep;
    rep.max_gap = best;
    rep.tau = grid.node(best_it);
    rep.xi = flow.x_points()[best_ix];
    rep.tol = tol;
    if (!best_interior) {
        rep.inconclusive = true;
        return rep;
    }
    rep.touched = std::abs(best) <= touch_tol;

    const double phi_v = phi.value(rep.tau, rep.xi);
    const double phi_t = phi.dt(rep.tau, rep.xi);
    const double phi_x = phi.dx(rep.tau, rep.xi);
    const double phi_xx = phi.dxx(rep.tau, rep.xi);
    const auto d = flow.derivatives_at(best_it, best_ix, phi_v);

    // Chain rule through the flow: psi(t,x) = lambda(t, x, phi(t,x)).
    const double psi = flow.value_at(best_it, best_ix, phi_v);
    const double psi_x = d.d_x + d.d_y * phi_x;
    const double psi_xx =
        d.d_xx + 2.0 * d.d_xy * phi_x + d.d_yy * phi_x * phi_x + d.d_y * phi_xx;

    const double xv[] = {rep.xi};
    std::vector<double> bvec(1), svec(1);
    model.coefficients.drift(xv, bvec);
    model.coefficients.diffusion(xv, svec);
    const double generator = 0.5 * svec[0] * svec[0] * psi_xx + bvec[0] * psi_x;
    const double z_arg[] = {svec[0] * psi_x};
    rep.lhs = generator + model.coefficients.driver(xv, psi, z_arg);
    rep.rhs = d.d_y * phi_t;
    rep.subsolution_ok = rep.lhs >= rep.rhs - tol;
    return rep;
}

}  // namespace bdsde
