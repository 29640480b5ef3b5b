#include "bdsde/backward.hpp"

#include <cmath>
#include <stdexcept>

#include "bdsde/csv.hpp"
#include "bdsde/parallel.hpp"
#include "bdsde/stats.hpp"

namespace bdsde {

BackwardSolution::Value BackwardSolution::evaluate(std::size_t node, std::span<const double> x,
                                                   bool clamp) const {
    const auto& basis = node_basis(node);
    const auto& fit = node_fit(node);
    std::vector<double> phi(basis.size());
    Value v;
    v.extrapolated = basis.eval(x, phi, clamp);
    double y = 0;
    for (std::size_t j = 0; j < phi.size(); ++j) y += fit.y_coef[j] * phi[j];
    v.y = y;
    v.z.assign(fit.z_coef.size(), 0.0);
    for (std::size_t k = 0; k < fit.z_coef.size(); ++k) {
        double zk = 0;
        for (std::size_t j = 0; j < phi.size(); ++j) zk += fit.z_coef[k][j] * phi[j];
        v.z[k] = zk;
    }
    if (!std::isfinite(v.y))
        throw std::runtime_error("BackwardSolution: non-finite value at node " +
                                 std::to_string(node));
    return v;
}

BackwardSolution::Value BackwardSolution::evaluate_at_time(double t,
                                                           std::span<const double> x) const {
    return evaluate(grid_.index_of_time(t), x);
}

double BackwardSolution::evaluate_into(std::size_t node, std::span<const double> x, bool clamp,
                                       std::span<double> phi_scratch,
                                       std::span<double> z_out) const {
    const auto& basis = node_basis(node);
    const auto& fit = node_fit(node);
    basis.eval(x, phi_scratch, clamp);
    double y = 0;
    for (std::size_t j = 0; j < phi_scratch.size(); ++j) y += fit.y_coef[j] * phi_scratch[j];
    for (std::size_t k = 0; k < z_out.size(); ++k) {
        double zk = 0;
        for (std::size_t j = 0; j < phi_scratch.size(); ++j)
            zk += fit.z_coef[k][j] * phi_scratch[j];
        z_out[k] = zk;
    }
    return y;
}

void BackwardSolution::write_csv(const std::filesystem::path& path) const {
    csv::Writer w(path, {"node", "time", "kind", "component", "basis_index", "coefficient"});
    w.comment("first_node=" + std::to_string(first_node_) +
              " n_steps=" + std::to_string(grid_.n_steps) + " h=" + csv::number(grid_.h) +
              " truncation_events=" + std::to_string(truncation_events_));
    for (std::size_t node = first_node_; node <= last_node(); ++node) {
        const auto& fit = node_fit(node);
        for (std::size_t j = 0; j < fit.y_coef.size(); ++j)
            w.row({std::to_string(node), csv::number(grid_.node(node)), "y", "0",
                   std::to_string(j), csv::number(fit.y_coef[j])});
        for (std::size_t k = 0; k < fit.z_coef.size(); ++k)
            for (std::size_t j = 0; j < fit.z_coef[k].size(); ++j)
                w.row({std::to_string(node), csv::number(grid_.node(node)), "z",
                       std::to_string(k), std::to_string(j), csv::number(fit.z_coef[k][j])});
    }
}

BackwardSolution solve_finite_horizon(const ModelSpec& model, const TimeGrid& grid,
                                      const TerminalFn& terminal,
                                      const ForwardEnsemble& forward,
                                      const IncrementArray& bhat, const SolverConfig& config) {
    model.validate_structure();
    if (!(forward.grid() == grid))
        throw std::invalid_argument("solve_finite_horizon: ensemble grid mismatch");
    if (!(bhat.grid() == grid))
        throw std::invalid_argument("solve_finite_horizon: environmental grid mismatch");
    if (bhat.dim() != model.coefficients.env_dim)
        throw std::invalid_argument("solve_finite_horizon: environmental dimension mismatch");
    if (forward.n_paths() != config.paths)
        throw std::invalid_argument("solve_finite_horizon: ensemble size != config.paths");
    if (!config.override_assumptions && !check_assumptions(model.constants).gate_pass())
        throw std::invalid_argument(
            "solve_finite_horizon: monotonicity margin condition fails (override to proceed)");

    const std::size_t m = forward.n_paths();
    const std::size_t n = grid.n_steps;
    const std::size_t first = forward.start_index();
    const auto d = static_cast<std::size_t>(model.coefficients.state_dim);
    const auto l = static_cast<std::size_t>(model.coefficients.env_dim);
    const double h = grid.h;
    const auto& coeff = model.coefficients;
    // Per-path node loops are light; below a few thousand paths the OpenMP
    // fork/join overhead outweighs the work.
    const int node_workers = m >= 4096 ? config.workers : 1;

    BackwardSolution sol(grid, first, bhat);
    sol.fits_.resize(n - first + 1);
    sol.bases_.reserve(n - first + 1);
    for (std::size_t node = first; node <= n; ++node)
        sol.bases_.push_back(NormalizedBasis::fit(config.basis, forward, node));
    const std::size_t q = sol.bases_.front().size();
    if (m < q) throw std::invalid_argument("solve_finite_horizon: fewer paths than basis size");
    if (m < 10 * q) {
        if (!config.allow_design_deficit)
            throw std::invalid_argument(
                "solve_finite_horizon: paths < 10 x basis size; set allow_design_deficit");
        sol.warnings_.push_back("design adequacy heuristic waived: paths < 10 x basis size");
    }

    // Pathwise (Y, Z) at the node right of the one being fitted, Z in
    // path-major layout so driver calls take a span without copying. At the
    // terminal node Y is the terminal condition itself, not its projection,
    // and Z beyond the horizon is taken as zero.
    std::vector<double> y_next(m);
    std::vector<double> z_next(m * d, 0.0);
    parallel_for(m, node_workers, [&](std::size_t i) {
        const double v = terminal(forward.state(i, n));
        if (!std::isfinite(v))
            throw std::runtime_error("solve_finite_horizon: non-finite terminal value at path " +
                                     std::to_string(i));
        y_next[i] = v;
    });

    {
        RegressionFactor factor(assemble_design(sol.bases_.back(), forward, n, node_workers),
                                config.svd_tolerance);
        auto res = factor.solve(y_next);
        auto& fit = sol.fits_.back();
        fit.y_coef = std::move(res.coefficients);
        fit.z_coef.assign(d, std::vector<double>(q, 0.0));
        fit.residual_variance = res.residual_variance;
        fit.condition = res.condition;
    }

    std::vector<double> responses(m), z_resp(m);
    std::vector<std::vector<double>> g_resp(l, std::vector<double>(m));
    std::vector<double> y_cur(m);
    std::vector<double> z_cur(m * d);

    for (std::size_t node = n; node-- > first;) {
        const auto& basis = sol.bases_[node - first];
        auto& fit = sol.fits_[node - first];
        RegressionFactor factor(assemble_design(basis, forward, node, node_workers),
                                config.svd_tolerance);

        // Plain conditional mean of Y_{i+1}; its fitted values centre the Z
        // responses (exact zero-mean control variate).
        const auto y_plain = factor.solve(y_next);
        const Eigen::VectorXd y_plain_fit = factor.fitted(y_plain.coefficients);

        fit.z_coef.resize(d);
        for (std::size_t k = 0; k < d; ++k) {
            parallel_for(m, node_workers, [&](std::size_t i) {
                // Z_i = (1/h) E_i[(Y_{i+1} - E_i Y_{i+1}) dW_i]; the centring
                // has zero conditional mean and kills the O(|Y|^2/h) variance.
                const double centred = y_next[i] - y_plain_fit(static_cast<Eigen::Index>(i));
                z_resp[i] = centred * forward.increment(i, node)[k] / h;
            });
            fit.z_coef[k] = factor.solve(z_resp).coefficients;
            const Eigen::VectorXd zfit = factor.fitted(fit.z_coef[k]);
            for (std::size_t i = 0; i < m; ++i) z_cur[i * d + k] = zfit(static_cast<Eigen::Index>(i));
        }

        // Right-endpoint responses for Y and for each component of g.
        parallel_for(m, node_workers, [&](std::size_t i) {
            thread_local std::vector<double> gv;
            gv.resize(l);
            const auto x_next = forward.state(i, node + 1);
            const double fv =
                coeff.driver(x_next, y_next[i], std::span<const double>(&z_next[i * d], d));
            if (!std::isfinite(fv))
                throw std::runtime_error("solve_finite_horizon: non-finite driver value");
            responses[i] = y_next[i] + h * fv;
            coeff.env_coeff(x_next, y_next[i], gv);
            for (std::size_t j = 0; j < l; ++j) {
                if (!std::isfinite(gv[j]))
                    throw std::runtime_error(
                        "solve_finite_horizon: non-finite environmental coefficient");
                g_resp[j][i] = gv[j];
            }
        });

        auto u_res = factor.solve(responses);
        fit.residual_variance = u_res.residual_variance;
        fit.condition = u_res.condition;

        // The increment dBhat_i multiplies the regressed conditional mean of g;
        // both fits live in the same span, so the combination stays exact at
        // the coefficient level.
        std::vector<std::vector<double>> g_coef(l);
        for (std::size_t j = 0; j < l; ++j) g_coef[j] = factor.solve(g_resp[j]).coefficients;
        const auto db = bhat.at(node);
        fit.y_coef = std::move(u_res.coefficients);
        for (std::size_t j = 0; j < l; ++j)
            for (std::size_t c = 0; c < q; ++c) fit.y_coef[c] -= db[j] * g_coef[j][c];

        // Optional fixed-point refinements with f at the left endpoint.
        for (int it = 0; it < config.implicit_iterations; ++it) {
            const Eigen::VectorXd y_fit = factor.fitted(fit.y_coef);
            std::vector<Eigen::VectorXd> g_fit(l);
            for (std::size_t j = 0; j < l; ++j) g_fit[j] = factor.fitted(g_coef[j]);
            parallel_for(m, node_workers, [&](std::size_t i) {
                const auto ii = static_cast<Eigen::Index>(i);
                double r = y_plain_fit(ii) +
                           h * coeff.driver(forward.state(i, node), y_fit(ii),
                                            std::span<const double>(&z_cur[i * d], d));
                for (std::size_t j = 0; j < l; ++j) r -= db[j] * g_fit[j](ii);
                responses[i] = r;
            });
            fit.y_coef = factor.solve(responses).coefficients;
        }

        // Advance the pathwise values; regressed Y values are clamped to the
        // truncation box and the clamps are counted.
        const Eigen::VectorXd y_fit = factor.fitted(fit.y_coef);
        std::size_t clamps = 0;
        for (std::size_t i = 0; i < m; ++i) {
            double v = y_fit(static_cast<Eigen::Index>(i));
            if (v > config.truncation_bound) {
                v = config.truncation_bound;
                ++clamps;
            } else if (v < -config.truncation_bound) {
                v = -config.truncation_bound;
                ++clamps;
            }
            y_cur[i] = v;
        }
        sol.truncation_events_ += clamps;
        std::swap(y_next, y_cur);
        std::swap(z_next, z_cur);
    }

    return sol;
}

ContractionCheck contraction_check(const ModelSpec& model, const TimeGrid& grid,
                                   const TerminalFn& h1, const TerminalFn& h2,
                                   std::span<const double> x, double K, std::uint64_t seed,
                                   const SolverConfig& config) {
    const auto noise = lattice_noise(seed);
    const auto forward =
        simulate_forward(model, grid, grid.t0(), x, noise, config.paths, config.workers);
    const auto bhat = IncrementArray::generate(
        grid, model.coefficients.env_dim, StreamKey{seed, stream_id(StreamKind::env_noise, 0)});
    const auto sol1 = solve_finite_horizon(model, grid, h1, forward, bhat, config);
    const auto sol2 = solve_finite_horizon(model, grid, h2, forward, bhat, config);

    const std::size_t m = forward.n_paths();
    ContractionCheck out;
    std::vector<double> sq(m);
    double max_se = 0.0;
    for (std::size_t node = forward.start_index(); node <= grid.n_steps; ++node) {
        const double t = grid.node(node);
        for (std::size_t i = 0; i < m; ++i) {
            const auto xs = forward.state(i, node);
            const double dy = sol1.evaluate(node, xs).y - sol2.evaluate(node, xs).y;
            sq[i] = std::exp(-K * t) * dy * dy;
        }
        const auto est = mean_estimate(sq);
        out.node_time.push_back(t);
        out.lhs.push_back(est.value);
        out.lhs_se.push_back(est.std_error);
        max_se = std::max(max_se, est.std_error);
        if (node == grid.n_steps) {
            out.rhs = est.value;
            out.rhs_se = est.std_error;
        }
    }
    // Slack: an O(h) scheme allowance plus three standard errors of the
    // estimates entering the comparison.
    const double c_scheme = 2.0;
    out.slack = c_scheme * grid.h + 3.0 * (max_se + out.rhs_se);
    out.pass = true;
    for (double lhs : out.lhs)
        if (lhs > out.rhs * (1.0 + out.slack)) out.pass = false;
    return out;
}

}  // namespace bdsde
