#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bdsde/backward.hpp"
#include "bdsde/stats.hpp"

using namespace bdsde;

namespace {

ModelSpec benchmark_model(double mu, double a, double g0, double b1, double s0) {
    LinearModelParams p;
    p.mu = mu;
    p.a = a;
    p.g0 = {g0};
    p.b1 = b1;
    p.s0 = s0;
    ModelSpec m;
    m.coefficients = make_linear_coefficients(p);
    m.constants.mu = mu;
    m.constants.K = 0.5;
    m.constants.Kprime = 0.8;
    m.constants.p = 4;
    m.constants.C = 0;
    m.constants.C1 = mu * mu;
    m.constants.L = b1;
    return m;
}

SolverConfig config_for(std::size_t paths, int degree) {
    SolverConfig c;
    c.paths = paths;
    c.basis.degree = degree;
    c.workers = 2;
    return c;
}

IncrementArray env_path(const TimeGrid& grid, std::uint64_t seed, std::uint64_t env = 0) {
    return IncrementArray::generate(grid, 1,
                                    StreamKey{seed, stream_id(StreamKind::env_noise, env)});
}

}  // namespace

TEST_CASE("martingale benchmark: Y tracks the state and Z tracks its volatility") {
    // f = 0, g = 0, terminal x -> x over X = x + W. The margin gate fails at
    // mu = 0 and must be overridden explicitly.
    auto model = benchmark_model(0, 0, 0, 0, 1);
    const TimeGrid grid{0.01, 0, 100};
    const double x0[] = {0.0};
    auto config = config_for(10000, 1);
    const auto forward =
        simulate_forward(model, grid, 0.0, x0, lattice_noise(2024), config.paths, 2);
    const auto bhat = env_path(grid, 2024);
    const auto terminal = [](std::span<const double> x) { return x[0]; };
    CHECK_THROWS(solve_finite_horizon(model, grid, terminal, forward, bhat, config));
    config.override_assumptions = true;
    const auto sol = solve_finite_horizon(model, grid, terminal, forward, bhat, config);

    double worst_y = 0, worst_z = 0;
    for (std::size_t node = 1; node < grid.n_steps; ++node) {
        double sy = 0, sz = 0;
        for (std::size_t m = 0; m < config.paths; ++m) {
            const auto v = sol.evaluate(node, forward.state(m, node), /*clamp=*/false);
            sy += (v.y - forward.state(m, node)[0]) * (v.y - forward.state(m, node)[0]);
            sz += (v.z[0] - 1.0) * (v.z[0] - 1.0);
        }
        worst_y = std::max(worst_y, std::sqrt(sy / static_cast<double>(config.paths)));
        worst_z = std::max(worst_z, std::sqrt(sz / static_cast<double>(config.paths)));
    }
    CHECK(worst_y <= 2e-2);
    CHECK(worst_z <= 5e-2);
}

TEST_CASE("scalar exponential decay benchmark") {
    // f = -y, g = 0, terminal 1: Y_t = e^{-(T-t)}.
    const auto model = benchmark_model(1, 0, 0, 0, 1);
    const TimeGrid grid{1e-3, 0, 1000};
    const double x0[] = {0.0};
    const auto config = config_for(2000, 0);
    const auto forward =
        simulate_forward(model, grid, 0.0, x0, lattice_noise(7), config.paths, 2);
    const auto sol = solve_finite_horizon(
        model, grid, [](std::span<const double>) { return 1.0; }, forward, env_path(grid, 7),
        config);
    const auto v = sol.evaluate(0, x0);
    CHECK(std::abs(v.y - std::exp(-1.0)) <= 5e-3);
    CHECK(std::abs(v.z[0]) <= 1e-6);
}

TEST_CASE("constant environmental coefficient telescopes exactly") {
    // f = 0, g = g0, terminal 0: Y_t = -g0 (Bhat_T - Bhat_t) with no
    // regression error, since every response is path-independent.
    auto model = benchmark_model(0, 0, 1.5, 0, 1);
    const TimeGrid grid{0.01, 0, 100};
    const double x0[] = {0.0};
    auto config = config_for(500, 1);
    config.override_assumptions = true;
    const auto forward =
        simulate_forward(model, grid, 0.0, x0, lattice_noise(9), config.paths, 2);
    const auto bhat = env_path(grid, 9);
    const auto sol = solve_finite_horizon(
        model, grid, [](std::span<const double>) { return 0.0; }, forward, bhat, config);
    for (const std::size_t node : {0u, 25u, 80u}) {
        double tail = 0;
        for (std::size_t i = node; i < grid.n_steps; ++i) tail += bhat.value(i, 0);
        CHECK(sol.evaluate(node, x0).y == doctest::Approx(-1.5 * tail).epsilon(1e-10));
    }
    CHECK(std::abs(sol.evaluate(0, x0).z[0]) <= 1e-12);
}

TEST_CASE("terminal node reproduces the terminal function") {
    const auto model = benchmark_model(1, 0, 0, 0, 1);
    const TimeGrid grid{0.01, 0, 50};
    const double x0[] = {0.0};
    const auto config = config_for(4000, 2);
    const auto forward =
        simulate_forward(model, grid, 0.0, x0, lattice_noise(11), config.paths, 2);
    const auto sol = solve_finite_horizon(
        model, grid, [](std::span<const double> x) { return x[0] * x[0]; }, forward,
        env_path(grid, 11), config);
    const auto& fit = sol.node_fit(grid.n_steps);
    CHECK(fit.residual_variance <= 1e-20);
    for (const double x : {-0.5, 0.0, 0.4}) {
        const double xv[] = {x};
        CHECK(sol.evaluate(grid.n_steps, xv).y == doctest::Approx(x * x).epsilon(1e-8));
    }
}

TEST_CASE("re-solving with identical inputs is bit-identical") {
    const auto model = benchmark_model(1, 0.5, 0.7, 0.5, 0.6);
    const TimeGrid grid{0.01, 0, 60};
    const double x0[] = {0.2};
    const auto config = config_for(600, 1);
    const auto run = [&] {
        const auto fw = simulate_forward(model, grid, 0.0, x0, lattice_noise(13), config.paths, 2);
        return solve_finite_horizon(
            model, grid, [](std::span<const double> x) { return x[0]; }, fw, env_path(grid, 13),
            config);
    };
    const auto a = run();
    const auto b = run();
    for (std::size_t node = 0; node <= grid.n_steps; ++node) {
        const auto& fa = a.node_fit(node);
        const auto& fb = b.node_fit(node);
        REQUIRE(fa.y_coef.size() == fb.y_coef.size());
        for (std::size_t j = 0; j < fa.y_coef.size(); ++j) CHECK(fa.y_coef[j] == fb.y_coef[j]);
    }
}

TEST_CASE("increasing the margin strictly shrinks the constant-terminal value") {
    const TimeGrid grid{0.01, 0, 100};
    const double x0[] = {0.0};
    const auto config = config_for(400, 0);
    double prev = 2.0;
    for (const double mu : {0.5, 1.0, 2.0}) {
        const auto model = benchmark_model(mu, 0, 0, 0, 1);
        const auto fw = simulate_forward(model, grid, 0.0, x0, lattice_noise(15), config.paths, 2);
        const auto sol = solve_finite_horizon(
            model, grid, [](std::span<const double>) { return 1.0; }, fw, env_path(grid, 15),
            config);
        const double y0 = sol.evaluate(0, x0).y;
        CHECK(y0 < prev);
        prev = y0;
    }
}

TEST_CASE("implicit refinements stay on the closed form") {
    const auto model = benchmark_model(1, 0, 0, 0, 1);
    const TimeGrid grid{1e-2, 0, 100};
    const double x0[] = {0.0};
    auto config = config_for(500, 0);
    config.implicit_iterations = 3;
    const auto fw = simulate_forward(model, grid, 0.0, x0, lattice_noise(17), config.paths, 2);
    const auto sol = solve_finite_horizon(
        model, grid, [](std::span<const double>) { return 1.0; }, fw, env_path(grid, 17),
        config);
    CHECK(std::abs(sol.evaluate(0, x0).y - std::exp(-1.0)) <= 5e-3);
}

TEST_CASE("evaluation outside the basis box is flagged") {
    const auto model = benchmark_model(1, 0, 0, 0, 1);
    const TimeGrid grid{0.01, 0, 30};
    const double x0[] = {0.0};
    const auto config = config_for(500, 1);
    const auto fw = simulate_forward(model, grid, 0.0, x0, lattice_noise(19), config.paths, 2);
    const auto sol = solve_finite_horizon(
        model, grid, [](std::span<const double> x) { return x[0]; }, fw, env_path(grid, 19),
        config);
    const double far[] = {50.0};
    CHECK(sol.evaluate(15, far).extrapolated);
    const double near[] = {0.0};
    CHECK_FALSE(sol.evaluate(15, near).extrapolated);
}

TEST_CASE("contraction estimate: equal terminals vanish, distinct ones obey the bound") {
    const auto model = benchmark_model(1, 0, 0, 0, 1);
    const TimeGrid grid{0.01, 0, 100};
    const double x0[] = {0.0};
    const auto config = config_for(500, 0);
    const auto same = contraction_check(
        model, grid, [](std::span<const double>) { return 1.0; },
        [](std::span<const double>) { return 1.0; }, x0, 0.5, 21, config);
    for (double lhs : same.lhs) CHECK(lhs == 0.0);

    const auto diff = contraction_check(
        model, grid, [](std::span<const double>) { return 1.0; },
        [](std::span<const double>) { return 0.0; }, x0, 0.5, 21, config);
    CHECK(diff.pass);
    // Deterministic recursion: dY_i = (1-mu h)^{n-i}, so the weighted second
    // moment matches the closed form node by node.
    const double h = grid.h;
    for (std::size_t i = 0; i < diff.node_time.size(); ++i) {
        const double t = diff.node_time[i];
        const double steps = (grid.horizon() - t) / h;
        const double exact = std::exp(-0.5 * t) * std::pow(1.0 - h, 2.0 * steps);
        CHECK(diff.lhs[i] == doctest::Approx(exact).epsilon(1e-9));
    }
    CHECK(diff.rhs == doctest::Approx(std::exp(-0.5 * grid.horizon())).epsilon(1e-12));
}
