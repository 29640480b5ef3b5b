#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bdsde/doss.hpp"
#include "bdsde/stats.hpp"

using namespace bdsde;

namespace {

// Spacings that are powers of two keep grid differences exact, which the
// "flow of a vanishing coefficient is the identity" checks rely on.
std::vector<double> dyadic_axis(double lo, double hi, double step) {
    std::vector<double> out;
    for (double v = lo; v <= hi + 1e-12; v += step) out.push_back(v);
    return out;
}

CoefficientSet coeff_with_g(std::function<void(double, std::span<double>)> g,
                            std::function<void(double, std::span<double>)> gdy,
                            double mu = 1.0) {
    LinearModelParams p;
    p.mu = mu;
    auto c = make_linear_coefficients(p);
    c.env_coeff = [g](std::span<const double>, double y, std::span<double> out) { g(y, out); };
    if (gdy)
        c.env_coeff_dy = [gdy](std::span<const double>, double y, std::span<double> out) {
            gdy(y, out);
        };
    else
        c.env_coeff_dy = nullptr;
    return c;
}

ModelSpec model_with(CoefficientSet coeff) {
    ModelSpec m;
    m.coefficients = std::move(coeff);
    m.constants.mu = 1;
    m.constants.K = 0.5;
    m.constants.Kprime = 0.8;
    m.constants.p = 4;
    m.constants.C1 = 1;
    return m;
}

const TimeGrid kFlowGrid{1e-3, 0, 1000};

IncrementArray env_b(const TimeGrid& grid, std::uint64_t seed) {
    return IncrementArray::generate(grid, 1,
                                    StreamKey{seed, stream_id(StreamKind::env_noise, 0)});
}

}  // namespace

TEST_CASE("vanishing coefficient gives the identity flow") {
    auto coeff = coeff_with_g([](double, std::span<double> out) { out[0] = 0.0; },
                              [](double, std::span<double> out) { out[0] = 0.0; });
    const auto x = dyadic_axis(-1, 1, 0.25);
    const auto y = dyadic_axis(-2, 2, 0.0625);
    const auto flow = solve_flow(coeff, env_b(kFlowGrid, 3), x, y);
    for (std::size_t iy = 0; iy < y.size(); ++iy) {
        CHECK(flow.value(0, 1, iy) == y[iy]);
        CHECK(flow.value(1000, 3, iy) == y[iy]);
    }
    CHECK(invert_flow(flow, 500, 1, 0.375) == doctest::Approx(0.375).epsilon(1e-8));
}

TEST_CASE("constant coefficient shifts the flow by the driving path") {
    const double c = 0.8;
    auto coeff = coeff_with_g([c](double, std::span<double> out) { out[0] = c; },
                              [](double, std::span<double> out) { out[0] = 0.0; });
    const auto x = dyadic_axis(-1, 1, 0.5);
    const auto y = dyadic_axis(-2, 2, 0.125);
    const auto b = env_b(kFlowGrid, 5);
    const auto flow = solve_flow(coeff, b, x, y);
    for (const std::size_t it : {100u, 500u, 1000u}) {
        const double bt = b.cumulative(it)[0];
        CHECK(flow.value(it, 1, 4) == doctest::Approx(y[4] - c * bt).epsilon(1e-12));
        // zeta(t, x, y) = y + c B_t.
        CHECK(invert_flow(flow, it, 1, 0.25 - c * bt) == doctest::Approx(0.25).epsilon(1e-6));
    }
}

TEST_CASE("linear coefficient matches the exponential flow") {
    const double c = 0.5;
    auto coeff = coeff_with_g([c](double y, std::span<double> out) { out[0] = c * y; },
                              [c](double, std::span<double> out) { out[0] = c; });
    const auto x = dyadic_axis(-1, 1, 0.5);
    const auto y = dyadic_axis(0.5, 2.5, 0.0625);
    const auto b = env_b(kFlowGrid, 7);
    const auto flow = solve_flow(coeff, b, x, y);
    double worst = 0;
    for (const std::size_t it : {250u, 500u, 1000u}) {
        const double factor = std::exp(-c * b.cumulative(it)[0]);
        for (std::size_t iy = 0; iy < y.size(); ++iy) {
            const double rel =
                std::abs(flow.value(it, 1, iy) - y[iy] * factor) / (y[iy] * factor);
            worst = std::max(worst, rel);
        }
    }
    CHECK(worst <= 1e-2);

    // Roundtrip lambda(zeta(y)) = y through the interpolated inverse.
    for (const double target : {0.8, 1.3, 2.0}) {
        const double z = invert_flow(flow, 500, 1, target);
        CHECK(flow.value_at(500, 1, z) == doctest::Approx(target).epsilon(1e-6));
    }

    // The flow is linear in y, so the finite-difference slope equals the
    // computed multiplier to rounding; against the analytic multiplier it
    // inherits the flow's own O(sqrt(h)) pathwise error.
    const double exact = std::exp(-c * b.cumulative(1000)[0]);
    const auto d = flow.derivatives_at(1000, 1, 1.5);
    const double computed_multiplier = flow.value(1000, 1, 16) / y[16];
    CHECK(std::abs(d.d_y - computed_multiplier) <= 1e-9);
    CHECK(std::abs(d.d_y - exact) <= 1e-2 * exact);
}

TEST_CASE("flow refinement error shrinks when the step halves") {
    const double c = 0.5;
    auto coeff = coeff_with_g([c](double y, std::span<double> out) { out[0] = c * y; },
                              [c](double, std::span<double> out) { out[0] = c; });
    const auto x = dyadic_axis(-1, 1, 1.0);
    const auto y = dyadic_axis(1.0, 2.0, 0.25);
    const TimeGrid fine{5e-4, 0, 2000};
    double rms_coarse = 0, rms_fine = 0;
    const std::size_t trials = 64;
    for (std::size_t s = 0; s < trials; ++s) {
        const auto bf = IncrementArray::generate(
            fine, 1, StreamKey{101, stream_id(StreamKind::env_noise, s)});
        // Coarse increments pair-sum the fine ones: same Brownian path.
        std::vector<double> db_coarse(1000);
        for (std::size_t i = 0; i < 1000; ++i)
            db_coarse[i] = bf.value(2 * i, 0) + bf.value(2 * i + 1, 0);
        const auto flow_f = solve_flow(coeff, bf, x, y);
        const auto flow_c = solve_flow(coeff, db_coarse, TimeGrid{1e-3, 0, 1000}, x, y);
        const double bt = bf.cumulative(2000)[0];
        const double exact = 1.5 * std::exp(-c * bt);
        const double ef = flow_f.value(2000, 1, 2) - exact;
        const double ec = flow_c.value(1000, 1, 2) - exact;
        rms_fine += ef * ef;
        rms_coarse += ec * ec;
    }
    const double ratio = std::sqrt(rms_coarse / rms_fine);
    CHECK(ratio >= 1.2);  // halving the step reduces the error
    CHECK(ratio <= 2.6);
}

TEST_CASE("flow monotonicity violation is a hard error") {
    const double c = 2.0;
    auto coeff = coeff_with_g([c](double y, std::span<double> out) { out[0] = c * y; },
                              [c](double, std::span<double> out) { out[0] = c; });
    const auto x = dyadic_axis(0, 1, 0.5);
    const auto y = dyadic_axis(1.0, 2.0, 0.5);
    // A single crafted increment flips the sign of the multiplicative factor.
    const std::vector<double> db = {1.0};
    CHECK_THROWS_WITH_AS(solve_flow(coeff, db, TimeGrid{0.01, 0, 1}, x, y),
                         doctest::Contains("monotonicity"), std::runtime_error);
}

TEST_CASE("inverse rejects targets outside the flow range") {
    auto coeff = coeff_with_g([](double, std::span<double> out) { out[0] = 0.0; },
                              [](double, std::span<double> out) { out[0] = 0.0; });
    const auto x = dyadic_axis(0, 1, 0.5);
    const auto y = dyadic_axis(-1, 1, 0.25);
    const auto flow = solve_flow(coeff, env_b(kFlowGrid, 9), x, y);
    CHECK_THROWS_AS(invert_flow(flow, 10, 0, 5.0), std::out_of_range);
}

TEST_CASE("transformed driver collapses to the driver when the noise vanishes") {
    auto coeff = coeff_with_g([](double, std::span<double> out) { out[0] = 0.0; },
                              [](double, std::span<double> out) { out[0] = 0.0; });
    const auto model = model_with(coeff);
    const auto x = dyadic_axis(-1, 1, 0.25);
    const auto y = dyadic_axis(-2, 2, 0.0625);
    const auto flow = solve_flow(model.coefficients, env_b(kFlowGrid, 11), x, y);
    // At grid nodes every finite difference is exact, so the reduction is too.
    for (const std::size_t iy : {5u, 16u, 40u})
        for (const double z : {0.0, 0.7, -1.3}) {
            const double xv[] = {x[2]};
            const double zv[] = {z};
            const double expected = model.coefficients.driver(xv, y[iy], zv);
            CHECK(transformed_driver(flow, model, 700, 2, y[iy], z) == expected);
        }
}

TEST_CASE("transformed driver of the linear-noise benchmark is the plain decay") {
    const double c = 0.5;
    auto coeff = coeff_with_g([c](double y, std::span<double> out) { out[0] = c * y; },
                              [c](double, std::span<double> out) { out[0] = c; });
    const auto model = model_with(coeff);
    const auto x = dyadic_axis(-1, 1, 0.5);
    const auto y = dyadic_axis(0.5, 2.5, 0.0625);
    const auto flow = solve_flow(model.coefficients, env_b(kFlowGrid, 13), x, y);
    for (const std::size_t iy : {4u, 16u, 28u})
        for (const double z : {0.0, 0.5}) {
            const double ft = transformed_driver(flow, model, 1000, 1, y[iy], z);
            CHECK(std::abs(ft - (-1.0 * y[iy])) <= 1e-3);
        }
}

TEST_CASE("constant-coefficient transform shifts the field by the path") {
    // OU-style field with constant environmental coefficient: the transformed
    // field is v + c B_t sample by sample.
    const double c = 1.0;
    LinearModelParams p;
    p.mu = 1;
    p.g0 = {c};
    p.s0 = 1;
    ModelSpec m;
    m.coefficients = make_linear_coefficients(p);
    m.constants.mu = 1;
    m.constants.K = 0.5;
    m.constants.Kprime = 0.8;
    m.constants.p = 4;
    m.constants.C1 = 1;

    SolverConfig config;
    config.paths = 64;
    config.basis.degree = 0;
    const double t_grid[] = {0.25, 0.5};
    const double x_grid[] = {0.0};
    const std::size_t envs = 40;
    const double h = 0.01;
    const auto field =
        build_stationary_field_ensemble(m, 1.0, t_grid, x_grid, envs, 31, 2e-2, h, config, 2);

    const auto y_axis = dyadic_axis(-8, 8, 0.125);
    const auto transformed = transform_field(field, m.coefficients, 31, h, y_axis, 2);
    CHECK(transformed.out_of_range == 0);

    const TimeGrid cover = TimeGrid::from_times(0.0, 1.0, h);
    std::vector<double> v_samples, vt_samples, b_at_t;
    for (std::size_t e = 0; e < envs; ++e) {
        const auto b = IncrementArray::generate(
            cover, 1, StreamKey{31, stream_id(StreamKind::env_noise, e)});
        for (std::size_t it = 0; it < 2; ++it) {
            const double bt = b.cumulative(cover.index_of_time(t_grid[it]))[0];
            const double v = field.slices[e].values[it];
            CHECK(std::abs(transformed.at(e, it, 0) - (v + c * bt)) <= 1e-6);
            if (it == 0) {
                v_samples.push_back(v);
                vt_samples.push_back(transformed.at(e, it, 0));
                b_at_t.push_back(bt);
            }
        }
    }
    // Variance bookkeeping: Var(vt) = Var(v) + c^2 Var(B_t) + 2c Cov(v, B_t).
    const auto mv = sample_moments(v_samples);
    const auto mt = sample_moments(vt_samples);
    double cov = 0;
    const auto mb = sample_moments(b_at_t);
    for (std::size_t e = 0; e < envs; ++e)
        cov += (v_samples[e] - mv.mean) * (b_at_t[e] - mb.mean);
    cov /= static_cast<double>(envs - 1);
    const double predicted = mv.variance + c * c * mb.variance + 2.0 * c * cov;
    CHECK(mt.variance == doctest::Approx(predicted).epsilon(1e-6));
}

TEST_CASE("residual of the flat fixed-point field vanishes") {
    LinearModelParams p;
    p.mu = 1;
    p.a = 2;
    auto coeff = make_linear_coefficients(p);
    coeff.env_coeff = [](std::span<const double>, double, std::span<double> out) {
        out[0] = 0.0;
    };
    coeff.env_coeff_dy = [](std::span<const double>, double, std::span<double> out) {
        out[0] = 0.0;
    };
    const auto model = model_with(std::move(coeff));
    const TimeGrid grid{0.015625, 0, 64};  // dyadic pitch
    const auto x = dyadic_axis(-1, 1, 0.25);
    const auto y = dyadic_axis(0, 4, 0.125);
    const auto flow =
        solve_flow(model.coefficients, env_b(grid, 17).flat(), grid, x, y, 1);
    std::vector<double> vt((grid.n_steps + 1) * x.size(), 2.0);
    const auto table = pde_residual(flow, model, vt);
    for (double r : table.residual) CHECK(r == 0.0);
}

TEST_CASE("manufactured smooth solution has a second-order residual") {
    // vtilde* = e^{-t} sin x solves the transformed equation with b = 0,
    // sigma = 1, f = -y/2 and vanishing environmental coefficient.
    PolynomialModelParams p;
    p.fy = {0.0, -0.5};
    p.s0 = 1;
    auto coeff = make_polynomial_coefficients(p);
    coeff.env_coeff = [](std::span<const double>, double, std::span<double> out) {
        out[0] = 0.0;
    };
    coeff.env_coeff_dy = [](std::span<const double>, double, std::span<double> out) {
        out[0] = 0.0;
    };
    ModelSpec model;
    model.coefficients = std::move(coeff);
    model.constants.mu = 0.5;
    model.constants.K = 0.5;
    model.constants.Kprime = 0.8;
    model.constants.p = 4;

    auto run = [&](double h, double dx) {
        const auto steps = static_cast<std::size_t>(std::llround(1.0 / h));
        const TimeGrid grid{h, 0, steps};
        std::vector<double> x;
        for (double v = -1; v <= 1 + 1e-12; v += dx) x.push_back(v);
        const auto y = dyadic_axis(-2, 2, 0.125);
        const auto flow = solve_flow(model.coefficients, env_b(grid, 19).flat(), grid, x, y, 1);
        std::vector<double> vt((grid.n_steps + 1) * x.size());
        for (std::size_t it = 0; it <= grid.n_steps; ++it)
            for (std::size_t ix = 0; ix < x.size(); ++ix)
                vt[it * x.size() + ix] = std::exp(-grid.node(it)) * std::sin(x[ix]);
        const auto table = pde_residual(flow, model, vt);
        double worst = 0;
        for (double r : table.residual) worst = std::max(worst, std::abs(r));
        return worst;
    };
    const double coarse = run(0.02, 0.1);
    CHECK(coarse <= 2e-3);
    const double fine = run(0.01, 0.05);
    // Central differences: quartering the squares of both pitches should cut
    // the residual by about four.
    CHECK(fine <= coarse / 2.5);
}
