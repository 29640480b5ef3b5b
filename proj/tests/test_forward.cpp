#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bdsde/forward.hpp"
#include "bdsde/stats.hpp"

using namespace bdsde;

namespace {

ModelSpec linear_model(double b1, double s0, double mu = 1.0) {
    LinearModelParams p;
    p.b1 = b1;
    p.s0 = s0;
    p.mu = mu;
    ModelSpec m;
    m.coefficients = make_linear_coefficients(p);
    m.constants.mu = mu;
    m.constants.K = 1;
    m.constants.Kprime = 1.5;
    m.constants.p = 4;
    m.constants.L = b1;
    m.constants.d = 1;
    m.constants.l = 1;
    return m;
}

const double kX0[] = {1.0};

}  // namespace

TEST_CASE("frozen dynamics stay at the start point") {
    const auto model = linear_model(0, 0);
    const TimeGrid grid{0.01, 0, 50};
    const auto ens = simulate_forward(model, grid, 0.2, kX0, lattice_noise(1), 16);
    for (std::size_t m = 0; m < ens.n_paths(); ++m)
        for (std::size_t i = 0; i <= grid.n_steps; ++i) CHECK(ens.state(m, i)[0] == 1.0);
}

TEST_CASE("states before the start time equal the start point exactly") {
    const auto model = linear_model(1, 0.5);
    const TimeGrid grid{0.01, 0, 100};
    const auto ens = simulate_forward(model, grid, 0.5, kX0, lattice_noise(2), 8);
    for (std::size_t m = 0; m < ens.n_paths(); ++m) {
        for (std::size_t i = 0; i <= 50; ++i) CHECK(ens.state(m, i)[0] == 1.0);
        CHECK(ens.state(m, 51)[0] != 1.0);
    }
}

TEST_CASE("deterministic contraction matches the exponential") {
    const auto model = linear_model(1, 0);
    const TimeGrid grid{1e-3, 0, 1000};
    const auto ens = simulate_forward(model, grid, 0.0, kX0, lattice_noise(3), 1);
    CHECK(std::abs(ens.state(0, 1000)[0] - std::exp(-1.0)) <= 1e-3);
}

TEST_CASE("additive noise telescopes to the Brownian path") {
    const auto model = linear_model(0, 1);
    const TimeGrid grid{0.01, 0, 100};
    const auto noise = lattice_noise(4);
    const auto ens = simulate_forward(model, grid, 0.0, kX0, noise, 4);
    for (std::size_t m = 0; m < 4; ++m) {
        double acc = 1.0;
        for (std::size_t i = 0; i < grid.n_steps; ++i) {
            acc += ens.increment(m, i)[0];
            CHECK(ens.state(m, i + 1)[0] == acc);
        }
    }
}

TEST_CASE("serial and parallel path kernels agree bit for bit") {
    const auto model = linear_model(1, 0.7);
    const TimeGrid grid{0.01, 0, 200};
    const auto serial = simulate_forward_serial(model, grid, 0.0, kX0, lattice_noise(5), 64);
    const auto parallel = simulate_forward(model, grid, 0.0, kX0, lattice_noise(5), 64, 4);
    REQUIRE(serial.flat().size() == parallel.flat().size());
    for (std::size_t i = 0; i < serial.flat().size(); ++i)
        CHECK(serial.flat()[i] == parallel.flat()[i]);
}

TEST_CASE("flow property holds exactly under shared increments") {
    const auto model = linear_model(0.8, 0.6);
    const TimeGrid grid{0.01, 0, 100};
    CHECK(check_flow_property(model, grid, 0.0, kX0, 0.5, lattice_noise(6), 32) == 0.0);
    // Frozen dynamics are trivially flow-consistent.
    const auto frozen = linear_model(0, 0);
    CHECK(check_flow_property(frozen, grid, 0.0, kX0, 0.5, lattice_noise(6), 4) == 0.0);
}

TEST_CASE("flow property fails under re-drawn increments (negative control)") {
    const auto model = linear_model(0.8, 0.6);
    const TimeGrid grid{0.01, 0, 100};
    const auto full = simulate_forward(model, grid, 0.0, kX0, lattice_noise(7), 8);
    std::vector<std::vector<double>> mid(8);
    for (std::size_t m = 0; m < 8; ++m) {
        auto s = full.state(m, 50);
        mid[m].assign(s.begin(), s.end());
    }
    const auto other = simulate_forward_from(model, grid, 50, mid, lattice_noise(8), 1);
    double dev = 0;
    for (std::size_t m = 0; m < 8; ++m)
        dev = std::max(dev, std::abs(full.state(m, 100)[0] - other.state(m, 100)[0]));
    CHECK(dev > 0.0);
}

TEST_CASE("shift property is exact at grid level") {
    const auto model = linear_model(0.5, 0.4);
    CHECK(check_shift_property(model, 0.0, 1.0, kX0, 0, 0.01, 9, 16) == 0.0);
    CHECK(check_shift_property(model, 0.0, 1.0, kX0, 37, 0.01, 9, 16) == 0.0);
    CHECK(check_shift_property(model, 0.25, 0.75, kX0, 12, 0.01, 9, 16) == 0.0);
}

TEST_CASE("shift with a mismatched seed deviates (negative control)") {
    const auto model = linear_model(0.5, 0.4);
    const TimeGrid ga = TimeGrid::from_times(0.0, 1.0, 0.01);
    const TimeGrid gb = TimeGrid::from_times(0.1, 1.1, 0.01);
    const auto a = simulate_forward(model, ga, 0.0, kX0, lattice_noise(10, 0, 10), 8);
    const auto b = simulate_forward(model, gb, 0.1, kX0, lattice_noise(11), 8);
    double dev = 0;
    for (std::size_t m = 0; m < 8; ++m)
        dev = std::max(dev, std::abs(a.state(m, 50)[0] - b.state(m, 50)[0]));
    CHECK(dev > 0.0);
}

TEST_CASE("weak consistency with the Ornstein-Uhlenbeck moments") {
    const double sigma = 0.5;
    const auto model = linear_model(1.0, sigma);
    const TimeGrid grid{0.01, 0, 100};
    const std::size_t paths = 20000;
    const auto ens = simulate_forward(model, grid, 0.0, kX0, lattice_noise(12), paths, 2);
    const auto stats = ens.node_stats();
    for (const std::size_t node : {25u, 50u, 100u}) {
        const double s = grid.node(node);
        const double mean_exact = std::exp(-s);
        const double var_exact = sigma * sigma * (1.0 - std::exp(-2.0 * s)) / 2.0;
        const double mean_se = std::sqrt(stats.variance[node] / static_cast<double>(paths));
        // Three Monte Carlo standard errors plus an O(h) bias allowance.
        CHECK(std::abs(stats.mean[node] - mean_exact) <= 3.0 * mean_se + 0.02);
        const double var_se = stats.variance[node] * std::sqrt(2.0 / (paths - 1.0));
        CHECK(std::abs(stats.variance[node] - var_exact) <= 3.0 * var_se + 0.02);
    }
}

TEST_CASE("holder estimate vanishes for identical starts") {
    const auto model = linear_model(1, 0.3);
    const auto est = holder_estimate(model, 0.2, kX0, 0.2, kX0, 4, 1, 64, 0.01, 13);
    CHECK(est.estimate == 0.0);
}

TEST_CASE("holder estimate matches the frozen closed form") {
    const auto model = linear_model(0, 0);
    const double delta = 0.1;
    const double xb[] = {1.0 + delta};
    const auto est = holder_estimate(model, 0.0, kX0, 0.0, xb, 4.0, 1.0, 8, 0.01, 14);
    // Integrand is delta^p everywhere, so the weighted integral is delta^p / K
    // up to quadrature and tail error.
    CHECK(est.estimate == doctest::Approx(std::pow(delta, 4) / 1.0).epsilon(0.02));
    CHECK(est.bound_seed == doctest::Approx(std::pow(delta, 4)));
    CHECK(est.tail_bound <= std::pow(delta, 4) * 1e-3);
}

TEST_CASE("holder ratio is stable across shrinking space gaps") {
    const auto model = linear_model(1.0, 0.1);
    double ratios[3];
    int idx = 0;
    for (const double delta : {0.1, 0.05, 0.025}) {
        const double xb[] = {1.0 + delta};
        const auto est = holder_estimate(model, 0.2, kX0, 0.2, xb, 4.0, 1.0, 4000, 0.01, 15, 2);
        ratios[idx++] = est.estimate / est.bound_seed;
    }
    const double lo = std::min({ratios[0], ratios[1], ratios[2]});
    const double hi = std::max({ratios[0], ratios[1], ratios[2]});
    CHECK(hi / lo <= 4.0);
}
