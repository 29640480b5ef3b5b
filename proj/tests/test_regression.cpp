#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bdsde/regression.hpp"

using namespace bdsde;

namespace {

std::vector<std::vector<double>> scalar_states(std::span<const double> xs) {
    std::vector<std::vector<double>> out;
    for (double x : xs) out.push_back({x});
    return out;
}

NormalizedBasis poly_basis(int degree, double lo = -1, double hi = 1) {
    BasisSpec spec;
    spec.degree = degree;
    return NormalizedBasis(spec, 1, {lo}, {hi});
}

double eval_fit(const NormalizedBasis& basis, std::span<const double> coef, double x) {
    std::vector<double> phi(basis.size());
    const double xv[] = {x};
    basis.eval(xv, phi);
    double y = 0;
    for (std::size_t j = 0; j < phi.size(); ++j) y += coef[j] * phi[j];
    return y;
}

}  // namespace

TEST_CASE("constant responses load the constant term") {
    std::vector<double> xs = {-0.5, 0.1, 0.4, 0.9, -0.2, 0.3};
    std::vector<double> ys(xs.size(), 5.0);
    const auto basis = poly_basis(1);
    const auto r = regress_conditional(ys, scalar_states(xs), basis);
    CHECK(r.coefficients[0] == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(r.coefficients[1] == doctest::Approx(0.0).scale(1).epsilon(1e-12));
    CHECK(r.residual_variance <= 1e-24);
}

TEST_CASE("identity responses are reproduced by a degree-1 basis") {
    std::vector<double> xs = {-0.8, -0.3, 0.0, 0.2, 0.5, 0.9};
    const auto basis = poly_basis(1);
    const auto r = regress_conditional(xs, scalar_states(xs), basis);
    for (double x : xs) CHECK(eval_fit(basis, r.coefficients, x) == doctest::Approx(x));
    CHECK(r.residual_variance <= 1e-24);
}

TEST_CASE("noisy quadratic is recovered within the stated tolerance") {
    const std::size_t n = 10000;
    const StreamKey key{31, 0};
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = 2.0 * uniform_at(key, static_cast<std::int64_t>(i), 0) - 1.0;
        ys[i] = xs[i] * xs[i] + 0.1 * normal_at(key, static_cast<std::int64_t>(i), 1);
    }
    const auto basis = poly_basis(2);
    const auto r = regress_conditional(ys, scalar_states(xs), basis);
    // Quadratic coefficient read off as half the second difference.
    const double second = eval_fit(basis, r.coefficients, 0.5) -
                          2.0 * eval_fit(basis, r.coefficients, 0.0) +
                          eval_fit(basis, r.coefficients, -0.5);
    CHECK(second / (0.5 * 0.5) == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("rank-deficient designs are handled by singular value truncation") {
    // All states identical: the degree-1 column is constant and collinear with
    // the intercept, so one singular value is dropped and the fit is the mean.
    std::vector<double> xs(64, 0.25), ys(64, 3.0);
    const auto basis = poly_basis(1, 0.25 - 0.5, 0.25 + 0.5);
    const auto r = regress_conditional(ys, scalar_states(xs), basis);
    CHECK(r.rank == 1);
    CHECK(eval_fit(basis, r.coefficients, 0.25) == doctest::Approx(3.0));
}

TEST_CASE("an all-zero design is an error") {
    Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(8, 2);
    CHECK_THROWS(RegressionFactor(zero, 1e-10));
}

TEST_CASE("fewer samples than basis functions is an error") {
    std::vector<double> xs = {0.0, 0.5};
    std::vector<double> ys = {1.0, 2.0};
    CHECK_THROWS(regress_conditional(ys, scalar_states(xs), poly_basis(3)));
}

TEST_CASE("piecewise-constant basis bins and clamps") {
    BasisSpec spec;
    spec.kind = BasisSpec::Kind::piecewise_constant;
    spec.bin_edges = {0.0, 1.0, 2.0, 3.0};
    NormalizedBasis basis(spec, 1, {0.0}, {3.0});
    REQUIRE(basis.size() == 3);
    std::vector<double> phi(3);
    const double mid[] = {1.5};
    CHECK_FALSE(basis.eval(mid, phi));
    CHECK(phi[1] == 1.0);
    const double outside[] = {5.0};
    CHECK(basis.eval(outside, phi));  // clamped
    CHECK(phi[2] == 1.0);
}

TEST_CASE("polynomial evaluation clamps to the box and reports it") {
    const auto basis = poly_basis(1, 0.0, 1.0);
    std::vector<double> phi(2);
    const double inside[] = {0.5};
    CHECK_FALSE(basis.eval(inside, phi));
    const double outside[] = {2.0};
    CHECK(basis.eval(outside, phi));
    CHECK(phi[1] == 1.0);  // clamped to the upper edge
}

TEST_CASE("multivariate total-degree basis has the right size") {
    BasisSpec spec;
    spec.degree = 2;
    NormalizedBasis basis(spec, 2, {-1, -1}, {1, 1});
    CHECK(basis.size() == 6);  // 1, x, y, x^2, xy, y^2
}

TEST_CASE("serial and parallel design assembly agree bit for bit") {
    LinearModelParams p;
    p.s0 = 1;
    p.mu = 1;
    ModelSpec model;
    model.coefficients = make_linear_coefficients(p);
    model.constants.mu = 1;
    model.constants.K = 0.5;
    model.constants.Kprime = 0.8;
    model.constants.p = 4;
    const TimeGrid grid{0.01, 0, 20};
    const double x0[] = {0.0};
    const auto ens = simulate_forward(model, grid, 0.0, x0, lattice_noise(77), 256, 2);
    const auto basis = NormalizedBasis::fit(BasisSpec{}, ens, 10);
    const auto a1 = assemble_design(basis, ens, 10, 1);
    const auto a4 = assemble_design(basis, ens, 10, 4);
    CHECK((a1 - a4).cwiseAbs().maxCoeff() == 0.0);
}
