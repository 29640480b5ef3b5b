#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bdsde/model.hpp"
#include "bdsde/rng.hpp"

using namespace bdsde;

namespace {

AssumptionConstants worked_constants() {
    AssumptionConstants c;
    c.d = 2;
    c.l = 1;
    c.p = 5;
    c.K = 1;
    c.Kprime = 1.5;
    c.mu = 3;
    c.C = 0.1;
    c.C0 = 0.1;
    c.C1 = 0.1;
    c.L = 0.05;
    c.alpha = 0;
    return c;
}

DomainBox unit_box(int d) {
    DomainBox b;
    b.lo.assign(static_cast<std::size_t>(d), -1.0);
    b.hi.assign(static_cast<std::size_t>(d), 1.0);
    b.y_lo = -2;
    b.y_hi = 2;
    b.z_lo = -1;
    b.z_hi = 1;
    return b;
}

CoefficientSet driver_only(std::function<double(double)> f) {
    LinearModelParams p;
    auto c = make_linear_coefficients(p);
    c.driver = [f](std::span<const double>, double y, std::span<const double>) { return f(y); };
    return c;
}

}  // namespace

TEST_CASE("worked constant set passes every condition") {
    const auto r = check_assumptions(worked_constants());
    CHECK(r.all_pass());
    CHECK(r.by_name("margin_strong").lhs == doctest::Approx(0.75));
    CHECK(r.by_name("forward_margin").lhs == doctest::Approx(0.725));
}

TEST_CASE("small margin fails the strong form") {
    auto c = worked_constants();
    c.mu = 1;
    const auto r = check_assumptions(c);
    CHECK_FALSE(r.by_name("margin_strong").pass);
    CHECK(r.by_name("margin_strong").lhs == doctest::Approx(-3.25));
    CHECK(r.by_name("margin_weak").lhs == doctest::Approx(-1.0));
    // The weak form recovers once the z-sensitivity is dropped.
    c.C = 0;
    CHECK(check_assumptions(c).by_name("margin_weak").pass);
    CHECK_FALSE(check_assumptions(c).by_name("margin_strong").pass);
}

TEST_CASE("constant coefficients reduce the margin conditions") {
    auto c = worked_constants();
    c.L = 0;
    c.C = 0;
    const auto r = check_assumptions(c);
    CHECK(r.by_name("margin_strong").lhs ==
          doctest::Approx(2 * c.mu - 0.5 * c.p * c.Kprime));
    CHECK(r.by_name("margin_weak").lhs == doctest::Approx(2 * c.mu - c.Kprime));
    CHECK(r.by_name("forward_margin").lhs == doctest::Approx(c.K));
}

TEST_CASE("checker is pure and never reports strong-pass with weak-fail") {
    const auto a = check_assumptions(worked_constants());
    const auto b = check_assumptions(worked_constants());
    REQUIRE(a.conditions.size() == b.conditions.size());
    for (std::size_t i = 0; i < a.conditions.size(); ++i) {
        CHECK(a.conditions[i].lhs == b.conditions[i].lhs);
        CHECK(a.conditions[i].pass == b.conditions[i].pass);
    }
    // Property over random constants: for p >= 2 the strong margin implies the weak one.
    const StreamKey key{99, 1};
    for (int trial = 0; trial < 500; ++trial) {
        AssumptionConstants c;
        c.d = 1;
        c.p = 2 + 6 * uniform_at(key, trial, 0);
        c.K = 0.1 + uniform_at(key, trial, 1);
        c.Kprime = c.K * (1.0 + uniform_at(key, trial, 2));
        c.mu = 4 * uniform_at(key, trial, 3);
        c.C = 0.2 * uniform_at(key, trial, 4);
        const auto r = check_assumptions(c);
        if (r.by_name("margin_strong").pass) CHECK(r.by_name("margin_weak").pass);
    }
}

TEST_CASE("non-finite constants are a hard error") {
    auto c = worked_constants();
    c.C = std::nan("");
    CHECK_THROWS(check_assumptions(c));
}

TEST_CASE("linear driver with matching margin is not falsified") {
    const auto coeff = driver_only([](double y) { return -2.0 * y; });
    const auto v = probe_monotonicity(coeff, 2.0, unit_box(1), 2000, 7);
    CHECK(v.empty());
}

TEST_CASE("linear driver with overstated margin is falsified") {
    const auto coeff = driver_only([](double y) { return -y; });
    const auto v = probe_monotonicity(coeff, 2.0, unit_box(1), 2000, 7);
    CHECK_FALSE(v.empty());
    // Violations report the gap arithmetic they were flagged with.
    for (const auto& viol : v) CHECK(viol.lhs > viol.bound);
}

TEST_CASE("cubic dissipative driver is not falsified at mu = 1") {
    // (y1-y2)(f(y1)-f(y2)) = -(y1-y2)^2 (y1^2 + y1 y2 + y2^2 + 1) <= -(y1-y2)^2.
    const auto coeff = driver_only([](double y) { return -y * y * y - y; });
    CHECK(probe_monotonicity(coeff, 1.0, unit_box(1), 5000, 11).empty());
}

TEST_CASE("passing at mu implies passing at any smaller margin") {
    const auto coeff = driver_only([](double y) { return -1.5 * y; });
    CHECK(probe_monotonicity(coeff, 1.5, unit_box(1), 2000, 13).empty());
    CHECK(probe_monotonicity(coeff, 1.0, unit_box(1), 2000, 13).empty());
    CHECK(probe_monotonicity(coeff, 0.5, unit_box(1), 2000, 13).empty());
    CHECK_FALSE(probe_monotonicity(coeff, 2.0, unit_box(1), 2000, 13).empty());
}

TEST_CASE("probe partitions are deterministic across worker counts") {
    const auto coeff = driver_only([](double y) { return -y; });
    const auto v1 = probe_monotonicity(coeff, 2.0, unit_box(1), 1000, 17, 1);
    const auto v4 = probe_monotonicity(coeff, 2.0, unit_box(1), 1000, 17, 4);
    REQUIRE(v1.size() == v4.size());
    for (std::size_t i = 0; i < v1.size(); ++i) CHECK(v1[i].lhs == v4[i].lhs);
}

TEST_CASE("non-finite driver output names the failure") {
    const auto coeff = driver_only([](double y) { return y > 0 ? std::nan("") : -y; });
    CHECK_THROWS(probe_monotonicity(coeff, 1.0, unit_box(1), 500, 3));
}

TEST_CASE("lipschitz probe on the zero function") {
    auto zero = [](std::span<const double>, double, std::span<const double>) { return 0.0; };
    const auto p = probe_lipschitz(zero, 1, 1, 1, unit_box(1), 1000, 5);
    CHECK(p.worst_ratio == 0.0);
}

TEST_CASE("lipschitz probe recovers the exact constant of f = y") {
    auto fy = [](std::span<const double>, double y, std::span<const double>) { return y; };
    const auto p = probe_lipschitz(fy, 1, 1, 1, unit_box(1), 2000, 5);
    CHECK(p.worst_ratio_y == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(p.worst_ratio <= 1.0 + 1e-9);
}

TEST_CASE("lipschitz probe for sin(x) + y stays under the mixed bound") {
    auto f = [](std::span<const double> x, double y, std::span<const double>) {
        return std::sin(x[0]) + y;
    };
    const auto p = probe_lipschitz(f, 1, 1, 1, unit_box(1), 5000, 19);
    CHECK(p.worst_ratio <= 2.0 + 1e-9);
    CHECK(p.worst_ratio_x <= 1.0 + 1e-9);
    CHECK(p.worst_ratio_y <= 1.0 + 1e-9);
}

TEST_CASE("model structure validation") {
    ModelSpec m;
    LinearModelParams p;
    p.mu = 3;
    m.coefficients = make_linear_coefficients(p);
    m.constants = worked_constants();
    m.constants.d = 1;
    CHECK_NOTHROW(m.validate_structure());
    m.constants.p = 2;  // violates p > d + 2
    CHECK_THROWS(m.validate_structure());
}
