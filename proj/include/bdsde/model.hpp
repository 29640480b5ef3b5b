#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bdsde/rng.hpp"

namespace bdsde {

/// Drift, diffusion, driver and environmental-noise coefficients. All callables
/// must be pure: same inputs, same outputs, no side effects.
struct CoefficientSet {
    int state_dim = 1;  // d
    int env_dim = 1;    // l

    /// b : R^d -> R^d
    std::function<void(std::span<const double> x, std::span<double> out)> drift;
    /// sigma : R^d -> R^{d x d}, row-major
    std::function<void(std::span<const double> x, std::span<double> out)> diffusion;
    /// f : R^d x R x R^d -> R
    std::function<double(std::span<const double> x, double y, std::span<const double> z)> driver;
    /// g : R^d x R -> R^l
    std::function<void(std::span<const double> x, double y, std::span<double> out)> env_coeff;
    /// Optional analytic D_y g : R^d x R -> R^l. When absent, consumers fall
    /// back to a central difference with step 1e-5 * (1 + |y|).
    std::function<void(std::span<const double> x, double y, std::span<double> out)> env_coeff_dy;

    void env_coeff_dy_or_fd(std::span<const double> x, double y, std::span<double> out) const;
};

/// Structural constants of the standing assumptions.
struct AssumptionConstants {
    double mu = 0;      // monotonicity margin of the driver
    double K = 0;       // weight exponent
    double Kprime = 0;  // auxiliary weight, K < K' < 2K
    double p = 0;       // moment order, > d + 2
    double C0 = 0;      // x-Lipschitz constant (squared form) of f and g
    double C1 = 0;      // y-Lipschitz constant (squared form) of f
    double C = 0;       // z-Lipschitz constant of f / y-Lipschitz of g
    double alpha = 0;   // z-Lipschitz constant of g, in [0, 1/2)
    double L = 0;       // Lipschitz constant of b and sigma
    int d = 1;
    int l = 1;
};

struct ConditionResult {
    std::string name;
    std::string expression;
    double lhs = 0;  // evaluated left-hand side, condition is lhs > 0 (or >= 0)
    bool pass = false;
    bool structural = false;
};

/// Per-condition report. Probing and gating never prove anything; a clean
/// report means "statistically unfalsified", nothing stronger.
struct AssumptionReport {
    std::vector<ConditionResult> conditions;

    bool all_pass() const;
    bool structural_pass() const;
    /// The weaker margin form (the one the infinite-horizon solver gates on).
    bool gate_pass() const;
    const ConditionResult& by_name(const std::string& name) const;
};

AssumptionReport check_assumptions(const AssumptionConstants& c);

struct ModelSpec {
    CoefficientSet coefficients;
    AssumptionConstants constants;

    /// Throws unless the structural conditions hold; margin conditions are
    /// reported but only enforced by the solvers (with their override flags).
    void validate_structure() const;
};

struct DomainBox {
    std::vector<double> lo, hi;  // per state dimension
    double y_lo = -1, y_hi = 1;
    double z_lo = -1, z_hi = 1;
};

struct MonotonicityViolation {
    std::vector<double> x;
    double y1 = 0, y2 = 0;
    std::vector<double> z;
    double lhs = 0;    // (y1-y2)(f(x,y1,z)-f(x,y2,z))
    double bound = 0;  // -mu |y1-y2|^2
};

/// Random falsification probe of the driver monotonicity margin. Empty result
/// means "not falsified on these samples".
std::vector<MonotonicityViolation> probe_monotonicity(
    const CoefficientSet& coeff, double mu, const DomainBox& box, std::size_t n_samples,
    std::uint64_t seed, int workers = 1, double tol = 1e-10);

struct LipschitzProbe {
    double worst_ratio = 0;  // max |df|^2 / (C0|dx|^2 + C1|dy|^2 + C|dz|^2)
    double worst_ratio_x = 0, worst_ratio_y = 0, worst_ratio_z = 0;  // axis-aligned
};

LipschitzProbe probe_lipschitz(
    const std::function<double(std::span<const double>, double, std::span<const double>)>& fn,
    double C0, double C1, double C, const DomainBox& box, std::size_t n_samples,
    std::uint64_t seed, int workers = 1);

// ---------------------------------------------------------------------------
// Built-in coefficient catalog (used by the CLI and the benchmark suites).
// ---------------------------------------------------------------------------

/// f = a - mu*y + <cz, z>, g_j = g0_j + g1_j*y, b = b0 - b1*x, sigma = s0*I.
struct LinearModelParams {
    int d = 1, l = 1;
    double a = 0, mu = 1, cz = 0;
    std::vector<double> g0, g1;  // per environmental component; empty = zeros
    double b0 = 0, b1 = 0, s0 = 1;
};

CoefficientSet make_linear_coefficients(const LinearModelParams& p);

/// f = a - mu*y - cubic*y^3 with the same g, b, sigma family as the linear set.
struct CubicModelParams {
    LinearModelParams base;
    double cubic = 1;
};

CoefficientSet make_cubic_coefficients(const CubicModelParams& p);

/// f = sum_k fy[k] y^k + <fx, x> + <fz, z>, g_j = sum_k gy[j][k] y^k.
struct PolynomialModelParams {
    int d = 1, l = 1;
    std::vector<double> fy;               // driver coefficients in y
    std::vector<double> fx, fz;           // linear terms in x and z
    std::vector<std::vector<double>> gy;  // per env component, coefficients in y
    double b0 = 0, b1 = 0, s0 = 1;
};

CoefficientSet make_polynomial_coefficients(const PolynomialModelParams& p);

}  // namespace bdsde
