#pragma once

#include <span>
#include <vector>

#include "bdsde/horizon.hpp"

namespace bdsde {

/// Pathwise flow lambda(t, x, y) on a product grid, driven by one realisation
/// of the environmental noise. For every (t, x) the map y -> lambda is
/// strictly increasing on the grid; violation is a hard error at solve time
/// (the step size is too coarse or the coefficient falls outside its
/// smoothness class).
class FlowGrid {
  public:
    const TimeGrid& time() const { return time_; }
    std::span<const double> x_points() const { return x_; }
    std::span<const double> y_points() const { return y_; }

    double value(std::size_t it, std::size_t ix, std::size_t iy) const {
        return values_[(it * x_.size() + ix) * y_.size() + iy];
    }

    /// Interpolated lambda(t_it, x_ix, y) for y between grid nodes.
    double value_at(std::size_t it, std::size_t ix, double y) const;

    /// Central-difference derivatives at an interior grid point, linearly
    /// interpolated in y. Requires at least three x and y points; throws at
    /// the x boundary.
    struct Derivatives {
        double d_y = 1, d_yy = 0;
        double d_x = 0, d_xx = 0, d_xy = 0;
    };
    Derivatives derivatives_at(std::size_t it, std::size_t ix, double y) const;

    std::size_t y_index_below(double y) const;

  private:
    friend FlowGrid solve_flow(const CoefficientSet&, std::span<const double>, const TimeGrid&,
                               std::span<const double>, std::span<const double>, int);
    TimeGrid time_{1.0, 0, 1};
    std::vector<double> x_, y_;
    std::vector<double> values_;  // (t, x, y) row-major
};

/// Euler solve of the flow equation
///   lambda_{i+1} = lambda_i + (1/2) <g, D_y g>(x, lambda_i) h
///                  - <g(x, lambda_i), dB_i>
/// per (x, y) start, lambda(0, x, y) = y exactly. `db` holds the driving
/// increments, n_steps x env_dim row-major (so mollified paths can be used
/// in place of raw ones). State dimension must be 1 for the derivative grid.
FlowGrid solve_flow(const CoefficientSet& coeff, std::span<const double> db,
                    const TimeGrid& grid, std::span<const double> x_points,
                    std::span<const double> y_points, int workers = 1);

FlowGrid solve_flow(const CoefficientSet& coeff, const IncrementArray& b,
                    std::span<const double> x_points, std::span<const double> y_points,
                    int workers = 1);

/// zeta(t, x, .) = lambda(t, x, .)^{-1} by bisection on the monotone
/// interpolant, to absolute tolerance 1e-8. The target must be inside the
/// range of lambda over the y-grid.
double invert_flow(const FlowGrid& flow, std::size_t it, std::size_t ix, double target);

/// Driver of the transformed (noise-free) equation:
///   ftilde = (1/D_y lambda) ( f(x, lambda, sigma* D_x lambda + D_y lambda z)
///            + L_x lambda + <sigma* D_xy lambda, z> + (1/2) D_yy lambda z^2 ).
/// Derivatives come from central differences on the flow grid under common
/// random numbers (one B path drives every (x, y) start).
double transformed_driver(const FlowGrid& flow, const ModelSpec& model, std::size_t it,
                          std::size_t ix, double y, double z);

struct TransformedField {
    std::vector<double> t_grid, x_grid;
    std::vector<std::uint64_t> env_index;
    std::vector<double> values;  // env-major: values[(e * nt + it) * nx + ix]
    std::size_t out_of_range = 0;

    double at(std::size_t e, std::size_t it, std::size_t ix) const {
        return values[(e * t_grid.size() + it) * x_grid.size() + ix];
    }
};

/// vtilde(t, x) = zeta(t, x, v(t, x)) per environment, with the flow solved on
/// the forward B realisation that was reversed into the field's environment.
TransformedField transform_field(const StationaryField& field, const CoefficientSet& coeff,
                                 std::uint64_t seed, double h, std::span<const double> y_points,
                                 int workers = 1);

struct ResidualTable {
    std::vector<double> t, x;   // interior nodes where the residual is formed
    std::vector<double> residual;  // t-major
    bool mollified = false;
};

/// Diagnostic residual of the transformed equation,
///   d_t vtilde - L vtilde - ftilde(t, x, vtilde, sigma* D vtilde),
/// with all derivatives by central differences on the flow grid. `vtilde` is
/// a (t, x) table on exactly the flow grid's nodes. Reported, never asserted:
/// the gradient of a regressed field enters quadratically.
ResidualTable pde_residual(const FlowGrid& flow, const ModelSpec& model,
                           std::span<const double> vtilde);

}  // namespace bdsde
