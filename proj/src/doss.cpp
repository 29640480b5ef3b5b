#include "bdsde/doss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bdsde/parallel.hpp"

namespace bdsde {

namespace {

void check_axis(std::span<const double> pts, const char* name) {
    if (pts.empty()) throw std::invalid_argument(std::string("solve_flow: empty ") + name);
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (!(pts[i] > pts[i - 1]))
            throw std::invalid_argument(std::string("solve_flow: ") + name +
                                        " must be strictly increasing");
}

}  // namespace

FlowGrid solve_flow(const CoefficientSet& coeff, std::span<const double> db,
                    const TimeGrid& grid, std::span<const double> x_points,
                    std::span<const double> y_points, int workers) {
    if (coeff.state_dim != 1)
        throw std::invalid_argument("solve_flow: derivative grids need a 1-d state");
    check_axis(x_points, "x grid");
    check_axis(y_points, "y grid");
    const auto l = static_cast<std::size_t>(coeff.env_dim);
    if (db.size() != grid.n_steps * l)
        throw std::invalid_argument("solve_flow: increment table size mismatch");

    FlowGrid flow;
    flow.time_ = grid;
    flow.x_.assign(x_points.begin(), x_points.end());
    flow.y_.assign(y_points.begin(), y_points.end());
    const std::size_t nx = flow.x_.size(), ny = flow.y_.size(), nt = grid.n_steps + 1;
    flow.values_.resize(nt * nx * ny);

    parallel_for(nx, workers, [&](std::size_t ix) {
        const double xv[] = {flow.x_[ix]};
        std::vector<double> g(l), dg(l);
        std::vector<double> cur(ny);
        for (std::size_t iy = 0; iy < ny; ++iy) {
            cur[iy] = flow.y_[iy];  // lambda(0, x, y) = y exactly
            flow.values_[(0 * nx + ix) * ny + iy] = cur[iy];
        }
        for (std::size_t step = 0; step < grid.n_steps; ++step) {
            for (std::size_t iy = 0; iy < ny; ++iy) {
                const double lam = cur[iy];
                coeff.env_coeff(xv, lam, g);
                coeff.env_coeff_dy_or_fd(xv, lam, dg);
                double drift = 0, shock = 0;
                for (std::size_t j = 0; j < l; ++j) {
                    drift += g[j] * dg[j];
                    shock += g[j] * db[step * l + j];
                }
                const double next = lam + 0.5 * drift * grid.h - shock;
                if (!std::isfinite(next))
                    throw std::runtime_error("solve_flow: non-finite flow value at step " +
                                             std::to_string(step));
                cur[iy] = next;
                flow.values_[((step + 1) * nx + ix) * ny + iy] = next;
            }
            for (std::size_t iy = 1; iy < ny; ++iy)
                if (!(cur[iy] > cur[iy - 1]))
                    throw std::runtime_error(
                        "solve_flow: flow lost strict monotonicity in y at t=" +
                        std::to_string(grid.node(step + 1)) +
                        " (step size too coarse or coefficient outside its smoothness class)");
        }
    });
    return flow;
}

FlowGrid solve_flow(const CoefficientSet& coeff, const IncrementArray& b,
                    std::span<const double> x_points, std::span<const double> y_points,
                    int workers) {
    if (b.dim() != coeff.env_dim)
        throw std::invalid_argument("solve_flow: increment dimension mismatch");
    return solve_flow(coeff, b.flat(), b.grid(), x_points, y_points, workers);
}

std::size_t FlowGrid::y_index_below(double y) const {
    if (y_.size() < 2) throw std::logic_error("FlowGrid: need at least two y points");
    auto it = std::upper_bound(y_.begin(), y_.end(), y);
    std::size_t hi = static_cast<std::size_t>(it - y_.begin());
    hi = std::min(std::max<std::size_t>(hi, 1), y_.size() - 1);
    return hi - 1;
}

double FlowGrid::value_at(std::size_t it, std::size_t ix, double y) const {
    const std::size_t j = y_index_below(y);
    const double w = (y - y_[j]) / (y_[j + 1] - y_[j]);
    return (1.0 - w) * value(it, ix, j) + w * value(it, ix, j + 1);
}

FlowGrid::Derivatives FlowGrid::derivatives_at(std::size_t it, std::size_t ix, double y) const {
    if (x_.size() < 3 || ix == 0 || ix + 1 >= x_.size())
        throw std::invalid_argument(
            "FlowGrid: x-derivatives need an interior point of a 3+ point x grid");
    if (y_.size() < 3)
        throw std::invalid_argument("FlowGrid: y-derivatives need at least three y points");

    const double dx = 0.5 * (x_[ix + 1] - x_[ix - 1]);
    auto node_derivs = [&](std::size_t iy) {
        Derivatives d;
        const double dy_lo = y_[iy] - (iy > 0 ? y_[iy - 1] : y_[iy]);
        // One-sided at the y edges, central inside.
        if (iy == 0) {
            d.d_y = (value(it, ix, 1) - value(it, ix, 0)) / (y_[1] - y_[0]);
            d.d_yy = 0;
        } else if (iy + 1 == y_.size()) {
            d.d_y = (value(it, ix, iy) - value(it, ix, iy - 1)) / (y_[iy] - y_[iy - 1]);
            d.d_yy = 0;
        } else {
            const double h_lo = y_[iy] - y_[iy - 1], h_hi = y_[iy + 1] - y_[iy];
            d.d_y = (value(it, ix, iy + 1) - value(it, ix, iy - 1)) / (h_lo + h_hi);
            d.d_yy = ((value(it, ix, iy + 1) - value(it, ix, iy)) / h_hi -
                      (value(it, ix, iy) - value(it, ix, iy - 1)) / h_lo) /
                     (0.5 * (h_lo + h_hi));
        }
        d.d_x = (value(it, ix + 1, iy) - value(it, ix - 1, iy)) / (2.0 * dx);
        d.d_xx = (value(it, ix + 1, iy) - 2.0 * value(it, ix, iy) + value(it, ix - 1, iy)) /
                 (dx * dx);
        (void)dy_lo;
        return d;
    };
    auto dxy_at = [&](std::size_t iy) {
        if (iy == 0 || iy + 1 >= y_.size()) return 0.0;
        const double h2 = (y_[iy + 1] - y_[iy - 1]);
        const double right = (value(it, ix + 1, iy + 1) - value(it, ix + 1, iy - 1)) / h2;
        const double left = (value(it, ix - 1, iy + 1) - value(it, ix - 1, iy - 1)) / h2;
        return (right - left) / (2.0 * dx);
    };

    const std::size_t j = y_index_below(y);
    const double w = (y - y_[j]) / (y_[j + 1] - y_[j]);
    const auto lo = node_derivs(j);
    const auto hi = node_derivs(j + 1);
    Derivatives d;
    d.d_y = (1 - w) * lo.d_y + w * hi.d_y;
    d.d_yy = (1 - w) * lo.d_yy + w * hi.d_yy;
    d.d_x = (1 - w) * lo.d_x + w * hi.d_x;
    d.d_xx = (1 - w) * lo.d_xx + w * hi.d_xx;
    d.d_xy = (1 - w) * dxy_at(j) + w * dxy_at(j + 1);
    return d;
}

double invert_flow(const FlowGrid& flow, std::size_t it, std::size_t ix, double target) {
    const auto y = flow.y_points();
    const double lo_val = flow.value(it, ix, 0);
    const double hi_val = flow.value(it, ix, y.size() - 1);
    if (target < lo_val || target > hi_val)
        throw std::out_of_range("invert_flow: target outside the flow range; enlarge the y grid");
    double lo = y.front(), hi = y.back();
    // Monotone interpolant: plain bisection to 1e-8.
    while (hi - lo > 1e-8) {
        const double mid = 0.5 * (lo + hi);
        if (flow.value_at(it, ix, mid) < target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double transformed_driver(const FlowGrid& flow, const ModelSpec& model, std::size_t it,
                          std::size_t ix, double y, double z) {
    const auto d = flow.derivatives_at(it, ix, y);
    if (std::abs(d.d_y) < 1e-8)
        throw std::runtime_error("transformed_driver: flow derivative degenerate in y");
    const double xv[] = {flow.x_points()[ix]};
    std::vector<double> bvec(1), svec(1);
    model.coefficients.drift(xv, bvec);
    model.coefficients.diffusion(xv, svec);
    const double lam = flow.value_at(it, ix, y);
    const double generator_x = 0.5 * svec[0] * svec[0] * d.d_xx + bvec[0] * d.d_x;
    const double z_arg[] = {svec[0] * d.d_x + d.d_y * z};
    const double f_val = model.coefficients.driver(xv, lam, z_arg);
    return (f_val + generator_x + svec[0] * d.d_xy * z + 0.5 * d.d_yy * z * z) / d.d_y;
}

TransformedField transform_field(const StationaryField& field, const CoefficientSet& coeff,
                                 std::uint64_t seed, double h, std::span<const double> y_points,
                                 int workers) {
    TransformedField out;
    out.t_grid = field.t_grid;
    out.x_grid = field.x_grid;
    const std::size_t nt = field.t_grid.size(), nx = field.x_grid.size();
    out.values.resize(field.slices.size() * nt * nx);
    out.env_index.resize(field.slices.size());

    // The field's x grid may be too short for x-derivatives; the inverse only
    // needs the (t, x) columns, so pad the axis when it has fewer than the
    // three points the derivative accessors want.
    std::vector<double> x_axis(field.x_grid.begin(), field.x_grid.end());

    const TimeGrid grid = TimeGrid::from_times(0.0, field.T, h);
    std::vector<std::size_t> misses(field.slices.size(), 0);
    parallel_for(field.slices.size(), workers, [&](std::size_t e) {
        const auto& slice = field.slices[e];
        out.env_index[e] = slice.env_index;
        // Same environment stream that was reversed into the field's Bhat.
        const auto b = IncrementArray::generate(
            grid, coeff.env_dim,
            StreamKey{seed, stream_id(StreamKind::env_noise, slice.env_index)});
        const auto flow = solve_flow(coeff, b, x_axis, y_points, 1);
        for (std::size_t it = 0; it < nt; ++it) {
            const std::size_t flow_it = grid.index_of_time(field.t_grid[it]);
            for (std::size_t ix = 0; ix < nx; ++ix) {
                const double v = slice.values[it * nx + ix];
                double vt;
                try {
                    vt = invert_flow(flow, flow_it, ix, v);
                } catch (const std::out_of_range&) {
                    ++misses[e];
                    vt = std::numeric_limits<double>::quiet_NaN();
                }
                out.values[(e * nt + it) * nx + ix] = vt;
            }
        }
    });
    for (std::size_t c : misses) out.out_of_range += c;
    return out;
}

ResidualTable pde_residual(const FlowGrid& flow, const ModelSpec& model,
                           std::span<const double> vtilde) {
    const auto& grid = flow.time();
    const std::size_t nt = grid.n_steps + 1;
    const std::size_t nx = flow.x_points().size();
    if (vtilde.size() != nt * nx)
        throw std::invalid_argument("pde_residual: field table does not match the flow grid");
    if (nt < 3 || nx < 3)
        throw std::invalid_argument("pde_residual: need at least a 3x3 (t, x) grid");

    ResidualTable table;
    const double h = grid.h;
    std::vector<double> bvec(1), svec(1);
    for (std::size_t it = 1; it + 1 < nt; ++it)
        for (std::size_t ix = 1; ix + 1 < nx; ++ix) {
            const double dx =
                0.5 * (flow.x_points()[ix + 1] - flow.x_points()[ix - 1]);
            const double v = vtilde[it * nx + ix];
            const double dt_v = (vtilde[(it + 1) * nx + ix] - vtilde[(it - 1) * nx + ix]) /
                                (2.0 * h);
            const double dx_v = (vtilde[it * nx + ix + 1] - vtilde[it * nx + ix - 1]) /
                                (2.0 * dx);
            const double dxx_v = (vtilde[it * nx + ix + 1] - 2.0 * v +
                                  vtilde[it * nx + ix - 1]) /
                                 (dx * dx);
            const double xv[] = {flow.x_points()[ix]};
            model.coefficients.drift(xv, bvec);
            model.coefficients.diffusion(xv, svec);
            const double generator = 0.5 * svec[0] * svec[0] * dxx_v + bvec[0] * dx_v;
            const double ftilde =
                transformed_driver(flow, model, it, ix, v, svec[0] * dx_v);
            table.t.push_back(grid.node(it));
            table.x.push_back(flow.x_points()[ix]);
            table.residual.push_back(dt_v - generator - ftilde);
        }
    return table;
}

}  // namespace bdsde
