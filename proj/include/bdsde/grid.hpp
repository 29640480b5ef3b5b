#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace bdsde {

/// Uniform time grid. Nodes live on the global lattice {k*h : k in Z} and are
/// addressed by the lattice step of the first node, so two grids with the same
/// pitch produce bit-identical node values where they overlap.
struct TimeGrid {
    double h = 0.0;
    long long first_step = 0;
    std::size_t n_steps = 0;

    double t0() const { return static_cast<double>(first_step) * h; }
    double node(std::size_t i) const {
        return static_cast<double>(first_step + static_cast<long long>(i)) * h;
    }
    double horizon() const { return node(n_steps); }
    double length() const { return static_cast<double>(n_steps) * h; }

    /// Lattice step of node i.
    long long step_of(std::size_t i) const { return first_step + static_cast<long long>(i); }

    /// Local node index of a lattice step; throws if outside the grid.
    std::size_t index_of_step(long long step) const {
        if (step < first_step || step > first_step + static_cast<long long>(n_steps))
            throw std::out_of_range("TimeGrid: lattice step " + std::to_string(step) +
                                    " outside grid");
        return static_cast<std::size_t>(step - first_step);
    }

    /// Local node index of time t; t must sit on a grid node (within one ulp scale).
    std::size_t index_of_time(double t) const { return index_of_step(lattice_step(t, h)); }

    bool contains_time(double t) const {
        const long long k = std::llround(t / h);
        if (std::abs(static_cast<double>(k) * h - t) > 4.0 * 1e-12 * (1.0 + std::abs(t)))
            return false;
        return k >= first_step && k <= first_step + static_cast<long long>(n_steps);
    }

    static long long lattice_step(double t, double h) {
        const long long k = std::llround(t / h);
        if (std::abs(static_cast<double>(k) * h - t) > 4.0 * 1e-12 * (1.0 + std::abs(t)))
            throw std::invalid_argument("time " + std::to_string(t) +
                                        " is not on the lattice with pitch " + std::to_string(h));
        return k;
    }

    /// Grid covering [t0, T] with pitch h; both endpoints must be lattice times.
    static TimeGrid from_times(double t0, double T, double h) {
        if (!(h > 0.0)) throw std::invalid_argument("TimeGrid: step size must be positive");
        if (!(T > t0)) throw std::invalid_argument("TimeGrid: empty time interval");
        const long long k0 = lattice_step(t0, h);
        const long long k1 = lattice_step(T, h);
        return TimeGrid{h, k0, static_cast<std::size_t>(k1 - k0)};
    }

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

}  // namespace bdsde
