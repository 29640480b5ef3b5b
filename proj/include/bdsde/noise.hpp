#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "bdsde/grid.hpp"
#include "bdsde/rng.hpp"

namespace bdsde {

/// Discretised Brownian increments on a uniform grid. Entry i is the vector
/// increment over [node(i), node(i+1)].
///
/// An array carries its provenance: entry i regenerates as
///     sign * sqrt(h) * normal(key, origin + dir*i, component),
/// which makes time reversal an exact flip (dir, sign negated) and time shift
/// an exact re-windowing (origin moved). Both are involutions/semigroups at
/// the bit level, and any window of the underlying two-sided process is
/// available through `window()`.
class IncrementArray {
  public:
    static IncrementArray generate(const TimeGrid& grid, int dim, StreamKey key);
    static IncrementArray from_provenance(const TimeGrid& grid, int dim, StreamKey key,
                                          long long origin, int dir, double sign) {
        return IncrementArray(grid, dim, key, origin, dir, sign);
    }

    /// Increments of the reversed path s -> B_{T-s} - B_T. Requires the grid
    /// to cover [0, T] exactly.
    IncrementArray reversed(double T) const;

    /// Increments of the shifted path s -> B_{s+r} - B_r, r = r_steps * h.
    /// Only forward shifts are exposed.
    IncrementArray shifted(long long r_steps) const;

    /// Re-materialise this process on another grid with the same pitch,
    /// extending past the original window where needed.
    IncrementArray window(const TimeGrid& target) const;

    const TimeGrid& grid() const { return grid_; }
    int dim() const { return dim_; }
    StreamKey key() const { return key_; }
    long long origin() const { return origin_; }
    int direction() const { return dir_; }
    double sign() const { return sign_; }

    std::span<const double> at(std::size_t i) const {
        return {data_.data() + i * static_cast<std::size_t>(dim_),
                static_cast<std::size_t>(dim_)};
    }
    double value(std::size_t i, int c) const {
        return data_[i * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(c)];
    }
    std::span<const double> flat() const { return data_; }

    /// Increment over an absolute lattice step, independent of this array's window.
    double value_at_step(long long lattice_step, int c) const;

    /// Path value at node i, summed from the window start: entry 0 of the
    /// cumulative path is always 0.
    std::vector<double> cumulative(std::size_t i) const;

    void write_csv(std::ostream& os) const;
    static IncrementArray read_csv(std::istream& is);
    void write_binary(std::ostream& os) const;
    static IncrementArray read_binary(std::istream& is);

    friend bool operator==(const IncrementArray& a, const IncrementArray& b) {
        return a.grid_ == b.grid_ && a.dim_ == b.dim_ && a.key_ == b.key_ &&
               a.origin_ == b.origin_ && a.dir_ == b.dir_ && a.sign_ == b.sign_ &&
               a.data_ == b.data_;
    }

  private:
    IncrementArray(const TimeGrid& grid, int dim, StreamKey key, long long origin, int dir,
                   double sign);

    TimeGrid grid_;
    int dim_ = 0;
    StreamKey key_;
    long long origin_ = 0;
    int dir_ = 1;
    double sign_ = 1.0;
    std::vector<double> data_;  // n_steps x dim, row-major
};

// Operation-style spellings.
IncrementArray generate_increments(const TimeGrid& grid, int dim, std::uint64_t seed,
                                   std::uint64_t stream);
IncrementArray reverse_path(const IncrementArray& b, double T);
IncrementArray shift_increments(const IncrementArray& arr, long long r_steps);

/// Replace the driving path by its moving average over `window_steps` steps
/// and return the increments of the smoothed path. Used only by the PDE
/// residual diagnostic; the result has no generative provenance.
std::vector<double> mollified_path(const IncrementArray& arr, std::size_t window_steps, int c);

}  // namespace bdsde
