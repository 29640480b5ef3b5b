#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "bdsde/forward.hpp"

namespace bdsde {

struct BasisSpec {
    enum class Kind { polynomial, piecewise_constant };
    Kind kind = Kind::polynomial;
    int degree = 1;                 // polynomial: total degree
    std::vector<double> bin_edges;  // piecewise-constant (1-d state only)
};

/// Basis functions over a normalisation box. Polynomial bases are monomials in
/// the per-dimension affine map of the box onto [-1, 1]; evaluation points
/// outside the box are clamped to its boundary and flagged as extrapolation.
class NormalizedBasis {
  public:
    NormalizedBasis(BasisSpec spec, int dim, std::vector<double> lo, std::vector<double> hi);

    std::size_t size() const { return size_; }
    int dim() const { return dim_; }
    const BasisSpec& spec() const { return spec_; }
    std::span<const double> box_lo() const { return lo_; }
    std::span<const double> box_hi() const { return hi_; }

    /// Fills `out` (size() values); returns true when x lies outside the box.
    /// Fitting uses the raw normalised coordinate (`clamp_to_box = false`) so
    /// polynomials stay polynomials at tail samples; evaluation clamps.
    bool eval(std::span<const double> x, std::span<double> out,
              bool clamp_to_box = true) const;

    /// Box from the 1st/99th percentile of the sample per dimension, widened
    /// when degenerate (all samples in one point).
    static NormalizedBasis fit(BasisSpec spec, const ForwardEnsemble& ensemble,
                               std::size_t node);

  private:
    BasisSpec spec_;
    int dim_;
    std::size_t size_;
    std::vector<double> lo_, hi_;
    std::vector<std::vector<int>> exponents_;  // polynomial only
};

/// Design matrix of a basis over the ensemble states at one node.
/// `workers <= 1` is the serial reference; rows are disjoint so the parallel
/// fill is bit-identical to it.
Eigen::MatrixXd assemble_design(const NormalizedBasis& basis, const ForwardEnsemble& ensemble,
                                std::size_t node, int workers = 1);

struct RegressionResult {
    std::vector<double> coefficients;
    double residual_variance = 0;
    double condition = 0;  // ratio of largest to smallest retained singular value
    int rank = 0;
};

/// One SVD of a design, reusable across many response vectors at the same node.
class RegressionFactor {
  public:
    RegressionFactor(Eigen::MatrixXd design, double svd_tolerance);

    RegressionResult solve(std::span<const double> responses) const;
    Eigen::VectorXd fitted(std::span<const double> coefficients) const;  // design * coef
    double condition() const { return condition_; }
    int rank() const { return rank_; }
    std::size_t n_rows() const { return static_cast<std::size_t>(design_.rows()); }

  private:
    Eigen::MatrixXd design_;
    Eigen::MatrixXd u_, v_;
    Eigen::VectorXd inv_singular_;
    double condition_ = 0;
    int rank_ = 0;
};

/// Least-squares conditional expectation: project responses onto the basis
/// evaluated at the design states. Singular values below
/// svd_tolerance * s_max are zeroed.
RegressionResult regress_conditional(std::span<const double> responses,
                                     std::span<const std::vector<double>> states,
                                     const NormalizedBasis& basis, double svd_tolerance = 1e-10);

}  // namespace bdsde
