#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bdsde/regression.hpp"

namespace bdsde {

struct SolverConfig {
    std::size_t paths = 10000;
    BasisSpec basis;
    int implicit_iterations = 0;     // fixed-point refinements of f at the left node
    double svd_tolerance = 1e-10;
    double truncation_bound = 1e6;   // regressed values are clamped to +/- this
    bool allow_design_deficit = false;  // waive the paths >= 10 * basis-size heuristic
    bool override_assumptions = false;  // solve even when margin conditions fail
    int workers = 1;
};

/// Terminal condition h : R^d -> R.
using TerminalFn = std::function<double(std::span<const double>)>;

/// Grid solution of the backward equation for one fixed environmental path:
/// per-node regression coefficients representing Y_{t_i}(.) and Z_{t_i}(.).
class BackwardSolution {
  public:
    struct NodeFit {
        std::vector<double> y_coef;
        std::vector<std::vector<double>> z_coef;  // one vector per state dimension
        double residual_variance = 0;
        double condition = 0;
    };

    struct Value {
        double y = 0;
        std::vector<double> z;
        bool extrapolated = false;
    };

    const TimeGrid& grid() const { return grid_; }
    std::size_t first_node() const { return first_node_; }
    std::size_t last_node() const { return grid_.n_steps; }
    const IncrementArray& env_increments() const { return bhat_; }
    std::size_t truncation_events() const { return truncation_events_; }
    const std::vector<std::string>& warnings() const { return warnings_; }
    const NodeFit& node_fit(std::size_t node) const { return fits_.at(node - first_node_); }
    const NormalizedBasis& node_basis(std::size_t node) const {
        return bases_.at(node - first_node_);
    }

    /// Evaluate (Y, Z) at a grid node. Points outside the node's basis box are
    /// clamped to the boundary and flagged; `clamp = false` extrapolates the
    /// fitted polynomial instead (the right mode for in-sample design points).
    Value evaluate(std::size_t node, std::span<const double> x, bool clamp = true) const;
    Value evaluate_at_time(double t, std::span<const double> x) const;

    /// Allocation-free evaluation for hot loops. `phi_scratch` must hold
    /// node_basis(node).size() values and `z_out` one value per state
    /// dimension.
    double evaluate_into(std::size_t node, std::span<const double> x, bool clamp,
                         std::span<double> phi_scratch, std::span<double> z_out) const;

    /// Per-node coefficient tables plus a manifest line per node.
    void write_csv(const std::filesystem::path& path) const;

  private:
    BackwardSolution(TimeGrid grid, std::size_t first_node, IncrementArray bhat)
        : grid_(grid), first_node_(first_node), bhat_(std::move(bhat)) {}

    friend BackwardSolution solve_finite_horizon(const ModelSpec&, const TimeGrid&,
                                                 const TerminalFn&, const ForwardEnsemble&,
                                                 const IncrementArray&, const SolverConfig&);
    TimeGrid grid_;
    std::size_t first_node_ = 0;
    IncrementArray bhat_;
    std::vector<NodeFit> fits_;          // nodes first_node_ .. n_steps
    std::vector<NormalizedBasis> bases_;
    std::size_t truncation_events_ = 0;
    std::vector<std::string> warnings_;
};

/// Least-squares Monte Carlo solve of the backward equation on the ensemble
/// grid, driven by one environmental increment path. The recursion runs from
/// the terminal node down to the ensemble start:
///   Z_i = (1/h) E_i[ Y_{i+1} dW_i ]          (mean-centred responses)
///   Y_i = E_i[ Y_{i+1} + h f(X_{i+1}, Y_{i+1}, Z_{i+1}) ] - <E_i[g], dBhat_i>
/// with optional implicit refinements of f at the left node. dBhat_i is known
/// at node i: the filtration carries the whole future of the environmental
/// path, which is what makes the backward integral well defined.
BackwardSolution solve_finite_horizon(const ModelSpec& model, const TimeGrid& grid,
                                      const TerminalFn& terminal,
                                      const ForwardEnsemble& forward,
                                      const IncrementArray& bhat, const SolverConfig& config);

struct ContractionCheck {
    std::vector<double> node_time;
    std::vector<double> lhs;        // E[ e^{-K t_i} |dY_i|^2 ]
    std::vector<double> lhs_se;
    double rhs = 0;                 // E[ e^{-K T} |dY_T|^2 ]
    double rhs_se = 0;
    double slack = 0;               // c*h + 3 * combined std errors (largest node)
    bool pass = true;               // lhs <= rhs * (1 + slack) at every node
};

/// Uniqueness-estimate check: solve twice with shared noise for two terminal
/// conditions and compare the weighted second moments of the difference.
ContractionCheck contraction_check(const ModelSpec& model, const TimeGrid& grid,
                                   const TerminalFn& h1, const TerminalFn& h2,
                                   std::span<const double> x, double K, std::uint64_t seed,
                                   const SolverConfig& config);

}  // namespace bdsde
