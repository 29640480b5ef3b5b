#include "bdsde/regression.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "bdsde/parallel.hpp"

namespace bdsde {

namespace {

std::vector<std::vector<int>> total_degree_exponents(int dim, int degree) {
    // All monomial exponent tuples with |alpha| <= degree, graded order.
    std::vector<std::vector<int>> out;
    std::vector<int> cur(static_cast<std::size_t>(dim), 0);
    for (int total = 0; total <= degree; ++total) {
        std::function<void(int, int)> rec = [&](int pos, int remaining) {
            if (pos == dim - 1) {
                cur[static_cast<std::size_t>(pos)] = remaining;
                out.push_back(cur);
                return;
            }
            for (int e = remaining; e >= 0; --e) {
                cur[static_cast<std::size_t>(pos)] = e;
                rec(pos + 1, remaining - e);
            }
        };
        rec(0, total);
    }
    return out;
}

}  // namespace

NormalizedBasis::NormalizedBasis(BasisSpec spec, int dim, std::vector<double> lo,
                                 std::vector<double> hi)
    : spec_(std::move(spec)), dim_(dim), lo_(std::move(lo)), hi_(std::move(hi)) {
    if (dim_ < 1) throw std::invalid_argument("NormalizedBasis: dim must be >= 1");
    if (lo_.size() != static_cast<std::size_t>(dim_) || hi_.size() != lo_.size())
        throw std::invalid_argument("NormalizedBasis: box dimension mismatch");
    for (int k = 0; k < dim_; ++k)
        if (!(hi_[static_cast<std::size_t>(k)] > lo_[static_cast<std::size_t>(k)]))
            throw std::invalid_argument("NormalizedBasis: empty box extent");
    if (spec_.kind == BasisSpec::Kind::polynomial) {
        if (spec_.degree < 0) throw std::invalid_argument("NormalizedBasis: negative degree");
        exponents_ = total_degree_exponents(dim_, spec_.degree);
        size_ = exponents_.size();
    } else {
        if (dim_ != 1)
            throw std::invalid_argument("NormalizedBasis: bin basis needs a 1-d state");
        if (spec_.bin_edges.size() < 2 ||
            !std::is_sorted(spec_.bin_edges.begin(), spec_.bin_edges.end()))
            throw std::invalid_argument("NormalizedBasis: need sorted bin edges");
        size_ = spec_.bin_edges.size() - 1;
    }
}

bool NormalizedBasis::eval(std::span<const double> x, std::span<double> out,
                           bool clamp_to_box) const {
    bool clamped = false;
    if (spec_.kind == BasisSpec::Kind::piecewise_constant) {
        double v = x[0];
        const auto& e = spec_.bin_edges;
        if (v < e.front()) {
            v = e.front();
            clamped = true;
        }
        if (v > e.back()) {
            v = e.back();
            clamped = true;
        }
        std::size_t bin =
            static_cast<std::size_t>(std::upper_bound(e.begin(), e.end(), v) - e.begin());
        bin = std::min(std::max<std::size_t>(bin, 1) - 1, size_ - 1);
        for (std::size_t j = 0; j < size_; ++j) out[j] = (j == bin) ? 1.0 : 0.0;
        return clamped;
    }
    // Normalise into [-1, 1] per dimension, then evaluate monomials.
    double unit[8];
    std::vector<double> unit_dyn;
    double* u = dim_ <= 8 ? unit : (unit_dyn.resize(static_cast<std::size_t>(dim_)),
                                    unit_dyn.data());
    for (int k = 0; k < dim_; ++k) {
        const auto ks = static_cast<std::size_t>(k);
        double v = x[ks];
        if (v < lo_[ks]) {
            if (clamp_to_box) v = lo_[ks];
            clamped = true;
        } else if (v > hi_[ks]) {
            if (clamp_to_box) v = hi_[ks];
            clamped = true;
        }
        u[k] = 2.0 * (v - lo_[ks]) / (hi_[ks] - lo_[ks]) - 1.0;
    }
    for (std::size_t j = 0; j < size_; ++j) {
        double val = 1.0;
        const auto& expo = exponents_[j];
        for (int k = 0; k < dim_; ++k)
            for (int e = 0; e < expo[static_cast<std::size_t>(k)]; ++e) val *= u[k];
        out[j] = val;
    }
    return clamped;
}

NormalizedBasis NormalizedBasis::fit(BasisSpec spec, const ForwardEnsemble& ensemble,
                                     std::size_t node) {
    const int dim = ensemble.dim();
    const std::size_t m = ensemble.n_paths();
    std::vector<double> lo(static_cast<std::size_t>(dim)), hi(lo.size());
    std::vector<double> column(m);
    for (int k = 0; k < dim; ++k) {
        for (std::size_t i = 0; i < m; ++i)
            column[i] = ensemble.state(i, node)[static_cast<std::size_t>(k)];
        std::sort(column.begin(), column.end());
        const auto ks = static_cast<std::size_t>(k);
        lo[ks] = column[static_cast<std::size_t>(0.01 * static_cast<double>(m - 1))];
        hi[ks] = column[static_cast<std::size_t>(0.99 * static_cast<double>(m - 1))];
        const double centre = 0.5 * (lo[ks] + hi[ks]);
        if (!(hi[ks] - lo[ks] > 1e-12 * (1.0 + std::abs(centre)))) {
            // Degenerate sample (e.g. frozen start node): widen so the basis
            // stays well defined; the constant term still fits exactly.
            const double half = std::max(0.5, 0.5 * std::abs(centre));
            lo[ks] = centre - half;
            hi[ks] = centre + half;
        }
    }
    return NormalizedBasis(std::move(spec), dim, std::move(lo), std::move(hi));
}

Eigen::MatrixXd assemble_design(const NormalizedBasis& basis, const ForwardEnsemble& ensemble,
                                std::size_t node, int workers) {
    const std::size_t m = ensemble.n_paths();
    Eigen::MatrixXd a(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(basis.size()));
    parallel_for(m, workers, [&](std::size_t i) {
        thread_local std::vector<double> row;
        row.resize(basis.size());
        basis.eval(ensemble.state(i, node), row, /*clamp_to_box=*/false);
        for (std::size_t j = 0; j < basis.size(); ++j)
            a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
    });
    return a;
}

RegressionFactor::RegressionFactor(Eigen::MatrixXd design, double svd_tolerance)
    : design_(std::move(design)) {
    if (design_.rows() < design_.cols())
        throw std::invalid_argument("RegressionFactor: fewer rows than basis functions");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(design_, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    const double smax = s.size() > 0 ? s(0) : 0.0;
    if (!(smax > 0)) throw std::invalid_argument("RegressionFactor: all-zero design");
    u_ = svd.matrixU();
    v_ = svd.matrixV();
    inv_singular_.resize(s.size());
    double smin_kept = smax;
    for (Eigen::Index j = 0; j < s.size(); ++j) {
        if (s(j) > svd_tolerance * smax) {
            inv_singular_(j) = 1.0 / s(j);
            smin_kept = s(j);
            ++rank_;
        } else {
            inv_singular_(j) = 0.0;
        }
    }
    condition_ = smax / smin_kept;
}

RegressionResult RegressionFactor::solve(std::span<const double> responses) const {
    if (responses.size() != static_cast<std::size_t>(design_.rows()))
        throw std::invalid_argument("RegressionFactor: response length mismatch");
    Eigen::Map<const Eigen::VectorXd> y(responses.data(),
                                        static_cast<Eigen::Index>(responses.size()));
    const Eigen::VectorXd beta = v_ * inv_singular_.cwiseProduct(u_.transpose() * y).eval();
    RegressionResult r;
    r.coefficients.assign(beta.data(), beta.data() + beta.size());
    const Eigen::VectorXd resid = y - design_ * beta;
    r.residual_variance = resid.squaredNorm() / static_cast<double>(design_.rows());
    r.condition = condition_;
    r.rank = rank_;
    return r;
}

Eigen::VectorXd RegressionFactor::fitted(std::span<const double> coefficients) const {
    Eigen::Map<const Eigen::VectorXd> beta(coefficients.data(),
                                           static_cast<Eigen::Index>(coefficients.size()));
    return design_ * beta;
}

RegressionResult regress_conditional(std::span<const double> responses,
                                     std::span<const std::vector<double>> states,
                                     const NormalizedBasis& basis, double svd_tolerance) {
    if (states.size() < basis.size())
        throw std::invalid_argument("regress_conditional: fewer samples than basis functions");
    if (responses.size() != states.size())
        throw std::invalid_argument("regress_conditional: responses/states length mismatch");
    Eigen::MatrixXd a(static_cast<Eigen::Index>(states.size()),
                      static_cast<Eigen::Index>(basis.size()));
    std::vector<double> row(basis.size());
    for (std::size_t i = 0; i < states.size(); ++i) {
        basis.eval(states[i], row, /*clamp_to_box=*/false);
        for (std::size_t j = 0; j < basis.size(); ++j)
            a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
    }
    return RegressionFactor(std::move(a), svd_tolerance).solve(responses);
}

}  // namespace bdsde
