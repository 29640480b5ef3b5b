#include "bdsde/model.hpp"

#include <cmath>
#include <stdexcept>

#include "bdsde/parallel.hpp"

namespace bdsde {

void CoefficientSet::env_coeff_dy_or_fd(std::span<const double> x, double y,
                                        std::span<double> out) const {
    if (env_coeff_dy) {
        env_coeff_dy(x, y, out);
        return;
    }
    const double step = 1e-5 * (1.0 + std::abs(y));
    std::vector<double> hi(out.size()), lo(out.size());
    env_coeff(x, y + step, hi);
    env_coeff(x, y - step, lo);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = (hi[j] - lo[j]) / (2.0 * step);
}

namespace {

void require_finite(double v, const char* name) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(name) + " is not finite");
}

}  // namespace

AssumptionReport check_assumptions(const AssumptionConstants& c) {
    require_finite(c.mu, "mu");
    require_finite(c.K, "K");
    require_finite(c.Kprime, "Kprime");
    require_finite(c.p, "p");
    require_finite(c.C0, "C0");
    require_finite(c.C1, "C1");
    require_finite(c.C, "C");
    require_finite(c.alpha, "alpha");
    require_finite(c.L, "L");

    AssumptionReport r;
    auto add = [&r](std::string name, std::string expr, double lhs, bool pass, bool structural) {
        r.conditions.push_back({std::move(name), std::move(expr), lhs, pass, structural});
    };

    const double p = c.p;
    add("moment_order", "p - (d + 2) > 0", p - (c.d + 2), p > c.d + 2, true);
    add("weight_window", "min(K' - K, 2K - K') > 0",
        std::min(c.Kprime - c.K, 2.0 * c.K - c.Kprime),
        c.K < c.Kprime && c.Kprime < 2.0 * c.K, true);
    // Two published forms of the margin condition; both are reported, the
    // solvers gate on the weaker one and the CLI warns when they disagree.
    const double margin_strong = 2.0 * c.mu - 0.5 * p * c.Kprime - 0.5 * p * (p + 1.0) * c.C;
    add("margin_strong", "2mu - (p/2)K' - (p(p+1)/2)C > 0", margin_strong, margin_strong > 0,
        false);
    const double margin_weak = 2.0 * c.mu - c.Kprime - 0.5 * p * (p + 1.0) * c.C;
    add("margin_weak", "2mu - K' - (p(p+1)/2)C > 0", margin_weak, margin_weak > 0, false);
    const double forward_margin = c.K - p * c.L - 0.5 * p * (p - 1.0) * c.L * c.L;
    add("forward_margin", "K - pL - (p(p-1)/2)L^2 > 0", forward_margin, forward_margin > 0,
        false);
    add("env_z_lipschitz", "0 <= alpha < 1/2", 0.5 - c.alpha, c.alpha >= 0 && c.alpha < 0.5,
        true);
    return r;
}

bool AssumptionReport::all_pass() const {
    for (const auto& c : conditions)
        if (!c.pass) return false;
    return true;
}

bool AssumptionReport::structural_pass() const {
    for (const auto& c : conditions)
        if (c.structural && !c.pass) return false;
    return true;
}

bool AssumptionReport::gate_pass() const { return by_name("margin_weak").pass; }

const ConditionResult& AssumptionReport::by_name(const std::string& name) const {
    for (const auto& c : conditions)
        if (c.name == name) return c;
    throw std::out_of_range("no condition named " + name);
}

void ModelSpec::validate_structure() const {
    if (constants.d != coefficients.state_dim || constants.l != coefficients.env_dim)
        throw std::invalid_argument("ModelSpec: constants and coefficients disagree on (d, l)");
    if (!coefficients.drift || !coefficients.diffusion || !coefficients.driver ||
        !coefficients.env_coeff)
        throw std::invalid_argument("ModelSpec: all of b, sigma, f, g must be supplied");
    const auto report = check_assumptions(constants);
    if (!report.structural_pass())
        throw std::invalid_argument("ModelSpec: structural assumption conditions failed");
}

namespace {

struct ProbeDraw {
    std::vector<double> x, z;
    double y1 = 0, y2 = 0;
};

double box_coord(double u, double lo, double hi) { return lo + u * (hi - lo); }

ProbeDraw draw_point(const DomainBox& box, int d, StreamKey key, std::int64_t idx) {
    ProbeDraw pt;
    pt.x.resize(static_cast<std::size_t>(d));
    pt.z.resize(static_cast<std::size_t>(d));
    std::uint32_t comp = 0;
    for (int k = 0; k < d; ++k)
        pt.x[static_cast<std::size_t>(k)] =
            box_coord(uniform_at(key, idx, comp++), box.lo[static_cast<std::size_t>(k)],
                      box.hi[static_cast<std::size_t>(k)]);
    for (int k = 0; k < d; ++k)
        pt.z[static_cast<std::size_t>(k)] =
            box_coord(uniform_at(key, idx, comp++), box.z_lo, box.z_hi);
    pt.y1 = box_coord(uniform_at(key, idx, comp++), box.y_lo, box.y_hi);
    pt.y2 = box_coord(uniform_at(key, idx, comp++), box.y_lo, box.y_hi);
    return pt;
}

void check_box(const DomainBox& box, int d) {
    if (box.lo.size() != static_cast<std::size_t>(d) ||
        box.hi.size() != static_cast<std::size_t>(d))
        throw std::invalid_argument("domain box dimension mismatch");
    for (int k = 0; k < d; ++k)
        if (!(box.hi[static_cast<std::size_t>(k)] > box.lo[static_cast<std::size_t>(k)]))
            throw std::invalid_argument("domain box has empty extent");
    if (!(box.y_hi > box.y_lo) || !(box.z_hi > box.z_lo))
        throw std::invalid_argument("domain box has empty y/z extent");
}

}  // namespace

std::vector<MonotonicityViolation> probe_monotonicity(const CoefficientSet& coeff, double mu,
                                                      const DomainBox& box,
                                                      std::size_t n_samples, std::uint64_t seed,
                                                      int workers, double tol) {
    if (n_samples == 0) throw std::invalid_argument("probe_monotonicity: n_samples must be >= 1");
    check_box(box, coeff.state_dim);
    const int nw = std::max(1, workers);
    std::vector<std::vector<MonotonicityViolation>> per_worker(static_cast<std::size_t>(nw));

    // Draws are keyed by the global sample index, and each worker owns a
    // contiguous range, so the violation list is identical for any worker count.
    const StreamKey key{seed, stream_id(StreamKind::probe, 0)};
    parallel_for(nw, nw, [&](std::size_t w) {
        const std::size_t begin = w * n_samples / static_cast<std::size_t>(nw);
        const std::size_t end = (w + 1) * n_samples / static_cast<std::size_t>(nw);
        for (std::size_t i = begin; i < end; ++i) {
            const auto pt = draw_point(box, coeff.state_dim, key, static_cast<std::int64_t>(i));
            const double f1 = coeff.driver(pt.x, pt.y1, pt.z);
            const double f2 = coeff.driver(pt.x, pt.y2, pt.z);
            if (!std::isfinite(f1) || !std::isfinite(f2))
                throw std::runtime_error("probe_monotonicity: driver returned non-finite value at y=" +
                                         std::to_string(!std::isfinite(f1) ? pt.y1 : pt.y2));
            const double gap = pt.y1 - pt.y2;
            const double lhs = gap * (f1 - f2);
            const double bound = -mu * gap * gap;
            if (lhs > bound + tol)
                per_worker[w].push_back({pt.x, pt.y1, pt.y2, pt.z, lhs, bound});
        }
    });

    std::vector<MonotonicityViolation> out;
    for (auto& v : per_worker) out.insert(out.end(), v.begin(), v.end());
    return out;
}

LipschitzProbe probe_lipschitz(
    const std::function<double(std::span<const double>, double, std::span<const double>)>& fn,
    double C0, double C1, double C, const DomainBox& box, std::size_t n_samples,
    std::uint64_t seed, int workers) {
    if (n_samples == 0) throw std::invalid_argument("probe_lipschitz: n_samples must be >= 1");
    const int d = static_cast<int>(box.lo.size());
    check_box(box, d);
    const int nw = std::max(1, workers);
    std::vector<LipschitzProbe> per_worker(static_cast<std::size_t>(nw));

    auto ratio = [&](const ProbeDraw& a, const ProbeDraw& b) {
        const double fa = fn(a.x, a.y1, a.z);
        const double fb = fn(b.x, b.y1, b.z);
        if (!std::isfinite(fa) || !std::isfinite(fb))
            throw std::runtime_error("probe_lipschitz: function returned non-finite value");
        double dx2 = 0, dz2 = 0;
        for (int k = 0; k < d; ++k) {
            const auto ks = static_cast<std::size_t>(k);
            dx2 += (a.x[ks] - b.x[ks]) * (a.x[ks] - b.x[ks]);
            dz2 += (a.z[ks] - b.z[ks]) * (a.z[ks] - b.z[ks]);
        }
        const double dy2 = (a.y1 - b.y1) * (a.y1 - b.y1);
        const double denom = C0 * dx2 + C1 * dy2 + C * dz2;
        if (denom <= 0) return 0.0;
        return (fa - fb) * (fa - fb) / denom;
    };

    const StreamKey key{seed, stream_id(StreamKind::probe, 1)};
    parallel_for(nw, nw, [&](std::size_t w) {
        const std::size_t begin = w * n_samples / static_cast<std::size_t>(nw);
        const std::size_t end = (w + 1) * n_samples / static_cast<std::size_t>(nw);
        LipschitzProbe& acc = per_worker[w];
        for (std::size_t i = begin; i < end; ++i) {
            auto a = draw_point(box, d, key, static_cast<std::int64_t>(2 * i));
            auto b = draw_point(box, d, key, static_cast<std::int64_t>(2 * i + 1));
            acc.worst_ratio = std::max(acc.worst_ratio, ratio(a, b));
            // Axis-aligned perturbations reuse a's coordinates except one slot.
            ProbeDraw bx = a;
            bx.x = b.x;
            acc.worst_ratio_x = std::max(acc.worst_ratio_x, ratio(a, bx));
            ProbeDraw by = a;
            by.y1 = b.y1;
            acc.worst_ratio_y = std::max(acc.worst_ratio_y, ratio(a, by));
            ProbeDraw bz = a;
            bz.z = b.z;
            acc.worst_ratio_z = std::max(acc.worst_ratio_z, ratio(a, bz));
        }
    });

    LipschitzProbe out;
    for (const auto& p : per_worker) {
        out.worst_ratio = std::max(out.worst_ratio, p.worst_ratio);
        out.worst_ratio_x = std::max(out.worst_ratio_x, p.worst_ratio_x);
        out.worst_ratio_y = std::max(out.worst_ratio_y, p.worst_ratio_y);
        out.worst_ratio_z = std::max(out.worst_ratio_z, p.worst_ratio_z);
    }
    return out;
}

namespace {

void fill_diag(std::span<double> out, int d, double value) {
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            out[static_cast<std::size_t>(i * d + j)] = (i == j) ? value : 0.0;
}

std::vector<double> padded(std::vector<double> v, std::size_t n) {
    v.resize(n, 0.0);
    return v;
}

}  // namespace

CoefficientSet make_linear_coefficients(const LinearModelParams& p) {
    CoefficientSet c;
    c.state_dim = p.d;
    c.env_dim = p.l;
    const auto g0 = padded(p.g0, static_cast<std::size_t>(p.l));
    const auto g1 = padded(p.g1, static_cast<std::size_t>(p.l));
    c.drift = [p](std::span<const double> x, std::span<double> out) {
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = p.b0 - p.b1 * x[k];
    };
    c.diffusion = [p](std::span<const double>, std::span<double> out) {
        fill_diag(out, p.d, p.s0);
    };
    c.driver = [p](std::span<const double>, double y, std::span<const double> z) {
        double v = p.a - p.mu * y;
        if (p.cz != 0)
            for (double zk : z) v += p.cz * zk;
        return v;
    };
    c.env_coeff = [g0, g1](std::span<const double>, double y, std::span<double> out) {
        for (std::size_t j = 0; j < out.size(); ++j) out[j] = g0[j] + g1[j] * y;
    };
    c.env_coeff_dy = [g1](std::span<const double>, double, std::span<double> out) {
        for (std::size_t j = 0; j < out.size(); ++j) out[j] = g1[j];
    };
    return c;
}

CoefficientSet make_cubic_coefficients(const CubicModelParams& p) {
    CoefficientSet c = make_linear_coefficients(p.base);
    const LinearModelParams base = p.base;
    const double cubic = p.cubic;
    c.driver = [base, cubic](std::span<const double>, double y, std::span<const double> z) {
        double v = base.a - base.mu * y - cubic * y * y * y;
        if (base.cz != 0)
            for (double zk : z) v += base.cz * zk;
        return v;
    };
    return c;
}

CoefficientSet make_polynomial_coefficients(const PolynomialModelParams& p) {
    CoefficientSet c;
    c.state_dim = p.d;
    c.env_dim = p.l;
    const auto fx = padded(p.fx, static_cast<std::size_t>(p.d));
    const auto fz = padded(p.fz, static_cast<std::size_t>(p.d));
    auto horner = [](const std::vector<double>& coef, double y) {
        double v = 0;
        for (std::size_t k = coef.size(); k-- > 0;) v = v * y + coef[k];
        return v;
    };
    c.drift = [p](std::span<const double> x, std::span<double> out) {
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = p.b0 - p.b1 * x[k];
    };
    c.diffusion = [p](std::span<const double>, std::span<double> out) {
        fill_diag(out, p.d, p.s0);
    };
    c.driver = [p, fx, fz, horner](std::span<const double> x, double y,
                                   std::span<const double> z) {
        double v = horner(p.fy, y);
        for (std::size_t k = 0; k < x.size(); ++k) v += fx[k] * x[k];
        for (std::size_t k = 0; k < z.size(); ++k) v += fz[k] * z[k];
        return v;
    };
    c.env_coeff = [p, horner](std::span<const double>, double y, std::span<double> out) {
        for (std::size_t j = 0; j < out.size(); ++j)
            out[j] = j < p.gy.size() ? horner(p.gy[j], y) : 0.0;
    };
    return c;
}

}  // namespace bdsde
