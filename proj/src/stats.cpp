#include "bdsde/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bdsde {

double chunked_sum(std::span<const double> values, std::size_t chunk) {
    if (chunk == 0) chunk = 1;
    double total = 0.0;
    for (std::size_t start = 0; start < values.size(); start += chunk) {
        const std::size_t end = std::min(values.size(), start + chunk);
        double part = 0.0;
        for (std::size_t i = start; i < end; ++i) part += values[i];
        total += part;
    }
    return total;
}

SampleMoments sample_moments(std::span<const double> values) {
    SampleMoments m;
    m.n = values.size();
    if (m.n == 0) return m;
    m.mean = chunked_sum(values) / static_cast<double>(m.n);
    if (m.n < 2) return m;
    double s2 = 0, s3 = 0, s4 = 0;
    for (double v : values) {
        const double d = v - m.mean;
        s2 += d * d;
        s3 += d * d * d;
        s4 += d * d * d * d;
    }
    const double n = static_cast<double>(m.n);
    m.variance = s2 / (n - 1.0);
    const double sd = std::sqrt(s2 / n);
    if (sd > 0) {
        m.skewness = (s3 / n) / (sd * sd * sd);
        m.kurtosis = (s4 / n) / (sd * sd * sd * sd) - 3.0;
    }
    return m;
}

MeanEstimate mean_estimate(std::span<const double> values) {
    const auto m = sample_moments(values);
    MeanEstimate e;
    e.value = m.mean;
    e.std_error = m.n > 1 ? std::sqrt(m.variance / static_cast<double>(m.n)) : 0.0;
    return e;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

namespace {

double ks_p_value(double d, double n_eff) {
    if (d <= 0) return 1.0;
    const double sqn = std::sqrt(n_eff);
    const double lambda = (sqn + 0.12 + 0.11 / sqn) * d;
    double sum = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(-2.0 * lambda * lambda * j * j);
        sum += sign * term;
        sign = -sign;
        if (term < 1e-16) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

}  // namespace

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
    std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    const double na = static_cast<double>(sa.size());
    const double nb = static_cast<double>(sb.size());
    std::size_t ia = 0, ib = 0;
    double d = 0.0;
    while (ia < sa.size() && ib < sb.size()) {
        const double va = sa[ia], vb = sb[ib];
        if (va <= vb) ++ia;
        if (vb <= va) ++ib;
        d = std::max(d, std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
    }
    KsResult r;
    r.statistic = d;
    r.p_value = ks_p_value(d, na * nb / (na + nb));
    return r;
}

KsResult ks_normal(std::span<const double> a, double mean, double sd) {
    if (a.empty()) throw std::invalid_argument("ks_normal: empty sample");
    if (!(sd > 0)) throw std::invalid_argument("ks_normal: sd must be positive");
    std::vector<double> s(a.begin(), a.end());
    std::sort(s.begin(), s.end());
    const double n = static_cast<double>(s.size());
    double d = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double f = normal_cdf((s[i] - mean) / sd);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    KsResult r;
    r.statistic = d;
    r.p_value = ks_p_value(d, n);
    return r;
}

double fit_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_slope: bad input");
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0) throw std::invalid_argument("fit_slope: degenerate abscissae");
    return sxy / sxx;
}

}  // namespace bdsde
