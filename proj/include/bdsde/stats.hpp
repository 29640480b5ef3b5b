#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bdsde {

/// Sum in fixed-size chunks: partial sums are formed per chunk and combined in
/// chunk order, so the result does not depend on how the work was scheduled.
double chunked_sum(std::span<const double> values, std::size_t chunk = 4096);

struct SampleMoments {
    std::size_t n = 0;
    double mean = 0;
    double variance = 0;  // unbiased
    double skewness = 0;
    double kurtosis = 0;  // excess
};

SampleMoments sample_moments(std::span<const double> values);

/// Mean and its standard error.
struct MeanEstimate {
    double value = 0;
    double std_error = 0;
};

MeanEstimate mean_estimate(std::span<const double> values);

double normal_cdf(double x);

struct KsResult {
    double statistic = 0;
    double p_value = 1;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// One-sample KS against N(mean, sd^2).
KsResult ks_normal(std::span<const double> a, double mean, double sd);

/// Least-squares slope of y against x.
double fit_slope(std::span<const double> x, std::span<const double> y);

}  // namespace bdsde
