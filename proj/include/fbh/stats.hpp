#pragma once

#include <vector>

namespace fbh::stats {

double mean(const std::vector<double>& v);
double variance(const std::vector<double>& v);  // unbiased
double kurtosis(const std::vector<double>& v);  // m4 / m2²

double normal_cdf(double x);  // standard normal
double normal_pdf(double x);

/// Kolmogorov distribution tail Q(λ) = 2 Σ (-1)^{k-1} e^{-2k²λ²}.
double kolmogorov_q(double lambda);

struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
};

/// One-sample KS against N(0, variance).
KsResult ks_test_gaussian(std::vector<double> samples, double variance);
/// Two-sample KS.
KsResult ks_test_two_sample(std::vector<double> a, std::vector<double> b);

/// Anderson-Darling normality statistic with estimated mean/variance,
/// small-sample modified (A*²); the 1% critical value is 1.035.
double anderson_darling_normal(std::vector<double> samples);

}  // namespace fbh::stats
