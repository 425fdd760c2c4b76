#include "fbh/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fbh::stats {

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / v.size();
}

double variance(const std::vector<double>& v) {
  if (v.size() < 2) throw std::invalid_argument("variance needs >= 2 samples");
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / (v.size() - 1);
}

double kurtosis(const std::vector<double>& v) {
  const double m = mean(v);
  double m2 = 0.0, m4 = 0.0;
  for (double x : v) {
    const double d = x - m;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= v.size();
  m4 /= v.size();
  return m4 / (m2 * m2);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

double kolmogorov_q(double lambda) {
  if (lambda < 1e-8) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 101; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

KsResult ks_test_gaussian(std::vector<double> samples, double variance) {
  std::sort(samples.begin(), samples.end());
  const double sd = std::sqrt(variance);
  const std::size_t n = samples.size();
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = normal_cdf(samples[i] / sd);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  const double rn = std::sqrt(static_cast<double>(n));
  KsResult r;
  r.statistic = d;
  r.p_value = kolmogorov_q((rn + 0.12 + 0.11 / rn) * d);
  return r;
}

KsResult ks_test_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() -
                             static_cast<double>(j) / b.size()));
  }
  const double ne = static_cast<double>(a.size()) * b.size() / (a.size() + b.size());
  const double rn = std::sqrt(ne);
  KsResult r;
  r.statistic = d;
  r.p_value = kolmogorov_q((rn + 0.12 + 0.11 / rn) * d);
  return r;
}

double anderson_darling_normal(std::vector<double> samples) {
  const std::size_t n = samples.size();
  if (n < 8) throw std::invalid_argument("anderson_darling needs >= 8 samples");
  const double m = mean(samples);
  const double sd = std::sqrt(variance(samples));
  std::sort(samples.begin(), samples.end());
  double a2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double fi = std::clamp(normal_cdf((samples[i] - m) / sd), 1e-15, 1.0 - 1e-15);
    const double fj =
        std::clamp(normal_cdf((samples[n - 1 - i] - m) / sd), 1e-15, 1.0 - 1e-15);
    a2 += (2.0 * i + 1.0) * (std::log(fi) + std::log1p(-fj));
  }
  a2 = -static_cast<double>(n) - a2 / n;
  // Stephens' modification for estimated parameters
  return a2 * (1.0 + 0.75 / n + 2.25 / (n * n));
}

}  // namespace fbh::stats
