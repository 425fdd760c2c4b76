#include "fbh/parametrix.hpp"

#include <cmath>

#include "fbh/errors.hpp"
#include "fbh/quadrature.hpp"

namespace fbh {

namespace {

inline double gamma_free(double tau, double r) {
  return std::exp(-r * r / (2.0 * tau)) / std::sqrt(2.0 * M_PI * tau);
}

}  // namespace

ParametrixKernel::ParametrixKernel(const DomainSpec& domain, double t_max, int max_terms,
                                   int table_size)
    : beta_(domain.beta), t_max_(t_max), max_terms_(max_terms), table_size_(table_size) {
  if (domain.kind != DomainKind::Interval)
    throw CapabilityError(
        "parametrix kernel is implemented on the interval; use the spectral kernel in d=2");
  if (!(t_max > 0.0) || t_max > 0.25 + 1e-12)
    throw ConfigError("parametrix t_max must lie in (0, 0.25]");
  if (max_terms < 0 || max_terms > 8) throw ConfigError("parametrix supports <= 8 terms");

  rho_.resize(table_size_);
  const double rmax = std::sqrt(t_max_);
  for (int k = 0; k < table_size_; ++k)
    rho_[k] = rmax * static_cast<double>(k) / (table_size_ - 1);

  // M_n for n >= 2 sampled against rho = sqrt(tau); M_n is bounded there while
  // M_1 keeps its integrable tau^{-1/2} diagonal analytically.
  tables_.assign(std::max(0, max_terms_ - 1),
                 std::vector<std::vector<double>>(2, std::vector<double>(table_size_, 0.0)));
  for (int n = 2; n <= max_terms_; ++n) {
    for (int pair = 0; pair < 2; ++pair) {
      for (int k = 1; k < table_size_; ++k) {
        const double tau = rho_[k] * rho_[k];
        tables_[n - 2][pair][k] = convolve_m(n, tau, pair == 0);
      }
      tables_[n - 2][pair][0] = 0.0;
      if (n == 2 && pair == 0) tables_[0][0][0] = 0.5 * beta_ * beta_;  // limit of M1⋆M1
    }
  }
}

double ParametrixKernel::m1(double tau, bool same) const {
  if (same) return -beta_ * gamma_free(tau, 0.0);
  // opposite endpoints: inward-normal derivative (1/τ)Γ(τ,1) minus βΓ(τ,1)
  const double g = gamma_free(tau, 1.0);
  return g / tau - beta_ * g;
}

double ParametrixKernel::mn(int n, double tau, bool same) const {
  if (n == 1) return m1(tau, same);
  const auto& tab = tables_[n - 2][same ? 0 : 1];
  const double r = std::sqrt(std::max(tau, 0.0));
  const double rmax = rho_.back();
  if (r >= rmax) return tab.back();
  const double pos = r / rmax * (table_size_ - 1);
  const int k = std::min(static_cast<int>(pos), table_size_ - 2);
  const double w = pos - k;
  return tab[k] * (1.0 - w) + tab[k + 1] * w;
}

double ParametrixKernel::convolve_m(int n, double tau, bool same) const {
  // M_n(tau, z, y) = ∫_0^tau Σ_w M1(tau-r, z, w) M_{n-1}(r, w, y) dr.
  // With pair symmetry: same = M1_d ⋆ M_{n-1,d} + M1_c ⋆ M_{n-1,c} and the
  // crossed combination otherwise. Endpoint singularities are tau^{-1/2};
  // sqrt substitutions at both ends.
  auto integrand = [&](double r) {
    const double a_d = m1(tau - r, true), a_c = m1(tau - r, false);
    const double b_d = mn(n - 1, r, true), b_c = mn(n - 1, r, false);
    return same ? (a_d * b_d + a_c * b_c) : (a_d * b_c + a_c * b_d);
  };
  const double half = 0.5 * tau;
  const double left = quad::gauss(
      [&](double v) { return integrand(v * v) * 2.0 * v; }, 0.0, std::sqrt(half), 48);
  const double right = quad::gauss(
      [&](double v) { return integrand(tau - v * v) * 2.0 * v; }, 0.0, std::sqrt(half), 48);
  return left + right;
}

std::vector<double> ParametrixKernel::terms(double t, double x, double ybar,
                                            int n_terms) const {
  if (!(t > 0.0) || t > t_max_ + 1e-15)
    throw ConfigError("parametrix requires t in (0, t_max]");
  if (n_terms < 0 || n_terms > max_terms_)
    throw ConfigError("parametrix n_terms out of range");
  const bool y_left = std::abs(ybar) < 1e-14;
  if (!y_left && std::abs(ybar - 1.0) > 1e-14)
    throw ConfigError("parametrix ybar must be a boundary point (0 or 1)");

  std::vector<double> out;
  out.push_back(2.0 * gamma_free(t, std::abs(x - ybar)));
  const double rx0 = std::abs(x - (y_left ? 0.0 : 1.0));   // distance to the y endpoint
  const double rx1 = std::abs(x - (y_left ? 1.0 : 0.0));   // distance to the other one
  for (int n = 1; n <= n_terms; ++n) {
    auto integrand = [&](double r) {
      // z = y endpoint pairs with M_n "same", the other endpoint with "cross"
      return gamma_free(t - r, rx0) * mn(n, r, true) +
             gamma_free(t - r, rx1) * mn(n, r, false);
    };
    const double half = 0.5 * t;
    const double left = quad::gauss(
        [&](double v) { return integrand(v * v) * 2.0 * v; }, 0.0, std::sqrt(half), 48);
    const double right = quad::gauss(
        [&](double v) { return integrand(t - v * v) * 2.0 * v; }, 0.0, std::sqrt(half), 48);
    out.push_back(2.0 * (left + right));
  }
  return out;
}

double ParametrixKernel::value(double t, double x, double ybar, int n_terms) const {
  const std::vector<double> ts = terms(t, x, ybar, n_terms);
  double scale = 0.0;
  for (double v : ts) scale = std::max(scale, std::abs(v));
  double acc = 0.0;
  for (std::size_t n = 0; n < ts.size(); ++n) {
    // small-magnitude ordering wiggles between image contributions are not
    // divergence; true blow-up grows at the scale of the leading term
    if (n >= 3 && std::abs(ts[n]) > std::abs(ts[n - 1]) && std::abs(ts[n]) > 1e-2 * scale)
      throw NumericalError("parametrix series terms growing at n=" + std::to_string(n) +
                           "; use a smaller t");
    acc += ts[n];
  }
  return acc;
}

}  // namespace fbh
