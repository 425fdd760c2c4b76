#pragma once

#include <vector>

#include "fbh/domain.hpp"

namespace fbh {

/// Single-layer parametrix for the interval Robin kernel:
///   p_N(t,x,y) = 2Γ(t,|x-y|) + 2 Σ_{n≥1} ∫_0^t Σ_z Γ(t-r,|x-z|) M_n(r,z,y) dr,
/// with Γ the free heat kernel of ½Δ, M_1 = ∂Γ/∂ν(z) - βΓ (inward normal), and
/// M_{n+1} the boundary-time convolution M ⋆ M_n. Converges for small t; the
/// production kernel is spectral, this is the independent cross-check route.
class ParametrixKernel {
public:
  /// t_max caps the usable time range (series radius); tables for M_n, n ≥ 2,
  /// are sampled on a sqrt-time grid and interpolated.
  ParametrixKernel(const DomainSpec& domain, double t_max = 0.25, int max_terms = 6,
                   int table_size = 400);

  /// Series value at (t, x, ybar); ybar must be 0 or 1. Throws if successive
  /// terms grow for n >= 2 (convergence failure: use smaller t).
  double value(double t, double x, double ybar, int n_terms) const;

  /// The individual series terms [2Γ, term_1, ..., term_n].
  std::vector<double> terms(double t, double x, double ybar, int n_terms) const;

  double t_max() const { return t_max_; }
  int max_terms() const { return max_terms_; }

private:
  double beta_;
  double t_max_;
  int max_terms_;
  int table_size_;
  // M_n for n >= 2, tabulated against rho = sqrt(tau); [n-2][pair][k],
  // pair 0 = same endpoint, pair 1 = opposite endpoints
  std::vector<std::vector<std::vector<double>>> tables_;
  std::vector<double> rho_;

  double m1(double tau, bool same) const;
  double mn(int n, double tau, bool same) const;
  double convolve_m(int n, double tau, bool same) const;
};

}  // namespace fbh
