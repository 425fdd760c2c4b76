#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fbh/errors.hpp"
#include "fbh/kernel_quad.hpp"
#include "fbh/stoch_conv.hpp"

namespace fbh {

enum class Smoothness { G1, G2 };

/// Boundary nonlinearity g with its derivatives and Lipschitz metadata.
struct Nonlinearity {
  std::function<double(double)> g;
  std::function<double(double, int)> deriv;  // n-th derivative, n >= 1
  double lipschitz = 1.0;
  /// Bound for the higher derivatives under G2. Kept separate from the
  /// Lipschitz constant: tanh has L = 1 but |g'''(0)| = 2.
  double deriv_bound = 1.0;
  Smoothness tag = Smoothness::G1;
  int max_order = 1;
  std::string name = "custom";

  /// Samples |∂g| <= L, |g(u)| <= L(1+|u|) over u in [-50, 50]; G2 additionally
  /// bounds derivatives up to order 4 by deriv_bound.
  void validate() const;

  static Nonlinearity zero();
  static Nonlinearity constant(double c);
  static Nonlinearity tanh_g();
  static Nonlinearity linear(double c);
  /// L·tanh(u / max(L,1)); Lipschitz constant ≈ L with bounded higher derivatives.
  static Nonlinearity scaled_tanh(double L);
  static Nonlinearity by_name(const std::string& name, double param);
};

/// Solution trace on [0,T] × ∂D.
struct BoundaryField {
  TimeGrid grid;
  DomainSpec domain;
  std::vector<std::vector<double>> values;  // [time][node], values[0][·] = 0
  std::uint64_t noise_seed = 0;

  double at(std::size_t i, std::size_t a) const { return values[i][a]; }
};

struct PicardReport {
  int iterates = 0;
  std::vector<double> increment_norms;
  double lambda = 0.0;
  double p = 2.0;
  bool converged = false;
  // increment fields kept for contraction diagnostics: [iter][time][node]
  std::vector<std::vector<std::vector<double>>> increments;
};

struct SolverParams {
  double tol = 1e-8;
  int max_iter = 40;
  double lambda = 100.0;
  double p = 2.0;
  double mu = 0.75;
  bool keep_history = true;
};

/// Thrown when Picard fails to contract within max_iter; carries the report.
class PicardDivergence : public NumericalError {
public:
  PicardDivergence(const std::string& what, PicardReport rep)
      : NumericalError(what), report(std::move(rep)) {}
  PicardReport report;
};

/// Weighted norm (Σ_i Δt e^{-λ t_i} Σ_a w_a |f(t_i,a)|^p)^{1/p} (trapezoid in t).
double weighted_norm(const std::vector<std::vector<double>>& f, const TimeGrid& grid,
                     const DomainSpec& domain, double lambda, double p);

/// Picard iteration for the boundary Volterra equation
///   u(t,ξ) = Z(t,ξ) + ∫_0^t ∫_{∂D} p_N(t-s,ξ,ȳ) g(u(s,ȳ)) σ(dȳ) ds,
/// time-marched with per-slab product-quadrature weights; u_0 = Z.
std::pair<BoundaryField, PicardReport> picard_boundary(
    const KernelQuad& kq, const SMesh& mesh, const Nonlinearity& g,
    const AlphaCoefficient& alpha, const NoisePath& noise, const SolverParams& params);

/// Right side of the boundary equation evaluated on a given field (fixed-point
/// residual checks reuse the solver quadrature).
std::vector<std::vector<double>> volterra_rhs(const KernelQuad& kq,
                                              const std::vector<std::vector<double>>& z_field,
                                              const Nonlinearity& g,
                                              const std::vector<std::vector<double>>& u);

/// Interior representation u(t,x) = Z(t,x) + ∫∫ p_N(t-s,x,ȳ) g(u(s,ȳ)); x must be
/// interior and t a grid node.
double interior_solution(const BoundaryField& boundary, const KernelQuad& kq,
                         const SMesh& mesh, const Nonlinearity& g,
                         const AlphaCoefficient& alpha, const NoisePath& noise, double t,
                         const Point& x);

struct DiagnosticRow {
  double lambda = 0.0;
  std::vector<double> factors;   // ||Δ_{n+1}|| / ||Δ_n||
  double max_factor_tail = 0.0;  // max over n >= 2
  double mean_factor = 0.0;      // geometric mean of the first <= 3 ratios
};

struct DiagnosticTable {
  std::vector<DiagnosticRow> rows;
  double lambda_exponent = 0.0;  // fitted log-factor vs log-lambda slope
  bool contracting_at_largest = false;
  bool factor_decreasing = false;
  bool exponent_nonpositive = false;
};

/// Re-evaluates the stored Picard increments under each λ in the grid.
DiagnosticTable contraction_diagnostics(const PicardReport& report, const TimeGrid& grid,
                                        const DomainSpec& domain, double p,
                                        const std::vector<double>& lambda_grid);

}  // namespace fbh
