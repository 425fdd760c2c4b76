#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fbh/domain.hpp"

namespace fbh {

/// Robin eigenpairs of -½Δ on (0,1): φ_k(x) = A_k (cos ω_k x + (β/ω_k) sin ω_k x),
/// λ_k = ω_k²/2, with φ'(0) = βφ(0) and φ'(1) = -βφ(1). ω_k is the unique root of
/// (ω²-β²) sin ω - 2βω cos ω in (kπ, (k+1)π).
struct RobinMode {
  double omega;
  double lambda;
  double amp;    // normalization A_k (∫ φ² = 1)
  double slope;  // β/ω_k

  double eval(double x) const;
  double deriv(double x) const;
  double max_abs() const;
};

struct EigenSystem {
  DomainSpec domain;  // interval geometry the 1-d modes refer to
  std::vector<RobinMode> modes;

  std::size_t count() const { return modes.size(); }
};

/// First n_modes interval eigenpairs; bracketed bisection to 1e-12 on ω.
EigenSystem robin_eigensystem(const DomainSpec& domain, int n_modes);

/// Transition kernel Σ_k e^{-λ_k t} φ_k(x) φ_k(y) on the interval; the rectangle
/// kernel is the product of two interval factors. Truncated when
/// e^{-λ_k t} max|φ_k|² < 1e-12; throws if the configured modes cannot reach that.
class SpectralKernel {
public:
  SpectralKernel(const DomainSpec& domain, int n_modes = 256);

  const DomainSpec& domain() const { return domain_; }
  const EigenSystem& eigensystem() const { return eigen_; }

  /// p_N(t, x, y); y need not be a boundary point.
  double value(double t, const Point& x, const Point& y) const;
  /// Spatial gradient in the first argument.
  Point gradient(double t, const Point& x, const Point& y) const;
  /// Kernel mass ∫_D p_N(t, x, y) dy by Gauss quadrature.
  double mass(double t, const Point& x, int order = 64) const;

  double value1d(double t, double x, double y) const;
  double deriv1d(double t, double x, double y) const;

private:
  DomainSpec domain_;
  EigenSystem eigen_;
};

enum class KernelMethod { Spectral, Parametrix };

/// Precomputed p_N values over times × source points × boundary nodes.
struct KernelTable {
  DomainSpec domain;
  KernelMethod method = KernelMethod::Spectral;
  int truncation = 0;
  std::vector<double> times;
  std::vector<Point> sources;        // interior or boundary evaluation points
  std::vector<bool> source_on_boundary;
  std::vector<double> values;        // [it * nx * nb + ix * nb + ib]

  double at(std::size_t it, std::size_t ix, std::size_t ib) const {
    return values[(it * sources.size() + ix) * domain.n_boundary() + ib];
  }
};

KernelTable tabulate_kernel(const SpectralKernel& kernel, const std::vector<double>& times,
                            const std::vector<Point>& sources, int jobs = -1);

enum class BoundMode { Upper, Lower, Gradient };

struct BoundReport {
  BoundMode mode;
  double mu = 0.0;
  double constant = 0.0;   // fitted c (Upper), C1 (Lower), k for the algebraic gradient form
  double aux_constant = 0.0;  // C2 (Lower), Gaussian-form k (Gradient)
  struct {
    double t = 0.0;
    double x_arc = 0.0;  // source position (coordinate / arc parameter)
    double y_arc = 0.0;
  } worst_point;
  bool satisfied = false;
};

/// Checks the kernel estimates over the table, excluding coincident pairs and
/// corner-adjacent rectangle nodes.
///  Upper:    p_N ≤ c t^{-μ} |x-y|^{2μ-d}, c = max tabulated ratio.
///  Lower:    p_N ≥ C1 t^{-d/2} exp(-C2 |x-y|²/t), satisfied iff C1 > 0.
///  Gradient: |∇_x p_N| (central differences) against both
///            k⁻¹ e^{-k|x-y|²/t} t^{-(d+1)/2} (largest feasible k ≤ 1) and
///            k |x-y|^{2μ-d} t^{-(2μ+1)/2}  (k = max ratio).
BoundReport verify_kernel_bounds(const SpectralKernel& kernel, const KernelTable& table,
                                 BoundMode mode, double mu);

/// ∫_{∂D} |x-y|^{-a} |y-ξ|^{-b} σ(dy) on the rectangle perimeter with graded
/// refinement near the two singular points. Rejects the borderline a+b = d-1.
double singular_boundary_integral(const DomainSpec& domain, double a, double b,
                                  const Point& x, const Point& xi);

struct ExponentFit {
  double exponent = 0.0;
  double expected = 0.0;
  bool satisfied = false;
  std::vector<double> separations;
  std::vector<double> values;
};

/// Log-log fit of the singular boundary integral against |x - ξ| for same-edge
/// point pairs; expected exponent d-1-a-b when a+b > d-1, flat when a+b < d-1.
ExponentFit singular_integral_exponent(const DomainSpec& domain, double a, double b,
                                       int n_separations = 10);

/// x^α e^{-x}, with the sharp bound α^α e^{-α} attained at x = α.
double analytic_bound(double alpha, double x);
double analytic_bound_max(double alpha);

}  // namespace fbh
