#pragma once

#include <memory>
#include <vector>

#include "fbh/domain.hpp"
#include "fbh/heat_kernel.hpp"

namespace fbh {

/// Scaled complementary error function e^{x²} erfc(x) for x >= 0.
double erfcx(double x);

/// Production evaluator for p_N(τ, x, y): spectral sum for τ above a small
/// crossover, half-line Robin closed form (image + erfcx correction) below it,
/// where the eigen series would need thousands of modes. Both branches agree to
/// ~1e-12 at the seam. Tensorized for the rectangle.
class KernelEvaluator {
public:
  explicit KernelEvaluator(const DomainSpec& domain, int n_modes = 128,
                           double tau_star = 4e-3);

  const DomainSpec& domain() const { return domain_; }
  const SpectralKernel& spectral() const { return spectral_; }

  double value1d(double tau, double x, double y) const;
  double value(double tau, const Point& x, const Point& y) const;

private:
  DomainSpec domain_;
  SpectralKernel spectral_;
  double tau_star_;
  double small_tau(double tau, double x, double y) const;
};

/// Graded partition of [0, t]: `base` uniform cells, each split into `refine`
/// subcells, with the cell adjacent to t further split geometrically
/// (`corner_levels` halvings) to resolve the kernel singularity at τ = 0.
std::vector<double> graded_time_partition(double t, int base, int refine, int corner_levels);

/// Kernel value for a boundary-quadrature entry. On the rectangle the value at
/// a coincident node is the average over that node's edge segment (the nodal
/// kernel grows like 1/τ there and is not time-integrable); all other entries
/// are nodal.
double segment_averaged_kernel(const KernelEvaluator& eval, double tau, const Point& x,
                               std::size_t node, int gauss_order = 16);

/// Per-slab product-quadrature weights against the kernel on the uniform grid.
/// For time offset m (τ ∈ [mΔ, (m+1)Δ]) and boundary nodes a (target), b (source):
///   a_lo = ∫ K(τ,a,b) ((m+1)Δ-τ)/Δ dτ   (weight of the node nearer the target time)
///   a_hi = ∫ K(τ,a,b) (τ-mΔ)/Δ dτ
/// The m = 0 slab absorbs the τ^{-1/2} endpoint with a sqrt substitution.
class KernelQuad {
public:
  KernelQuad(std::shared_ptr<const KernelEvaluator> eval, const TimeGrid& grid);

  const KernelEvaluator& evaluator() const { return *eval_; }
  std::shared_ptr<const KernelEvaluator> evaluator_ptr() const { return eval_; }
  const TimeGrid& grid() const { return grid_; }
  std::size_t n_boundary() const { return nb_; }

  double a_lo(int m, std::size_t a, std::size_t b) const { return alo_[idx(m, a, b)]; }
  double a_hi(int m, std::size_t a, std::size_t b) const { return ahi_[idx(m, a, b)]; }
  /// ∫_{mΔ}^{(m+1)Δ} K dτ = a_lo + a_hi.
  double cell_integral(int m, std::size_t a, std::size_t b) const {
    return alo_[idx(m, a, b)] + ahi_[idx(m, a, b)];
  }
  /// K(mΔ, a, b) for m >= 1.
  double nodal(int m, std::size_t a, std::size_t b) const {
    return knod_[idx(m - 1, a, b)];
  }

  struct InteriorRow {
    std::vector<double> alo, ahi, knod;  // same layout, fixed target point
    std::size_t nb = 0;
    double a_lo(int m, std::size_t b) const { return alo[m * nb + b]; }
    double a_hi(int m, std::size_t b) const { return ahi[m * nb + b]; }
    double cell_integral(int m, std::size_t b) const {
      return alo[m * nb + b] + ahi[m * nb + b];
    }
    double nodal(int m, std::size_t b) const { return knod[(m - 1) * nb + b]; }
  };
  /// Slab weights for an arbitrary (usually interior) target point.
  InteriorRow interior_row(const Point& x) const;

private:
  std::shared_ptr<const KernelEvaluator> eval_;
  TimeGrid grid_;
  std::size_t nb_;
  std::vector<double> alo_, ahi_, knod_;
  std::size_t idx(int m, std::size_t a, std::size_t b) const {
    return (static_cast<std::size_t>(m) * nb_ + a) * nb_ + b;
  }
};

}  // namespace fbh
