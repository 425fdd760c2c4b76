#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fbh/domain.hpp"
#include "fbh/fbm.hpp"
#include "fbh/kernel_quad.hpp"

namespace fbh {

enum class AlphaTag { A1, A1Prime };

/// Boundary noise coefficient α(σ, ȳ) with its integrability/non-degeneracy
/// metadata. lower_bound > 0 encodes the (a2) hypothesis.
struct AlphaCoefficient {
  std::function<double(double, const Point&)> evaluator;
  double lower_bound = 0.0;
  AlphaTag tag = AlphaTag::A1;
  double theta = 0.0;  // exponent when tag == A1Prime
  std::string name = "custom";

  bool nondegenerate() const { return lower_bound > 0.0; }

  /// Checks (a2) at every (σ, node) mesh point and, for A1', θ > (d-1)/(2H-1).
  void validate(const DomainSpec& domain, const SMesh& mesh, double hurst) const;

  static AlphaCoefficient one();
  static AlphaCoefficient sine();        // 1 + sin(2πσ)/2
  static AlphaCoefficient degenerate();  // vanishes on part of ∂D; violates (a2)
  static AlphaCoefficient by_name(const std::string& name);
};

enum class ConvolutionRoute { Increment, ExactGaussian };

struct ConvolutionSample {
  double t = 0.0;
  Point x;
  double value = 0.0;
  ConvolutionRoute route = ConvolutionRoute::Increment;
  std::uint64_t seed = 0;
};

/// φ(s, σ) = ∫_{∂D} p_N(t-s, x, ȳ) α(σ, ȳ) σ(dȳ), zero for s >= t (causality).
std::function<double(double, std::size_t)> phi_integrand(
    std::shared_ptr<const KernelEvaluator> kernel, const SMesh& mesh,
    const AlphaCoefficient& alpha, double t, const Point& x);

/// Cell averages of a time-σ integrand on the partition; the cell whose right
/// edge is t absorbs the kernel singularity with a sqrt substitution.
/// Layout: [sigma][cell].
std::vector<std::vector<double>> phi_cell_averages(
    const std::function<double(double, std::size_t)>& phi, const std::vector<double>& edges,
    std::size_t n_sigma, double t);

/// Precomputed per-cell averaged integrand for the increment-route sum:
/// phibar[k][j] = cell average over s ∈ [t_k, t_{k+1}] of φ(s, σ_j).
struct IncrementScheme {
  TimeGrid grid;
  std::size_t t_index = 0;  // target time node
  std::vector<std::vector<double>> phibar;

  double apply(const NoisePath& noise) const;
};

IncrementScheme build_increment_scheme(const KernelQuad& kq, const SMesh& mesh,
                                       const AlphaCoefficient& alpha, std::size_t t_index,
                                       const Point& x);

/// Z(t_i, ξ_a) at every grid time and boundary node from one noise path, via the
/// same per-cell averaged increment sums. contraction[m][a][j] is the α- and
/// weight-contracted kernel cell average at offset m.
struct BoundaryZScheme {
  TimeGrid grid;
  std::size_t nb = 0;
  std::vector<std::vector<std::vector<double>>> contraction;  // [m][a][j]

  /// field[i][a] = Z(t_i, ξ_a)
  std::vector<std::vector<double>> field(const NoisePath& noise) const;
};

BoundaryZScheme build_boundary_z_scheme(const KernelQuad& kq, const SMesh& mesh,
                                        const AlphaCoefficient& alpha);

/// Exact variance of Z(t,x): the H-norm of φ on a refined graded partition.
double variance_z(std::shared_ptr<const KernelEvaluator> kernel, const SMesh& mesh,
                  const AlphaCoefficient& alpha, double t, const Point& x, HurstParam h,
                  int refine = 8, int corner_levels = 14, int base_cells = 64);

/// The partition variance_z integrates over by default; the RKHS norm of the
/// dz field on this partition reproduces variance_z exactly.
std::vector<double> variance_partition(double t);

/// Independent variance route through the K* transform (Itô isometry).
double variance_z_kstar(std::shared_ptr<const KernelEvaluator> kernel, const SMesh& mesh,
                        const AlphaCoefficient& alpha, double t, const Point& x, HurstParam h);

/// One Z(t,x) draw. Increment route: weighted sum of noise increments.
/// ExactGaussian: N(0, variance) with `variance` supplied by the caller
/// (computed once via variance_z).
ConvolutionSample simulate_z(const IncrementScheme& scheme, const NoisePath& noise,
                             const Point& x);
ConvolutionSample simulate_z_gaussian(double t, const Point& x, double variance,
                                      std::uint64_t seed, std::uint64_t replica);

struct ProbeReport {
  std::string probe;
  double slope = 0.0;
  std::vector<double> abscissae;
  std::vector<double> values;
  bool satisfied = false;
  std::string note;
};

struct RegularityConfig {
  double t = 0.25;
  double interior_margin = 0.2;  // min distance of probe points to ∂D
  // small separations: the pair variance follows |x-z|² only locally (the
  // integrand gradient vanishes at the domain center for symmetric α)
  std::vector<double> separations{0.01, 0.0141, 0.02, 0.0283, 0.04};
  int kurtosis_replicas = 10000;
  std::uint64_t seed = 2024;
};

/// (i) slope of log E|Z(t,x)-Z(t,z)|² vs log|x-z| over interior pairs (the
///     variance is evaluated exactly as an H-norm of φ_x - φ_z);
/// (ii) boundary-trace moments E|Z(t,ξ)|^p uniformly bounded, max ≤ 3 median;
/// (iii) Gaussian moments p ∈ {2,4,8} finite, plus a sampled kurtosis check.
std::vector<ProbeReport> regularity_probes(std::shared_ptr<const KernelEvaluator> kernel,
                                           const SMesh& mesh, const AlphaCoefficient& alpha,
                                           HurstParam h, const TimeGrid& grid,
                                           const RegularityConfig& config);

}  // namespace fbh
