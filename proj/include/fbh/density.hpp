#pragma once

#include <cstdint>
#include <vector>

#include "fbh/malliavin.hpp"

namespace fbh {

/// Reusable per-target machinery for u(t,x) ensembles: kernel quadratures, the
/// boundary Z scheme, and the interior representation row are built once; each
/// replica only samples noise and runs the Picard iteration.
class SolutionEnsemble {
public:
  SolutionEnsemble(std::shared_ptr<const KernelEvaluator> kernel, const TimeGrid& grid,
                   const SMesh& mesh, const Nonlinearity& g, const AlphaCoefficient& alpha,
                   HurstParam h, double t, const Point& x, std::uint64_t base_seed,
                   SolverParams params = {});

  /// One realization of u(t,x); throws PicardDivergence on non-convergence.
  double draw(std::uint64_t replica) const;

  struct Result {
    std::vector<double> samples;
    int requested = 0;
    int failures = 0;
  };
  /// n_samples independent realizations (seed substreams base_seed + replica).
  /// Failed replicas are excluded and counted; more than 1% failures is an error.
  Result run(int n_samples) const;

  const KernelQuad& kq() const { return kq_; }
  double target_time() const { return t_; }
  std::size_t target_index() const { return t_index_; }

private:
  std::shared_ptr<const KernelEvaluator> kernel_;
  SMesh mesh_;
  Nonlinearity g_;
  AlphaCoefficient alpha_;
  SolverParams params_;
  KernelQuad kq_;
  NoiseSampler sampler_;
  BoundaryZScheme z_scheme_;
  IncrementScheme z_target_;
  KernelQuad::InteriorRow row_;
  bool interior_ = false;
  std::size_t node_index_ = 0;
  double t_ = 0.0;
  Point x_;
  std::size_t t_index_ = 0;
};

struct DensityEstimate {
  std::vector<double> eval_grid;
  std::vector<double> values;
  double bandwidth = 0.0;
  int n_samples = 0;

  double integral() const;  // trapezoid over eval_grid
};

/// Gaussian-kernel density estimate; bandwidth 1.06 σ̂ n^{-1/5} unless
/// overridden. Grid: 201 points over mean ± 5 sample standard deviations.
DensityEstimate kde(const std::vector<double>& samples, double bandwidth_override = 0.0,
                    int grid_points = 201);

struct DensityComparison {
  double l1_error = 0.0;
  double ks_stat = 0.0;
  double ks_p_value = 0.0;
};

/// L1 distance of the estimate against the centered Gaussian with the given
/// variance, plus the KS statistic of the raw samples against its CDF.
DensityComparison density_compare(const DensityEstimate& estimate,
                                  const std::vector<double>& samples, double oracle_variance);

}  // namespace fbh
