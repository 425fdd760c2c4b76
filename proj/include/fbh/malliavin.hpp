#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fbh/nonlinear.hpp"

namespace fbh {

enum class MalliavinTarget { Z, BoundaryU, InteriorU };

/// Malliavin derivative field at a fixed target (t, ξ) or (t, x): cell
/// representatives of r ↦ D_{r,σ}·(target) on an r-partition of [0, t], plus
/// (for grid-based solves) the full nodal trajectories D_{t_jr,σ}u(t_i, ξ_a).
struct MalliavinField {
  MalliavinTarget target = MalliavinTarget::Z;
  int order = 1;
  double t_target = 0.0;
  Point location;
  SMesh mesh;
  std::vector<double> r_edges;                    // ascending, back() = t_target
  std::vector<std::vector<double>> cell_values;   // [r-cell][sigma]

  // nodal trajectories for grid-based order-1 solves (empty for dz fields):
  // traj[(jr * n_sigma + j) * nt * nb + i * nb + a], zero for i < jr
  TimeGrid grid;
  std::size_t nb = 0;
  std::vector<double> traj;

  // order-2 pair lattice at the target: [(cell1, σ1)][(cell2, σ2)]
  std::vector<std::vector<double>> pair_values;

  double trajectory(std::size_t jr, std::size_t j, std::size_t i, std::size_t a) const;
};

/// Deterministic field D_{r,σ}Z(t,x) = 1_{[0,t]}(r) ∫ p_N(t-r,x,ȳ) α(σ,ȳ) σ(dȳ),
/// cell-averaged on the given partition (defaults to a graded one).
MalliavinField dz_field(std::shared_ptr<const KernelEvaluator> kernel, const SMesh& mesh,
                        const AlphaCoefficient& alpha, double t, const Point& x,
                        std::vector<double> r_edges = {});

/// Shared machinery for the linear Volterra systems satisfied by D u.
class DuSolver {
public:
  DuSolver(const KernelQuad& kq, const SMesh& mesh, const Nonlinearity& g,
           const AlphaCoefficient& alpha);

  /// Order-1 field of the boundary solution at target (grid node t_index, ξ_node),
  /// with full trajectories. Marches the linear Volterra equation per (r,σ).
  MalliavinField solve_boundary(const BoundaryField& u, std::size_t t_index,
                                std::size_t node_index) const;

  /// Order-1 field at an interior x via the representation formula.
  MalliavinField solve_interior(const BoundaryField& u, std::size_t t_index,
                                const Point& x) const;

  /// Order-2 pair field at a boundary target; requires a G2 nonlinearity.
  MalliavinField solve_second_order(const BoundaryField& u, std::size_t t_index,
                                    std::size_t node_index) const;

  /// Fast path: cell values at a boundary target through one adjoint solve
  /// (identical to solve_boundary's cells up to roundoff; used in replica sweeps).
  std::vector<std::vector<double>> target_cells_adjoint(const BoundaryField& u,
                                                        std::size_t t_index,
                                                        std::size_t node_index) const;

  const KernelQuad& kq() const { return kq_; }
  const SMesh& mesh() const { return mesh_; }

private:
  const KernelQuad& kq_;
  SMesh mesh_;
  Nonlinearity g_;
  AlphaCoefficient alpha_;
  std::size_t nb_;
  // α-contracted kernel data: cell averages and nodal values per (offset, node, σ)
  std::vector<double> cavg_, cnod_;
  double contracted_avg(int m, std::size_t a, std::size_t j) const;
  double contracted_nodal(int m, std::size_t a, std::size_t j) const;

  std::vector<double> march(const std::vector<std::vector<double>>& h, std::size_t jr,
                            std::size_t j, std::size_t t_index) const;
  std::vector<std::vector<double>> derivative_weights(const BoundaryField& u,
                                                      std::size_t t_index) const;
};

/// Wrapper with the operation-level signature: order 1 or 2, boundary or
/// interior target. Order 2 requires g tagged G2.
MalliavinField du_solve(const KernelQuad& kq, const SMesh& mesh, const Nonlinearity& g,
                        const AlphaCoefficient& alpha, const BoundaryField& boundary_u,
                        int order, MalliavinTarget target, std::size_t t_index,
                        std::size_t node_index = 0, const Point& x = {});

struct HNormResult {
  double value = 0.0;
  double window_delta = 0.0;  // 0 = full window [0, t]
  double quadrature_error_estimate = 0.0;
};

/// H-norm squared of an order-1 field:
///   H(2H-1) Σ_j μ_j ∬_{W²} D(s,σ_j) D(r,σ_j) |s-r|^{2H-2} dr ds
/// with W = [0,t] or (t-δ, t); exact kernel masses on cells clipped to W.
HNormResult h_norm_squared(const MalliavinField& field, HurstParam h, double delta = 0.0);

struct SlopeReport {
  std::string probe;
  std::vector<double> deltas;
  std::vector<double> values;
  double slope = 0.0;
  double expected = 0.0;
  bool satisfied = false;
  bool unsupported_hypothesis = false;  // (a2) not satisfied by α
  bool insufficient_data = false;
  std::string note;
};

/// Small-window lower bound: fits log ‖DZ(t,x)‖²_{H_δ} against log δ; expects
/// slope ≈ 2H-1 and strictly positive values under (a2).
SlopeReport lower_bound_probe(std::shared_ptr<const KernelEvaluator> kernel,
                              const SMesh& mesh, const AlphaCoefficient& alpha, double t,
                              const Point& x, const std::vector<double>& deltas,
                              HurstParam h);

/// δ-decay of E ‖DG(t,ξ)‖^p_{H_δ} with G = u - Z, Monte Carlo over replicas;
/// asserts fitted exponent >= p(1-μ) - 0.2.
SlopeReport dg_bound_probe(const KernelQuad& kq, const SMesh& mesh, const Nonlinearity& g,
                           const AlphaCoefficient& alpha, HurstParam h, std::size_t t_index,
                           std::size_t node_index, const std::vector<double>& deltas,
                           double p, double mu, int replicas, std::uint64_t seed);

struct DecayReport {
  std::vector<double> epsilons;      // descending
  std::vector<double> probabilities;
  double median_norm = 0.0;
  double dz_window_floor = 0.0;  // deterministic ½‖DZ‖²_{H_δ*}, δ* = t/8
  bool monotone = false;
  bool vanishes_at_smallest = false;
  bool satisfied = false;
};

/// Empirical P(‖Du(t,ξ)‖²_H < ε) over replicas for each ε. With an empty ε list
/// the grid defaults to {2·median, median, ½·floor, ¼·floor}.
DecayReport nondegeneracy_prob(const KernelQuad& kq, const SMesh& mesh,
                               const Nonlinearity& g, const AlphaCoefficient& alpha,
                               HurstParam h, std::size_t t_index, std::size_t node_index,
                               std::vector<double> epsilons, int replicas,
                               std::uint64_t seed);

struct FdCheckResult {
  std::size_t r_index = 0, sigma_index = 0;
  double malliavin = 0.0;  // covariance-smoothed Malliavin prediction
  double finite_difference = 0.0;
  double relative_error = 0.0;
};

/// Cameron-Martin perturbation oracle: central difference of u(t,ξ) along the
/// covariance representer of (r,σ) against the smoothed Malliavin derivative.
std::vector<FdCheckResult> malliavin_fd_check(
    const KernelQuad& kq, const SMesh& mesh, const Nonlinearity& g,
    const AlphaCoefficient& alpha, HurstParam h, const NoiseSampler& sampler,
    std::uint64_t replica, std::size_t t_index, std::size_t node_index,
    const std::vector<std::pair<std::size_t, std::size_t>>& tuples, double eps,
    const SolverParams& params);

}  // namespace fbh
