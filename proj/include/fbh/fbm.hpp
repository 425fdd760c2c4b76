#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fbh/domain.hpp"

namespace fbh {

/// Hurst index, restricted to [1/2, 1). Operations that need H > 1/2 reject 1/2.
struct HurstParam {
  double h;

  explicit HurstParam(double value);
  bool is_brownian() const { return h == 0.5; }
  void require_rough() const;  // throws for h == 1/2
};

/// fBm covariance R_H(t,s) = (s^{2H} + t^{2H} - |t-s|^{2H}) / 2.
double cov_rh(HurstParam h, double t, double s);

/// Normalizing constant C_H = sqrt(2H Γ(3/2-H) / (Γ(H+1/2) Γ(2-2H))).
/// Diverges at H→1; rejects h >= 0.995.
double c_h_const(HurstParam h);

/// Square-integrable kernel K_H(t,s), 0 < s < t, with the representation
/// K_H = C_H (t-s)^{H-1/2} + C_H(1/2-H) ∫_s^t (u-s)^{H-3/2} (1-(s/u)^{1/2-H}) du.
double k_h_kernel(HurstParam h, double t, double s);

/// Exact mass α_H ∫_{[a,b]} ∫_{[c,d]} |s-r|^{2H-2} ds dr
///            = (|b-c|^{2H} + |a-d|^{2H} - |b-d|^{2H} - |a-c|^{2H}) / 2.
/// Valid for all H in [1/2,1); at H=1/2 it degenerates to the overlap length.
double frac_cell_mass(HurstParam h, double a, double b, double c, double d);

/// Covariance matrix of fBm increments over the grid cells (unit spatial weight).
std::vector<std::vector<double>> increment_covariance(const TimeGrid& grid, HurstParam h);

/// Sampled noise field B(σ_j, t_i): independent fBm per S-cell scaled by sqrt(μ_j).
struct NoisePath {
  SMesh s_mesh;
  TimeGrid grid;
  std::vector<std::vector<double>> values;  // [cell][time node], values[j][0] = 0
  std::uint64_t seed = 0;

  double increment(std::size_t cell, std::size_t i) const {
    return values[cell][i + 1] - values[cell][i];
  }
  /// Restriction to every `stride`-th node (exact fBm law on the coarse grid).
  NoisePath restrict(int stride) const;
};

/// Exact joint sampler: Cholesky factor of [R_H(t_i,t_k)] computed once, one
/// independent stream per (cell, replica), deterministic in the seed.
class NoiseSampler {
public:
  NoiseSampler(const SMesh& s_mesh, const TimeGrid& grid, HurstParam h, std::uint64_t seed);

  NoisePath sample(std::uint64_t replica = 0) const;

  /// Covariance column of the increment vector for (cell j, cell index i):
  /// d[j'][i'] = δ_{jj'} μ_j W_{i'i}; the Cameron-Martin bump direction used by
  /// the perturbation oracle.
  std::vector<std::vector<double>> representer_direction(std::size_t cell,
                                                         std::size_t index) const;

  /// Path shifted by eps * direction (direction given on increments).
  static NoisePath shifted(const NoisePath& base, const std::vector<std::vector<double>>& dir,
                           double eps);

  const TimeGrid& grid() const { return grid_; }
  const SMesh& mesh() const { return mesh_; }

private:
  SMesh mesh_;
  TimeGrid grid_;
  HurstParam h_;
  std::uint64_t seed_;
  std::vector<double> chol_;  // lower triangle, row-major n×n
  int n_ = 0;
};

/// One-shot convenience wrapper around NoiseSampler.
NoisePath sample_noise(const SMesh& s_mesh, const TimeGrid& grid, HurstParam h,
                       std::uint64_t seed, std::uint64_t replica = 0);

/// (K*φ)(s) = c_H 1_{(0,t)}(s) ∫_s^t φ(r) (s/r)^{1/2-H} (r-s)^{H-3/2} dr with
/// c_H = C_H (H-1/2); K*1_{[0,t]} = K_H(t,·) and ∫ |K*φ|² ds matches the
/// H-inner product. Quadrature grades the endpoint with exponent 1/(H-1/2).
std::function<double(double)> kstar_transform(const std::function<double(double)>& phi,
                                              double t, HurstParam h);

/// ∫_0^t |(K*φ)(s)|² ds with grading absorbing the s^{1-2H} factor near 0.
double kstar_squared_integral(const std::function<double(double)>& phi, double t,
                              HurstParam h, int panels = 24, int order = 32);

/// H-space inner product
///   ⟨φ,ψ⟩ = H(2H-1) Σ_j μ_j ∬ |s-t|^{2H-2} φ(s,σ_j) ψ(t,σ_j) ds dt
/// by product quadrature: per-cell averages of φ,ψ against exact kernel masses.
/// `refine` subdivides each grid cell for the integrand sampling.
double h_inner(const std::function<double(double, std::size_t)>& phi,
               const std::function<double(double, std::size_t)>& psi, const SMesh& s_mesh,
               const TimeGrid& grid, HurstParam h, int refine = 4);

/// Quadratic H-form of piecewise-constant cell values on an arbitrary partition,
/// restricted to the window [wlo, whi] (cells clipped, masses exact).
/// values layout: [sigma][cell].
double h_form_cells(const std::vector<double>& edges,
                    const std::vector<std::vector<double>>& values, const SMesh& mesh,
                    HurstParam h);
double h_form_cells_window(const std::vector<double>& edges,
                           const std::vector<std::vector<double>>& values, const SMesh& mesh,
                           HurstParam h, double wlo, double whi);

}  // namespace fbh
