#include "fbh/fbm.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>

#include "fbh/errors.hpp"
#include "fbh/quadrature.hpp"
#include "fbh/rng.hpp"

namespace fbh {

HurstParam::HurstParam(double value) : h(value) {
  if (!(h >= 0.5 && h < 1.0)) throw ConfigError("hurst parameter must lie in [1/2, 1)");
}

void HurstParam::require_rough() const {
  if (is_brownian()) throw ConfigError("operation requires H > 1/2");
}

double cov_rh(HurstParam h, double t, double s) {
  if (t < 0.0 || s < 0.0) throw ConfigError("cov_rh needs t,s >= 0");
  const double e = 2.0 * h.h;
  return 0.5 * (std::pow(s, e) + std::pow(t, e) - std::pow(std::abs(t - s), e));
}

double c_h_const(HurstParam h) {
  if (h.h >= 0.995) throw ConfigError("C_H rejected for H >= 0.995 (Γ(2-2H) pole)");
  const double H = h.h;
  return std::sqrt(2.0 * H * std::tgamma(1.5 - H) /
                   (std::tgamma(H + 0.5) * std::tgamma(2.0 - 2.0 * H)));
}

double k_h_kernel(HurstParam h, double t, double s) {
  if (!(0.0 < s && s < t)) {
    if (s >= t) throw ConfigError("k_h_kernel requires s < t");
    throw ConfigError("k_h_kernel requires s > 0");
  }
  const double H = h.h;
  if (h.is_brownian()) return 1.0;
  const double ch = c_h_const(h);
  // Inner integrand vanishes like (u-s)^{H-1/2}; grading 1/(H-1/2) makes the
  // transformed integrand smooth.
  const double inner = quad::gauss_graded_left(
      [&](double w) {
        const double u = s + w;
        return std::pow(w, H - 1.5) * (1.0 - std::pow(s / u, 0.5 - H));
      },
      t - s, H - 0.5, 48);
  return ch * std::pow(t - s, H - 0.5) + ch * (0.5 - H) * inner;
}

double frac_cell_mass(HurstParam h, double a, double b, double c, double d) {
  const double e = 2.0 * h.h;
  auto p = [e](double u) { return std::pow(std::abs(u), e); };
  return 0.5 * (p(b - c) + p(a - d) - p(b - d) - p(a - c));
}

std::vector<std::vector<double>> increment_covariance(const TimeGrid& grid, HurstParam h) {
  const int n = grid.n_steps;
  std::vector<std::vector<double>> w(n, std::vector<double>(n));
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      w[i][k] = frac_cell_mass(h, grid.nodes[i], grid.nodes[i + 1], grid.nodes[k],
                               grid.nodes[k + 1]);
  return w;
}

NoisePath NoisePath::restrict(int stride) const {
  if (stride < 1 || grid.n_steps % stride != 0)
    throw ConfigError("restriction stride must divide the step count");
  NoisePath out;
  out.s_mesh = s_mesh;
  out.grid = time_grid(grid.horizon, grid.n_steps / stride);
  out.seed = seed;
  out.values.resize(values.size());
  for (std::size_t j = 0; j < values.size(); ++j) {
    out.values[j].resize(out.grid.size());
    for (std::size_t i = 0; i < out.grid.size(); ++i)
      out.values[j][i] = values[j][i * stride];
  }
  return out;
}

NoiseSampler::NoiseSampler(const SMesh& s_mesh, const TimeGrid& grid, HurstParam h,
                           std::uint64_t seed)
    : mesh_(s_mesh), grid_(grid), h_(h), seed_(seed), n_(grid.n_steps) {
  Eigen::MatrixXd cov(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (int k = 0; k <= i; ++k) {
      const double v = cov_rh(h, grid.nodes[i + 1], grid.nodes[k + 1]);
      cov(i, k) = v;
      cov(k, i) = v;
    }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    // one jitter retry before giving up
    const double jitter = 1e-12 * cov.diagonal().maxCoeff();
    Eigen::MatrixXd reg = cov + jitter * Eigen::MatrixXd::Identity(n_, n_);
    llt.compute(reg);
    if (llt.info() != Eigen::Success)
      throw NumericalError("fBm covariance not positive definite after regularization (n=" +
                           std::to_string(n_) + ", H=" + std::to_string(h.h) + ")");
  }
  const Eigen::MatrixXd L = llt.matrixL();
  chol_.assign(static_cast<std::size_t>(n_) * n_, 0.0);
  for (int i = 0; i < n_; ++i)
    for (int k = 0; k <= i; ++k) chol_[static_cast<std::size_t>(i) * n_ + k] = L(i, k);
}

NoisePath NoiseSampler::sample(std::uint64_t replica) const {
  NoisePath path;
  path.s_mesh = mesh_;
  path.grid = grid_;
  path.seed = seed_;
  path.values.assign(mesh_.size(), std::vector<double>(grid_.size(), 0.0));
  std::vector<double> z;
  for (std::size_t j = 0; j < mesh_.size(); ++j) {
    GaussianStream stream(derive_seed(seed_, j, replica));
    stream.fill_gaussian(z, n_);
    const double scale = std::sqrt(mesh_.mu[j]);
    for (int i = 0; i < n_; ++i) {
      double acc = 0.0;
      const double* row = chol_.data() + static_cast<std::size_t>(i) * n_;
      for (int k = 0; k <= i; ++k) acc += row[k] * z[k];
      path.values[j][i + 1] = scale * acc;
    }
  }
  return path;
}

std::vector<std::vector<double>> NoiseSampler::representer_direction(std::size_t cell,
                                                                     std::size_t index) const {
  std::vector<std::vector<double>> dir(mesh_.size(),
                                       std::vector<double>(grid_.n_steps, 0.0));
  for (int i = 0; i < n_; ++i)
    dir[cell][i] = mesh_.mu[cell] * frac_cell_mass(h_, grid_.nodes[i], grid_.nodes[i + 1],
                                                   grid_.nodes[index], grid_.nodes[index + 1]);
  return dir;
}

NoisePath NoiseSampler::shifted(const NoisePath& base,
                                const std::vector<std::vector<double>>& dir, double eps) {
  NoisePath out = base;
  for (std::size_t j = 0; j < out.values.size(); ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < out.values[j].size(); ++i) {
      acc += eps * dir[j][i];
      out.values[j][i + 1] = base.values[j][i + 1] + acc;
    }
  }
  return out;
}

NoisePath sample_noise(const SMesh& s_mesh, const TimeGrid& grid, HurstParam h,
                       std::uint64_t seed, std::uint64_t replica) {
  return NoiseSampler(s_mesh, grid, h, seed).sample(replica);
}

std::function<double(double)> kstar_transform(const std::function<double(double)>& phi,
                                              double t, HurstParam h) {
  h.require_rough();
  const double H = h.h;
  const double ch = c_h_const(h) * (H - 0.5);
  return [phi, t, H, ch](double s) -> double {
    if (s <= 0.0 || s >= t) return 0.0;
    // r = s + w, singular factor w^{H-3/2} absorbed by grading 1/(H-1/2)
    const double val = quad::gauss_graded_left(
        [&](double w) {
          const double r = s + w;
          return phi(r) * std::pow(s / r, 0.5 - H) * std::pow(w, H - 1.5);
        },
        t - s, H - 0.5, 48);
    return ch * val;
  };
}

double kstar_squared_integral(const std::function<double(double)>& phi, double t,
                              HurstParam h, int panels, int order) {
  h.require_rough();
  auto ks = kstar_transform(phi, t, h);
  const double H = h.h;
  // |K*φ(s)|² ~ s^{1-2H}·smooth near 0; substitute s = v^{1/(2-2H)}.
  const double g = 2.0 - 2.0 * H;
  const double vmax = std::pow(t, g);
  const double q = 1.0 / g;
  double acc = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double a = vmax * k / panels, b = vmax * (k + 1) / panels;
    acc += quad::gauss(
        [&](double v) {
          const double s = std::pow(v, q);
          const double f = ks(s);
          return f * f * q * std::pow(v, q - 1.0);
        },
        a, b, order);
  }
  return acc;
}

double h_form_cells_window(const std::vector<double>& edges,
                           const std::vector<std::vector<double>>& values, const SMesh& mesh,
                           HurstParam h, double wlo, double whi) {
  if (!(whi > wlo)) throw ConfigError("h-form window is empty");
  const std::size_t nc = edges.size() - 1;
  std::vector<double> lo(nc), hi(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    lo[c] = std::max(edges[c], wlo);
    hi[c] = std::min(edges[c + 1], whi);
  }
  double total = 0.0;
  for (std::size_t j = 0; j < mesh.size(); ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < nc; ++i) {
      if (hi[i] <= lo[i] || values[j][i] == 0.0) continue;
      for (std::size_t k = 0; k < nc; ++k) {
        if (hi[k] <= lo[k]) continue;
        acc += values[j][i] * values[j][k] * frac_cell_mass(h, lo[i], hi[i], lo[k], hi[k]);
      }
    }
    total += mesh.mu[j] * acc;
  }
  return total;
}

double h_form_cells(const std::vector<double>& edges,
                    const std::vector<std::vector<double>>& values, const SMesh& mesh,
                    HurstParam h) {
  return h_form_cells_window(edges, values, mesh, h, edges.front(), edges.back());
}

double h_inner(const std::function<double(double, std::size_t)>& phi,
               const std::function<double(double, std::size_t)>& psi, const SMesh& s_mesh,
               const TimeGrid& grid, HurstParam h, int refine) {
  h.require_rough();
  const int n = grid.n_steps * refine;
  const double dt = grid.horizon / n;
  // cell averages by 3-point Gauss; exact |s-t|^{2H-2} masses between cells
  const auto& rule = quad::gauss_legendre(3);
  std::vector<double> edges(n + 1);
  for (int i = 0; i <= n; ++i) edges[i] = dt * i;

  double total = 0.0;
  std::vector<double> pa(n), pb(n);
  for (std::size_t j = 0; j < s_mesh.size(); ++j) {
    for (int i = 0; i < n; ++i) {
      const double xm = 0.5 * (edges[i] + edges[i + 1]);
      const double xr = 0.5 * dt;
      double sa = 0.0, sb = 0.0;
      for (int q = 0; q < 3; ++q) {
        const double s = xm + xr * rule.nodes[q];
        sa += rule.weights[q] * phi(s, j);
        sb += rule.weights[q] * psi(s, j);
      }
      pa[i] = 0.5 * sa;
      pb[i] = 0.5 * sb;
    }
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      if (pa[i] == 0.0 && pb[i] == 0.0) continue;
      for (int k = 0; k < n; ++k) {
        const double m = frac_cell_mass(h, edges[i], edges[i + 1], edges[k], edges[k + 1]);
        acc += 0.5 * (pa[i] * pb[k] + pa[k] * pb[i]) * m;
      }
    }
    total += s_mesh.mu[j] * acc;
  }
  return total;
}

}  // namespace fbh
