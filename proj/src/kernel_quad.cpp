#include "fbh/kernel_quad.hpp"

#include <cmath>

#include "fbh/errors.hpp"
#include "fbh/quadrature.hpp"

namespace fbh {

double erfcx(double x) {
  if (x < 25.0) return std::exp(x * x) * std::erfc(x);
  // asymptotic series, relative error < 1e-14 for x >= 25
  const double z = 1.0 / (2.0 * x * x);
  double s = 1.0, term = 1.0;
  for (int k = 1; k <= 6; ++k) {
    term *= -(2.0 * k - 1.0) * z;
    s += term;
  }
  return s / (x * std::sqrt(M_PI));
}

KernelEvaluator::KernelEvaluator(const DomainSpec& domain, int n_modes, double tau_star)
    : domain_(domain), spectral_(domain, n_modes), tau_star_(tau_star) {}

double KernelEvaluator::small_tau(double tau, double x, double y) const {
  // Half-line Robin closed form folded at the nearer endpoint:
  //   G(τ,u,v) = Γ(τ,u-v) + Γ(τ,u+v) - β erfcx((s+βτ)/√(2τ)) e^{-s²/(2τ)}, s = u+v,
  // for distances u, v from the endpoint. Cross-endpoint terms are below 1e-40
  // for τ ≤ tau_star.
  const double beta = domain_.beta;
  const double endpoint = (x + y < 1.0) ? 0.0 : 1.0;
  const double u = std::abs(x - endpoint), v = std::abs(y - endpoint);
  const double s = u + v;
  const double g1 = std::exp(-(u - v) * (u - v) / (2.0 * tau)) / std::sqrt(2.0 * M_PI * tau);
  const double g2 = std::exp(-s * s / (2.0 * tau)) / std::sqrt(2.0 * M_PI * tau);
  const double corr = beta * erfcx((s + beta * tau) / std::sqrt(2.0 * tau)) *
                      std::exp(-s * s / (2.0 * tau));
  return g1 + g2 - corr;
}

double KernelEvaluator::value1d(double tau, double x, double y) const {
  if (!(tau > 0.0)) throw ConfigError("kernel evaluator requires tau > 0");
  if (tau >= tau_star_) return spectral_.value1d(tau, x, y);
  return small_tau(tau, x, y);
}

double KernelEvaluator::value(double tau, const Point& x, const Point& y) const {
  if (domain_.kind == DomainKind::Interval) return value1d(tau, x.x, y.x);
  return value1d(tau, x.x, y.x) * value1d(tau, x.y, y.y);
}

std::vector<double> graded_time_partition(double t, int base, int refine, int corner_levels) {
  if (base < 1 || refine < 1) throw ConfigError("invalid partition parameters");
  std::vector<double> edges;
  const int n = base * refine;
  const double h = t / n;
  for (int i = 0; i < n; ++i) edges.push_back(t * i / n);
  // split the final cell (adjacent to t) geometrically
  double w = h;
  for (int l = 0; l < corner_levels; ++l) {
    w *= 0.5;
    edges.push_back(t - w);
  }
  edges.push_back(t);
  return edges;
}

namespace {

// hat-weighted kernel integrals over τ ∈ [lo, hi] with optional τ^{-1/2}
// absorption at lo = 0
void slab_weights(const std::function<double(double)>& k, double lo, double hi, double dt,
                  double& w_lo, double& w_hi) {
  auto f_lo = [&](double tau) { return k(tau) * (hi - tau) / dt; };
  auto f_hi = [&](double tau) { return k(tau) * (tau - lo) / dt; };
  if (lo <= 0.0) {
    w_lo = quad::gauss_sqrt_singular_left(f_lo, hi, 48);
    w_hi = quad::gauss_sqrt_singular_left(f_hi, hi, 48);
    return;
  }
  w_lo = quad::gauss(f_lo, lo, hi, 24);
  w_hi = quad::gauss(f_hi, lo, hi, 24);
}

}  // namespace

// On the rectangle the kernel at coincident boundary points grows like 1/τ,
// which only the surface integral makes time-integrable; the diagonal entry of
// a discrete boundary quadrature must therefore be the average of the kernel
// over the node's own edge segment (τ^{-1/2}-type again). Off-diagonal and
// interval entries stay nodal.
double segment_averaged_kernel(const KernelEvaluator& eval, double tau, const Point& x,
                               std::size_t node, int gauss_order) {
  const DomainSpec& d = eval.domain();
  const Point& y = d.boundary_nodes[node];
  if (d.kind == DomainKind::Interval || distance(x, y) > 1e-14)
    return eval.value(tau, x, y);
  const double h = d.boundary_weights[node];
  const Point n = d.inward_normal(node);
  const Point tangent{-n.y, n.x};
  const auto& rule = quad::gauss_legendre(gauss_order);
  double acc = 0.0;
  for (int q = 0; q < gauss_order; ++q) {
    const double s = 0.5 * h * rule.nodes[q];
    const Point yq{y.x + s * tangent.x, y.y + s * tangent.y};
    acc += rule.weights[q] * eval.value(tau, x, yq);
  }
  return 0.5 * acc;  // (1/h) ∫_segment, with the h from the affine map
}

KernelQuad::KernelQuad(std::shared_ptr<const KernelEvaluator> eval, const TimeGrid& grid)
    : eval_(std::move(eval)), grid_(grid), nb_(eval_->domain().n_boundary()) {
  const int n = grid_.n_steps;
  const double dt = grid_.dt();
  alo_.resize(static_cast<std::size_t>(n) * nb_ * nb_);
  ahi_.resize(alo_.size());
  knod_.resize(alo_.size());
  const auto& nodes = eval_->domain().boundary_nodes;
  for (int m = 0; m < n; ++m) {
    for (std::size_t a = 0; a < nb_; ++a)
      for (std::size_t b = 0; b < nb_; ++b) {
        auto k = [&](double tau) {
          return segment_averaged_kernel(*eval_, tau, nodes[a], b, 16);
        };
        double wl, wh;
        slab_weights(k, m * dt, (m + 1) * dt, dt, wl, wh);
        alo_[idx(m, a, b)] = wl;
        ahi_[idx(m, a, b)] = wh;
        knod_[idx(m, a, b)] = k((m + 1) * dt);
      }
  }
}

KernelQuad::InteriorRow KernelQuad::interior_row(const Point& x) const {
  InteriorRow row;
  row.nb = nb_;
  const int n = grid_.n_steps;
  const double dt = grid_.dt();
  row.alo.resize(static_cast<std::size_t>(n) * nb_);
  row.ahi.resize(row.alo.size());
  row.knod.resize(row.alo.size());
  const auto& nodes = eval_->domain().boundary_nodes;
  for (int m = 0; m < n; ++m)
    for (std::size_t b = 0; b < nb_; ++b) {
      auto k = [&](double tau) { return eval_->value(tau, x, nodes[b]); };
      double wl, wh;
      slab_weights(k, m * dt, (m + 1) * dt, dt, wl, wh);
      row.alo[m * nb_ + b] = wl;
      row.ahi[m * nb_ + b] = wh;
      row.knod[m * nb_ + b] = k((m + 1) * dt);
    }
  return row;
}

}  // namespace fbh
