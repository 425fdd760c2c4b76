#include "fbh/malliavin.hpp"

#include <algorithm>
#include <cmath>

#include "fbh/errors.hpp"
#include "fbh/parallel.hpp"
#include "fbh/quadrature.hpp"

namespace fbh {

namespace {

// dense (I - A) x = rhs solve, nb <= a few dozen
std::vector<double> solve_small(const std::vector<double>& a, std::vector<double> rhs,
                                std::size_t n) {
  std::vector<double> m(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) m[i * n + k] = (i == k ? 1.0 : 0.0) - a[i * n + k];
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(m[r * n + c]) > std::abs(m[p * n + c])) p = r;
    if (p != c) {
      for (std::size_t k = 0; k < n; ++k) std::swap(m[c * n + k], m[p * n + k]);
      std::swap(rhs[c], rhs[p]);
    }
    const double piv = m[c * n + c];
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = m[r * n + c] / piv;
      if (f == 0.0) continue;
      for (std::size_t k = c; k < n; ++k) m[r * n + k] -= f * m[c * n + k];
      rhs[r] -= f * rhs[c];
    }
  }
  for (std::size_t ri = n; ri-- > 0;) {
    double s = rhs[ri];
    for (std::size_t k = ri + 1; k < n; ++k) s -= m[ri * n + k] * rhs[k];
    rhs[ri] = s / m[ri * n + ri];
  }
  return rhs;
}

}  // namespace

double MalliavinField::trajectory(std::size_t jr, std::size_t j, std::size_t i,
                                  std::size_t a) const {
  if (traj.empty()) throw ConfigError("field carries no trajectories");
  const std::size_t nt = r_edges.size();  // t nodes 0..ti
  return traj[((jr * mesh.size() + j) * nt + i) * nb + a];
}

MalliavinField dz_field(std::shared_ptr<const KernelEvaluator> kernel, const SMesh& mesh,
                        const AlphaCoefficient& alpha, double t, const Point& x,
                        std::vector<double> r_edges) {
  if (r_edges.empty()) r_edges = graded_time_partition(t, 48, 2, 20);
  MalliavinField f;
  f.target = MalliavinTarget::Z;
  f.order = 1;
  f.t_target = t;
  f.location = x;
  f.mesh = mesh;
  f.r_edges = std::move(r_edges);
  auto phi = phi_integrand(kernel, mesh, alpha, t, x);
  const auto avg = phi_cell_averages(phi, f.r_edges, mesh.size(), t);
  const std::size_t nc = f.r_edges.size() - 1;
  f.cell_values.assign(nc, std::vector<double>(mesh.size(), 0.0));
  for (std::size_t c = 0; c < nc; ++c)
    for (std::size_t j = 0; j < mesh.size(); ++j) f.cell_values[c][j] = avg[j][c];
  return f;
}

DuSolver::DuSolver(const KernelQuad& kq, const SMesh& mesh, const Nonlinearity& g,
                   const AlphaCoefficient& alpha)
    : kq_(kq), mesh_(mesh), g_(g), alpha_(alpha), nb_(kq.n_boundary()) {
  const DomainSpec& d = kq.evaluator().domain();
  const int n = kq.grid().n_steps;
  const double dt = kq.grid().dt();
  cavg_.assign(static_cast<std::size_t>(n) * nb_ * mesh_.size(), 0.0);
  cnod_.assign(cavg_.size(), 0.0);
  for (int m = 0; m < n; ++m)
    for (std::size_t a = 0; a < nb_; ++a)
      for (std::size_t j = 0; j < mesh_.size(); ++j) {
        double avg = 0.0, nod = 0.0;
        for (std::size_t b = 0; b < nb_; ++b) {
          const double ajb = alpha_.evaluator(mesh_.sigma[j], d.boundary_nodes[b]);
          avg += d.boundary_weights[b] * (kq.cell_integral(m, a, b) / dt) * ajb;
          nod += d.boundary_weights[b] * kq.nodal(m + 1, a, b) * ajb;
        }
        cavg_[(static_cast<std::size_t>(m) * nb_ + a) * mesh_.size() + j] = avg;
        cnod_[(static_cast<std::size_t>(m) * nb_ + a) * mesh_.size() + j] = nod;
      }
}

double DuSolver::contracted_avg(int m, std::size_t a, std::size_t j) const {
  return cavg_[(static_cast<std::size_t>(m) * nb_ + a) * mesh_.size() + j];
}

double DuSolver::contracted_nodal(int m, std::size_t a, std::size_t j) const {
  return cnod_[(static_cast<std::size_t>(m - 1) * nb_ + a) * mesh_.size() + j];
}

std::vector<std::vector<double>> DuSolver::derivative_weights(const BoundaryField& u,
                                                              std::size_t t_index) const {
  std::vector<std::vector<double>> h(t_index + 1, std::vector<double>(nb_));
  for (std::size_t i = 0; i <= t_index; ++i)
    for (std::size_t b = 0; b < nb_; ++b) h[i][b] = g_.deriv(u.at(i, b), 1);
  return h;
}

// Linear Volterra march for D_{r,σ}u(·,·) with r = t_jr, σ = σ_j; the value at
// node jr is regularized to the first-slab forcing average. Returns nodal
// values over (i, a), i = 0..t_index (zeros below jr).
std::vector<double> DuSolver::march(const std::vector<std::vector<double>>& h,
                                    std::size_t jr, std::size_t j,
                                    std::size_t t_index) const {
  const DomainSpec& d = kq_.evaluator().domain();
  const std::size_t nt = t_index + 1;
  std::vector<double> out(nt * nb_, 0.0);
  for (std::size_t b = 0; b < nb_; ++b) out[jr * nb_ + b] = contracted_avg(0, b, j);

  std::vector<double> amat(nb_ * nb_), rhs(nb_);
  for (std::size_t i = jr + 1; i <= t_index; ++i) {
    for (std::size_t a = 0; a < nb_; ++a) {
      double acc = contracted_nodal(static_cast<int>(i - jr), a, j);
      // slabs k = jr .. i-1; the right node of the last slab is implicit
      for (std::size_t k = jr; k < i; ++k) {
        const int m = static_cast<int>(i - 1 - k);
        for (std::size_t b = 0; b < nb_; ++b) {
          acc += d.boundary_weights[b] * kq_.a_hi(m, a, b) * h[k][b] * out[k * nb_ + b];
          if (k + 1 < i)
            acc +=
                d.boundary_weights[b] * kq_.a_lo(m, a, b) * h[k + 1][b] * out[(k + 1) * nb_ + b];
        }
      }
      rhs[a] = acc;
    }
    for (std::size_t a = 0; a < nb_; ++a)
      for (std::size_t b = 0; b < nb_; ++b)
        amat[a * nb_ + b] = d.boundary_weights[b] * kq_.a_lo(0, a, b) * h[i][b];
    const auto sol = solve_small(amat, rhs, nb_);
    for (std::size_t a = 0; a < nb_; ++a) out[i * nb_ + a] = sol[a];
  }
  return out;
}

MalliavinField DuSolver::solve_boundary(const BoundaryField& u, std::size_t t_index,
                                        std::size_t node_index) const {
  if (t_index == 0 || t_index >= kq_.grid().size())
    throw ConfigError("du target time must be a positive grid node");
  const auto h = derivative_weights(u, t_index);
  MalliavinField f;
  f.target = MalliavinTarget::BoundaryU;
  f.order = 1;
  f.t_target = kq_.grid().nodes[t_index];
  f.location = kq_.evaluator().domain().boundary_nodes[node_index];
  f.mesh = mesh_;
  f.grid = kq_.grid();
  f.nb = nb_;
  f.r_edges.assign(kq_.grid().nodes.begin(), kq_.grid().nodes.begin() + t_index + 1);

  const std::size_t nt = t_index + 1;
  f.traj.assign(t_index * mesh_.size() * nt * nb_, 0.0);
  for (std::size_t jr = 0; jr < t_index; ++jr)
    for (std::size_t j = 0; j < mesh_.size(); ++j) {
      const auto d = march(h, jr, j, t_index);
      std::copy(d.begin(), d.end(), f.traj.begin() + ((jr * mesh_.size() + j) * nt) * nb_);
    }

  // cell representatives at the target: exact forcing average plus the
  // trapezoid of the integral remainder (so g ≡ 0 reproduces dz exactly)
  f.cell_values.assign(t_index, std::vector<double>(mesh_.size(), 0.0));
  for (std::size_t j = 0; j < mesh_.size(); ++j) {
    std::vector<double> irem(t_index + 1, 0.0);
    for (std::size_t k = 0; k < t_index; ++k)
      irem[k] = f.trajectory(k, j, t_index, node_index) -
                contracted_nodal(static_cast<int>(t_index - k), node_index, j);
    for (std::size_t k = 0; k < t_index; ++k)
      f.cell_values[k][j] = contracted_avg(static_cast<int>(t_index - 1 - k), node_index, j) +
                            0.5 * (irem[k] + irem[k + 1]);
  }
  return f;
}

MalliavinField DuSolver::solve_interior(const BoundaryField& u, std::size_t t_index,
                                        const Point& x) const {
  if (t_index == 0 || t_index >= kq_.grid().size())
    throw ConfigError("du target time must be a positive grid node");
  const DomainSpec& d = kq_.evaluator().domain();
  const auto h = derivative_weights(u, t_index);
  const auto row = kq_.interior_row(x);
  const double dt = kq_.grid().dt();

  // α-contracted interior forcing rows
  std::vector<double> xavg(t_index * mesh_.size()), xnod(t_index * mesh_.size());
  for (std::size_t m = 0; m < t_index; ++m)
    for (std::size_t j = 0; j < mesh_.size(); ++j) {
      double avg = 0.0, nod = 0.0;
      for (std::size_t b = 0; b < nb_; ++b) {
        const double ajb = alpha_.evaluator(mesh_.sigma[j], d.boundary_nodes[b]);
        avg += d.boundary_weights[b] * (row.cell_integral(static_cast<int>(m), b) / dt) * ajb;
        nod += d.boundary_weights[b] * row.nodal(static_cast<int>(m + 1), b) * ajb;
      }
      xavg[m * mesh_.size() + j] = avg;
      xnod[m * mesh_.size() + j] = nod;
    }

  MalliavinField f;
  f.target = MalliavinTarget::InteriorU;
  f.order = 1;
  f.t_target = kq_.grid().nodes[t_index];
  f.location = x;
  f.mesh = mesh_;
  f.grid = kq_.grid();
  f.nb = nb_;
  f.r_edges.assign(kq_.grid().nodes.begin(), kq_.grid().nodes.begin() + t_index + 1);
  f.cell_values.assign(t_index, std::vector<double>(mesh_.size(), 0.0));

  for (std::size_t j = 0; j < mesh_.size(); ++j) {
    std::vector<double> irem(t_index + 1, 0.0);
    for (std::size_t jr = 0; jr < t_index; ++jr) {
      const auto traj = march(h, jr, j, t_index);
      // representation at (t_index, x): forcing + boundary history quadrature
      double acc = 0.0;
      for (std::size_t k = jr; k < t_index; ++k) {
        const int m = static_cast<int>(t_index - 1 - k);
        for (std::size_t b = 0; b < nb_; ++b) {
          acc += d.boundary_weights[b] * row.a_hi(m, b) * h[k][b] * traj[k * nb_ + b];
          acc += d.boundary_weights[b] * row.a_lo(m, b) * h[k + 1][b] * traj[(k + 1) * nb_ + b];
        }
      }
      irem[jr] = acc;
    }
    for (std::size_t k = 0; k < t_index; ++k)
      f.cell_values[k][j] =
          xavg[(t_index - 1 - k) * mesh_.size() + j] + 0.5 * (irem[k] + irem[k + 1]);
  }
  return f;
}

MalliavinField DuSolver::solve_second_order(const BoundaryField& u, std::size_t t_index,
                                            std::size_t node_index) const {
  if (g_.tag != Smoothness::G2)
    throw CapabilityError("second-order Malliavin derivative requires a G2 nonlinearity");
  const DomainSpec& d = kq_.evaluator().domain();
  const auto h = derivative_weights(u, t_index);

  MalliavinField base = solve_boundary(u, t_index, node_index);
  const std::size_t ns = mesh_.size();
  const std::size_t npairs = t_index * ns;
  MalliavinField f = base;
  f.order = 2;
  f.pair_values.assign(npairs, std::vector<double>(npairs, 0.0));

  std::vector<std::vector<double>> d2g(t_index + 1, std::vector<double>(nb_));
  for (std::size_t i = 0; i <= t_index; ++i)
    for (std::size_t b = 0; b < nb_; ++b) d2g[i][b] = g_.deriv(u.at(i, b), 2);

  std::vector<double> amat(nb_ * nb_), rhs(nb_);
  for (std::size_t p1 = 0; p1 < npairs; ++p1) {
    const std::size_t jr1 = p1 / ns, j1 = p1 % ns;
    for (std::size_t p2 = 0; p2 < npairs; ++p2) {
      const std::size_t jr2 = p2 / ns, j2 = p2 % ns;
      const std::size_t m0 = std::max(jr1, jr2);
      // product of the two first-order trajectories, regularized at their r-nodes
      auto dprod = [&](std::size_t i, std::size_t b) {
        const double v1 = i >= jr1 ? base.trajectory(jr1, j1, i, b) : 0.0;
        const double v2 = i >= jr2 ? base.trajectory(jr2, j2, i, b) : 0.0;
        return d2g[i][b] * v1 * v2;
      };
      std::vector<double> v((t_index + 1) * nb_, 0.0);
      for (std::size_t i = m0 + 1; i <= t_index; ++i) {
        for (std::size_t a = 0; a < nb_; ++a) {
          double acc = 0.0;
          for (std::size_t k = m0; k < i; ++k) {
            const int m = static_cast<int>(i - 1 - k);
            for (std::size_t b = 0; b < nb_; ++b) {
              // forcing f2 and the ∂g-weighted history in one pass
              acc += d.boundary_weights[b] * kq_.a_hi(m, a, b) *
                     (dprod(k, b) + h[k][b] * v[k * nb_ + b]);
              acc += d.boundary_weights[b] * kq_.a_lo(m, a, b) * dprod(k + 1, b);
              if (k + 1 < i)
                acc += d.boundary_weights[b] * kq_.a_lo(m, a, b) * h[k + 1][b] *
                       v[(k + 1) * nb_ + b];
            }
          }
          rhs[a] = acc;
        }
        for (std::size_t a = 0; a < nb_; ++a)
          for (std::size_t b = 0; b < nb_; ++b)
            amat[a * nb_ + b] = d.boundary_weights[b] * kq_.a_lo(0, a, b) * h[i][b];
        const auto sol = solve_small(amat, rhs, nb_);
        for (std::size_t a = 0; a < nb_; ++a) v[i * nb_ + a] = sol[a];
      }
      f.pair_values[p1][p2] = v[t_index * nb_ + node_index];
    }
  }
  return f;
}

std::vector<std::vector<double>> DuSolver::target_cells_adjoint(
    const BoundaryField& u, std::size_t t_index, std::size_t node_index) const {
  const DomainSpec& d = kq_.evaluator().domain();
  const auto h = derivative_weights(u, t_index);
  const std::size_t ti = t_index;

  // adjoint row y of (I - B)^{-T} e_{(ti, node_index)}: downward substitution
  std::vector<double> y((ti + 1) * nb_, 0.0);
  std::vector<double> amat(nb_ * nb_), rhs(nb_);
  for (std::size_t i = ti; i >= 1; --i) {
    for (std::size_t b = 0; b < nb_; ++b) {
      double acc = (i == ti && b == node_index) ? 1.0 : 0.0;
      for (std::size_t ip = i + 1; ip <= ti; ++ip) {
        const int mlo = static_cast<int>(ip - i);
        const int mhi = static_cast<int>(ip - 1 - i);
        for (std::size_t a = 0; a < nb_; ++a)
          acc += d.boundary_weights[b] * h[i][b] *
                 (kq_.a_lo(mlo, a, b) + kq_.a_hi(mhi, a, b)) * y[ip * nb_ + a];
      }
      rhs[b] = acc;
    }
    // diagonal block transposed: coefficient of y_i(a) in the b-equation
    for (std::size_t b = 0; b < nb_; ++b)
      for (std::size_t a = 0; a < nb_; ++a)
        amat[b * nb_ + a] = d.boundary_weights[b] * kq_.a_lo(0, a, b) * h[i][b];
    const auto sol = solve_small(amat, rhs, nb_);
    for (std::size_t b = 0; b < nb_; ++b) y[i * nb_ + b] = sol[b];
  }

  // assemble D_{jr,σ}u(ti, ξ) = Σ y · forcing, then the cell representatives
  std::vector<std::vector<double>> cells(ti, std::vector<double>(mesh_.size(), 0.0));
  for (std::size_t j = 0; j < mesh_.size(); ++j) {
    std::vector<double> irem(ti + 1, 0.0);
    for (std::size_t jr = 0; jr < ti; ++jr) {
      double val = 0.0;
      for (std::size_t i = jr + 1; i <= ti; ++i) {
        const int mf = static_cast<int>(i - jr);
        for (std::size_t a = 0; a < nb_; ++a) {
          double fa = contracted_nodal(mf, a, j);
          for (std::size_t b = 0; b < nb_; ++b)
            fa += d.boundary_weights[b] * kq_.a_hi(mf - 1, a, b) * h[jr][b] *
                  contracted_avg(0, b, j);
          val += y[i * nb_ + a] * fa;
        }
      }
      irem[jr] = val - contracted_nodal(static_cast<int>(ti - jr), node_index, j);
    }
    for (std::size_t k = 0; k < ti; ++k)
      cells[k][j] = contracted_avg(static_cast<int>(ti - 1 - k), node_index, j) +
                    0.5 * (irem[k] + irem[k + 1]);
  }
  return cells;
}

MalliavinField du_solve(const KernelQuad& kq, const SMesh& mesh, const Nonlinearity& g,
                        const AlphaCoefficient& alpha, const BoundaryField& boundary_u,
                        int order, MalliavinTarget target, std::size_t t_index,
                        std::size_t node_index, const Point& x) {
  DuSolver solver(kq, mesh, g, alpha);
  if (order == 1) {
    if (target == MalliavinTarget::InteriorU) return solver.solve_interior(boundary_u, t_index, x);
    return solver.solve_boundary(boundary_u, t_index, node_index);
  }
  if (order == 2) {
    if (target == MalliavinTarget::InteriorU)
      throw CapabilityError("second-order fields are computed at boundary targets");
    return solver.solve_second_order(boundary_u, t_index, node_index);
  }
  throw ConfigError("du_solve supports orders 1 and 2");
}

HNormResult h_norm_squared(const MalliavinField& field, HurstParam h, double delta) {
  if (delta < 0.0) throw ConfigError("h_norm window is empty");
  const double t = field.t_target;
  const double wlo = delta > 0.0 ? std::max(0.0, t - delta) : 0.0;
  // transpose to [sigma][cell]
  const std::size_t nc = field.cell_values.size();
  std::vector<std::vector<double>> v(field.mesh.size(), std::vector<double>(nc));
  for (std::size_t c = 0; c < nc; ++c)
    for (std::size_t j = 0; j < field.mesh.size(); ++j) v[j][c] = field.cell_values[c][j];
  HNormResult res;
  res.window_delta = delta;
  res.value = h_form_cells_window(field.r_edges, v, field.mesh, h, wlo, t);

  // coarse estimate: merge adjacent cells pairwise
  if (nc >= 4) {
    std::vector<double> medges;
    std::vector<std::vector<double>> mv(field.mesh.size());
    for (std::size_t c = 0; c < nc; c += 2) medges.push_back(field.r_edges[c]);
    medges.push_back(field.r_edges[nc]);
    for (std::size_t j = 0; j < field.mesh.size(); ++j) {
      for (std::size_t c = 0; c < nc; c += 2) {
        const double w1 = field.r_edges[c + 1] - field.r_edges[c];
        const double w2 = c + 2 <= nc ? field.r_edges[std::min(c + 2, nc)] - field.r_edges[c + 1]
                                      : 0.0;
        const double v2 = c + 1 < nc ? v[j][c + 1] : 0.0;
        mv[j].push_back((v[j][c] * w1 + v2 * w2) / (w1 + w2));
      }
    }
    const double coarse = h_form_cells_window(medges, mv, field.mesh, h, wlo, t);
    res.quadrature_error_estimate = std::abs(res.value - coarse);
  }
  return res;
}

SlopeReport lower_bound_probe(std::shared_ptr<const KernelEvaluator> kernel,
                              const SMesh& mesh, const AlphaCoefficient& alpha, double t,
                              const Point& x, const std::vector<double>& deltas,
                              HurstParam h) {
  h.require_rough();
  for (double dlt : deltas)
    if (!(dlt > 0.0 && dlt < 0.5 * t))
      throw ConfigError("lower_bound_probe deltas must lie in (0, t/2)");
  SlopeReport rep;
  rep.probe = "dz_window_lower_bound";
  rep.expected = 2.0 * h.h - 1.0;
  rep.unsupported_hypothesis = !alpha.nondegenerate();

  const auto edges = graded_time_partition(t, 32, 2, 24);
  const MalliavinField f = dz_field(kernel, mesh, alpha, t, x, edges);
  std::vector<double> lx, ly;
  bool positive = true;
  for (double dlt : deltas) {
    const double v = h_norm_squared(f, h, dlt).value;
    rep.deltas.push_back(dlt);
    rep.values.push_back(v);
    if (!(v > 0.0)) positive = false;
    lx.push_back(std::log(dlt));
    ly.push_back(std::log(std::max(v, 1e-300)));
  }
  auto [slope, icept] = quad::fit_line(lx, ly);
  (void)icept;
  rep.slope = slope;
  rep.satisfied = positive && slope <= rep.expected + 0.1;
  return rep;
}

SlopeReport dg_bound_probe(const KernelQuad& kq, const SMesh& mesh, const Nonlinearity& g,
                           const AlphaCoefficient& alpha, HurstParam h, std::size_t t_index,
                           std::size_t node_index, const std::vector<double>& deltas,
                           double p, double mu, int replicas, std::uint64_t seed) {
  h.require_rough();
  if (p < 2.0) throw ConfigError("dg_bound_probe requires p >= 2");
  SlopeReport rep;
  rep.probe = "dg_window_decay";
  rep.expected = p * (1.0 - mu);
  rep.insufficient_data = replicas < 100;
  rep.deltas = deltas;

  DuSolver solver(kq, mesh, g, alpha);
  NoiseSampler sampler(mesh, kq.grid(), h, seed);
  SolverParams params;
  params.lambda = 50.0 / kq.grid().horizon;
  params.keep_history = false;

  const double t = kq.grid().nodes[t_index];
  // deterministic DZ cells (the forcing averages); DG = Du - DZ cellwise
  BoundaryField zero_field;
  zero_field.grid = kq.grid();
  zero_field.domain = kq.evaluator().domain();
  zero_field.values.assign(kq.grid().size(),
                           std::vector<double>(kq.n_boundary(), 0.0));
  DuSolver dz_ref(kq, mesh, Nonlinearity::zero(), alpha);
  const auto dz_cells = dz_ref.target_cells_adjoint(zero_field, t_index, node_index);

  std::vector<std::vector<double>> norms(replicas, std::vector<double>(deltas.size(), 0.0));
  std::vector<std::string> errors(replicas);
  par::for_index(static_cast<std::size_t>(replicas), [&](std::size_t r) {
    try {
      const NoisePath path = sampler.sample(r);
      auto [field, report] = picard_boundary(kq, mesh, g, alpha, path, params);
      (void)report;
      auto cells = solver.target_cells_adjoint(field, t_index, node_index);
      MalliavinField dg;
      dg.t_target = t;
      dg.mesh = mesh;
      dg.r_edges.assign(kq.grid().nodes.begin(), kq.grid().nodes.begin() + t_index + 1);
      dg.cell_values.assign(t_index, std::vector<double>(mesh.size(), 0.0));
      for (std::size_t c = 0; c < t_index; ++c)
        for (std::size_t j = 0; j < mesh.size(); ++j)
          dg.cell_values[c][j] = cells[c][j] - dz_cells[c][j];
      for (std::size_t k = 0; k < deltas.size(); ++k)
        norms[r][k] = std::pow(h_norm_squared(dg, h, deltas[k]).value, 0.5 * p);
    } catch (const std::exception& e) {
      errors[r] = e.what();
    }
  });
  for (const auto& e : errors)
    if (!e.empty()) throw NumericalError("dg_bound_probe replica failed: " + e);

  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < deltas.size(); ++k) {
    double m = 0.0;
    for (int r = 0; r < replicas; ++r) m += norms[r][k];
    m /= replicas;
    rep.values.push_back(m);
    lx.push_back(std::log(deltas[k]));
    ly.push_back(std::log(std::max(m, 1e-300)));
  }
  auto [slope, icept] = quad::fit_line(lx, ly);
  (void)icept;
  rep.slope = slope;
  rep.satisfied = slope >= rep.expected - 0.2;
  return rep;
}

DecayReport nondegeneracy_prob(const KernelQuad& kq, const SMesh& mesh,
                               const Nonlinearity& g, const AlphaCoefficient& alpha,
                               HurstParam h, std::size_t t_index, std::size_t node_index,
                               std::vector<double> epsilons, int replicas,
                               std::uint64_t seed) {
  h.require_rough();
  if (!alpha.nondegenerate())
    throw ConfigError("nondegeneracy_prob requires an (a2) alpha");
  if (replicas < 1000) throw ConfigError("nondegeneracy_prob requires >= 1000 replicas");

  DuSolver solver(kq, mesh, g, alpha);
  NoiseSampler sampler(mesh, kq.grid(), h, seed);
  SolverParams params;
  params.lambda = 50.0 / kq.grid().horizon;
  params.keep_history = false;
  const double t = kq.grid().nodes[t_index];

  std::vector<double> norm2(replicas, 0.0);
  std::vector<std::string> errors(replicas);
  par::for_index(static_cast<std::size_t>(replicas), [&](std::size_t r) {
    try {
      const NoisePath path = sampler.sample(r);
      auto [field, report] = picard_boundary(kq, mesh, g, alpha, path, params);
      (void)report;
      MalliavinField du;
      du.t_target = t;
      du.mesh = mesh;
      du.r_edges.assign(kq.grid().nodes.begin(), kq.grid().nodes.begin() + t_index + 1);
      auto cells = solver.target_cells_adjoint(field, t_index, node_index);
      du.cell_values = std::move(cells);
      norm2[r] = h_norm_squared(du, h).value;
    } catch (const std::exception& e) {
      errors[r] = e.what();
    }
  });
  for (const auto& e : errors)
    if (!e.empty()) throw NumericalError("nondegeneracy replica failed: " + e);

  DecayReport rep;
  std::vector<double> sorted = norm2;
  std::sort(sorted.begin(), sorted.end());
  rep.median_norm = sorted[sorted.size() / 2];

  // deterministic window floor from the dz field
  const auto kernel = kq.evaluator_ptr();
  const Point xi = kq.evaluator().domain().boundary_nodes[node_index];
  const MalliavinField dz = dz_field(kernel, mesh, alpha, t, xi);
  rep.dz_window_floor = 0.5 * h_norm_squared(dz, h, t / 8.0).value;

  if (epsilons.empty())
    epsilons = {2.0 * rep.median_norm, rep.median_norm, 0.5 * rep.dz_window_floor,
                0.25 * rep.dz_window_floor};
  std::sort(epsilons.rbegin(), epsilons.rend());
  rep.epsilons = epsilons;
  for (double eps : epsilons) {
    std::size_t hits = 0;
    for (double v : norm2)
      if (v < eps) ++hits;
    rep.probabilities.push_back(static_cast<double>(hits) / replicas);
  }
  rep.monotone = true;
  for (std::size_t k = 0; k + 1 < rep.probabilities.size(); ++k)
    if (rep.probabilities[k + 1] > rep.probabilities[k] + 1e-15) rep.monotone = false;
  rep.vanishes_at_smallest = rep.probabilities.back() == 0.0;
  rep.satisfied = rep.monotone && rep.vanishes_at_smallest;
  return rep;
}

std::vector<FdCheckResult> malliavin_fd_check(
    const KernelQuad& kq, const SMesh& mesh, const Nonlinearity& g,
    const AlphaCoefficient& alpha, HurstParam h, const NoiseSampler& sampler,
    std::uint64_t replica, std::size_t t_index, std::size_t node_index,
    const std::vector<std::pair<std::size_t, std::size_t>>& tuples, double eps,
    const SolverParams& params) {
  const NoisePath base = sampler.sample(replica);
  auto [field, report] = picard_boundary(kq, mesh, g, alpha, base, params);
  (void)report;
  DuSolver solver(kq, mesh, g, alpha);
  const auto cells = solver.target_cells_adjoint(field, t_index, node_index);
  const auto w = increment_covariance(kq.grid(), h);

  std::vector<FdCheckResult> out;
  for (const auto& [ri, j] : tuples) {
    const auto dir = sampler.representer_direction(j, ri);
    auto up = picard_boundary(kq, mesh, g, alpha, NoiseSampler::shifted(base, dir, eps),
                              params);
    auto dn = picard_boundary(kq, mesh, g, alpha, NoiseSampler::shifted(base, dir, -eps),
                              params);
    FdCheckResult r;
    r.r_index = ri;
    r.sigma_index = j;
    r.finite_difference =
        (up.first.at(t_index, node_index) - dn.first.at(t_index, node_index)) / (2.0 * eps);
    double pred = 0.0;
    for (std::size_t ip = 0; ip < t_index; ++ip)
      pred += cells[ip][j] * mesh.mu[j] * w[ip][ri];
    r.malliavin = pred;
    r.relative_error =
        std::abs(r.malliavin - r.finite_difference) /
        std::max(std::abs(r.finite_difference), 1e-12);
    out.push_back(r);
  }
  return out;
}

}  // namespace fbh
