#include "fbh/nonlinear.hpp"

#include <algorithm>
#include <cmath>

#include "fbh/quadrature.hpp"

namespace fbh {

namespace {

double tanh_derivative(double u, int n) {
  const double th = std::tanh(u);
  const double s2 = 1.0 - th * th;  // sech²
  switch (n) {
    case 1: return s2;
    case 2: return -2.0 * th * s2;
    case 3: return s2 * (4.0 * th * th - 2.0 * s2);
    case 4: return th * s2 * (16.0 * s2 - 8.0 * th * th);
    default: throw ConfigError("tanh derivatives implemented up to order 4");
  }
}

}  // namespace

void Nonlinearity::validate() const {
  const double L = lipschitz;
  const double tol = 1e-9;
  for (int i = 0; i <= 200; ++i) {
    const double u = -50.0 + 0.5 * i;
    if (std::abs(deriv(u, 1)) > L + tol)
      throw ConfigError("nonlinearity violates |dg| <= L at u=" + std::to_string(u));
    if (std::abs(g(u)) > L * (1.0 + std::abs(u)) + tol)
      throw ConfigError("nonlinearity violates |g(u)| <= L(1+|u|) at u=" + std::to_string(u));
    if (tag == Smoothness::G2) {
      for (int n = 2; n <= std::min(4, max_order); ++n)
        if (std::abs(deriv(u, n)) > deriv_bound + 1e-3)
          throw ConfigError("nonlinearity violates the G2 derivative bound at order " +
                            std::to_string(n));
    }
  }
}

Nonlinearity Nonlinearity::zero() {
  Nonlinearity n;
  n.g = [](double) { return 0.0; };
  n.deriv = [](double, int) { return 0.0; };
  n.lipschitz = 0.0;
  n.deriv_bound = 0.0;
  n.tag = Smoothness::G2;
  n.max_order = 4;
  n.name = "zero";
  return n;
}

Nonlinearity Nonlinearity::constant(double c) {
  Nonlinearity n;
  n.g = [c](double) { return c; };
  n.deriv = [](double, int) { return 0.0; };
  n.lipschitz = std::abs(c);
  n.deriv_bound = 0.0;
  n.tag = Smoothness::G2;
  n.max_order = 4;
  n.name = "const";
  return n;
}

Nonlinearity Nonlinearity::tanh_g() {
  Nonlinearity n;
  n.g = [](double u) { return std::tanh(u); };
  n.deriv = [](double u, int k) { return tanh_derivative(u, k); };
  n.lipschitz = 1.0;
  n.deriv_bound = 4.2;
  n.tag = Smoothness::G2;
  n.max_order = 4;
  n.name = "tanh";
  return n;
}

Nonlinearity Nonlinearity::linear(double c) {
  Nonlinearity n;
  n.g = [c](double u) { return c * u; };
  n.deriv = [c](double, int k) { return k == 1 ? c : 0.0; };
  n.lipschitz = std::abs(c);
  n.deriv_bound = std::abs(c);
  n.tag = Smoothness::G2;
  n.max_order = 4;
  n.name = "linear";
  return n;
}

Nonlinearity Nonlinearity::scaled_tanh(double L) {
  Nonlinearity n;
  const double s = std::max(L, 1.0);
  n.g = [L, s](double u) { return L * std::tanh(u / s); };
  n.deriv = [L, s](double u, int k) { return L * tanh_derivative(u / s, k) / std::pow(s, k); };
  n.lipschitz = L;
  n.deriv_bound = 4.2 * std::max(L, 1.0);
  n.tag = Smoothness::G2;
  n.max_order = 4;
  n.name = "scaled_tanh";
  return n;
}

Nonlinearity Nonlinearity::by_name(const std::string& name, double param) {
  if (name == "zero") return zero();
  if (name == "const") return constant(param);
  if (name == "tanh") return tanh_g();
  if (name == "linear") return linear(param);
  if (name == "scaled_tanh") return scaled_tanh(param);
  throw ConfigError("unknown g.kind '" + name + "' (zero|const|tanh|linear|scaled_tanh)");
}

double weighted_norm(const std::vector<std::vector<double>>& f, const TimeGrid& grid,
                     const DomainSpec& domain, double lambda, double p) {
  double acc = 0.0;
  const double dt = grid.dt();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double sp = 0.0;
    for (std::size_t a = 0; a < domain.n_boundary(); ++a)
      sp += domain.boundary_weights[a] * std::pow(std::abs(f[i][a]), p);
    const double tw = (i == 0 || i + 1 == grid.size()) ? 0.5 : 1.0;
    acc += tw * dt * std::exp(-lambda * grid.nodes[i]) * sp;
  }
  return std::pow(acc, 1.0 / p);
}

std::vector<std::vector<double>> volterra_rhs(const KernelQuad& kq,
                                              const std::vector<std::vector<double>>& z_field,
                                              const Nonlinearity& g,
                                              const std::vector<std::vector<double>>& u) {
  const DomainSpec& d = kq.evaluator().domain();
  const std::size_t nb = d.n_boundary();
  const std::size_t nt = kq.grid().size();
  std::vector<std::vector<double>> out(nt, std::vector<double>(nb, 0.0));
  std::vector<std::vector<double>> gu(nt, std::vector<double>(nb));
  for (std::size_t i = 0; i < nt; ++i)
    for (std::size_t b = 0; b < nb; ++b) gu[i][b] = g.g(u[i][b]);
  for (std::size_t i = 1; i < nt; ++i)
    for (std::size_t a = 0; a < nb; ++a) {
      double acc = z_field[i][a];
      for (std::size_t k = 0; k < i; ++k) {
        const int m = static_cast<int>(i - 1 - k);
        for (std::size_t b = 0; b < nb; ++b)
          acc += d.boundary_weights[b] *
                 (kq.a_hi(m, a, b) * gu[k][b] + kq.a_lo(m, a, b) * gu[k + 1][b]);
      }
      out[i][a] = acc;
    }
  return out;
}

std::pair<BoundaryField, PicardReport> picard_boundary(
    const KernelQuad& kq, const SMesh& mesh, const Nonlinearity& g,
    const AlphaCoefficient& alpha, const NoisePath& noise, const SolverParams& params) {
  if (!(params.tol > 0.0)) throw ConfigError("solver.tol must be positive");
  g.validate();
  const DomainSpec& d = kq.evaluator().domain();
  const TimeGrid& grid = kq.grid();
  const std::size_t nb = d.n_boundary();
  const std::size_t nt = grid.size();

  const auto zs = build_boundary_z_scheme(kq, mesh, alpha);
  const auto z_field = zs.field(noise);

  PicardReport rep;
  rep.lambda = params.lambda;
  rep.p = params.p;

  std::vector<std::vector<double>> u = z_field;  // u_0 = Z
  for (int it = 0; it < params.max_iter; ++it) {
    auto next = volterra_rhs(kq, z_field, g, u);
    std::vector<std::vector<double>> inc(nt, std::vector<double>(nb));
    for (std::size_t i = 0; i < nt; ++i)
      for (std::size_t a = 0; a < nb; ++a) inc[i][a] = next[i][a] - u[i][a];
    const double nrm = weighted_norm(inc, grid, d, params.lambda, params.p);
    rep.increment_norms.push_back(nrm);
    if (params.keep_history) rep.increments.push_back(inc);
    u = std::move(next);
    rep.iterates = it + 1;
    if (nrm < params.tol) {
      rep.converged = true;
      break;
    }
  }
  if (!rep.converged)
    throw PicardDivergence("picard_boundary did not reach tol within max_iter", rep);

  BoundaryField field;
  field.grid = grid;
  field.domain = d;
  field.values = std::move(u);
  field.noise_seed = noise.seed;
  return {std::move(field), std::move(rep)};
}

double interior_solution(const BoundaryField& boundary, const KernelQuad& kq,
                         const SMesh& mesh, const Nonlinearity& g,
                         const AlphaCoefficient& alpha, const NoisePath& noise, double t,
                         const Point& x) {
  const DomainSpec& d = kq.evaluator().domain();
  for (const Point& bp : d.boundary_nodes)
    if (distance(bp, x) < 1e-14)
      throw ConfigError("interior_solution: x lies on the boundary; use the boundary field");
  if (d.kind == DomainKind::Interval) {
    if (!(x.x > 0.0 && x.x < 1.0)) throw ConfigError("interior_solution: x must be interior");
  } else if (!(x.x > 0.0 && x.x < 1.0 && x.y > 0.0 && x.y < 1.0)) {
    throw ConfigError("interior_solution: x must be interior");
  }
  std::size_t ti = boundary.grid.size();
  for (std::size_t i = 0; i < boundary.grid.size(); ++i)
    if (std::abs(boundary.grid.nodes[i] - t) < 1e-12) ti = i;
  if (ti == boundary.grid.size())
    throw ConfigError("interior_solution: t must be a grid node");
  if (ti == 0) return 0.0;  // zero initial condition

  const auto scheme = build_increment_scheme(kq, mesh, alpha, ti, x);
  double acc = scheme.apply(noise);

  const auto row = kq.interior_row(x);
  const std::size_t nb = d.n_boundary();
  for (std::size_t k = 0; k < ti; ++k) {
    const int m = static_cast<int>(ti - 1 - k);
    for (std::size_t b = 0; b < nb; ++b)
      acc += d.boundary_weights[b] * (row.a_hi(m, b) * g.g(boundary.at(k, b)) +
                                      row.a_lo(m, b) * g.g(boundary.at(k + 1, b)));
  }
  return acc;
}

DiagnosticTable contraction_diagnostics(const PicardReport& report, const TimeGrid& grid,
                                        const DomainSpec& domain, double p,
                                        const std::vector<double>& lambda_grid) {
  if (report.increments.size() < 3)
    throw ConfigError("contraction_diagnostics needs at least 3 stored increments");
  DiagnosticTable table;
  std::vector<double> ll, lf;
  for (double lambda : lambda_grid) {
    DiagnosticRow row;
    row.lambda = lambda;
    std::vector<double> norms;
    for (const auto& inc : report.increments)
      norms.push_back(weighted_norm(inc, grid, domain, lambda, p));
    for (std::size_t n = 0; n + 1 < norms.size(); ++n) {
      if (norms[n] <= 0.0) break;
      row.factors.push_back(norms[n + 1] / norms[n]);
    }
    row.max_factor_tail = 0.0;
    for (std::size_t n = 1; n < row.factors.size(); ++n)
      row.max_factor_tail = std::max(row.max_factor_tail, row.factors[n]);
    // late ratios sit at the tolerance floor; the contraction constant is read
    // off the early iterates
    double gm = 1.0;
    const std::size_t nf = std::min<std::size_t>(3, row.factors.size());
    for (std::size_t n = 0; n < nf; ++n) gm *= row.factors[n];
    row.mean_factor = nf > 0 ? std::pow(gm, 1.0 / nf) : 0.0;
    table.rows.push_back(row);
    if (row.mean_factor > 0.0) {
      ll.push_back(std::log(lambda));
      lf.push_back(std::log(row.mean_factor));
    }
  }
  if (ll.size() >= 2) {
    auto [slope, icept] = quad::fit_line(ll, lf);
    (void)icept;
    table.lambda_exponent = slope;
  }
  table.contracting_at_largest =
      !table.rows.empty() && table.rows.back().max_factor_tail < 1.0 &&
      table.rows.back().max_factor_tail > 0.0;
  table.factor_decreasing = true;
  for (std::size_t i = 0; i + 1 < table.rows.size(); ++i)
    if (table.rows[i + 1].mean_factor > table.rows[i].mean_factor + 1e-12)
      table.factor_decreasing = false;
  table.exponent_nonpositive = table.lambda_exponent <= 1e-6;
  return table;
}

}  // namespace fbh
