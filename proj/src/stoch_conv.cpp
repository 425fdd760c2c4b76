#include "fbh/stoch_conv.hpp"

#include <algorithm>
#include <cmath>

#include "fbh/errors.hpp"
#include "fbh/parallel.hpp"
#include "fbh/quadrature.hpp"
#include "fbh/rng.hpp"
#include "fbh/stats.hpp"

namespace fbh {

void AlphaCoefficient::validate(const DomainSpec& domain, const SMesh& mesh,
                                double hurst) const {
  if (lower_bound > 0.0) {
    for (double s : mesh.sigma)
      for (const Point& y : domain.boundary_nodes)
        if (evaluator(s, y) < lower_bound - 1e-12)
          throw ConfigError("alpha claims (a2) but drops below alpha_0 at a mesh point");
  }
  if (tag == AlphaTag::A1Prime) {
    const double d = domain.dim();
    const double need = (d - 1.0) / (2.0 * hurst - 1.0);
    if (!(theta > need))
      throw ConfigError("alpha integrability exponent theta must exceed (d-1)/(2H-1)");
  }
}

AlphaCoefficient AlphaCoefficient::one() {
  AlphaCoefficient a;
  a.evaluator = [](double, const Point&) { return 1.0; };
  a.lower_bound = 1.0;
  a.tag = AlphaTag::A1Prime;
  a.theta = 8.0;
  a.name = "one";
  return a;
}

AlphaCoefficient AlphaCoefficient::sine() {
  AlphaCoefficient a;
  a.evaluator = [](double sigma, const Point&) {
    return 1.0 + 0.5 * std::sin(2.0 * M_PI * sigma);
  };
  a.lower_bound = 0.5;
  a.tag = AlphaTag::A1Prime;
  a.theta = 8.0;
  a.name = "sine";
  return a;
}

AlphaCoefficient AlphaCoefficient::degenerate() {
  AlphaCoefficient a;
  // vanishes on the half of the boundary with larger arc parameter
  a.evaluator = [](double, const Point& y) { return y.x < 0.5 ? 1.0 : 0.0; };
  a.lower_bound = 0.0;
  a.tag = AlphaTag::A1;
  a.name = "degenerate";
  return a;
}

AlphaCoefficient AlphaCoefficient::by_name(const std::string& name) {
  if (name == "one") return one();
  if (name == "sine") return sine();
  if (name == "degenerate") return degenerate();
  throw ConfigError("unknown alpha.kind '" + name + "' (one|sine|degenerate)");
}

std::function<double(double, std::size_t)> phi_integrand(
    std::shared_ptr<const KernelEvaluator> kernel, const SMesh& mesh,
    const AlphaCoefficient& alpha, double t, const Point& x) {
  if (!(t > 0.0)) throw ConfigError("phi_integrand requires t > 0");
  const DomainSpec& d = kernel->domain();
  std::vector<std::vector<double>> ajb(mesh.size(), std::vector<double>(d.n_boundary()));
  for (std::size_t j = 0; j < mesh.size(); ++j)
    for (std::size_t b = 0; b < d.n_boundary(); ++b)
      ajb[j][b] = alpha.evaluator(mesh.sigma[j], d.boundary_nodes[b]);
  return [kernel, t, x, ajb, &dref = kernel->domain()](double s, std::size_t j) -> double {
    if (s >= t) return 0.0;
    double acc = 0.0;
    for (std::size_t b = 0; b < dref.n_boundary(); ++b)
      acc += dref.boundary_weights[b] * segment_averaged_kernel(*kernel, t - s, x, b) *
             ajb[j][b];
    return acc;
  };
}

double IncrementScheme::apply(const NoisePath& noise) const {
  double acc = 0.0;
  for (std::size_t j = 0; j < phibar.size(); ++j)
    for (std::size_t k = 0; k < t_index; ++k)
      acc += phibar[j][k] * noise.increment(j, k);
  return acc;
}

IncrementScheme build_increment_scheme(const KernelQuad& kq, const SMesh& mesh,
                                       const AlphaCoefficient& alpha, std::size_t t_index,
                                       const Point& x) {
  if (t_index >= kq.grid().size())
    throw ConfigError("increment scheme target must be a grid node");
  IncrementScheme s;
  s.grid = kq.grid();
  s.t_index = t_index;
  const DomainSpec& d = kq.evaluator().domain();
  const double dt = kq.grid().dt();
  const std::size_t nb = d.n_boundary();

  // decide boundary-node vs interior slab weights
  std::ptrdiff_t node_id = -1;
  for (std::size_t b = 0; b < nb; ++b)
    if (distance(d.boundary_nodes[b], x) < 1e-14) node_id = static_cast<std::ptrdiff_t>(b);
  KernelQuad::InteriorRow row;
  if (node_id < 0) row = kq.interior_row(x);

  s.phibar.assign(mesh.size(), std::vector<double>(t_index, 0.0));
  for (std::size_t j = 0; j < mesh.size(); ++j) {
    for (std::size_t k = 0; k < t_index; ++k) {
      const int m = static_cast<int>(t_index - 1 - k);  // τ-cell offset
      double acc = 0.0;
      for (std::size_t b = 0; b < nb; ++b) {
        const double cell =
            node_id >= 0 ? kq.cell_integral(m, static_cast<std::size_t>(node_id), b)
                         : row.cell_integral(m, b);
        acc += d.boundary_weights[b] * (cell / dt) *
               alpha.evaluator(mesh.sigma[j], d.boundary_nodes[b]);
      }
      s.phibar[j][k] = acc;
    }
  }
  return s;
}

BoundaryZScheme build_boundary_z_scheme(const KernelQuad& kq, const SMesh& mesh,
                                        const AlphaCoefficient& alpha) {
  const DomainSpec& d = kq.evaluator().domain();
  const double dt = kq.grid().dt();
  BoundaryZScheme s;
  s.grid = kq.grid();
  s.nb = d.n_boundary();
  const int n = kq.grid().n_steps;
  s.contraction.assign(
      n, std::vector<std::vector<double>>(s.nb, std::vector<double>(mesh.size(), 0.0)));
  for (int m = 0; m < n; ++m)
    for (std::size_t a = 0; a < s.nb; ++a)
      for (std::size_t j = 0; j < mesh.size(); ++j) {
        double acc = 0.0;
        for (std::size_t b = 0; b < s.nb; ++b)
          acc += d.boundary_weights[b] * (kq.cell_integral(m, a, b) / dt) *
                 alpha.evaluator(mesh.sigma[j], d.boundary_nodes[b]);
        s.contraction[m][a][j] = acc;
      }
  return s;
}

std::vector<std::vector<double>> BoundaryZScheme::field(const NoisePath& noise) const {
  const std::size_t nt = grid.size();
  std::vector<std::vector<double>> z(nt, std::vector<double>(nb, 0.0));
  const std::size_t ns = noise.values.size();
  for (std::size_t i = 1; i < nt; ++i)
    for (std::size_t a = 0; a < nb; ++a) {
      double acc = 0.0;
      for (std::size_t j = 0; j < ns; ++j)
        for (std::size_t k = 0; k < i; ++k)
          acc += contraction[i - 1 - k][a][j] * noise.increment(j, k);
      z[i][a] = acc;
    }
  return z;
}

ConvolutionSample simulate_z(const IncrementScheme& scheme, const NoisePath& noise,
                             const Point& x) {
  ConvolutionSample out;
  out.t = scheme.grid.nodes[scheme.t_index];
  out.x = x;
  out.route = ConvolutionRoute::Increment;
  out.seed = noise.seed;
  out.value = scheme.apply(noise);
  return out;
}

ConvolutionSample simulate_z_gaussian(double t, const Point& x, double variance,
                                      std::uint64_t seed, std::uint64_t replica) {
  if (!(variance > 0.0))
    throw NumericalError("exact-Gaussian route requires a positive variance");
  GaussianStream stream(derive_seed(seed, 0xABCDu, replica));
  ConvolutionSample out;
  out.t = t;
  out.x = x;
  out.route = ConvolutionRoute::ExactGaussian;
  out.seed = seed;
  out.value = std::sqrt(variance) * stream.gaussian();
  return out;
}

// cell averages of φ over an arbitrary partition; the cell adjacent to t gets a
// sqrt substitution for the kernel singularity
std::vector<std::vector<double>> phi_cell_averages(
    const std::function<double(double, std::size_t)>& phi, const std::vector<double>& edges,
    std::size_t n_sigma, double t) {
  const std::size_t nc = edges.size() - 1;
  std::vector<std::vector<double>> out(n_sigma, std::vector<double>(nc, 0.0));
  for (std::size_t j = 0; j < n_sigma; ++j) {
    for (std::size_t c = 0; c < nc; ++c) {
      const double a = edges[c], b = edges[c + 1];
      double v;
      if (std::abs(b - t) < 1e-15) {
        // τ = t - s = w²
        v = quad::gauss([&](double w) { return phi(t - w * w, j) * 2.0 * w; }, 0.0,
                        std::sqrt(t - a), 32);
      } else {
        v = quad::gauss([&](double s) { return phi(s, j); }, a, b, 8);
      }
      out[j][c] = v / (b - a);
    }
  }
  return out;
}

std::vector<double> variance_partition(double t) {
  return graded_time_partition(t, 64, 8, 14);
}

double variance_z(std::shared_ptr<const KernelEvaluator> kernel, const SMesh& mesh,
                  const AlphaCoefficient& alpha, double t, const Point& x, HurstParam h,
                  int refine, int corner_levels, int base_cells) {
  h.require_rough();
  if (!(t > 0.0)) return 0.0;
  auto phi = phi_integrand(kernel, mesh, alpha, t, x);
  const auto edges = graded_time_partition(t, base_cells, refine, corner_levels);
  const auto avg = phi_cell_averages(phi, edges, mesh.size(), t);
  return h_form_cells(edges, avg, mesh, h);
}

double variance_z_kstar(std::shared_ptr<const KernelEvaluator> kernel, const SMesh& mesh,
                        const AlphaCoefficient& alpha, double t, const Point& x,
                        HurstParam h) {
  h.require_rough();
  auto phi = phi_integrand(kernel, mesh, alpha, t, x);
  double total = 0.0;
  for (std::size_t j = 0; j < mesh.size(); ++j) {
    // time-reversed integrand s ↦ φ(t-s, σ_j), as in the isometry
    auto f = [&phi, t, j](double r) { return phi(t - r, j); };
    total += mesh.mu[j] * kstar_squared_integral(f, t, h, 24, 32);
  }
  return total;
}

std::vector<ProbeReport> regularity_probes(std::shared_ptr<const KernelEvaluator> kernel,
                                           const SMesh& mesh, const AlphaCoefficient& alpha,
                                           HurstParam h, const TimeGrid& grid,
                                           const RegularityConfig& config) {
  h.require_rough();
  const DomainSpec& d = kernel->domain();
  const double t = config.t;
  std::vector<ProbeReport> reports;

  // (i) interior increment variance: slope of log E|Z(t,x)-Z(t,z)|² vs log|x-z|.
  // The base point sits off-center: at x = 1/2 with symmetric α the gradient of
  // the integrand vanishes and the pair variance degenerates to fourth order.
  {
    ProbeReport rep;
    rep.probe = "interior_variance_slope";
    const double eps = config.interior_margin;
    const double base = std::max(0.25, eps);
    const Point x0{base, d.kind == DomainKind::Rectangle ? 0.5 : 0.0};
    std::vector<double> lx, ly;
    for (double sep : config.separations) {
      if (base + sep > 1.0 - eps + 1e-12)
        throw ConfigError("probe separation violates the interior margin");
      const Point z{base + sep, x0.y};
      auto phix = phi_integrand(kernel, mesh, alpha, t, x0);
      auto phiz = phi_integrand(kernel, mesh, alpha, t, z);
      auto diff = [&](double s, std::size_t j) { return phix(s, j) - phiz(s, j); };
      const auto edges = graded_time_partition(t, 48, 4, 10);
      const auto avg = phi_cell_averages(diff, edges, mesh.size(), t);
      const double v = h_form_cells(edges, avg, mesh, h);
      rep.abscissae.push_back(sep);
      rep.values.push_back(v);
      lx.push_back(std::log(sep));
      ly.push_back(std::log(v));
    }
    auto [slope, icept] = quad::fit_line(lx, ly);
    (void)icept;
    rep.slope = slope;
    rep.satisfied = slope > 1.8 && slope < 2.2;
    reports.push_back(std::move(rep));
  }

  // (ii) boundary-trace moments across the t-grid: p = 2 and 4
  for (int p : {2, 4}) {
    ProbeReport rep;
    rep.probe = "boundary_trace_p" + std::to_string(p);
    if (alpha.tag != AlphaTag::A1Prime)
      throw ConfigError("boundary trace probe requires an (a1') alpha");
    bool ok = true;
    double global_max = 0.0;
    for (std::size_t i = 1; i < grid.size(); i += std::max<std::size_t>(1, grid.size() / 8)) {
      const double ti = grid.nodes[i];
      std::vector<double> node_moment;
      for (std::size_t b = 0; b < d.n_boundary(); ++b) {
        if (!d.corner_adjacent.empty() && d.corner_adjacent[b]) continue;
        const double var =
            variance_z(kernel, mesh, alpha, ti, d.boundary_nodes[b], h, 4, 12, 48);
        // Gaussian absolute moments: E|Z|^p = var^{p/2} (p-1)!!
        const double moment = p == 2 ? var : 3.0 * var * var;
        node_moment.push_back(moment);
        global_max = std::max(global_max, moment);
      }
      std::vector<double> sorted = node_moment;
      std::sort(sorted.begin(), sorted.end());
      const double median = sorted[sorted.size() / 2];
      for (double m : node_moment)
        if (m > 3.0 * median) ok = false;
      rep.abscissae.push_back(ti);
      rep.values.push_back(*std::max_element(node_moment.begin(), node_moment.end()));
    }
    rep.satisfied = ok && std::isfinite(global_max);
    reports.push_back(std::move(rep));
  }

  // (iii) p-th moments finite for p ∈ {2,4,8} and sampled kurtosis ≈ 3
  {
    ProbeReport rep;
    rep.probe = "moments_and_kurtosis";
    const Point x0{0.5, d.kind == DomainKind::Rectangle ? 0.5 : 0.0};
    const double var = variance_z(kernel, mesh, alpha, t, x0, h);
    bool finite = true;
    for (int p : {2, 4, 8}) {
      const double hm = p == 2 ? var : (p == 4 ? 3 * var * var : 105.0 * std::pow(var, 4));
      rep.values.push_back(hm);
      rep.abscissae.push_back(p);
      finite = finite && std::isfinite(hm);
    }
    std::size_t ti = 0;
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (std::abs(grid.nodes[i] - t) < 1e-12) ti = i;
    if (ti == 0) throw ConfigError("probe time must be a grid node");
    KernelQuad kq(kernel, grid);
    auto scheme = build_increment_scheme(kq, mesh, alpha, ti, x0);
    NoiseSampler sampler(mesh, grid, h, config.seed);
    std::vector<double> vals(config.kurtosis_replicas);
    par::for_index(vals.size(), [&](std::size_t r) {
      NoisePath path = sampler.sample(r);
      vals[r] = scheme.apply(path);
    });
    const double kurt = stats::kurtosis(vals);
    rep.slope = kurt;
    rep.satisfied = finite && std::abs(kurt - 3.0) < 0.3;
    rep.note = "sampled kurtosis";
    reports.push_back(std::move(rep));
  }
  return reports;
}

}  // namespace fbh
