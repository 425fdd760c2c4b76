#include "fbh/domain.hpp"

#include <cmath>

#include "fbh/errors.hpp"

namespace fbh {

Point DomainSpec::inward_normal(std::size_t node) const {
  if (kind == DomainKind::Interval) {
    return boundary_nodes[node].x < 0.5 ? Point{1.0, 0.0} : Point{-1.0, 0.0};
  }
  const double s = boundary_arc[node];
  if (s < 1.0) return {0.0, 1.0};   // bottom edge y=0
  if (s < 2.0) return {-1.0, 0.0};  // right edge x=1
  if (s < 3.0) return {0.0, -1.0};  // top edge y=1
  return {1.0, 0.0};                // left edge x=0
}

DomainSpec build_domain(DomainKind kind, double beta, int boundary_resolution) {
  if (!(beta > 0.0)) throw ConfigError("domain.beta must be positive");
  DomainSpec d;
  d.kind = kind;
  d.beta = beta;
  if (kind == DomainKind::Interval) {
    d.boundary_resolution = 1;
    d.boundary_nodes = {{0.0, 0.0}, {1.0, 0.0}};
    d.boundary_weights = {1.0, 1.0};
    d.boundary_arc = {0.0, 1.0};
    d.corner_adjacent = {false, false};
    return d;
  }
  if (boundary_resolution < 1) throw ConfigError("domain.boundary_resolution must be >= 1");
  d.boundary_resolution = boundary_resolution;
  const int m = boundary_resolution;
  const double h = 1.0 / m;
  // perimeter parameterized counter-clockwise from (0,0); midpoint nodes per edge
  for (int edge = 0; edge < 4; ++edge) {
    for (int i = 0; i < m; ++i) {
      const double s = (i + 0.5) * h;
      Point p;
      switch (edge) {
        case 0: p = {s, 0.0}; break;
        case 1: p = {1.0, s}; break;
        case 2: p = {1.0 - s, 1.0}; break;
        default: p = {0.0, 1.0 - s}; break;
      }
      d.boundary_nodes.push_back(p);
      d.boundary_weights.push_back(h);
      d.boundary_arc.push_back(edge + s);
      d.corner_adjacent.push_back(i == 0 || i == m - 1);
    }
  }
  return d;
}

TimeGrid time_grid(double horizon, int n_steps) {
  if (!(horizon > 0.0)) throw ConfigError("time.horizon must be positive");
  if (n_steps < 1) throw ConfigError("time.steps must be >= 1");
  TimeGrid g;
  g.horizon = horizon;
  g.n_steps = n_steps;
  g.nodes.resize(n_steps + 1);
  for (int i = 0; i <= n_steps; ++i) g.nodes[i] = horizon * i / n_steps;
  return g;
}

SMesh build_smesh(int n_cells) {
  if (n_cells < 1) throw ConfigError("noise.s_cells must be >= 1");
  SMesh m;
  m.sigma.resize(n_cells);
  m.mu.assign(n_cells, 1.0 / n_cells);
  for (int j = 0; j < n_cells; ++j) m.sigma[j] = (j + 0.5) / n_cells;
  m.total_measure = 1.0;
  return m;
}

double boundary_quadrature(const DomainSpec& domain,
                           const std::function<double(const Point&)>& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < domain.boundary_nodes.size(); ++i)
    s += domain.boundary_weights[i] * f(domain.boundary_nodes[i]);
  return s;
}

double distance(const Point& a, const Point& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

}  // namespace fbh
