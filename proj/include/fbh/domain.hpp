#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

namespace fbh {

enum class DomainKind { Interval, Rectangle };

/// A point of the closed domain; y is ignored for the interval.
struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Geometry and boundary quadrature for the unit interval or the unit square.
/// Boundary nodes carry surface-measure weights: counting measure {1,1} on the
/// interval endpoints, midpoint-rule edge segments on the rectangle perimeter.
struct DomainSpec {
  DomainKind kind = DomainKind::Interval;
  double beta = 1.0;
  int boundary_resolution = 1;          // nodes per edge (rectangle only)
  std::vector<Point> boundary_nodes;
  std::vector<double> boundary_weights;
  std::vector<double> boundary_arc;     // arc-length parameter of each node
  std::vector<bool> corner_adjacent;    // within one mesh cell of a corner

  int dim() const { return kind == DomainKind::Interval ? 1 : 2; }
  double boundary_measure() const { return kind == DomainKind::Interval ? 2.0 : 4.0; }
  std::size_t n_boundary() const { return boundary_nodes.size(); }

  /// Inward unit normal at a (non-corner) boundary node.
  Point inward_normal(std::size_t node) const;
};

struct TimeGrid {
  double horizon = 1.0;
  int n_steps = 1;
  std::vector<double> nodes;  // t_0 = 0 < ... < t_N = horizon, uniform

  double dt() const { return horizon / n_steps; }
  std::size_t size() const { return nodes.size(); }
};

/// Finite measure space (S, μ) discretized into cells; sigma holds a
/// representative coordinate per cell used to evaluate α(σ, ·).
struct SMesh {
  std::vector<double> sigma;
  std::vector<double> mu;
  double total_measure = 0.0;

  std::size_t size() const { return sigma.size(); }
};

DomainSpec build_domain(DomainKind kind, double beta, int boundary_resolution);
TimeGrid time_grid(double horizon, int n_steps);

/// Unit-measure mesh: S = [0,1) split into n equal cells, σ_j at midpoints.
SMesh build_smesh(int n_cells);

/// Σ_j w_j f(node_j); the surface integral of f over ∂D.
double boundary_quadrature(const DomainSpec& domain,
                           const std::function<double(const Point&)>& f);

double distance(const Point& a, const Point& b);

}  // namespace fbh
