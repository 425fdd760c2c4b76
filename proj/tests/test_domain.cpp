#include <doctest.h>

#include <cmath>

#include "fbh/domain.hpp"
#include "fbh/errors.hpp"
#include "fbh/quadrature.hpp"

using namespace fbh;

TEST_CASE("interval domain: two endpoints with counting measure") {
  const auto d = build_domain(DomainKind::Interval, 1.0, 7);
  CHECK(d.n_boundary() == 2);
  CHECK(d.boundary_nodes[0].x == 0.0);
  CHECK(d.boundary_nodes[1].x == 1.0);
  CHECK(d.boundary_weights[0] == 1.0);
  CHECK(d.boundary_weights[1] == 1.0);
  double total = 0.0;
  for (double w : d.boundary_weights) total += w;
  CHECK(std::abs(total - 2.0) < 1e-12);
}

TEST_CASE("rectangle domain: midpoint nodes, weights sum to the perimeter") {
  const auto d = build_domain(DomainKind::Rectangle, 1.0, 4);
  CHECK(d.n_boundary() == 16);
  double total = 0.0;
  for (double w : d.boundary_weights) total += w;
  CHECK(std::abs(total - 4.0) < 1e-12);
  for (const Point& p : d.boundary_nodes) {
    const bool on_edge = std::abs(p.x) < 1e-14 || std::abs(p.x - 1.0) < 1e-14 ||
                         std::abs(p.y) < 1e-14 || std::abs(p.y - 1.0) < 1e-14;
    CHECK(on_edge);
  }
}

TEST_CASE("non-positive beta is a configuration error") {
  CHECK_THROWS_AS(build_domain(DomainKind::Interval, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(build_domain(DomainKind::Rectangle, -1.0, 4), ConfigError);
}

TEST_CASE("time grid: uniform nodes and preconditions") {
  const auto g = time_grid(1.0, 4);
  REQUIRE(g.size() == 5);
  const double expected[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  for (int i = 0; i <= 4; ++i) CHECK(std::abs(g.nodes[i] - expected[i]) < 1e-14);
  const auto g2 = time_grid(0.5, 1);
  CHECK(g2.nodes.back() == 0.5);
  CHECK_THROWS_AS(time_grid(1.0, 0), ConfigError);
  CHECK_THROWS_AS(time_grid(-1.0, 4), ConfigError);
}

TEST_CASE("boundary quadrature of 1 returns |dD| exactly") {
  auto one = [](const Point&) { return 1.0; };
  CHECK(boundary_quadrature(build_domain(DomainKind::Interval, 1.0, 1), one) == 2.0);
  CHECK(std::abs(boundary_quadrature(build_domain(DomainKind::Rectangle, 1.0, 5), one) - 4.0) < 1e-12);
}

TEST_CASE("rectangle quadrature: x-coordinate integrates to 2 at any resolution") {
  // midpoint rule is exact on linear integrands per edge segment
  for (int res : {2, 4, 16}) {
    const auto d = build_domain(DomainKind::Rectangle, 1.0, res);
    const double v = boundary_quadrature(d, [](const Point& p) { return p.x; });
    CHECK(std::abs(v - 2.0) < 1e-13);
  }
}

TEST_CASE("rectangle quadrature converges at second order on smooth integrands") {
  auto f = [](const Point& p) { return std::exp(p.x) * std::cos(2.0 * p.y); };
  const double exact =
      boundary_quadrature(build_domain(DomainKind::Rectangle, 1.0, 4096), f);
  std::vector<double> lr, le;
  for (int res : {4, 8, 16, 32, 64}) {
    const double err = std::abs(
        boundary_quadrature(build_domain(DomainKind::Rectangle, 1.0, res), f) - exact);
    lr.push_back(std::log(static_cast<double>(res)));
    le.push_back(std::log(err));
  }
  const auto [slope, icept] = quad::fit_line(lr, le);
  (void)icept;
  CHECK(-slope >= 1.9);
}

TEST_CASE("s-mesh: unit total measure, positive weights") {
  const auto m = build_smesh(4);
  CHECK(m.size() == 4);
  double total = 0.0;
  for (double mu : m.mu) {
    CHECK(mu > 0.0);
    total += mu;
  }
  CHECK(std::abs(total - m.total_measure) < 1e-15);
  CHECK(std::abs(m.total_measure - 1.0) < 1e-15);
  CHECK_THROWS_AS(build_smesh(0), ConfigError);
}

TEST_CASE("corner-adjacent flags mark first and last node of each edge") {
  const auto d = build_domain(DomainKind::Rectangle, 1.0, 4);
  int corner = 0;
  for (bool c : d.corner_adjacent) corner += c ? 1 : 0;
  CHECK(corner == 8);
}
