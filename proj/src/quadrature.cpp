#include "fbh/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace fbh::quad {

namespace {

Rule build_gauss_legendre(int n) {
  Rule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  // Newton iteration on P_n, Chebyshev initial guess.
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double p0 = 0.0, p1 = 0.0;
    for (int it = 0; it < 100; ++it) {
      p0 = 1.0;
      p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    p0 = 1.0;
    p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    const double dp = n * (x * p1 - p0) / (x * x - 1.0);
    r.nodes[i] = x;
    r.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

}  // namespace

const Rule& gauss_legendre(int n) {
  static std::map<int, Rule> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build_gauss_legendre(n)).first;
  return it->second;
}

double gauss(const std::function<double(double)>& f, double a, double b, int n) {
  const Rule& r = gauss_legendre(n);
  const double xm = 0.5 * (a + b);
  const double xr = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += r.weights[i] * f(xm + xr * r.nodes[i]);
  return s * xr;
}

double gauss_composite(const std::function<double(double)>& f, double a, double b, int n,
                       int m) {
  double s = 0.0;
  const double h = (b - a) / m;
  for (int k = 0; k < m; ++k) s += gauss(f, a + k * h, a + (k + 1) * h, n);
  return s;
}

double gauss_sqrt_singular_left(const std::function<double(double)>& f, double L, int n) {
  // τ = v², dτ = 2v dv
  return gauss([&](double v) { return f(v * v) * 2.0 * v; }, 0.0, std::sqrt(L), n);
}

double gauss_graded_left(const std::function<double(double)>& f, double L, double g, int n) {
  if (g <= 0.0) throw std::invalid_argument("grading exponent must be positive");
  const double q = 1.0 / g;  // τ = v^q
  const double vmax = std::pow(L, g);
  return gauss([&](double v) { return f(std::pow(v, q)) * q * std::pow(v, q - 1.0); }, 0.0,
               vmax, n);
}

std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_line needs >= 2 points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / n;
  return {slope, intercept};
}

}  // namespace fbh::quad
