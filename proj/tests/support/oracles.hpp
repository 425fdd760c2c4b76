#pragma once

// Test-only reference implementations, kept independent of the library's
// quadrature and kernel code paths.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace oracle {

inline double simpson(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  return (b - a) / 6.0 * (f(a) + 4.0 * f(c) + f(b));
}

inline double adaptive_simpson_impl(const std::function<double(double)>& f, double a,
                                    double b, double whole, double tol, int depth) {
  const double c = 0.5 * (a + b);
  const double left = simpson(f, a, c);
  const double right = simpson(f, c, b);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson_impl(f, a, c, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_impl(f, c, b, right, 0.5 * tol, depth - 1);
}

/// Adaptive Simpson quadrature with absolute tolerance.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-10, int depth = 40) {
  return adaptive_simpson_impl(f, a, b, simpson(f, a, b), tol, depth);
}

/// ∬_{[a,b]×[c,d]} |s-r|^{2H-2} ds dr: the inner integral in r has the
/// antiderivative sign(u)|u|^{2H-1}/(2H-1); the outer is adaptive Simpson.
inline double frac_mass_reference(double H, double a, double b, double c, double d,
                                  double tol = 1e-12) {
  auto anti = [H](double u) {
    const double e = 2.0 * H - 1.0;
    return (u >= 0 ? 1.0 : -1.0) * std::pow(std::abs(u), e) / e;
  };
  auto inner = [&](double s) { return anti(s - c) - anti(s - d); };
  return adaptive_simpson(inner, a, b, tol, 48);
}

/// Free heat kernel of ½Δ.
inline double gauss_kernel(double t, double r) {
  return std::exp(-r * r / (2.0 * t)) / std::sqrt(2.0 * M_PI * t);
}

/// Method-of-images kernel for the pure Neumann interval problem; the value at
/// a boundary source ȳ of the kernel mapping boundary data to the solution.
inline double images_neumann_kernel(double t, double x, double ybar, int n_images = 8) {
  double s = 0.0;
  for (int n = -n_images; n <= n_images; ++n)
    s += gauss_kernel(t, x - ybar - 2.0 * n) + gauss_kernel(t, x + ybar - 2.0 * n);
  return s;
}

/// First k eigenvalues of -½ d²/dx² on (0,1) with the dissipative Robin
/// condition, by symmetric second-order finite differences on n+1 nodes.
inline std::vector<double> fd_robin_eigenvalues(double beta, int n, int k) {
  const double h = 1.0 / n;
  // stiffness (quadratic form ½∫φ'² + ½β(φ0²+φn²)) against lumped mass
  Eigen::VectorXd diag(n + 1), sub(n);
  std::vector<double> mass(n + 1, h);
  mass[0] = mass[n] = 0.5 * h;
  for (int i = 0; i <= n; ++i) {
    double kd = (i == 0 || i == n) ? 0.5 / h : 1.0 / h;
    if (i == 0 || i == n) kd += 0.5 * beta;
    diag[i] = kd / mass[i];
  }
  for (int i = 0; i < n; ++i) sub[i] = (-0.5 / h) / std::sqrt(mass[i] * mass[i + 1]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("tridiagonal eigen solve failed");
  std::vector<double> out(k);
  for (int i = 0; i < k; ++i) out[i] = solver.eigenvalues()[i];
  return out;
}

}  // namespace oracle
