#pragma once

#include <functional>
#include <utility>
#include <vector>

namespace fbh::quad {

struct Rule {
  std::vector<double> nodes;    // on (-1,1)
  std::vector<double> weights;
};

/// Gauss-Legendre rule of order n (cached).
const Rule& gauss_legendre(int n);

/// ∫_a^b f(x) dx by a single Gauss-Legendre panel.
double gauss(const std::function<double(double)>& f, double a, double b, int n = 32);

/// ∫_a^b f(x) dx on m equal panels.
double gauss_composite(const std::function<double(double)>& f, double a, double b, int n,
                       int m);

/// ∫_0^L f(τ) dτ where f(τ) ~ τ^{-1/2}·smooth near τ=0; substitutes τ=v².
double gauss_sqrt_singular_left(const std::function<double(double)>& f, double L, int n = 32);

/// ∫_0^L f(τ) dτ with f ~ τ^{g-1}·smooth near 0 absorbed by grading exponent 1/g.
/// Substitutes τ = v^{1/g}; exact cancellation when f = τ^{g-1}·C¹.
double gauss_graded_left(const std::function<double(double)>& f, double L, double g,
                         int n = 32);

/// Simple least-squares line fit; returns {slope, intercept}.
std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace fbh::quad
