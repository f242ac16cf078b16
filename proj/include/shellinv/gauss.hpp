#pragma once

#include "shellinv/common.hpp"

namespace shellinv {

/// One-dimensional Gauss-Legendre rule on [-1,1].
struct GaussRule1d {
  std::vector<double> points;
  std::vector<double> weights;
};

/// Tensor-product quadrature on the parent domain [-1,1]^2.
/// Weights sum to 4 (parent-domain area).
struct QuadratureRule {
  std::vector<Vector2d> points;
  std::vector<double> weights;
};

/// Gauss-Legendre nodes/weights by Newton iteration on the Legendre polynomial.
inline GaussRule1d gauss_legendre(int n) {
  require(n >= 1, "gauss_legendre: n must be >= 1");
  GaussRule1d rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Chebyshev-based initial guess, then Newton on P_n.
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.points[i] = -x;
    rule.points[n - 1 - i] = x;
    rule.weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
    rule.weights[n - 1 - i] = rule.weights[i];
  }
  if (n % 2 == 1) rule.points[n / 2] = 0.0;
  return rule;
}

inline QuadratureRule tensor_rule(int n_xi, int n_eta) {
  GaussRule1d gx = gauss_legendre(n_xi);
  GaussRule1d ge = gauss_legendre(n_eta);
  QuadratureRule q;
  for (int j = 0; j < n_eta; ++j)
    for (int i = 0; i < n_xi; ++i) {
      q.points.emplace_back(gx.points[i], ge.points[j]);
      q.weights.push_back(gx.weights[i] * ge.weights[j]);
    }
  return q;
}

}  // namespace shellinv
