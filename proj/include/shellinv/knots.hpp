#pragma once

#include "shellinv/common.hpp"

namespace shellinv {

/// Open (clamped) knot vector for one parametric direction.
struct KnotVector {
  int degree = 0;
  std::vector<double> knots;

  int num_basis() const { return static_cast<int>(knots.size()) - degree - 1; }

  /// Distinct interior spans [u_i, u_{i+1}) with positive measure.
  std::vector<std::pair<double, double>> spans() const {
    std::vector<std::pair<double, double>> s;
    for (std::size_t i = degree; i + degree + 1 < knots.size(); ++i)
      if (knots[i + 1] > knots[i]) s.emplace_back(knots[i], knots[i + 1]);
    return s;
  }

  int num_elements() const { return static_cast<int>(spans().size()); }

  void validate() const {
    const int p = degree;
    const int m = static_cast<int>(knots.size());
    require(p >= 1, "knot vector: degree must be >= 1");
    require(m >= 2 * (p + 1), "knot vector: needs at least 2(p+1) knots");
    for (int i = 0; i + 1 < m; ++i)
      require(knots[i] <= knots[i + 1], "knot vector: knots must be nondecreasing");
    for (int i = 1; i <= p; ++i) {
      require(knots[i] == knots[0], "knot vector: not clamped at the start");
      require(knots[m - 1 - i] == knots[m - 1], "knot vector: not clamped at the end");
    }
    require(knots[0] < knots[m - 1], "knot vector: zero-measure parameter range");
  }
};

/// Uniform open knot vector on [0,1] with nel elements.
inline KnotVector uniform_open_knots(int p, int nel) {
  require(p >= 1 && nel >= 1, "uniform_open_knots: bad arguments");
  KnotVector kv;
  kv.degree = p;
  for (int i = 0; i <= p; ++i) kv.knots.push_back(0.0);
  for (int i = 1; i < nel; ++i) kv.knots.push_back(static_cast<double>(i) / nel);
  for (int i = 0; i <= p; ++i) kv.knots.push_back(1.0);
  return kv;
}

/// Greville abscissae (one per basis function).
inline std::vector<double> greville_abscissae(const KnotVector& kv) {
  std::vector<double> g(kv.num_basis());
  for (int a = 0; a < kv.num_basis(); ++a) {
    double s = 0.0;
    for (int j = 1; j <= kv.degree; ++j) s += kv.knots[a + j];
    g[a] = s / kv.degree;
  }
  return g;
}

/// Per-element Bezier extraction for an open knot vector.
///
/// Returned matrices follow the convex-combination convention: row k of M^e
/// gives the coefficients expressing Bezier point k of the element in the
/// B-spline control points, so entries are nonnegative and rows sum to one.
/// Basis values recover as N_local(xi) = M^T B(xi) with B the Bernstein basis.
inline std::vector<MatrixXd> bezier_extraction(const KnotVector& kv) {
  kv.validate();
  const int p = kv.degree;
  const std::vector<double>& U = kv.knots;
  const int m = static_cast<int>(U.size());

  // Extraction in the "N = C B" convention, transposed on output.
  std::vector<MatrixXd> ops;
  MatrixXd C = MatrixXd::Identity(p + 1, p + 1);
  MatrixXd Cnext = MatrixXd::Identity(p + 1, p + 1);
  std::vector<double> alphas(p + 1, 0.0);

  int a = p;          // 0-based index of the last knot of the current span start
  int b = a + 1;      // next distinct knot position
  while (b < m - 1) {
    int i = b;
    while (b < m - 1 && U[b + 1] == U[b]) ++b;
    int mult = b - i + 1;
    if (mult < p) {
      const double numer = U[b] - U[a];
      for (int j = p; j > mult; --j) alphas[j - mult - 1] = numer / (U[a + j] - U[a]);
      const int r = p - mult;
      Cnext.setIdentity();
      for (int j = 1; j <= r; ++j) {
        const int save = r - j;
        const int s = mult + j;
        for (int k = p; k >= s; --k) {
          const double alpha = alphas[k - s];
          C.col(k) = alpha * C.col(k) + (1.0 - alpha) * C.col(k - 1);
        }
        if (b < m - 1) {
          // Carry overlapping coefficients to the next operator.
          for (int l = 0; l <= j; ++l) Cnext(save + l, save) = C(p - j + l, p);
        }
      }
    }
    ops.push_back(C.transpose());
    if (b < m - 1) {
      C = Cnext;
      Cnext.setIdentity();
      a = b;
      ++b;
    }
  }
  return ops;
}

/// Inserts a single knot into a curve in homogeneous coordinates (Boehm).
/// ctrl is n x dim (dim = 4 for weighted 3D points).
inline void insert_knot(KnotVector& kv, MatrixXd& ctrl, double u) {
  const int p = kv.degree;
  const std::vector<double>& U = kv.knots;
  require(u > U.front() && u < U.back(), "insert_knot: knot outside range");
  // Find span k with U[k] <= u < U[k+1].
  int k = p;
  while (k + 1 < static_cast<int>(U.size()) && !(U[k] <= u && u < U[k + 1])) ++k;

  const int n = static_cast<int>(ctrl.rows());
  MatrixXd out(n + 1, ctrl.cols());
  for (int i = 0; i <= k - p; ++i) out.row(i) = ctrl.row(i);
  for (int i = k - p + 1; i <= k; ++i) {
    const double denom = U[i + p] - U[i];
    const double alpha = denom > 0.0 ? (u - U[i]) / denom : 0.0;
    out.row(i) = alpha * ctrl.row(i) + (1.0 - alpha) * ctrl.row(i - 1);
  }
  for (int i = k + 1; i <= n; ++i) out.row(i) = ctrl.row(i - 1);

  std::vector<double> Unew(U.begin(), U.begin() + k + 1);
  Unew.push_back(u);
  Unew.insert(Unew.end(), U.begin() + k + 1, U.end());
  kv.knots = std::move(Unew);
  ctrl = std::move(out);
}

/// Degree-elevates a single Bezier segment (knots {0..0,1..1}) by one,
/// in homogeneous coordinates.
inline void elevate_bezier_segment(KnotVector& kv, MatrixXd& ctrl) {
  const int p = kv.degree;
  require(static_cast<int>(ctrl.rows()) == p + 1, "elevate_bezier_segment: not a single Bezier segment");
  MatrixXd out(p + 2, ctrl.cols());
  out.row(0) = ctrl.row(0);
  out.row(p + 1) = ctrl.row(p);
  for (int i = 1; i <= p; ++i) {
    const double a = static_cast<double>(i) / (p + 1);
    out.row(i) = a * ctrl.row(i - 1) + (1.0 - a) * ctrl.row(i);
  }
  ctrl = std::move(out);
  kv.degree = p + 1;
  kv.knots.assign(2 * (p + 2), 0.0);
  for (int i = p + 2; i < 2 * (p + 2); ++i) kv.knots[i] = 1.0;
}

}  // namespace shellinv
