#pragma once

#include "shellinv/bernstein.hpp"
#include "shellinv/gauss.hpp"
#include "shellinv/knots.hpp"

#include <ostream>
#include <sstream>

namespace shellinv {

/// Rational basis values at one evaluation point of one element.
/// Derivatives are taken with respect to the parent coordinates of the
/// element, (xi, eta) in [-1,1]^2. Second-derivative columns are ordered
/// (11, 22, 12).
struct BasisValues {
  VectorXd N;
  Eigen::Matrix<double, Eigen::Dynamic, 2> dN;
  Eigen::Matrix<double, Eigen::Dynamic, 3> d2N;
};

/// Tensor-product NURBS surface patch with per-element Bezier extraction.
class NurbsPatch {
 public:
  KnotVector kv_xi, kv_eta;
  MatrixXd control_points;  // n x 3, mm
  VectorXd weights;         // n, strictly positive

  NurbsPatch() = default;

  NurbsPatch(KnotVector kx, KnotVector ke, MatrixXd pts, VectorXd w)
      : kv_xi(std::move(kx)), kv_eta(std::move(ke)),
        control_points(std::move(pts)), weights(std::move(w)) {
    finalize();
  }

  int degree_xi() const { return kv_xi.degree; }
  int degree_eta() const { return kv_eta.degree; }
  int num_basis_xi() const { return kv_xi.num_basis(); }
  int num_basis_eta() const { return kv_eta.num_basis(); }
  int num_nodes() const { return num_basis_xi() * num_basis_eta(); }
  int num_elements_xi() const { return nel_xi_; }
  int num_elements_eta() const { return nel_eta_; }
  int num_elements() const { return nel_xi_ * nel_eta_; }
  int nodes_per_element() const { return (degree_xi() + 1) * (degree_eta() + 1); }

  int node_index(int ix, int iy) const { return iy * num_basis_xi() + ix; }

  /// Global control-point indices supporting element e, local index
  /// l = j*(p_xi+1) + i.
  std::vector<int> element_nodes(int e) const {
    check_element(e);
    const int ex = e % nel_xi_, ey = e / nel_xi_;
    std::vector<int> nodes;
    nodes.reserve(nodes_per_element());
    for (int j = 0; j <= degree_eta(); ++j)
      for (int i = 0; i <= degree_xi(); ++i)
        nodes.push_back(node_index(first_xi_[ex] + i, first_eta_[ey] + j));
    return nodes;
  }

  /// Rational basis with first and second parent derivatives.
  BasisValues eval_basis(int e, const Vector2d& xi) const {
    check_element(e);
    const int ex = e % nel_xi_, ey = e / nel_xi_;
    const int px = degree_xi(), pe = degree_eta();

    std::vector<double> b, b1, b2;
    bernstein_basis(xi[0], px, b, b1, b2);
    VectorXd vx = apply_extraction(extr_xi_[ex], b);
    VectorXd vx1 = apply_extraction(extr_xi_[ex], b1);
    VectorXd vx2 = apply_extraction(extr_xi_[ex], b2);
    bernstein_basis(xi[1], pe, b, b1, b2);
    VectorXd ve = apply_extraction(extr_eta_[ey], b);
    VectorXd ve1 = apply_extraction(extr_eta_[ey], b1);
    VectorXd ve2 = apply_extraction(extr_eta_[ey], b2);

    const int nen = nodes_per_element();
    VectorXd P(nen);
    Eigen::Matrix<double, Eigen::Dynamic, 2> P1(nen, 2);
    Eigen::Matrix<double, Eigen::Dynamic, 3> P2(nen, 3);
    VectorXd wloc(nen);
    const std::vector<int> nodes = element_nodes(e);
    for (int j = 0; j <= pe; ++j)
      for (int i = 0; i <= px; ++i) {
        const int l = j * (px + 1) + i;
        wloc[l] = weights[nodes[l]];
        P[l] = vx[i] * ve[j];
        P1(l, 0) = vx1[i] * ve[j];
        P1(l, 1) = vx[i] * ve1[j];
        P2(l, 0) = vx2[i] * ve[j];
        P2(l, 1) = vx[i] * ve2[j];
        P2(l, 2) = vx1[i] * ve1[j];
      }

    // Weight function and its derivatives.
    const double W = wloc.dot(P);
    const double W1 = wloc.dot(P1.col(0)), W2 = wloc.dot(P1.col(1));
    const double W11 = wloc.dot(P2.col(0)), W22 = wloc.dot(P2.col(1)), W12 = wloc.dot(P2.col(2));

    BasisValues out;
    out.N.resize(nen);
    out.dN.resize(nen, 2);
    out.d2N.resize(nen, 3);
    const double iW = 1.0 / W, iW2 = iW * iW, iW3 = iW2 * iW;
    const double Wd[2] = {W1, W2};
    const double Wdd[3] = {W11, W22, W12};
    const int didx[3][2] = {{0, 0}, {1, 1}, {0, 1}};
    for (int l = 0; l < nen; ++l) {
      const double w = wloc[l];
      out.N[l] = w * P[l] * iW;
      for (int a = 0; a < 2; ++a)
        out.dN(l, a) = w * (P1(l, a) * W - P[l] * Wd[a]) * iW2;
      for (int c = 0; c < 3; ++c) {
        const int a = didx[c][0], bb = didx[c][1];
        out.d2N(l, c) = w * (P2(l, c) * iW
                             - (P1(l, a) * Wd[bb] + P1(l, bb) * Wd[a] + P[l] * Wdd[c]) * iW2
                             + 2.0 * P[l] * Wd[a] * Wd[bb] * iW3);
      }
    }
    return out;
  }

  /// Maps a parent point of element e to physical space.
  Vector3d map_point(int e, const Vector2d& xi) const {
    BasisValues bv = eval_basis(e, xi);
    Vector3d x = Vector3d::Zero();
    const std::vector<int> nodes = element_nodes(e);
    for (std::size_t l = 0; l < nodes.size(); ++l)
      x += bv.N[static_cast<int>(l)] * control_points.row(nodes[l]).transpose();
    return x;
  }

  /// Structured text dump (documented in docs/mesh_format.md).
  void serialize(std::ostream& os) const {
    os << "shellinv-patch 1\n";
    os << "degree_xi " << degree_xi() << "\n";
    os << "degree_eta " << degree_eta() << "\n";
    os << "knots_xi";
    for (double u : kv_xi.knots) os << " " << fmt(u);
    os << "\nknots_eta";
    for (double u : kv_eta.knots) os << " " << fmt(u);
    os << "\nnum_points_xi " << num_basis_xi() << "\n";
    os << "num_points_eta " << num_basis_eta() << "\n";
    for (int a = 0; a < num_nodes(); ++a)
      os << "point " << fmt(control_points(a, 0)) << " " << fmt(control_points(a, 1))
         << " " << fmt(control_points(a, 2)) << " " << fmt(weights[a]) << "\n";
  }

  void finalize() {
    kv_xi.validate();
    kv_eta.validate();
    require(control_points.rows() == num_nodes(),
            "patch: control net size does not match knot vectors");
    require(weights.size() == num_nodes(), "patch: weight count mismatch");
    require((weights.array() > 0.0).all(), "patch: weights must be strictly positive");
    extr_xi_ = bezier_extraction(kv_xi);
    extr_eta_ = bezier_extraction(kv_eta);
    nel_xi_ = static_cast<int>(extr_xi_.size());
    nel_eta_ = static_cast<int>(extr_eta_.size());
    first_xi_ = first_functions(kv_xi);
    first_eta_ = first_functions(kv_eta);
  }

 private:
  int nel_xi_ = 0, nel_eta_ = 0;
  std::vector<MatrixXd> extr_xi_, extr_eta_;
  std::vector<int> first_xi_, first_eta_;

  static std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
  }

  void check_element(int e) const {
    require(e >= 0 && e < num_elements(), "patch: element index out of range");
  }

  static VectorXd apply_extraction(const MatrixXd& M, const std::vector<double>& bern) {
    const Eigen::Map<const VectorXd> b(bern.data(), static_cast<int>(bern.size()));
    return M.transpose() * b;
  }

  /// For each 1D element, index of the first supporting basis function.
  static std::vector<int> first_functions(const KnotVector& kv) {
    std::vector<int> first;
    const int p = kv.degree;
    for (std::size_t i = p; i + p + 1 < kv.knots.size(); ++i)
      if (kv.knots[i + 1] > kv.knots[i]) first.push_back(static_cast<int>(i) - p);
    return first;
  }
};

/// Planar rectangle [0,L] x [0,W] at z = 0; xi runs along L, eta along W.
inline NurbsPatch make_flat_strip(double L, double W, int p, int nel_x, int nel_y) {
  require(L > 0 && W > 0, "make_flat_strip: dimensions must be positive");
  require(nel_x >= 1 && nel_y >= 1, "make_flat_strip: need at least one element");
  KnotVector kx = uniform_open_knots(p, nel_x);
  KnotVector ke = uniform_open_knots(p, nel_y);
  std::vector<double> gx = greville_abscissae(kx), gy = greville_abscissae(ke);
  const int nx = kx.num_basis(), ny = ke.num_basis();
  MatrixXd pts(nx * ny, 3);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      pts.row(j * nx + i) = Vector3d(L * gx[i], W * gy[j], 0.0).transpose();
  return NurbsPatch(kx, ke, pts, VectorXd::Ones(nx * ny));
}

/// Quarter model of a hinged cylindrical roof of full planform L x B on a
/// cylinder of radius R about the x axis. xi runs along the circular arc from
/// the crown (y=0) to the hinged edge, eta along the axis from the transverse
/// symmetry plane (x=0) to the free edge at x=L/2. The arc is represented
/// exactly (weights), so every surface point sits at distance R from the axis.
inline NurbsPatch make_cylindrical_panel(double R, double L, double B, int p,
                                         int nel_arc, int nel_ax) {
  require(p >= 2, "make_cylindrical_panel: degree must be >= 2 to represent the arc");
  require(R > 0 && L > 0 && B > 0, "make_cylindrical_panel: dimensions must be positive");
  require(B < 2.0 * M_PI * R, "make_cylindrical_panel: arc width exceeds circumference");
  require(nel_arc >= 1 && nel_ax >= 1, "make_cylindrical_panel: need at least one element");

  const double theta0 = 0.5 * B / R;  // half opening angle, B is arc length
  require(theta0 < M_PI / 2.0, "make_cylindrical_panel: opening angle too large for one segment");

  // Exact quadratic arc from crown to hinge in homogeneous (y*w, z*w, w).
  KnotVector arc_kv;
  arc_kv.degree = 2;
  arc_kv.knots = {0, 0, 0, 1, 1, 1};
  const double wm = std::cos(0.5 * theta0);
  MatrixXd arc(3, 3);
  arc.row(0) << 0.0, R, 1.0;
  arc.row(1) << wm * R * std::tan(0.5 * theta0), wm * R, wm;
  arc.row(2) << R * std::sin(theta0), R * std::cos(theta0), 1.0;

  for (int q = 2; q < p; ++q) elevate_bezier_segment(arc_kv, arc);
  for (int i = 1; i < nel_arc; ++i)
    insert_knot(arc_kv, arc, static_cast<double>(i) / nel_arc);

  KnotVector ax_kv = uniform_open_knots(p, nel_ax);
  std::vector<double> gax = greville_abscissae(ax_kv);
  const int na = arc_kv.num_basis(), nx = ax_kv.num_basis();
  MatrixXd pts(na * nx, 3);
  VectorXd w(na * nx);
  for (int j = 0; j < nx; ++j)
    for (int i = 0; i < na; ++i) {
      const double wi = arc(i, 2);
      pts.row(j * na + i) = Vector3d(0.5 * L * gax[j], arc(i, 0) / wi, arc(i, 1) / wi).transpose();
      w[j * na + i] = wi;
    }
  return NurbsPatch(arc_kv, ax_kv, pts, w);
}

}  // namespace shellinv
