#pragma once

#include "shellinv/patch.hpp"

namespace shellinv {

/// Midsurface differential geometry of one configuration at one point.
struct SurfaceConfig {
  Vector3d a[2];          // covariant tangents a_alpha
  Vector3d da[3];         // a_{alpha,beta}: (11, 22, 12)
  Vector3d n;             // unit normal
  Matrix2d metric;        // a_ab
  Matrix2d metric_inv;    // a^ab
  Matrix2d curvature;     // b_ab = n . a_{a,b}
  Vector3d acon[2];       // contravariant tangents a^alpha
  double christoffel[2][2][2] = {};  // Gamma^g_ab, first index g
  double jac = 0.0;       // sqrt(det a_ab) = |a1 x a2|

  const Vector3d& second_deriv(int alpha, int beta) const {
    return da[alpha == beta ? alpha : 2];
  }
  double gamma(int g, int a_, int b_) const { return christoffel[g][a_][b_]; }
};

/// Reference + current geometry bundle at a quadrature point.
struct SurfacePointState {
  SurfaceConfig ref, cur;
  double stretch() const { return cur.jac / ref.jac; }  // J = J_a / J_A
};

/// Strain measures derived from a SurfacePointState.
struct StrainState {
  Matrix2d E;        // Green-Lagrange membrane strain, 0.5 (a_ab - A_ab)
  Matrix2d K;        // relative curvature, b_ab - B_ab
  double H = 0.0;    // mean curvature of the current surface
  double kappa = 0.0;     // Gaussian curvature
  double kappa1 = 0.0, kappa2 = 0.0;  // principal curvatures
};

inline constexpr double kSingularJacRel = 1e-12;

/// Builds one configuration from basis derivatives and nodal coordinates
/// (nen x 3). Christoffel symbols are filled only when requested (they are
/// needed for the current configuration's covariant derivatives).
inline SurfaceConfig surface_config(const BasisValues& bv,
                                    const Eigen::Ref<const MatrixXd>& coords,
                                    bool with_christoffel) {
  SurfaceConfig c;
  c.a[0] = coords.transpose() * bv.dN.col(0);
  c.a[1] = coords.transpose() * bv.dN.col(1);
  for (int k = 0; k < 3; ++k) c.da[k] = coords.transpose() * bv.d2N.col(k);

  for (int a_ = 0; a_ < 2; ++a_)
    for (int b_ = 0; b_ < 2; ++b_)
      c.metric(a_, b_) = c.a[a_].dot(c.a[b_]);

  const Vector3d cross = c.a[0].cross(c.a[1]);
  c.jac = cross.norm();
  const double scale = 0.5 * (c.metric(0, 0) + c.metric(1, 1));
  if (!(c.jac > kSingularJacRel * scale))
    throw SingularElementError("degenerate surface element (J_A below tolerance)");
  c.n = cross / c.jac;

  const double det = c.metric(0, 0) * c.metric(1, 1) - c.metric(0, 1) * c.metric(1, 0);
  c.metric_inv << c.metric(1, 1) / det, -c.metric(0, 1) / det,
      -c.metric(1, 0) / det, c.metric(0, 0) / det;

  for (int a_ = 0; a_ < 2; ++a_)
    for (int b_ = 0; b_ < 2; ++b_)
      c.curvature(a_, b_) = c.n.dot(c.second_deriv(a_, b_));

  c.acon[0] = c.metric_inv(0, 0) * c.a[0] + c.metric_inv(0, 1) * c.a[1];
  c.acon[1] = c.metric_inv(1, 0) * c.a[0] + c.metric_inv(1, 1) * c.a[1];

  if (with_christoffel) {
    for (int g = 0; g < 2; ++g)
      for (int a_ = 0; a_ < 2; ++a_)
        for (int b_ = 0; b_ < 2; ++b_)
          c.christoffel[g][a_][b_] = c.acon[g].dot(c.second_deriv(a_, b_));
  }
  return c;
}

inline SurfaceConfig reference_state(const BasisValues& bv,
                                     const Eigen::Ref<const MatrixXd>& X_e) {
  return surface_config(bv, X_e, false);
}

inline SurfaceConfig current_state(const BasisValues& bv,
                                   const Eigen::Ref<const MatrixXd>& x_e) {
  return surface_config(bv, x_e, true);
}

inline StrainState strain_measures(const SurfacePointState& s) {
  StrainState st;
  st.E = 0.5 * (s.cur.metric - s.ref.metric);
  st.K = s.cur.curvature - s.ref.curvature;
  st.H = 0.5 * (s.cur.metric_inv * s.cur.curvature).trace();
  const double deta = s.cur.metric.determinant();
  st.kappa = s.cur.curvature.determinant() / deta;
  const double disc = std::max(st.H * st.H - st.kappa, 0.0);
  st.kappa1 = st.H + std::sqrt(disc);
  st.kappa2 = st.H - std::sqrt(disc);
  return st;
}

/// Per-node covariant second derivative operators,
/// Ntilde_{;ab} = N_{,ab} - Gamma^g_ab N_{,g}, columns ordered (11, 22, 12).
/// The Christoffel symbols of the current configuration are used.
inline Eigen::Matrix<double, Eigen::Dynamic, 3> covariant_second_derivatives(
    const BasisValues& bv, const SurfaceConfig& cur) {
  const int nen = static_cast<int>(bv.N.size());
  Eigen::Matrix<double, Eigen::Dynamic, 3> out(nen, 3);
  const int didx[3][2] = {{0, 0}, {1, 1}, {0, 1}};
  for (int c = 0; c < 3; ++c) {
    const int a_ = didx[c][0], b_ = didx[c][1];
    out.col(c) = bv.d2N.col(c) - cur.gamma(0, a_, b_) * bv.dN.col(0) -
                 cur.gamma(1, a_, b_) * bv.dN.col(1);
  }
  return out;
}

/// Surface deformation gradient F = a_alpha x A^alpha and the Cauchy-Green
/// tensors; diagnostics only, nothing downstream consumes them.
inline Matrix3d deformation_gradient(const SurfacePointState& s) {
  Matrix3d F = Matrix3d::Zero();
  for (int a_ = 0; a_ < 2; ++a_) F += s.cur.a[a_] * s.ref.acon[a_].transpose();
  return F;
}
inline Matrix3d right_cauchy_green(const SurfacePointState& s) {
  Matrix3d F = deformation_gradient(s);
  return F.transpose() * F;
}
inline Matrix3d left_cauchy_green(const SurfacePointState& s) {
  Matrix3d F = deformation_gradient(s);
  return F * F.transpose();
}

}  // namespace shellinv
