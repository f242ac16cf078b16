#pragma once

#include "shellinv/kinematics.hpp"

namespace shellinv {

/// Hyperelastic shell material: Koiter surface model or a compressible
/// Neo-Hookean 3D law projected through the thickness.
struct MaterialLaw {
  enum class Kind { Koiter, ProjectedNH };

  Kind kind = Kind::Koiter;
  double youngs_modulus = 0.0;  // N/mm^2
  double poisson_ratio = 0.0;
  double thickness = 0.0;       // mm
  int thickness_points = 4;     // through-thickness Gauss points (ProjectedNH)

  void validate() const {
    require(youngs_modulus > 0.0, "material: Young's modulus must be positive");
    require(poisson_ratio > -1.0 && poisson_ratio < 0.5, "material: Poisson ratio out of range");
    require(thickness > 0.0, "material: thickness must be positive");
    require(thickness_points >= 2, "material: need at least 2 thickness points");
  }

  // Classical 3D Lame constants.
  double lambda3d() const {
    return youngs_modulus * poisson_ratio /
           ((1.0 + poisson_ratio) * (1.0 - 2.0 * poisson_ratio));
  }
  double mu3d() const { return youngs_modulus / (2.0 * (1.0 + poisson_ratio)); }

  // Surface constants of the Koiter model.
  double lambda_surface() const {
    const double lt = lambda3d(), mt = mu3d();
    return thickness * 2.0 * lt * mt / (lt + 2.0 * mt);
  }
  double mu_surface() const { return thickness * mu3d(); }
};

/// Stress resultants and the four tangent blocks at a material point,
/// all in contravariant components.
struct StressState {
  Matrix2d tau = Matrix2d::Zero();  // Kirchhoff membrane resultants, N/mm
  Matrix2d M0 = Matrix2d::Zero();   // moment resultants, N
  Tensor4 c, d, e, f;               // 2 dtau/da, dtau/db, 2 dM0/da, dM0/db
};

namespace detail {

/// c-like tangent on a metric: L * inv x inv + M * (sym outer products).
inline Tensor4 metric_tangent(const Matrix2d& inv, double L, double M) {
  Tensor4 t;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int g = 0; g < 2; ++g)
        for (int d = 0; d < 2; ++d)
          t(a, b, g, d) = L * inv(a, b) * inv(g, d) +
                          M * (inv(a, g) * inv(b, d) + inv(a, d) * inv(b, g));
  return t;
}

}  // namespace detail

/// Koiter model response. Resultants are built on the reference contravariant
/// metric, so the tangent blocks are strain independent.
inline StressState koiter_response(const StrainState& strain, const Matrix2d& Ainv,
                                   const MaterialLaw& law) {
  require(law.kind == MaterialLaw::Kind::Koiter, "koiter_response: wrong material variant");
  const double L = law.lambda_surface();
  const double M = law.mu_surface();
  const double bend = law.thickness * law.thickness / 12.0;

  StressState s;
  const Matrix2d Eup = Ainv * strain.E * Ainv;  // E^ab
  const Matrix2d Kup = Ainv * strain.K * Ainv;
  const double trE = (Ainv * strain.E).trace();
  const double trK = (Ainv * strain.K).trace();
  s.tau = L * trE * Ainv + 2.0 * M * Eup;
  s.M0 = bend * (L * trK * Ainv + 2.0 * M * Kup);
  s.c = detail::metric_tangent(Ainv, L, M);
  s.f = s.c * bend;
  return s;
}

/// Koiter strain energy density per reference area (quadratic form).
inline double koiter_energy(const StrainState& strain, const Matrix2d& Ainv,
                            const MaterialLaw& law) {
  StressState s = koiter_response(strain, Ainv, law);
  return 0.5 * (s.tau.cwiseProduct(strain.E).sum() + s.M0.cwiseProduct(strain.K).sum());
}

/// 3D Kirchhoff stress of the compressible Neo-Hookean law with the thickness
/// stretch eliminated by the plane-stress condition. Inputs are the
/// contravariant layer metrics and Jstar^2 = det[g_ab]/det[G_ab].
inline Matrix2d nh_3d_stress(const Matrix2d& ginv, const Matrix2d& Ginv, double Jstar2,
                             const MaterialLaw& law) {
  if (!(Jstar2 > 0.0))
    throw InvertedConfigurationError("nh_3d_stress: nonpositive area stretch");
  const double lt = law.lambda3d(), mt = law.mu3d();
  const double beta = (lt + 2.0 * mt) / (lt * Jstar2 + 2.0 * mt);
  return mt * Ginv - mt * beta * ginv;
}

/// Tangent 2 d(tau~)/d(g_ab) of nh_3d_stress at the same layer state.
inline Tensor4 nh_3d_tangent(const Matrix2d& ginv, double Jstar2, const MaterialLaw& law) {
  const double lt = law.lambda3d(), mt = law.mu3d();
  const double denom = lt * Jstar2 + 2.0 * mt;
  const double beta = (lt + 2.0 * mt) / denom;
  const double b2 = 2.0 * mt * lt * Jstar2 * beta / denom;
  return detail::metric_tangent(ginv, b2, mt * beta);
}

/// Plane-stress reduced Neo-Hookean energy density of one layer point.
inline double nh_3d_energy(const Matrix2d& g, const Matrix2d& G, const MaterialLaw& law) {
  const double detg = g.determinant(), detG = G.determinant();
  if (!(detg > 0.0 && detG > 0.0))
    throw InvertedConfigurationError("nh_3d_energy: inverted layer metric");
  const double lt = law.lambda3d(), mt = law.mu3d();
  const double Jstar2 = detg / detG;
  const double lam3sq = (lt + 2.0 * mt) / (lt * Jstar2 + 2.0 * mt);
  const double Jt = std::sqrt(Jstar2 * lam3sq);
  const Matrix2d Ginv = G.inverse();
  const double I1 = (Ginv * g).trace() + lam3sq;
  return 0.25 * lt * (Jt * Jt - 1.0 - 2.0 * std::log(Jt)) +
         0.5 * mt * (I1 - 3.0 - 2.0 * std::log(Jt));
}

/// Projected shell response: the 3D Neo-Hookean stress integrated through the
/// thickness with the Kirchhoff-Love layer metric g_ab(t) = a_ab - 2 t b_ab.
inline StressState projected_response(const Matrix2d& a, const Matrix2d& b,
                                      const Matrix2d& A, const Matrix2d& B,
                                      const MaterialLaw& law) {
  require(law.kind == MaterialLaw::Kind::ProjectedNH, "projected_response: wrong material variant");
  StressState s;
  const GaussRule1d rule = gauss_legendre(law.thickness_points);
  const double h = 0.5 * law.thickness;
  for (int q = 0; q < law.thickness_points; ++q) {
    const double t = h * rule.points[q];
    const double w = h * rule.weights[q];
    const Matrix2d g = a - 2.0 * t * b;
    const Matrix2d G = A - 2.0 * t * B;
    const double detg = g.determinant(), detG = G.determinant();
    if (!(detg > 0.0 && detG > 0.0))
      throw InvertedConfigurationError("projected_response: inverted layer metric");
    const Matrix2d ginv = g.inverse();
    const Matrix2d Ginv = G.inverse();
    const double Jstar2 = detg / detG;
    const Matrix2d tau3 = nh_3d_stress(ginv, Ginv, Jstar2, law);
    const Tensor4 ct = nh_3d_tangent(ginv, Jstar2, law);
    s.tau += w * tau3;
    s.M0 -= w * t * tau3;
    s.c.axpy(w, ct);
    s.d.axpy(-w * t, ct);
    s.f.axpy(w * t * t, ct);
  }
  s.e = s.d;  // hyperelastic cross symmetry, e^abgd = d^gdab with major-symmetric d
  return s;
}

inline StressState projected_response(const SurfacePointState& st, const MaterialLaw& law) {
  return projected_response(st.cur.metric, st.cur.curvature, st.ref.metric,
                            st.ref.curvature, law);
}

/// Through-thickness integrated energy density of the projected model.
inline double projected_energy(const Matrix2d& a, const Matrix2d& b, const Matrix2d& A,
                               const Matrix2d& B, const MaterialLaw& law) {
  const GaussRule1d rule = gauss_legendre(law.thickness_points);
  const double h = 0.5 * law.thickness;
  double W = 0.0;
  for (int q = 0; q < law.thickness_points; ++q) {
    const double t = h * rule.points[q];
    W += h * rule.weights[q] * nh_3d_energy(a - 2.0 * t * b, A - 2.0 * t * B, law);
  }
  return W;
}

/// Dispatch on the material variant.
inline StressState material_response(const SurfacePointState& st, const StrainState& strain,
                                     const MaterialLaw& law) {
  if (law.kind == MaterialLaw::Kind::Koiter)
    return koiter_response(strain, st.ref.metric_inv, law);
  return projected_response(st, law);
}

inline double material_energy(const SurfacePointState& st, const StrainState& strain,
                              const MaterialLaw& law) {
  if (law.kind == MaterialLaw::Kind::Koiter)
    return koiter_energy(strain, st.ref.metric_inv, law);
  return projected_energy(st.cur.metric, st.cur.curvature, st.ref.metric,
                          st.ref.curvature, law);
}

}  // namespace shellinv
