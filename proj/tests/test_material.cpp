#include "support/testutil.hpp"

#include "shellinv/material.hpp"

using namespace shellinv;

namespace {

MaterialLaw koiter_law(double E = 1.2e6, double nu = 0.0, double T = 0.1) {
  MaterialLaw law;
  law.kind = MaterialLaw::Kind::Koiter;
  law.youngs_modulus = E;
  law.poisson_ratio = nu;
  law.thickness = T;
  return law;
}

MaterialLaw projected_law(double E = 1.2e6, double nu = 0.3, double T = 0.1, int nt = 4) {
  MaterialLaw law;
  law.kind = MaterialLaw::Kind::ProjectedNH;
  law.youngs_modulus = E;
  law.poisson_ratio = nu;
  law.thickness = T;
  law.thickness_points = nt;
  return law;
}

Matrix2d random_spd(std::mt19937_64& gen, double base, double amp) {
  Matrix2d M;
  const double a = base + testutil::uniform(gen, -amp, amp);
  const double b = base + testutil::uniform(gen, -amp, amp);
  const double c = testutil::uniform(gen, -amp, amp);
  M << a, c, c, b;
  return M;
}

Matrix2d random_sym(std::mt19937_64& gen, double amp) {
  Matrix2d M;
  const double a = testutil::uniform(gen, -amp, amp);
  const double b = testutil::uniform(gen, -amp, amp);
  const double c = testutil::uniform(gen, -amp, amp);
  M << a, c, c, b;
  return M;
}

StrainState strain_from(const Matrix2d& a, const Matrix2d& b, const Matrix2d& A,
                        const Matrix2d& B) {
  StrainState s;
  s.E = 0.5 * (a - A);
  s.K = b - B;
  return s;
}

}  // namespace

TEST_CASE("koiter response vanishes at zero strain") {
  StrainState s;
  s.E.setZero();
  s.K.setZero();
  StressState r = koiter_response(s, Matrix2d::Identity(), koiter_law());
  CHECK(r.tau.norm() == 0.0);
  CHECK(r.M0.norm() == 0.0);
}

TEST_CASE("koiter uniaxial response at nu = 0 is the 1D Hooke limit") {
  MaterialLaw law = koiter_law(1.2e6, 0.0, 0.1);
  const double eps = 1e-3;
  StrainState s;
  s.E << eps, 0, 0, 0;
  s.K.setZero();
  StressState r = koiter_response(s, Matrix2d::Identity(), law);
  CHECK(r.tau(0, 0) == Catch::Approx(law.thickness * law.youngs_modulus * eps).epsilon(1e-13));
  CHECK(r.tau(1, 1) == Catch::Approx(0.0).margin(1e-13));
}

TEST_CASE("koiter stress is the energy gradient (FD oracle)") {
  std::mt19937_64 gen = testutil::rng(17);
  MaterialLaw law = koiter_law(3105.0, 0.3, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix2d A = random_spd(gen, 1.0, 0.2);
    const Matrix2d B = random_sym(gen, 0.05);
    const Matrix2d a = A + random_sym(gen, 0.08);
    const Matrix2d b = B + random_sym(gen, 0.05);
    const Matrix2d Ainv = A.inverse();

    StressState r = koiter_response(strain_from(a, b, A, B), Ainv, law);
    auto energy = [&](const Matrix2d& aa, const Matrix2d& bb) {
      return koiter_energy(strain_from(aa, bb, A, B), Ainv, law);
    };
    const double h = 1e-6;
    for (int i = 0; i < 2; ++i)
      for (int j = i; j < 2; ++j) {
        Matrix2d ap = a, am = a;
        ap(i, j) += h;
        ap(j, i) = ap(i, j);
        am(i, j) -= h;
        am(j, i) = am(i, j);
        // dW = 0.5 tau^ab da_ab summed over all index pairs
        const double fd = (energy(ap, b) - energy(am, b)) / (2 * h);
        const double an = (i == j) ? 0.5 * r.tau(i, j) : r.tau(i, j);
        CHECK(an == Catch::Approx(fd).epsilon(1e-7).margin(1e-10));

        Matrix2d bp = b, bm = b;
        bp(i, j) += h;
        bp(j, i) = bp(i, j);
        bm(i, j) -= h;
        bm(j, i) = bm(i, j);
        // dW = M0^ab db_ab summed over all index pairs
        const double fdb = (energy(a, bp) - energy(a, bm)) / (2 * h);
        const double anb = (i == j) ? r.M0(i, j) : 2.0 * r.M0(i, j);
        CHECK(anb == Catch::Approx(fdb).epsilon(1e-7).margin(1e-10));
      }
  }
}

TEST_CASE("nh 3d stress vanishes in the undeformed state") {
  Matrix2d I = Matrix2d::Identity();
  Matrix2d tau = nh_3d_stress(I, I, 1.0, projected_law());
  CHECK(tau.norm() == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("nh 3d stress closed form for equibiaxial stretch at nu = 0") {
  MaterialLaw law = projected_law(1.2e6, 0.0, 0.1);
  const double lam = 1.3;
  Matrix2d Ginv = Matrix2d::Identity();
  Matrix2d ginv = Matrix2d::Identity() / (lam * lam);
  Matrix2d tau = nh_3d_stress(ginv, Ginv, lam * lam * lam * lam / 1.0, law);
  // J*^2 = det g / det G = lam^4
  CHECK(tau(0, 0) == Catch::Approx(law.mu3d() * (1.0 - 1.0 / (lam * lam))).epsilon(1e-13));
}

TEST_CASE("nh 3d stress rejects inverted configurations") {
  CHECK_THROWS_AS(nh_3d_stress(Matrix2d::Identity(), Matrix2d::Identity(), -1.0, projected_law()),
                  InvertedConfigurationError);
}

TEST_CASE("nh 3d stress is the gradient of the plane-stress energy (FD oracle)") {
  std::mt19937_64 gen = testutil::rng(23);
  MaterialLaw law = projected_law(3.0e6, 0.3, 0.2);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix2d G = random_spd(gen, 1.0, 0.15);
    const Matrix2d g = G + random_sym(gen, 0.1);
    if (g.determinant() <= 0.3) continue;
    const Matrix2d tau = nh_3d_stress(g.inverse(), G.inverse(), g.determinant() / G.determinant(), law);
    const double h = 1e-5;
    for (int i = 0; i < 2; ++i)
      for (int j = i; j < 2; ++j) {
        Matrix2d gp = g, gm = g;
        gp(i, j) += h;
        gp(j, i) = gp(i, j);
        gm(i, j) -= h;
        gm(j, i) = gm(i, j);
        // dW = 0.5 tau~^ab dg_ab summed over all index pairs
        const double fd = (nh_3d_energy(gp, G, law) - nh_3d_energy(gm, G, law)) / (2 * h);
        const double an = (i == j) ? 0.5 * tau(i, j) : tau(i, j);
        CHECK(an == Catch::Approx(fd).epsilon(1e-6).margin(1e-9));
      }
  }
}

TEST_CASE("projected response vanishes in the flat undeformed state") {
  MaterialLaw law = projected_law();
  Matrix2d I = Matrix2d::Identity(), Z = Matrix2d::Zero();
  StressState r = projected_response(I, Z, I, Z, law);
  CHECK(r.tau.norm() == Catch::Approx(0.0).margin(1e-12));
  CHECK(r.M0.norm() == Catch::Approx(0.0).margin(1e-12));
  CHECK(r.d.max_abs() == Catch::Approx(0.0).margin(1e-12));
  CHECK(r.e.max_abs() == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("pure stretch with zero curvature change gives zero moments") {
  MaterialLaw law = projected_law(3.0e6, 0.3, 0.2);
  Matrix2d I = Matrix2d::Identity(), Z = Matrix2d::Zero();
  Matrix2d a;
  a << 1.2, 0.05, 0.05, 0.94;
  StressState r = projected_response(a, Z, I, Z, law);
  CHECK(r.M0.norm() == Catch::Approx(0.0).margin(1e-12 * r.tau.norm()));
}

TEST_CASE("projected tangent blocks match finite differences of the resultants") {
  std::mt19937_64 gen = testutil::rng(29);
  MaterialLaw law = projected_law(3.0e6, 0.3, 0.2);
  int tested = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix2d A = random_spd(gen, 1.0, 0.1);
    const Matrix2d B = random_sym(gen, 0.2);
    const Matrix2d a = A + random_sym(gen, 0.06);
    const Matrix2d b = B + random_sym(gen, 0.2);
    StressState r;
    try {
      r = projected_response(a, b, A, B, law);
    } catch (const InvertedConfigurationError&) {
      continue;
    }
    ++tested;
    const double h = 1e-6;
    auto sym_perturb = [](Matrix2d m, int i, int j, double d) {
      m(i, j) += d;
      m(j, i) = m(i, j);
      return m;
    };
    for (int g = 0; g < 2; ++g)
      for (int d = g; d < 2; ++d) {
        // Symmetric perturbation factors: c,e carry the "2 d/da" convention,
        // d,f the plain "d/db" one.
        const double fa = (g == d) ? 0.5 : 1.0;
        const double fb = (g == d) ? 1.0 : 2.0;
        StressState rp = projected_response(sym_perturb(a, g, d, h), b, A, B, law);
        StressState rm = projected_response(sym_perturb(a, g, d, -h), b, A, B, law);
        const Matrix2d dtau = (rp.tau - rm.tau) / (2 * h);
        const Matrix2d dM0 = (rp.M0 - rm.M0) / (2 * h);
        for (int al = 0; al < 2; ++al)
          for (int be = 0; be < 2; ++be) {
            CHECK(fa * r.c(al, be, g, d) ==
                  Catch::Approx(dtau(al, be)).epsilon(1e-5).margin(1e-7));
            CHECK(fa * r.e(al, be, g, d) ==
                  Catch::Approx(dM0(al, be)).epsilon(1e-5).margin(1e-7));
          }
        StressState rpb = projected_response(a, sym_perturb(b, g, d, h), A, B, law);
        StressState rmb = projected_response(a, sym_perturb(b, g, d, -h), A, B, law);
        const Matrix2d dtaub = (rpb.tau - rmb.tau) / (2 * h);
        const Matrix2d dM0b = (rpb.M0 - rmb.M0) / (2 * h);
        for (int al = 0; al < 2; ++al)
          for (int be = 0; be < 2; ++be) {
            CHECK(fb * r.d(al, be, g, d) ==
                  Catch::Approx(dtaub(al, be)).epsilon(1e-5).margin(1e-7));
            CHECK(fb * r.f(al, be, g, d) ==
                  Catch::Approx(dM0b(al, be)).epsilon(1e-5).margin(1e-7));
          }
      }
    if (tested >= 12) break;
  }
  REQUIRE(tested >= 8);
}

TEST_CASE("koiter tangent blocks match finite differences of the resultants") {
  std::mt19937_64 gen = testutil::rng(37);
  MaterialLaw law = koiter_law(3105.0, 0.3, 2.0);
  const Matrix2d A = random_spd(gen, 1.0, 0.1);
  const Matrix2d B = random_sym(gen, 0.1);
  const Matrix2d a = A + random_sym(gen, 0.05);
  const Matrix2d b = B + random_sym(gen, 0.1);
  const Matrix2d Ainv = A.inverse();
  StressState r = koiter_response(strain_from(a, b, A, B), Ainv, law);
  const double h = 1e-6;
  auto sp = [](Matrix2d m, int i, int j, double d) {
    m(i, j) += d;
    m(j, i) = m(i, j);
    return m;
  };
  for (int g = 0; g < 2; ++g)
    for (int d = g; d < 2; ++d) {
      const double fa = (g == d) ? 0.5 : 1.0;
      const double fb = (g == d) ? 1.0 : 2.0;
      StressState rp = koiter_response(strain_from(sp(a, g, d, h), b, A, B), Ainv, law);
      StressState rm = koiter_response(strain_from(sp(a, g, d, -h), b, A, B), Ainv, law);
      const Matrix2d dtau = (rp.tau - rm.tau) / (2 * h);
      for (int al = 0; al < 2; ++al)
        for (int be = 0; be < 2; ++be)
          CHECK(fa * r.c(al, be, g, d) ==
                Catch::Approx(dtau(al, be)).epsilon(1e-6).margin(1e-8));
      StressState rpb = koiter_response(strain_from(a, sp(b, g, d, h), A, B), Ainv, law);
      StressState rmb = koiter_response(strain_from(a, sp(b, g, d, -h), A, B), Ainv, law);
      const Matrix2d dM0 = (rpb.M0 - rmb.M0) / (2 * h);
      for (int al = 0; al < 2; ++al)
        for (int be = 0; be < 2; ++be)
          CHECK(fb * r.f(al, be, g, d) ==
                Catch::Approx(dM0(al, be)).epsilon(1e-6).margin(1e-8));
    }
}

TEST_CASE("stress and tangent symmetries") {
  std::mt19937_64 gen = testutil::rng(43);
  MaterialLaw law = projected_law(3.0e6, 0.3, 0.2);
  const Matrix2d A = random_spd(gen, 1.0, 0.1);
  const Matrix2d B = random_sym(gen, 0.1);
  const Matrix2d a = A + random_sym(gen, 0.05);
  const Matrix2d b = B + random_sym(gen, 0.15);
  StressState r = projected_response(a, b, A, B, law);
  CHECK(r.tau(0, 1) == Catch::Approx(r.tau(1, 0)).margin(1e-14));
  CHECK(r.M0(0, 1) == Catch::Approx(r.M0(1, 0)).margin(1e-14));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) {
          CHECK(r.c(i, j, k, l) == Catch::Approx(r.c(k, l, i, j)).margin(1e-12));
          CHECK(r.f(i, j, k, l) == Catch::Approx(r.f(k, l, i, j)).margin(1e-12));
          CHECK(r.e(i, j, k, l) == Catch::Approx(r.d(k, l, i, j)).margin(1e-12));
        }
}

TEST_CASE("projected model matches koiter for small strains") {
  const double E = 3105.0, nu = 0.3, T = 2.0;
  MaterialLaw kl = koiter_law(E, nu, T);
  MaterialLaw pl = projected_law(E, nu, T);
  std::mt19937_64 gen = testutil::rng(47);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix2d A = random_spd(gen, 1.0, 0.1);
    const Matrix2d B = random_sym(gen, 1e-3);
    const Matrix2d dE = random_sym(gen, 1e-4);
    const Matrix2d dK = random_sym(gen, 1e-4 / T);
    const Matrix2d a = A + 2.0 * dE;
    const Matrix2d b = B + dK;

    StressState rk = koiter_response(strain_from(a, b, A, B), A.inverse(), kl);
    StressState rp = projected_response(a, b, A, B, pl);
    CHECK((rk.tau - rp.tau).norm() <= 0.01 * rk.tau.norm());
    CHECK((rk.M0 - rp.M0).norm() <= 0.01 * rk.M0.norm());
  }
}

TEST_CASE("through-thickness quadrature is converged at the default order") {
  const double E = 3.0e6, nu = 0.3, T = 0.2;
  std::mt19937_64 gen = testutil::rng(53);
  MaterialLaw p4 = projected_law(E, nu, T, 4);
  MaterialLaw p8 = projected_law(E, nu, T, 8);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix2d A = random_spd(gen, 1.0, 0.05);
    const Matrix2d B = random_sym(gen, 0.1);
    const Matrix2d a = A + random_sym(gen, 0.03);
    const Matrix2d b = B + random_sym(gen, 0.3);
    StressState r4 = projected_response(a, b, A, B, p4);
    StressState r8 = projected_response(a, b, A, B, p8);
    const double scale = r8.tau.norm() + r8.M0.norm();
    CHECK((r4.tau - r8.tau).norm() + (r4.M0 - r8.M0).norm() <= 1e-8 * scale);
  }
}

TEST_CASE("material law validation") {
  MaterialLaw law = koiter_law();
  law.poisson_ratio = 0.5;
  CHECK_THROWS_AS(law.validate(), InvalidArgumentError);
  law = projected_law();
  law.thickness_points = 1;
  CHECK_THROWS_AS(law.validate(), InvalidArgumentError);
  CHECK_THROWS_AS(koiter_response(StrainState{}, Matrix2d::Identity(), projected_law()),
                  InvalidArgumentError);
}
