#pragma once

#include "shellinv/common.hpp"

namespace shellinv {

/// Method of moving asymptotes for box-constrained problems with a small
/// number of inequality constraints g_i(x) <= 0. One update() call performs
/// one outer MMA iteration: it builds the convex separable approximation
/// around x and returns the exact minimizer of the subproblem.
class Mma {
 public:
  Mma(int nvar, int ncon) : n_(nvar), m_(ncon) {
    low_ = VectorXd::Zero(n_);
    upp_ = VectorXd::Zero(n_);
    xold1_ = VectorXd::Zero(n_);
    xold2_ = VectorXd::Zero(n_);
  }

  int iteration() const { return iter_; }

  VectorXd update(const VectorXd& x, const VectorXd& df0, const VectorXd& g,
                  const MatrixXd& dg, const VectorXd& xmin, const VectorXd& xmax) {
    require(x.size() == n_ && df0.size() == n_, "mma: size mismatch");
    require(g.size() == m_ && dg.rows() == m_ && (m_ == 0 || dg.cols() == n_),
            "mma: constraint size mismatch");
    ++iter_;
    const VectorXd xmami = (xmax - xmin).cwiseMax(1e-5);

    if (iter_ <= 2) {
      low_ = x - asyinit_ * xmami;
      upp_ = x + asyinit_ * xmami;
    } else {
      for (int j = 0; j < n_; ++j) {
        const double zz = (x[j] - xold1_[j]) * (xold1_[j] - xold2_[j]);
        double factor = 1.0;
        if (zz > 0) factor = asyincr_;
        else if (zz < 0) factor = asydecr_;
        low_[j] = x[j] - factor * (xold1_[j] - low_[j]);
        upp_[j] = x[j] + factor * (upp_[j] - xold1_[j]);
        low_[j] = std::max(low_[j], x[j] - 10.0 * xmami[j]);
        low_[j] = std::min(low_[j], x[j] - 0.01 * xmami[j]);
        upp_[j] = std::min(upp_[j], x[j] + 10.0 * xmami[j]);
        upp_[j] = std::max(upp_[j], x[j] + 0.01 * xmami[j]);
      }
    }
    xold2_ = xold1_;
    xold1_ = x;

    last_x_ = x;
    last_df0_ = df0;
    last_g_ = g;
    last_dg_ = dg;
    last_xmin_ = xmin;
    last_xmax_ = xmax;
    return solve_current();
  }

  /// Re-solves the last subproblem with the asymptote window halved around
  /// the expansion point. Used when a candidate step is rejected (objective
  /// increase or forward-solve failure); does not advance the history.
  VectorXd retry() {
    require(last_x_.size() == n_, "mma: retry before first update");
    low_ = last_x_ - 0.5 * (last_x_ - low_);
    upp_ = last_x_ + 0.5 * (upp_ - last_x_);
    return solve_current();
  }

 private:
  int n_, m_, iter_ = 0;
  VectorXd low_, upp_, xold1_, xold2_;
  VectorXd last_x_, last_df0_, last_g_, last_xmin_, last_xmax_;
  MatrixXd last_dg_;
  double asyinit_ = 0.5, asyincr_ = 1.2, asydecr_ = 0.7;
  double albefa_ = 0.1, move_ = 0.5, raa0_ = 1e-5;

  VectorXd solve_current() {
    const VectorXd& x = last_x_;
    const VectorXd& df0 = last_df0_;
    const VectorXd xmami = (last_xmax_ - last_xmin_).cwiseMax(1e-5);
    VectorXd alfa(n_), beta(n_);
    for (int j = 0; j < n_; ++j) {
      alfa[j] = std::max({last_xmin_[j], low_[j] + albefa_ * (x[j] - low_[j]),
                          x[j] - move_ * xmami[j]});
      beta[j] = std::min({last_xmax_[j], upp_[j] - albefa_ * (upp_[j] - x[j]),
                          x[j] + move_ * xmami[j]});
    }
    VectorXd p0(n_), q0(n_);
    MatrixXd P(m_, n_), Q(m_, n_);
    VectorXd b = VectorXd::Zero(m_);
    for (int j = 0; j < n_; ++j) {
      const double ux = upp_[j] - x[j], xl = x[j] - low_[j];
      const double dplus = std::max(df0[j], 0.0), dminus = std::max(-df0[j], 0.0);
      const double pert = 0.001 * std::abs(df0[j]) + raa0_ / xmami[j];
      p0[j] = ux * ux * (dplus + pert);
      q0[j] = xl * xl * (dminus + pert);
      for (int i = 0; i < m_; ++i) {
        const double gp = std::max(last_dg_(i, j), 0.0), gm = std::max(-last_dg_(i, j), 0.0);
        const double pert_i = 0.001 * std::abs(last_dg_(i, j)) + raa0_ / xmami[j];
        P(i, j) = ux * ux * (gp + pert_i);
        Q(i, j) = xl * xl * (gm + pert_i);
      }
    }
    for (int i = 0; i < m_; ++i) {
      double s = 0.0;
      for (int j = 0; j < n_; ++j)
        s += P(i, j) / (upp_[j] - x[j]) + Q(i, j) / (x[j] - low_[j]);
      b[i] = s - last_g_[i];
    }
    return subsolve(alfa, beta, p0, q0, P, Q, b);
  }

  /// Primal-dual interior-point solve of the MMA subproblem:
  ///   min sum(p0/(u-x) + q0/(x-l)) + a0 z + sum(c y + d y^2/2)
  ///   s.t. sum(P_i/(u-x) + Q_i/(x-l)) - a_i z - y_i <= b_i, alfa <= x <= beta.
  VectorXd subsolve(const VectorXd& alfa, const VectorXd& beta, const VectorXd& p0,
                    const VectorXd& q0, const MatrixXd& P, const MatrixXd& Q,
                    const VectorXd& b) const {
    const int n = n_, m = m_;
    const double a0 = 1.0;
    const VectorXd a = VectorXd::Zero(m);
    const VectorXd c = VectorXd::Constant(m, 1000.0);
    const VectorXd d = VectorXd::Ones(m);

    VectorXd x = 0.5 * (alfa + beta);
    VectorXd y = VectorXd::Ones(m);
    double z = 1.0;
    VectorXd lam = VectorXd::Ones(m);
    VectorXd xsi = (1.0 / (x - alfa).array()).max(1.0).matrix();
    VectorXd eta = (1.0 / (beta - x).array()).max(1.0).matrix();
    VectorXd mu(m);
    for (int i = 0; i < m; ++i) mu[i] = std::max(1.0, 0.5 * c[i]);
    double zet = 1.0;
    VectorXd s = VectorXd::Ones(m);

    auto plam_qlam = [&](const VectorXd& lm, VectorXd& plam, VectorXd& qlam) {
      plam = p0;
      qlam = q0;
      for (int i = 0; i < m; ++i) {
        plam += lm[i] * P.row(i).transpose();
        qlam += lm[i] * Q.row(i).transpose();
      }
    };
    auto gvec = [&](const VectorXd& xx) {
      VectorXd gv(m);
      for (int i = 0; i < m; ++i) {
        double sum = 0;
        for (int j = 0; j < n; ++j)
          sum += P(i, j) / (upp_[j] - xx[j]) + Q(i, j) / (xx[j] - low_[j]);
        gv[i] = sum;
      }
      return gv;
    };

    double epsi = 1.0;
    while (epsi > 1e-9) {
      // residual of the relaxed KKT system
      auto residual_norms = [&](double& norm2, double& norminf) {
        VectorXd plam, qlam;
        plam_qlam(lam, plam, qlam);
        VectorXd rex(n);
        for (int j = 0; j < n; ++j) {
          const double ux = upp_[j] - x[j], xl = x[j] - low_[j];
          rex[j] = plam[j] / (ux * ux) - qlam[j] / (xl * xl) - xsi[j] + eta[j];
        }
        VectorXd rey = c + d.cwiseProduct(y) - mu - lam;
        double rez = a0 - zet - a.dot(lam);
        VectorXd relam = gvec(x) - a * z - y + s - b;
        VectorXd rexsi(n), reeta(n);
        for (int j = 0; j < n; ++j) {
          rexsi[j] = xsi[j] * (x[j] - alfa[j]) - epsi;
          reeta[j] = eta[j] * (beta[j] - x[j]) - epsi;
        }
        VectorXd remu = mu.cwiseProduct(y).array() - epsi;
        double rezet = zet * z - epsi;
        VectorXd res = lam.cwiseProduct(s).array() - epsi;
        double sq = rex.squaredNorm() + rey.squaredNorm() + rez * rez +
                    relam.squaredNorm() + rexsi.squaredNorm() + reeta.squaredNorm() +
                    remu.squaredNorm() + rezet * rezet + res.squaredNorm();
        norm2 = std::sqrt(sq);
        norminf = std::max({rex.lpNorm<Eigen::Infinity>(),
                            m ? rey.lpNorm<Eigen::Infinity>() : 0.0, std::abs(rez),
                            m ? relam.lpNorm<Eigen::Infinity>() : 0.0,
                            rexsi.lpNorm<Eigen::Infinity>(), reeta.lpNorm<Eigen::Infinity>(),
                            m ? remu.lpNorm<Eigen::Infinity>() : 0.0, std::abs(rezet),
                            m ? res.lpNorm<Eigen::Infinity>() : 0.0});
      };

      double rnorm, rinf;
      residual_norms(rnorm, rinf);
      int inner = 0;
      while (rinf > 0.9 * epsi && inner < 200) {
        ++inner;
        VectorXd plam, qlam;
        plam_qlam(lam, plam, qlam);
        VectorXd delx(n), diagx(n);
        MatrixXd GG(m, n);
        for (int j = 0; j < n; ++j) {
          const double ux = upp_[j] - x[j], xl = x[j] - low_[j];
          delx[j] = plam[j] / (ux * ux) - qlam[j] / (xl * xl) - epsi / (x[j] - alfa[j]) +
                    epsi / (beta[j] - x[j]);
          diagx[j] = 2.0 * (plam[j] / (ux * ux * ux) + qlam[j] / (xl * xl * xl)) +
                     xsi[j] / (x[j] - alfa[j]) + eta[j] / (beta[j] - x[j]);
          for (int i = 0; i < m; ++i)
            GG(i, j) = P(i, j) / (ux * ux) - Q(i, j) / (xl * xl);
        }
        VectorXd dely = c + d.cwiseProduct(y) - lam;
        for (int i = 0; i < m; ++i) dely[i] -= epsi / y[i];
        double delz = a0 - a.dot(lam) - epsi / z;
        VectorXd dellam = gvec(x) - a * z - y - b;
        for (int i = 0; i < m; ++i) dellam[i] += epsi / lam[i];
        VectorXd diagy = d + mu.cwiseQuotient(y);
        VectorXd diaglam = s.cwiseQuotient(lam);
        VectorXd diaglamyi = diaglam + diagy.cwiseInverse();

        VectorXd dlam(m), dx(n);
        double dz;
        // reduced system in (lam, z); n is small here but do it the stable way
        MatrixXd Alam = diaglamyi.asDiagonal();
        Alam += GG * diagx.cwiseInverse().asDiagonal() * GG.transpose();
        MatrixXd AA(m + 1, m + 1);
        AA.topLeftCorner(m, m) = Alam;
        AA.topRightCorner(m, 1) = a;
        AA.bottomLeftCorner(1, m) = a.transpose();
        AA(m, m) = -zet / z;
        VectorXd blam = dellam + dely.cwiseQuotient(diagy) -
                        GG * delx.cwiseQuotient(diagx);
        VectorXd bb(m + 1);
        bb.head(m) = blam;
        bb[m] = delz;
        VectorXd sol = AA.fullPivLu().solve(bb);
        dlam = sol.head(m);
        dz = sol[m];
        dx = -delx.cwiseQuotient(diagx) -
             (GG.transpose() * dlam).cwiseQuotient(diagx);

        VectorXd dy = (-dely + dlam).cwiseQuotient(diagy);
        VectorXd dxsi(n), deta(n);
        for (int j = 0; j < n; ++j) {
          dxsi[j] = -xsi[j] + (epsi - xsi[j] * dx[j]) / (x[j] - alfa[j]);
          deta[j] = -eta[j] + (epsi + eta[j] * dx[j]) / (beta[j] - x[j]);
        }
        VectorXd dmu(m), ds(m);
        for (int i = 0; i < m; ++i) {
          dmu[i] = -mu[i] + (epsi - mu[i] * dy[i]) / y[i];
          ds[i] = -s[i] + (epsi - s[i] * dlam[i]) / lam[i];
        }
        double dzet = -zet + (epsi - zet * dz) / z;

        // step length: keep all strictly feasible
        double t = 1.0;
        auto cap = [&](double v, double dv, double lo) {
          if (dv < 0) t = std::min(t, -0.99 * (v - lo) / dv);
        };
        for (int j = 0; j < n; ++j) {
          cap(x[j], dx[j], alfa[j]);
          if (dx[j] > 0) t = std::min(t, 0.99 * (beta[j] - x[j]) / dx[j]);
          cap(xsi[j], dxsi[j], 0.0);
          cap(eta[j], deta[j], 0.0);
        }
        for (int i = 0; i < m; ++i) {
          cap(y[i], dy[i], 0.0);
          cap(lam[i], dlam[i], 0.0);
          cap(mu[i], dmu[i], 0.0);
          cap(s[i], ds[i], 0.0);
        }
        cap(z, dz, 0.0);
        cap(zet, dzet, 0.0);

        const VectorXd x0 = x, y0 = y, lam0 = lam, xsi0 = xsi, eta0 = eta, mu0 = mu, s0 = s;
        const double z0 = z, zet0 = zet;
        double rnew = 2.0 * rnorm;
        int ls = 0;
        while (rnew > rnorm && ls < 50) {
          x = x0 + t * dx;
          y = y0 + t * dy;
          z = z0 + t * dz;
          lam = lam0 + t * dlam;
          xsi = xsi0 + t * dxsi;
          eta = eta0 + t * deta;
          mu = mu0 + t * dmu;
          zet = zet0 + t * dzet;
          s = s0 + t * ds;
          double dummy;
          residual_norms(rnew, dummy);
          t *= 0.5;
          ++ls;
        }
        rnorm = rnew;
        residual_norms(rnorm, rinf);
      }
      epsi *= 0.1;
    }
    return x;
  }
};

}  // namespace shellinv
