#pragma once

#include "shellinv/assembly.hpp"

#include <Eigen/SparseLU>

namespace shellinv {

struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolveSettings {
  double tol_rel = 1e-8;    // on ||r|| / max(||f_ext||, ||f_int||)
  double tol_abs = 1e-11;
  int max_newton = 30;
  int steps = 10;           // main load/displacement ramp
  int pre_steps = 5;        // preload ramp (used when preload records exist)
  int max_cutbacks = 8;

  // arc-length continuation
  double arc_radius = 1.0;
  double arc_min_radius = 1e-6;
  double arc_max_radius = 1e9;
  int arc_max_steps = 400;
  int arc_predictor_sign = 0;  // 0: positive external work; otherwise forced sign
};

struct StepRecord {
  double lambda = 0.0;
  int iterations = 0;
  std::vector<double> residual_history;
};

struct PathSample {
  double lambda = 0.0;
  double monitor = 0.0;   // displacement at the monitored dof
  double reaction = 0.0;  // summed reaction over the monitor set
  int iterations = 0;
};

struct EquilibriumPath {
  std::vector<PathSample> samples;
  bool complete = false;
};

struct Monitor {
  int dof = -1;                    // displacement dof to record
  std::vector<int> reaction_dofs;  // fixed dofs whose reactions are summed
};

struct ForwardResult {
  VectorXd u;  // full state vector at the end of the run
  bool converged = false;
  std::vector<StepRecord> steps;
  EquilibriumPath path;
};

namespace detail {

inline double residual_scale(const Assembled& a) {
  return std::max(a.fext.norm(), a.fint.norm());
}

}  // namespace detail

/// Newton iteration at fixed load scales. Updates u in place; returns the
/// iteration record. Throws SolverFailure on a singular tangent only if no
/// progress is possible; divergence is reported through converged = false.
inline StepRecord newton_at(const ShellModel& model, const SolveSettings& s, VectorXd& u,
                            double main_scale, double pre_scale) {
  StepRecord rec;
  rec.lambda = main_scale;
  model.apply_dirichlet(u, main_scale, pre_scale);
  Eigen::SparseLU<SparseMat> lu;
  for (int it = 0; it < s.max_newton; ++it) {
    Assembled a = model.assemble(u, main_scale, pre_scale, true);
    VectorXd r = model.reduce(a.fint - a.fext);
    const double scale = detail::residual_scale(a);
    rec.residual_history.push_back(r.norm());
    rec.iterations = it + 1;
    if (r.norm() <= std::max(s.tol_rel * scale, s.tol_abs)) {
      rec.lambda = main_scale;
      return rec;
    }
    SparseMat K = model.reduce_matrix(a.K);
    K.makeCompressed();
    lu.compute(K);
    if (lu.info() != Eigen::Success)
      throw SolverFailure("newton: singular tangent stiffness");
    VectorXd du = lu.solve(-r);
    model.expand_add(du, u);
  }
  rec.iterations = s.max_newton;
  rec.residual_history.push_back(-1.0);  // marks non-convergence
  throw SolverFailure("newton: no convergence within iteration limit");
}

/// Load-stepped Newton: optional preload phase, then the main ramp 0 -> 1.
/// Samples the path at each accepted step when a monitor is given.
inline ForwardResult solve_ramp(const ShellModel& model, const SolveSettings& s,
                                const Monitor& mon = {}) {
  ForwardResult out;
  out.u = VectorXd::Zero(model.n_state());

  bool has_preload = false;
  for (const auto& t : model.loads.tractions) has_preload |= t.stage == LoadStage::Preload;
  for (const auto& m : model.loads.moments) has_preload |= m.stage == LoadStage::Preload;
  for (const auto& p : model.loads.pressures) has_preload |= p.stage == LoadStage::Preload;
  for (const auto& p : model.loads.point_loads) has_preload |= p.stage == LoadStage::Preload;
  for (const auto& b : model.loads.body_forces) has_preload |= b.stage == LoadStage::Preload;
  for (const auto& d : model.dirichlet) has_preload |= d.stage == LoadStage::Preload;

  auto record_sample = [&](double lam, const StepRecord& rec) {
    if (mon.dof < 0) return;
    Assembled a = model.assemble(out.u, lam, 1.0, false);
    PathSample ps;
    ps.lambda = lam;
    ps.monitor = out.u[mon.dof];
    ps.iterations = rec.iterations;
    for (int d : mon.reaction_dofs) ps.reaction += a.fint[d] - a.fext[d];
    out.path.samples.push_back(ps);
  };

  auto run_phase = [&](bool pre_phase, int nsteps) {
    double reached = 0.0;
    double step = 1.0 / nsteps;
    int cutbacks = 0;
    VectorXd u_last = out.u;
    while (reached < 1.0 - 1e-12) {
      const double target = std::min(1.0, reached + step);
      const double main_scale = pre_phase ? 0.0 : target;
      const double pre_scale = pre_phase ? target : (has_preload ? 1.0 : 0.0);
      try {
        StepRecord rec = newton_at(model, s, out.u, main_scale, pre_scale);
        reached = target;
        u_last = out.u;
        out.steps.push_back(rec);
        if (!pre_phase) record_sample(target, rec);
        if (rec.iterations <= 4) step = std::min(step * 1.5, 1.0 / 2.0);
        cutbacks = 0;
      } catch (const SolverFailure&) {
        out.u = u_last;
        step *= 0.5;
        if (++cutbacks > s.max_cutbacks)
          throw SolverFailure("load stepping: repeated Newton failures");
      }
    }
  };

  if (has_preload) run_phase(true, std::max(1, s.pre_steps));
  run_phase(false, std::max(1, s.steps));
  out.converged = true;
  out.path.complete = true;
  return out;
}

/// Crisfield arc-length continuation in the main load factor. Preload records
/// are ramped to full first; main-stage Dirichlet sets are not supported here.
/// Traces until lambda crosses lambda_target (then corrects onto it exactly)
/// or the step budget is exhausted.
inline ForwardResult solve_arc_length(const ShellModel& model, const SolveSettings& s,
                                      const Monitor& mon, double lambda_target = 1.0) {
  for (const auto& d : model.dirichlet)
    require(d.stage == LoadStage::Preload || d.value == 0.0,
            "arc length: main-stage prescribed displacements not supported");

  ForwardResult out;
  out.u = VectorXd::Zero(model.n_state());

  bool has_preload = false;
  for (const auto& t : model.loads.tractions) has_preload |= t.stage == LoadStage::Preload;
  for (const auto& m : model.loads.moments) has_preload |= m.stage == LoadStage::Preload;
  for (const auto& p : model.loads.pressures) has_preload |= p.stage == LoadStage::Preload;
  for (const auto& p : model.loads.point_loads) has_preload |= p.stage == LoadStage::Preload;
  for (const auto& d : model.dirichlet) has_preload |= d.stage == LoadStage::Preload;
  const double pre = has_preload ? 1.0 : 0.0;
  if (has_preload) {
    SolveSettings sp = s;
    double reached = 0.0, step = 1.0 / std::max(1, s.pre_steps);
    while (reached < 1.0 - 1e-12) {
      const double target = std::min(1.0, reached + step);
      newton_at(model, sp, out.u, 0.0, target);
      reached = target;
    }
  }

  // mask: displacement entries of the reduced vector (multipliers excluded
  // from the arc-length norm)
  const DofMap& dm = model.dofs();
  VectorXd mask(dm.n_free());
  for (int i = 0; i < dm.n_free(); ++i) mask[i] = dm.free_dofs[i] < dm.n_disp() ? 1.0 : 0.0;
  auto dnorm2 = [&](const VectorXd& v) { return v.cwiseProduct(mask).squaredNorm(); };
  auto ddot = [&](const VectorXd& a, const VectorXd& b) {
    return a.cwiseProduct(mask).dot(b.cwiseProduct(mask));
  };

  double lambda = 0.0;
  double dl = s.arc_radius;
  VectorXd du_prev;  // previous converged step increment (reduced)
  double dlam_prev = 0.0;

  auto external_unit = [&](const VectorXd& u) {
    Assembled a1 = model.assemble(u, 1.0, pre, false);
    Assembled a0 = model.assemble(u, 0.0, pre, false);
    return VectorXd(model.reduce(a1.fext - a0.fext));
  };

  auto record_sample = [&](int iters) {
    PathSample ps;
    ps.lambda = lambda;
    if (mon.dof >= 0) ps.monitor = out.u[mon.dof];
    Assembled a = model.assemble(out.u, lambda, pre, false);
    for (int d : mon.reaction_dofs) ps.reaction += a.fint[d] - a.fext[d];
    ps.iterations = iters;
    out.path.samples.push_back(ps);
  };
  record_sample(0);

  Eigen::SparseLU<SparseMat> lu;
  for (int step = 0; step < s.arc_max_steps; ++step) {
    const VectorXd u0 = out.u;
    const double lambda0 = lambda;

    bool accepted = false;
    while (!accepted) {
      // predictor from the converged state
      Assembled a = model.assemble(out.u, lambda, pre, true);
      SparseMat K = model.reduce_matrix(a.K);
      K.makeCompressed();
      lu.compute(K);
      if (lu.info() != Eigen::Success) {
        dl *= 0.5;
        if (dl < s.arc_min_radius) return out;  // abort with path so far
        continue;
      }
      VectorXd fhat = external_unit(out.u);
      VectorXd dut = lu.solve(fhat);
      double dlam = dl / std::sqrt(dnorm2(dut));
      double sign;
      if (du_prev.size() == 0) {
        sign = s.arc_predictor_sign != 0 ? static_cast<double>(s.arc_predictor_sign)
                                         : (fhat.dot(dut) >= 0.0 ? 1.0 : -1.0);
      } else {
        sign = (ddot(du_prev, dut) + dlam_prev * 0.0) >= 0.0 ? 1.0 : -1.0;
      }
      dlam *= sign;
      VectorXd Du = dlam * dut;
      model.expand_add(Du, out.u);
      lambda = lambda0 + dlam;

      // corrector
      bool fail = false;
      int it = 0;
      for (; it < s.max_newton; ++it) {
        Assembled ac = model.assemble(out.u, lambda, pre, true);
        VectorXd r = model.reduce(ac.fint - ac.fext);
        const double scale = std::max(detail::residual_scale(ac), 1e-30);
        if (r.norm() <= std::max(s.tol_rel * scale, s.tol_abs)) break;
        SparseMat Kc = model.reduce_matrix(ac.K);
        Kc.makeCompressed();
        lu.compute(Kc);
        if (lu.info() != Eigen::Success) {
          fail = true;
          break;
        }
        VectorXd fh = external_unit(out.u);
        VectorXd dur = lu.solve(-r);
        VectorXd dutc = lu.solve(fh);
        // cylindrical constraint || Du + dur + dlam dutc ||^2 = dl^2
        const VectorXd base = Du + dur;
        const double qa = dnorm2(dutc);
        const double qb = 2.0 * ddot(dutc, base);
        const double qc = dnorm2(base) - dl * dl;
        const double disc = qb * qb - 4.0 * qa * qc;
        if (disc < 0.0) {
          fail = true;
          break;
        }
        const double sq = std::sqrt(disc);
        const double r1 = (-qb + sq) / (2.0 * qa);
        const double r2 = (-qb - sq) / (2.0 * qa);
        // anti-doubling: keep the root best aligned with the current increment
        const double c1 = ddot(base + r1 * dutc, Du);
        const double c2 = ddot(base + r2 * dutc, Du);
        const double dl_corr = (c1 >= c2) ? r1 : r2;
        VectorXd upd = dur + dl_corr * dutc;
        model.expand_add(upd, out.u);
        Du += upd;
        lambda += dl_corr;
      }
      if (!fail && it >= s.max_newton) fail = true;

      if (fail) {
        out.u = u0;
        lambda = lambda0;
        dl *= 0.5;
        if (dl < s.arc_min_radius) return out;
        continue;
      }

      // accepted: verify with a fresh residual, record, adapt
      {
        Assembled av = model.assemble(out.u, lambda, pre, false);
        VectorXd rv = model.reduce(av.fint - av.fext);
        const double scale = std::max(detail::residual_scale(av), 1e-30);
        if (rv.norm() > 10.0 * std::max(s.tol_rel * scale, s.tol_abs)) {
          out.u = u0;
          lambda = lambda0;
          dl *= 0.5;
          if (dl < s.arc_min_radius) return out;
          continue;
        }
      }
      accepted = true;
      du_prev = Du;
      dlam_prev = lambda - lambda0;
      record_sample(it + 1);
      if (it + 1 <= 4) dl = std::min(dl * 1.2, s.arc_max_radius);
    }

    if (lambda >= lambda_target) {
      // correct onto the target load exactly
      StepRecord rec = newton_at(model, s, out.u, lambda_target, pre);
      lambda = lambda_target;
      out.steps.push_back(rec);
      record_sample(rec.iterations);
      out.converged = true;
      out.path.complete = true;
      return out;
    }
  }
  return out;  // budget exhausted; path so far, converged stays false
}

/// Energy-norm mesh-convergence metric.
inline double energy_norm_error(double E_num, double E_ref) {
  require(E_ref != 0.0, "energy_norm_error: zero reference energy");
  return std::sqrt(std::abs((E_num - E_ref) / E_ref));
}

/// Reaction force vector (nonzero at fixed dofs only).
inline VectorXd reactions(const ShellModel& model, const VectorXd& u, double main_scale,
                          double pre_scale) {
  Assembled a = model.assemble(u, main_scale, pre_scale, false);
  VectorXd r = VectorXd::Zero(model.n_state());
  for (int d = 0; d < model.dofs().n_disp(); ++d)
    if (model.dofs().is_fixed(d)) r[d] = a.fint[d] - a.fext[d];
  return r;
}

}  // namespace shellinv
