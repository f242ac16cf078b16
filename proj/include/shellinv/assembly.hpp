#pragma once

#include "shellinv/loads.hpp"
#include "shellinv/material.hpp"

#include <atomic>
#include <functional>
#include <thread>

namespace shellinv {

/// Rotational symmetry constraint on a boundary edge: the mirror normal is
/// generated by reflection across the plane with the given unit normal, and
/// a Lagrange multiplier per edge quadrature point enforces theta = theta_0.
struct SymmetryEdge {
  Side side = Side::West;
  Vector3d plane_normal = Vector3d::UnitX();
};

struct DofMap {
  int n_nodes = 0;
  int n_mult = 0;
  std::vector<int> dirichlet_of;   // per displacement dof: -1 free, -2 fixed, >=0 set id
  std::vector<int> reduced_index;  // per state dof: index into free vector or -1
  std::vector<int> free_dofs;      // reduced -> full

  int n_disp() const { return 3 * n_nodes; }
  int n_state() const { return 3 * n_nodes + n_mult; }
  int n_free() const { return static_cast<int>(free_dofs.size()); }
  bool is_fixed(int dof) const { return dirichlet_of[dof] != -1; }
};

namespace detail {

struct ElemQP {
  BasisValues bv;
  SurfaceConfig ref;
  double w = 0.0;  // parent quadrature weight
};

struct ElemData {
  std::vector<int> nodes;
  std::vector<ElemQP> qp;
};

struct EdgeQP {
  BasisValues bv;
  SurfaceConfig ref;
  double w = 0.0;         // 1D parent weight
  Vector2d cdir;          // parametric direction along the edge
  double refJ1d = 0.0;    // |C| per parent coordinate
  double orient = 1.0;    // outward conormal sign sigma
  double W0[2] = {0, 0};  // sigma (C x N) . A^alpha  (reference conormal measure)
};

struct EdgeElemData {
  int elem = -1;
  std::vector<int> nodes;
  std::vector<EdgeQP> qp;
};

struct ConstraintQP {
  int elem = -1;
  std::vector<int> nodes;
  BasisValues bv;
  Vector3d mirror;   // plane normal m
  double q0 = 0.0;   // m . N in the reference configuration
  double wds = 0.0;  // quadrature weight times reference edge measure
  int mult = -1;     // multiplier index within the multiplier block
};

inline Vector2d edge_tangent_dir(Side s) {
  return (s == Side::West || s == Side::East) ? Vector2d(0, 1) : Vector2d(1, 0);
}
inline Vector2d edge_outward_dir(Side s) {
  switch (s) {
    case Side::West: return Vector2d(-1, 0);
    case Side::East: return Vector2d(1, 0);
    case Side::South: return Vector2d(0, -1);
    default: return Vector2d(0, 1);
  }
}

inline void parallel_for(int n, int threads, const std::function<void(int)>& body) {
  if (threads <= 1 || n < 4) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace detail

/// Assembled residual pieces at a given state. Vectors span the full state
/// (all displacement dofs plus multipliers); reduction happens afterwards.
struct Assembled {
  VectorXd fint, fext;
  SparseMat K;  // tangent d(fint - fext)/d(state), only when requested
};

/// Reference to a single load record (pseudo-load construction).
enum class RecordKind { PointLoad, Traction, Moment, Pressure };

/// Discretized shell problem: patch + material + loads + boundary conditions.
/// setup() precomputes reference data; assembly is then a pure function of
/// the state vector (3 dofs per control point, multipliers appended).
class ShellModel {
 public:
  NurbsPatch patch;
  MaterialLaw law;
  LoadSet loads;
  std::vector<DirichletSet> dirichlet;
  std::vector<int> fixed_dofs;  // homogeneous Dirichlet
  std::vector<SymmetryEdge> symmetry;
  int threads = 1;

  const DofMap& dofs() const { return dofs_; }
  int n_state() const { return dofs_.n_state(); }

  void setup() {
    law.validate();
    build_element_cache();
    build_edge_caches();
    build_constraint_cache();
    build_dofmap();
    mult_scale_ = law.youngs_modulus * law.thickness;
  }

  /// Writes prescribed values into the state vector.
  void apply_dirichlet(VectorXd& u, double main_scale, double pre_scale) const {
    for (int dof : fixed_dofs) u[dof] = 0.0;
    for (const auto& set : dirichlet) {
      const double sc = set.stage == LoadStage::Main ? main_scale : pre_scale;
      for (int dof : set.dofs) u[dof] = sc * set.value;
    }
  }

  Assembled assemble(const VectorXd& u, double main_scale, double pre_scale,
                     bool tangent) const {
    require(u.size() == n_state(), "assemble: state vector size mismatch");
    Assembled out;
    out.fint = VectorXd::Zero(n_state());
    out.fext = VectorXd::Zero(n_state());

    const int nel = static_cast<int>(elements_.size());
    std::vector<VectorXd> fint_e(nel), fext_e(nel);
    std::vector<MatrixXd> K_e(nel);
    detail::parallel_for(nel, threads, [&](int e) {
      element_kernel(elements_[e], u, main_scale, pre_scale, fint_e[e], fext_e[e],
                     tangent ? &K_e[e] : nullptr);
    });

    std::vector<Triplet> trips;
    if (tangent) trips.reserve(static_cast<std::size_t>(nel) * 9 * elements_[0].nodes.size() *
                               elements_[0].nodes.size() + 4096);
    for (int e = 0; e < nel; ++e) {
      scatter_vector(elements_[e].nodes, fint_e[e], out.fint);
      scatter_vector(elements_[e].nodes, fext_e[e], out.fext);
      if (tangent) scatter_matrix(elements_[e].nodes, K_e[e], trips);
    }

    edge_loads(u, main_scale, pre_scale, out, tangent ? &trips : nullptr);
    point_loads(main_scale, pre_scale, out.fext);
    constraint_terms(u, out, tangent ? &trips : nullptr);

    if (tangent) {
      out.K.resize(n_state(), n_state());
      out.K.setFromTriplets(trips.begin(), trips.end());
    }
    return out;
  }

  /// Total strain energy at a state (reference-domain quadrature).
  double strain_energy(const VectorXd& u) const {
    const int nel = static_cast<int>(elements_.size());
    std::vector<double> parts(nel, 0.0);
    detail::parallel_for(nel, threads, [&](int e) {
      const auto& ed = elements_[e];
      MatrixXd xe = gather_coords(ed.nodes, u);
      double acc = 0.0;
      for (const auto& qp : ed.qp) {
        SurfacePointState st;
        st.ref = qp.ref;
        st.cur = current_state(qp.bv, xe);
        acc += material_energy(st, strain_measures(st), law) * qp.ref.jac * qp.w;
      }
      parts[e] = acc;
    });
    double total = 0.0;
    for (double v : parts) total += v;
    return total;
  }

  /// External force of one load record at unit magnitude and the given state.
  VectorXd record_force(RecordKind kind, int index, const VectorXd& u) const {
    VectorXd fext = VectorXd::Zero(n_state());
    Assembled tmp;
    tmp.fext = VectorXd::Zero(n_state());
    switch (kind) {
      case RecordKind::PointLoad: {
        const PointLoad& pl = loads.point_loads.at(index);
        if (pl.node >= 0) {
          fext.segment<3>(3 * pl.node) += pl.direction;
        } else {
          BasisValues bv = patch.eval_basis(pl.elem, pl.xi);
          const auto nodes = patch.element_nodes(pl.elem);
          for (std::size_t l = 0; l < nodes.size(); ++l)
            fext.segment<3>(3 * nodes[l]) += bv.N[static_cast<int>(l)] * pl.direction;
        }
        return fext;
      }
      case RecordKind::Traction: {
        const EdgeTraction& tr = loads.tractions.at(index);
        for (const auto& ed : edges_[static_cast<int>(tr.side)])
          traction_kernel(ed, u, tr, 1.0, tmp, nullptr);
        return tmp.fext;
      }
      case RecordKind::Moment: {
        const EdgeMoment& mo = loads.moments.at(index);
        for (const auto& ed : edges_[static_cast<int>(mo.side)])
          moment_kernel(ed, u, mo, 1.0, tmp, nullptr);
        return tmp.fext;
      }
      case RecordKind::Pressure: {
        for (const auto& ed : elements_) {
          MatrixXd xe = gather_coords(ed.nodes, u);
          VectorXd fe = VectorXd::Zero(3 * static_cast<int>(ed.nodes.size()));
          for (const auto& qp : ed.qp) {
            SurfaceConfig cur = current_state(qp.bv, xe);
            for (std::size_t A = 0; A < ed.nodes.size(); ++A)
              fe.segment<3>(3 * A) += cur.jac * qp.w * qp.bv.N[static_cast<int>(A)] * cur.n;
          }
          scatter_vector(ed.nodes, fe, tmp.fext);
        }
        return tmp.fext;
      }
    }
    return fext;
  }

  // --- reductions --------------------------------------------------------

  VectorXd reduce(const VectorXd& full) const {
    VectorXd r(dofs_.n_free());
    for (int i = 0; i < dofs_.n_free(); ++i) r[i] = full[dofs_.free_dofs[i]];
    return r;
  }

  void expand_add(const VectorXd& red, VectorXd& full) const {
    for (int i = 0; i < dofs_.n_free(); ++i) full[dofs_.free_dofs[i]] += red[i];
  }

  SparseMat reduce_matrix(const SparseMat& K) const {
    std::vector<Triplet> trips;
    trips.reserve(K.nonZeros());
    for (int k = 0; k < K.outerSize(); ++k)
      for (SparseMat::InnerIterator it(K, k); it; ++it) {
        const int ri = dofs_.reduced_index[it.row()];
        const int ci = dofs_.reduced_index[it.col()];
        if (ri >= 0 && ci >= 0) trips.emplace_back(ri, ci, it.value());
      }
    SparseMat R(dofs_.n_free(), dofs_.n_free());
    R.setFromTriplets(trips.begin(), trips.end());
    return R;
  }

  /// Sum of tangent columns over the dofs of a Dirichlet set, restricted to
  /// free rows: the prescribed-displacement pseudo load at the global level.
  VectorXd dirichlet_columns(const SparseMat& K, int set) const {
    VectorXd col = VectorXd::Zero(dofs_.n_free());
    std::vector<char> mark(n_state(), 0);
    for (int dof : dirichlet[static_cast<std::size_t>(set)].dofs) mark[dof] = 1;
    for (int k = 0; k < K.outerSize(); ++k)
      for (SparseMat::InnerIterator it(K, k); it; ++it) {
        if (!mark[it.col()]) continue;
        const int ri = dofs_.reduced_index[it.row()];
        if (ri >= 0) col[ri] += it.value();
      }
    return col;
  }

  MatrixXd gather_coords(const std::vector<int>& nodes, const VectorXd& u) const {
    MatrixXd xe(nodes.size(), 3);
    for (std::size_t l = 0; l < nodes.size(); ++l)
      xe.row(l) =
          patch.control_points.row(nodes[l]) + u.segment<3>(3 * nodes[l]).transpose();
    return xe;
  }

  /// Post-solve audit of the rotational constraint: largest |theta - theta0|
  /// over the constraint points, in radians.
  double max_constraint_angle(const VectorXd& u) const {
    double worst = 0.0;
    for (const auto& cq : constraint_qps_) {
      MatrixXd xe = gather_coords(cq.nodes, u);
      SurfaceConfig cur = current_state(cq.bv, xe);
      const double q = cq.mirror.dot(cur.n);
      worst = std::max(worst, std::abs(2.0 * std::asin(q) - 2.0 * std::asin(cq.q0)));
    }
    return worst;
  }

  /// Helper for boundary conditions: control-point indices of one patch side.
  std::vector<int> side_nodes(Side s, int offset = 0) const {
    std::vector<int> out;
    const int nx = patch.num_basis_xi(), ny = patch.num_basis_eta();
    switch (s) {
      case Side::West:
        for (int j = 0; j < ny; ++j) out.push_back(patch.node_index(offset, j));
        break;
      case Side::East:
        for (int j = 0; j < ny; ++j) out.push_back(patch.node_index(nx - 1 - offset, j));
        break;
      case Side::South:
        for (int i = 0; i < nx; ++i) out.push_back(patch.node_index(i, offset));
        break;
      default:
        for (int i = 0; i < nx; ++i) out.push_back(patch.node_index(i, ny - 1 - offset));
    }
    return out;
  }

 private:
  DofMap dofs_;
  std::vector<detail::ElemData> elements_;
  std::vector<detail::EdgeElemData> edges_[4];
  std::vector<detail::ConstraintQP> constraint_qps_;
  double mult_scale_ = 1.0;

  // --- cache construction --------------------------------------------------

  void build_element_cache() {
    const int nq = std::max(patch.degree_xi(), patch.degree_eta()) + 1;
    QuadratureRule rule = tensor_rule(nq, nq);
    elements_.assign(patch.num_elements(), {});
    for (int e = 0; e < patch.num_elements(); ++e) {
      detail::ElemData& ed = elements_[e];
      ed.nodes = patch.element_nodes(e);
      MatrixXd Xe(ed.nodes.size(), 3);
      for (std::size_t l = 0; l < ed.nodes.size(); ++l)
        Xe.row(l) = patch.control_points.row(ed.nodes[l]);
      ed.qp.resize(rule.points.size());
      for (std::size_t k = 0; k < rule.points.size(); ++k) {
        ed.qp[k].bv = patch.eval_basis(e, rule.points[k]);
        ed.qp[k].ref = reference_state(ed.qp[k].bv, Xe);
        ed.qp[k].w = rule.weights[k];
      }
    }
  }

  std::vector<int> edge_elements(Side s) const {
    std::vector<int> list;
    const int nx = patch.num_elements_xi(), ny = patch.num_elements_eta();
    switch (s) {
      case Side::West:
        for (int j = 0; j < ny; ++j) list.push_back(j * nx);
        break;
      case Side::East:
        for (int j = 0; j < ny; ++j) list.push_back(j * nx + nx - 1);
        break;
      case Side::South:
        for (int i = 0; i < nx; ++i) list.push_back(i);
        break;
      default:
        for (int i = 0; i < nx; ++i) list.push_back((ny - 1) * nx + i);
    }
    return list;
  }

  std::vector<detail::EdgeElemData> build_edge(Side s) const {
    const int p = std::max(patch.degree_xi(), patch.degree_eta());
    GaussRule1d rule = gauss_legendre(p + 1);
    const Vector2d cdir = detail::edge_tangent_dir(s);
    const Vector2d odir = detail::edge_outward_dir(s);
    std::vector<detail::EdgeElemData> out;
    for (int e : edge_elements(s)) {
      detail::EdgeElemData ed;
      ed.elem = e;
      ed.nodes = patch.element_nodes(e);
      MatrixXd Xe(ed.nodes.size(), 3);
      for (std::size_t l = 0; l < ed.nodes.size(); ++l)
        Xe.row(l) = patch.control_points.row(ed.nodes[l]);
      for (int k = 0; k < static_cast<int>(rule.points.size()); ++k) {
        detail::EdgeQP qp;
        qp.cdir = cdir;
        qp.w = rule.weights[k];
        const Vector2d xi = (cdir[0] == 1.0) ? Vector2d(rule.points[k], odir[1])
                                             : Vector2d(odir[0], rule.points[k]);
        qp.bv = patch.eval_basis(e, xi);
        qp.ref = reference_state(qp.bv, Xe);
        const Vector3d C = qp.ref.a[0] * cdir[0] + qp.ref.a[1] * cdir[1];
        qp.refJ1d = C.norm();
        const Vector3d d_out = qp.ref.a[0] * odir[0] + qp.ref.a[1] * odir[1];
        const Vector3d CxN = C.cross(qp.ref.n);
        qp.orient = CxN.dot(d_out) >= 0.0 ? 1.0 : -1.0;
        for (int a = 0; a < 2; ++a) qp.W0[a] = qp.orient * CxN.dot(qp.ref.acon[a]);
        ed.qp.push_back(std::move(qp));
      }
      out.push_back(std::move(ed));
    }
    return out;
  }

  void build_edge_caches() {
    for (int s = 0; s < 4; ++s) edges_[s] = build_edge(static_cast<Side>(s));
  }

  void build_constraint_cache() {
    // One constraint point per boundary element (midpoint rule). More points
    // per element would exceed the dimension of the edge rotation trace space
    // and render the multiplier block rank deficient.
    constraint_qps_.clear();
    int mult = 0;
    for (const auto& sym : symmetry) {
      const Side s = sym.side;
      const Vector2d cdir = detail::edge_tangent_dir(s);
      const Vector2d odir = detail::edge_outward_dir(s);
      for (int e : edge_elements(s)) {
        detail::ConstraintQP cq;
        cq.elem = e;
        cq.nodes = patch.element_nodes(e);
        const Vector2d xi = (cdir[0] == 1.0) ? Vector2d(0.0, odir[1]) : Vector2d(odir[0], 0.0);
        cq.bv = patch.eval_basis(e, xi);
        MatrixXd Xe(cq.nodes.size(), 3);
        for (std::size_t l = 0; l < cq.nodes.size(); ++l)
          Xe.row(l) = patch.control_points.row(cq.nodes[l]);
        SurfaceConfig ref = reference_state(cq.bv, Xe);
        cq.mirror = sym.plane_normal.normalized();
        cq.q0 = cq.mirror.dot(ref.n);
        const Vector3d C = ref.a[0] * cdir[0] + ref.a[1] * cdir[1];
        cq.wds = 2.0 * C.norm();  // midpoint rule weight on [-1,1]
        cq.mult = mult++;
        constraint_qps_.push_back(std::move(cq));
      }
    }
  }

  void build_dofmap() {
    dofs_.n_nodes = patch.num_nodes();
    dofs_.n_mult = static_cast<int>(constraint_qps_.size());
    dofs_.dirichlet_of.assign(dofs_.n_disp(), -1);
    for (int dof : fixed_dofs) {
      require(dof >= 0 && dof < dofs_.n_disp(), "dofmap: fixed dof out of range");
      dofs_.dirichlet_of[dof] = -2;
    }
    for (std::size_t s = 0; s < dirichlet.size(); ++s)
      for (int dof : dirichlet[s].dofs) {
        require(dof >= 0 && dof < dofs_.n_disp(), "dofmap: prescribed dof out of range");
        require(dofs_.dirichlet_of[dof] == -1, "dofmap: dof driven twice");
        dofs_.dirichlet_of[dof] = static_cast<int>(s);
      }
    dofs_.reduced_index.assign(dofs_.n_state(), -1);
    dofs_.free_dofs.clear();
    for (int d = 0; d < dofs_.n_disp(); ++d)
      if (dofs_.dirichlet_of[d] == -1) {
        dofs_.reduced_index[d] = static_cast<int>(dofs_.free_dofs.size());
        dofs_.free_dofs.push_back(d);
      }
    for (int m = 0; m < dofs_.n_mult; ++m) {
      dofs_.reduced_index[dofs_.n_disp() + m] = static_cast<int>(dofs_.free_dofs.size());
      dofs_.free_dofs.push_back(dofs_.n_disp() + m);
    }
  }

  // --- scatter helpers -------------------------------------------------------

  void scatter_vector(const std::vector<int>& nodes, const VectorXd& fe, VectorXd& f) const {
    for (std::size_t l = 0; l < nodes.size(); ++l)
      f.segment<3>(3 * nodes[l]) += fe.segment<3>(3 * l);
  }

  void scatter_matrix(const std::vector<int>& nodes, const MatrixXd& Ke,
                      std::vector<Triplet>& trips) const {
    for (std::size_t a = 0; a < nodes.size(); ++a)
      for (std::size_t b = 0; b < nodes.size(); ++b)
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) {
            const double v = Ke(3 * a + i, 3 * b + j);
            if (v != 0.0) trips.emplace_back(3 * nodes[a] + i, 3 * nodes[b] + j, v);
          }
  }

  static double stage_scale(LoadStage st, double main_scale, double pre_scale) {
    return st == LoadStage::Main ? main_scale : pre_scale;
  }

  // --- element kernel ---------------------------------------------------------

  void element_kernel(const detail::ElemData& ed, const VectorXd& u, double main_scale,
                      double pre_scale, VectorXd& fint_e, VectorXd& fext_e,
                      MatrixXd* Ke) const {
    const int nen = static_cast<int>(ed.nodes.size());
    fint_e = VectorXd::Zero(3 * nen);
    fext_e = VectorXd::Zero(3 * nen);
    if (Ke) *Ke = MatrixXd::Zero(3 * nen, 3 * nen);
    MatrixXd xe = gather_coords(ed.nodes, u);

    double pval = 0.0;
    Vector3d f0 = Vector3d::Zero();
    for (const auto& pr : loads.pressures)
      pval += stage_scale(pr.stage, main_scale, pre_scale) * pr.value;
    for (const auto& bf : loads.body_forces)
      f0 += stage_scale(bf.stage, main_scale, pre_scale) * bf.value;

    for (const auto& qp : ed.qp) {
      SurfacePointState st;
      st.ref = qp.ref;
      st.cur = current_state(qp.bv, xe);
      const StrainState strain = strain_measures(st);
      const StressState stress = material_response(st, strain, law);
      const auto cov = covariant_second_derivatives(qp.bv, st.cur);
      const double Jw = qp.ref.jac * qp.w;
      const auto& dN = qp.bv.dN;
      const Vector3d n = st.cur.n;

      for (int A = 0; A < nen; ++A) {
        Vector3d fA = Vector3d::Zero();
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b) {
            fA += stress.tau(a, b) * dN(A, a) * st.cur.a[b];
            fA += stress.M0(a, b) * cov(A, (a == b) ? a : 2) * n;
          }
        fint_e.segment<3>(3 * A) += Jw * fA;
      }

      if (!f0.isZero())
        for (int A = 0; A < nen; ++A) fext_e.segment<3>(3 * A) += Jw * qp.bv.N[A] * f0;
      const double jw_cur = st.cur.jac * qp.w;  // follower pressure on current area
      if (pval != 0.0)
        for (int A = 0; A < nen; ++A)
          fext_e.segment<3>(3 * A) += jw_cur * pval * qp.bv.N[A] * n;

      if (!Ke) continue;
      MatrixXd& K = *Ke;
      const Matrix3d nnT = n * n.transpose();

      double m_b = 0.0;  // M0 : b
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) m_b += stress.M0(a, b) * st.cur.curvature(a, b);

      for (int A = 0; A < nen; ++A)
        for (int B = 0; B < nen; ++B) {
          Matrix3d blk = Matrix3d::Zero();
          double geo = 0.0, gAB = 0.0;
          for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
              geo += stress.tau(a, b) * dN(A, a) * dN(B, b);
              gAB += st.cur.metric_inv(a, b) * dN(A, a) * dN(B, b);
              const int colAB = (a == b) ? a : 2;
              for (int g = 0; g < 2; ++g)
                for (int d = 0; d < 2; ++d) {
                  const int colGD = (g == d) ? g : 2;
                  blk += (stress.c(a, b, g, d) * dN(A, a) * dN(B, d)) *
                         (st.cur.a[b] * st.cur.a[g].transpose());
                  blk += (stress.d(a, b, g, d) * dN(A, a) * cov(B, colGD)) *
                         (st.cur.a[b] * n.transpose());
                  blk += (stress.e(a, b, g, d) * cov(A, colAB) * dN(B, d)) *
                         (n * st.cur.a[g].transpose());
                  blk += (stress.f(a, b, g, d) * cov(A, colAB) * cov(B, colGD)) * nnT;
                }
            }
          blk += geo * Matrix3d::Identity();

          // geometric bending stiffness
          blk -= m_b * gAB * nnT;
          for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
              const int col = (a == b) ? a : 2;
              for (int g = 0; g < 2; ++g) {
                blk -= (stress.M0(a, b) * dN(A, g) * cov(B, col)) *
                       (n * st.cur.acon[g].transpose());
                blk -= (stress.M0(a, b) * cov(A, col) * dN(B, g)) *
                       (st.cur.acon[g] * n.transpose());
              }
            }

          K.block<3, 3>(3 * A, 3 * B) += Jw * blk;

          if (pval != 0.0) {
            Matrix3d kp = Matrix3d::Zero();
            for (int b = 0; b < 2; ++b)
              kp += dN(B, b) *
                    (n * st.cur.acon[b].transpose() - st.cur.acon[b] * n.transpose());
            K.block<3, 3>(3 * A, 3 * B) -= jw_cur * pval * qp.bv.N[A] * kp;
          }
        }
    }
  }

  // --- edge loads ---------------------------------------------------------------

  void edge_loads(const VectorXd& u, double main_scale, double pre_scale, Assembled& out,
                  std::vector<Triplet>* trips) const {
    for (const auto& tr : loads.tractions) {
      const double val = stage_scale(tr.stage, main_scale, pre_scale) * tr.value;
      for (const auto& ed : edges_[static_cast<int>(tr.side)])
        traction_kernel(ed, u, tr, val, out, trips);
    }
    for (const auto& mo : loads.moments) {
      const double val = stage_scale(mo.stage, main_scale, pre_scale) * mo.value;
      for (const auto& ed : edges_[static_cast<int>(mo.side)])
        moment_kernel(ed, u, mo, val, out, trips);
    }
  }

  void traction_kernel(const detail::EdgeElemData& ed, const VectorXd& u,
                       const EdgeTraction& tr, double val, Assembled& out,
                       std::vector<Triplet>* trips) const {
    const int nen = static_cast<int>(ed.nodes.size());
    VectorXd fe = VectorXd::Zero(3 * nen);
    const bool live = !tr.per_reference;
    MatrixXd Ke;
    if (trips && live) Ke = MatrixXd::Zero(3 * nen, 3 * nen);
    MatrixXd xe;
    if (live) xe = gather_coords(ed.nodes, u);
    for (const auto& qp : ed.qp) {
      double ds = qp.refJ1d * qp.w;
      Vector3d chat = Vector3d::Zero();
      if (live) {
        SurfaceConfig cur = current_state(qp.bv, xe);
        const Vector3d c = cur.a[0] * qp.cdir[0] + cur.a[1] * qp.cdir[1];
        ds = c.norm() * qp.w;
        chat = c.normalized();
      }
      for (int A = 0; A < nen; ++A) {
        fe.segment<3>(3 * A) += val * qp.bv.N[A] * ds * tr.direction;
        if (trips && live)
          for (int B = 0; B < nen; ++B) {
            const double dNBc = qp.bv.dN(B, 0) * qp.cdir[0] + qp.bv.dN(B, 1) * qp.cdir[1];
            Ke.block<3, 3>(3 * A, 3 * B) +=
                val * qp.bv.N[A] * qp.w * dNBc * (tr.direction * chat.transpose());
          }
      }
    }
    scatter_vector(ed.nodes, fe, out.fext);
    if (trips && live) {
      MatrixXd Kneg = -Ke;  // external tangent enters K_T with negative sign
      scatter_matrix(ed.nodes, Kneg, *trips);
    }
  }

  void moment_kernel(const detail::EdgeElemData& ed, const VectorXd& u, const EdgeMoment& mo,
                     double val, Assembled& out, std::vector<Triplet>* trips) const {
    const int nen = static_cast<int>(ed.nodes.size());
    VectorXd fe = VectorXd::Zero(3 * nen);
    MatrixXd Ke;
    if (trips) Ke = MatrixXd::Zero(3 * nen, 3 * nen);
    MatrixXd xe = gather_coords(ed.nodes, u);
    for (const auto& qp : ed.qp) {
      SurfaceConfig cur = current_state(qp.bv, xe);
      const Vector3d n = cur.n;
      const auto& dN = qp.bv.dN;
      if (mo.per_reference) {
        // density per reference length, frozen reference conormal, current normal
        for (int A = 0; A < nen; ++A) {
          const double WA = qp.W0[0] * dN(A, 0) + qp.W0[1] * dN(A, 1);
          if (WA == 0.0) continue;
          fe.segment<3>(3 * A) += val * qp.w * WA * n;
          if (trips)
            for (int B = 0; B < nen; ++B) {
              Matrix3d kb = Matrix3d::Zero();
              for (int b = 0; b < 2; ++b)
                kb -= dN(B, b) * (cur.acon[b] * n.transpose());
              Ke.block<3, 3>(3 * A, 3 * B) += val * qp.w * WA * kb;
            }
        }
      } else {
        // density per current length: conormal and line element follow the motion
        const Vector3d c = cur.a[0] * qp.cdir[0] + cur.a[1] * qp.cdir[1];
        const Vector3d cxn = c.cross(n);
        double wt[2];  // (c x n) . a^alpha, orientation handled once below
        for (int a = 0; a < 2; ++a) wt[a] = cxn.dot(cur.acon[a]);
        const double sgn = qp.orient * val * qp.w;
        for (int A = 0; A < nen; ++A) {
          const double WA = wt[0] * dN(A, 0) + wt[1] * dN(A, 1);
          fe.segment<3>(3 * A) += sgn * WA * n;
        }
        if (trips)
          for (int A = 0; A < nen; ++A)
            for (int B = 0; B < nen; ++B) {
              Matrix3d kb = Matrix3d::Zero();
              const double dNBc = dN(B, 0) * qp.cdir[0] + dN(B, 1) * qp.cdir[1];
              for (int a = 0; a < 2; ++a) {
                const double dNAa = dN(A, a);
                if (dNAa == 0.0) continue;
                kb += dNAa * dNBc * (n * n.cross(cur.acon[a]).transpose());
                for (int b = 0; b < 2; ++b) {
                  const double dNBb = dN(B, b);
                  kb -= dNAa * dNBb * cur.acon[b].dot(cur.acon[a].cross(c)) * (n * n.transpose());
                  kb -= dNAa * dNBb * wt[b] * (n * cur.acon[a].transpose());
                  kb -= dNAa * dNBb * wt[a] * (cur.acon[b] * n.transpose());
                }
              }
              Ke.block<3, 3>(3 * A, 3 * B) += sgn * kb;
            }
      }
    }
    scatter_vector(ed.nodes, fe, out.fext);
    if (trips) {
      MatrixXd Kneg = -Ke;
      scatter_matrix(ed.nodes, Kneg, *trips);
    }
  }

  void point_loads(double main_scale, double pre_scale, VectorXd& fext) const {
    for (const auto& pl : loads.point_loads) {
      const double val = stage_scale(pl.stage, main_scale, pre_scale) * pl.value;
      if (pl.node >= 0) {
        fext.segment<3>(3 * pl.node) += val * pl.direction;
      } else {
        BasisValues bv = patch.eval_basis(pl.elem, pl.xi);
        const auto nodes = patch.element_nodes(pl.elem);
        for (std::size_t l = 0; l < nodes.size(); ++l)
          fext.segment<3>(3 * nodes[l]) += val * bv.N[static_cast<int>(l)] * pl.direction;
      }
    }
  }

  // --- rotational constraint -------------------------------------------------------

  // g(theta) = 1 - cos(theta - theta0) + sin(theta - theta0), theta = 2 asin(q),
  // q = m . n. The sine term keeps dg/dtheta = 1 at the solution, so the
  // multiplier is well defined.
  static void constraint_g(double q, double q0, double& g, double& dg, double& ddg) {
    const double phi = std::asin(q), phi0 = std::asin(q0);
    const double del = 2.0 * (phi - phi0);
    const double r = 1.0 - q * q;
    const double dphi = 1.0 / std::sqrt(r);
    const double d2phi = q / (r * std::sqrt(r));
    const double gs = std::sin(del), gc = std::cos(del);
    g = 1.0 - gc + gs;
    dg = (gs + gc) * 2.0 * dphi;
    ddg = (gc - gs) * 4.0 * dphi * dphi + (gs + gc) * 2.0 * d2phi;
  }

  void constraint_terms(const VectorXd& u, Assembled& out, std::vector<Triplet>* trips) const {
    const int base = dofs_.n_disp();
    for (const auto& cq : constraint_qps_) {
      MatrixXd xe = gather_coords(cq.nodes, u);
      SurfaceConfig cur = current_state(cq.bv, xe);
      const Vector3d& m = cq.mirror;
      const Vector3d& n = cur.n;
      const double q = m.dot(n);
      double g, dg, ddg;
      constraint_g(q, cq.q0, g, dg, ddg);
      const double p = u[base + cq.mult];
      const double wk = cq.wds * mult_scale_;
      const int nen = static_cast<int>(cq.nodes.size());
      const auto& dN = cq.bv.dN;
      const double ma[2] = {m.dot(cur.acon[0]), m.dot(cur.acon[1])};

      // first variation of q per (node, direction)
      MatrixXd dq(nen, 3);
      for (int B = 0; B < nen; ++B)
        for (int j = 0; j < 3; ++j)
          dq(B, j) = -(ma[0] * dN(B, 0) + ma[1] * dN(B, 1)) * n[j];

      out.fint[base + cq.mult] += wk * g;
      for (int B = 0; B < nen; ++B)
        out.fint.segment<3>(3 * cq.nodes[B]) += wk * p * dg * dq.row(B).transpose();

      if (!trips) continue;

      for (int B = 0; B < nen; ++B)
        for (int j = 0; j < 3; ++j) {
          const double v = wk * dg * dq(B, j);
          if (v == 0.0) continue;
          trips->emplace_back(3 * cq.nodes[B] + j, base + cq.mult, v);
          trips->emplace_back(base + cq.mult, 3 * cq.nodes[B] + j, v);
        }

      // second variation of q:
      //   Ddq = (n.da_a)(a^a.Da_b)(m.a^b) - (n.da_a) a^ab (m.n)(n.Da_b)
      //         + (m.a^a)(a^b.da_a)(n.Da_b)
      for (int A = 0; A < nen; ++A)
        for (int B = 0; B < nen; ++B) {
          Matrix3d blk = ddg * (dq.row(A).transpose() * dq.row(B));
          Matrix3d d2q = Matrix3d::Zero();
          for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
              const double w = dN(A, a) * dN(B, b);
              if (w == 0.0) continue;
              d2q += w * ma[b] * (n * cur.acon[a].transpose());
              d2q -= w * cur.metric_inv(a, b) * q * (n * n.transpose());
              d2q += w * ma[a] * (cur.acon[b] * n.transpose());
            }
          blk += dg * d2q;
          const Matrix3d v = (wk * p) * blk;
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
              if (v(i, j) != 0.0)
                trips->emplace_back(3 * cq.nodes[A] + i, 3 * cq.nodes[B] + j, v(i, j));
        }
    }
  }
};

}  // namespace shellinv
