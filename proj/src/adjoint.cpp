#include "hdgfwi/adjoint.hpp"

#include <cmath>

#include <Eigen/LU>
#include <spdlog/spdlog.h>

#include "hdg_internal.hpp"
#include "hdgfwi/parallel.hpp"

namespace hdgfwi {

namespace {

// A^{-*} s through the cached factorization of A.
CVector solve_local_adjoint(const CellBlocks& b, const CVector& s) {
  CVector out(s.size());
  b.lu._solve_impl_transposed<true>(s, out);
  return out;
}

}  // namespace

CVector adjoint_rhs(const HdgSystem& system, const std::map<int, CVector>& cell_vectors) {
  const ConnectivityMap& conn = system.discretization().connectivity();
  CVector out = CVector::Zero(static_cast<Eigen::Index>(system.trace_dofs()));
  for (const auto& [e, s] : cell_vectors) {
    const CellBlocks& b = system.blocks(e);
    if (s.size() != b.A.rows()) throw StructuralError("adjoint rhs: cell vector has wrong length");
    conn.scatter_add(e, b.ainv_c.adjoint() * s, out);
  }
  return out;
}

AdjointSolution solve_adjoint_states(const HdgSystem& system, const Factorization& factorization,
                                     const RestrictionOperator& restriction, const FieldSolution& forward,
                                     const CVector& data) {
  system.check_generation(forward);
  if (static_cast<std::size_t>(data.size()) != restriction.size()) {
    throw StructuralError("data has length " + std::to_string(data.size()) + ", expected " +
                          std::to_string(restriction.size()) + " receivers");
  }
  if (factorization.dimension() != system.trace_dofs()) {
    throw StructuralError("factorization does not match the trace system");
  }
  AdjointSolution adj;
  adj.generation = system.generation();
  adj.residual = restriction.apply(forward) - data;
  const std::map<int, CVector> s = restriction.adjoint(adj.residual, system);
  adj.gamma2 = factorization.solve_adjoint(adjoint_rhs(system, s));
  const ConnectivityMap& conn = system.discretization().connectivity();
  adj.gamma1.resize(system.mesh().num_cells());
  parallel_for(system.mesh().num_cells(), [&](std::size_t e) {
    const CellBlocks& b = system.blocks(e);
    CVector g = -(b.b_ainv.adjoint() * conn.select(e, adj.gamma2));
    const auto it = s.find(static_cast<int>(e));
    if (it != s.end()) g -= solve_local_adjoint(b, it->second);
    adj.gamma1[e] = std::move(g);
  });
  return adj;
}

RVector gradient_contribution(const HdgSystem& system, const FieldSolution& forward,
                              const AdjointSolution& adjoint, Parameter parameter) {
  system.check_generation(forward);
  if (adjoint.generation != system.generation()) throw StructuralError("stale adjoint solution");
  const Mesh& mesh = system.mesh();
  const Model& model = system.model();
  const Discretization& disc = system.discretization();
  const ConnectivityMap& conn = disc.connectivity();
  const int r = model.order();
  const int nm = model.dofs_per_cell();
  if (parameter == Parameter::kInverseBulkModulus && r != 0) {
    throw ConfigError("gradient with respect to the inverse bulk modulus is only registered for model order 0");
  }
  const Complex sigma = system.sigma();
  RVector grad = RVector::Zero(static_cast<Eigen::Index>(model.num_dofs()));
  parallel_for(mesh.num_cells(), [&](std::size_t e) {
    const int p = disc.cell_order(e);
    const int nv = system.field_size(e);
    const detail::CellSamples cs = detail::sample_cell(mesh, e, p, volume_quadrature_degree(p, r));
    const CVector ph = cs.phi.cast<Complex>() * forward.cells[e].head(nv);
    const CVector gh = cs.phi.cast<Complex>() * adjoint.gamma1[e].head(nv);
    RVector local = RVector::Zero(nm);
    for (Eigen::Index q = 0; q < cs.weight.size(); ++q) {
      // d A_pp = -sigma (d kappa^{-1} phi_j, phi_i)
      const Complex prod = -sigma * cs.weight[q] * std::conj(gh[q]) * ph[q];
      if (parameter == Parameter::kInverseBulkModulus) {
        local[0] += prod.real();
      } else {
        const double c = model.wave_speed_at(e, cs.ref[q]);
        const double rho = model.density_at(e, cs.ref[q]);
        const RVector psi = model.basis_values(cs.ref[q]);
        local += (prod * (-2.0 / (rho * c * c * c))).real() * psi;
      }
    }
    // The absorbing impedance -1/(c rho) also depends on the model.
    for (int lf = 0; lf < mesh.faces_per_cell(); ++lf) {
      const int f = mesh.cell_face(e, lf);
      const Face& face = mesh.face(f);
      if (!face.is_boundary() || system.face_condition(f).kind != BoundaryKind::kAbc) continue;
      const int qf = disc.face_order(f);
      const int nxi = conn.face_dofs(f);
      const detail::FaceSamples fs =
          detail::sample_face(mesh, e, lf, p, qf, face_quadrature_degree(p, qf, r, true));
      const CVector lam = fs.xi.cast<Complex>() * forward.trace.segment(conn.face_offset(f), nxi);
      const CVector mu = fs.xi.cast<Complex>() * adjoint.gamma2.segment(conn.face_offset(f), nxi);
      for (Eigen::Index q = 0; q < fs.weight.size(); ++q) {
        const double c = model.wave_speed_at(e, fs.cell_ref[q]);
        const double rho = model.density_at(e, fs.cell_ref[q]);
        const Complex prod = fs.weight[q] * std::conj(mu[q]) * lam[q];
        if (parameter == Parameter::kInverseBulkModulus) {
          local[0] += (prod * (-0.5 * c)).real();
        } else {
          local += (prod / (c * c * rho)).real() * model.basis_values(fs.cell_ref[q]);
        }
      }
    }
    grad.segment(static_cast<Eigen::Index>(e) * nm, nm) = local;
  });
  return grad;
}

SparseMatrix explicit_adjoint_matrix(const HdgSystem& system) {
  const ConnectivityMap& conn = system.discretization().connectivity();
  std::vector<Eigen::Triplet<Complex, int>> triplets;
  for (std::size_t e = 0; e < system.mesh().num_cells(); ++e) {
    const CellBlocks& b = system.blocks(e);
    const Eigen::FullPivLU<CMatrix> lu_adj(b.A.adjoint());
    const CMatrix k_adj = b.L.adjoint() - b.C.adjoint() * lu_adj.solve(b.B.adjoint());
    const std::vector<int>& dofs = conn.cell_dofs(e);
    for (int j = 0; j < k_adj.cols(); ++j) {
      for (int i = 0; i < k_adj.rows(); ++i) {
        if (k_adj(i, j) != Complex(0.0)) triplets.emplace_back(dofs[i], dofs[j], k_adj(i, j));
      }
    }
  }
  const int n = static_cast<int>(system.trace_dofs());
  SparseMatrix out(n, n);
  out.setFromTriplets(triplets.begin(), triplets.end());
  out.makeCompressed();
  return out;
}

double adjoint_local_residual(const HdgSystem& system, const RestrictionOperator& restriction,
                              const AdjointSolution& adjoint) {
  const ConnectivityMap& conn = system.discretization().connectivity();
  const std::map<int, CVector> s = restriction.adjoint(adjoint.residual, system);
  double worst = 0.0;
  for (std::size_t e = 0; e < system.mesh().num_cells(); ++e) {
    const CellBlocks& b = system.blocks(e);
    const CVector a = b.A.adjoint() * adjoint.gamma1[e];
    const CVector c = b.B.adjoint() * conn.select(e, adjoint.gamma2);
    CVector res = a + c;
    double scale = a.norm() + c.norm();
    const auto it = s.find(static_cast<int>(e));
    if (it != s.end()) {
      res += it->second;
      scale += it->second.norm();
    }
    if (scale > 0.0) worst = std::max(worst, res.norm() / scale);
  }
  return worst;
}

double adjoint_global_residual(const HdgSystem& system, const AdjointSolution& adjoint) {
  const ConnectivityMap& conn = system.discretization().connectivity();
  CVector total = CVector::Zero(static_cast<Eigen::Index>(system.trace_dofs()));
  double scale = 0.0;
  for (std::size_t e = 0; e < system.mesh().num_cells(); ++e) {
    const CellBlocks& b = system.blocks(e);
    const CVector part1 = b.C.adjoint() * adjoint.gamma1[e];
    const CVector part2 = b.L.adjoint() * conn.select(e, adjoint.gamma2);
    scale += part1.norm() + part2.norm();
    conn.scatter_add(e, part1 + part2, total);
  }
  return scale > 0.0 ? total.norm() / scale : 0.0;
}

MisfitGradient misfit_and_gradient(const ForwardSolver& solver, const RestrictionOperator& restriction,
                                   const std::vector<Excitation>& sources, const std::vector<CVector>& data,
                                   Parameter parameter, bool with_gradient) {
  if (sources.size() != data.size()) {
    throw StructuralError("misfit: " + std::to_string(sources.size()) + " sources but " +
                          std::to_string(data.size()) + " data blocks");
  }
  const HdgSystem& system = solver.system();
  std::vector<double> misfits(sources.size(), 0.0);
  std::vector<RVector> grads(sources.size());
  if (with_gradient) spdlog::debug("adjoint rhs: {} sources", sources.size());
  parallel_for(sources.size(), [&](std::size_t k) {
    const FieldSolution u = solver.solve(sources[k], static_cast<int>(k));
    if (!with_gradient) {
      misfits[k] = 0.5 * (restriction.apply(u) - data[k]).squaredNorm();
      return;
    }
    const AdjointSolution adj = solve_adjoint_states(system, solver.factorization(), restriction, u, data[k]);
    misfits[k] = 0.5 * adj.residual.squaredNorm();
    grads[k] = gradient_contribution(system, u, adj, parameter);
  });
  MisfitGradient out;
  out.gradient = RVector::Zero(static_cast<Eigen::Index>(system.model().num_dofs()));
  for (std::size_t k = 0; k < sources.size(); ++k) {
    out.misfit += misfits[k];
    if (with_gradient) out.gradient += grads[k];
  }
  return out;
}

}  // namespace hdgfwi
