#include "hdgfwi/forward.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <spdlog/spdlog.h>

#include "hdg_internal.hpp"
#include "hdgfwi/basis.hpp"
#include "hdgfwi/parallel.hpp"
#include "hdgfwi/quadrature.hpp"

namespace hdgfwi {

RestrictionOperator::RestrictionOperator(const Mesh& mesh, const Discretization& disc,
                                         const std::vector<Point>& receivers) {
  cells_.reserve(receivers.size());
  weights_.reserve(receivers.size());
  for (std::size_t k = 0; k < receivers.size(); ++k) {
    const std::optional<int> e = mesh.locate(receivers[k]);
    if (!e) {
      std::ostringstream msg;
      msg << "receiver " << k << " at (" << receivers[k].x() << ", " << receivers[k].y() << ", "
          << receivers[k].z() << ") lies outside the mesh";
      throw ConfigError(msg.str());
    }
    cells_.push_back(*e);
    weights_.push_back(cached_basis(mesh.dim(), disc.cell_order(*e)).values(mesh.to_reference(*e, receivers[k])));
  }
}

CVector RestrictionOperator::apply(const FieldSolution& solution) const {
  CVector out(static_cast<Eigen::Index>(cells_.size()));
  for (std::size_t k = 0; k < cells_.size(); ++k) {
    const CVector& u = solution.cells[cells_[k]];
    out[static_cast<Eigen::Index>(k)] = (weights_[k].cast<Complex>().transpose() * u.head(weights_[k].size()))(0);
  }
  return out;
}

std::map<int, CVector> RestrictionOperator::adjoint(const CVector& residual, const HdgSystem& system) const {
  if (static_cast<std::size_t>(residual.size()) != cells_.size()) {
    throw StructuralError("residual has length " + std::to_string(residual.size()) + ", expected " +
                          std::to_string(cells_.size()) + " receivers");
  }
  const int dim = system.mesh().dim();
  std::map<int, CVector> out;
  for (std::size_t k = 0; k < cells_.size(); ++k) {
    const int e = cells_[k];
    const int nv = system.field_size(e);
    auto [it, inserted] = out.try_emplace(e, CVector::Zero((dim + 1) * nv));
    it->second.head(nv) += residual[static_cast<Eigen::Index>(k)] * weights_[k].cast<Complex>();
  }
  return out;
}

ForwardSolver::ForwardSolver(const Mesh& mesh, Discretization disc, BoundarySpec boundary,
                             FactorizationOptions options)
    : mesh_(&mesh), disc_(std::move(disc)), boundary_(std::move(boundary)), options_(options) {
  boundary_.validate();
}

void ForwardSolver::set_state(const Model& model, Complex sigma) {
  factorization_.reset();
  system_.reset();
  model_ = std::make_unique<Model>(model);
  auto system = std::make_unique<HdgSystem>(*mesh_, disc_, *model_, sigma, boundary_);
  spdlog::debug("global matrix: {} trace dofs, {} nonzeros", system->trace_dofs(), system->matrix().nonZeros());
  factorization_ = std::make_unique<Factorization>(system->matrix(), options_);
  const FactorizationStats& st = factorization_->stats();
  spdlog::debug("factorization: nnz(L) {} nnz(U) {} memory {} bytes", st.l_nonzeros, st.u_nonzeros,
                st.memory_bytes);
  system_ = std::move(system);
}

const Model& ForwardSolver::model() const {
  if (!model_) throw StructuralError("forward solver has no model state");
  return *model_;
}

const HdgSystem& ForwardSolver::system() const {
  if (!system_) throw StructuralError("forward solver has no assembled system");
  return *system_;
}

const Factorization& ForwardSolver::factorization() const {
  if (!factorization_) throw StructuralError("forward solver has no factorization");
  return *factorization_;
}

FieldSolution ForwardSolver::solve(const Excitation& excitation, int source_id) const {
  const HdgSystem& sys = system();
  const CellLoads loads = sys.loads(excitation);
  const CVector rhs = sys.rhs(loads);
  const CVector trace = factorization().solve(rhs);
  if (!trace.allFinite()) throw NumericalError("global trace solution is not finite");
  return sys.reconstruct(trace, loads, source_id);
}

std::vector<FieldSolution> ForwardSolver::solve_all(const std::vector<Excitation>& excitations) const {
  spdlog::debug("forward rhs: {} sources", excitations.size());
  std::vector<FieldSolution> out(excitations.size());
  parallel_for(excitations.size(),
               [&](std::size_t k) { out[k] = solve(excitations[k], static_cast<int>(k)); });
  return out;
}

std::vector<Excitation> point_excitations(const AcquisitionSetup& setup) {
  std::vector<Excitation> out;
  out.reserve(setup.sources.size());
  for (const PointSource& s : setup.sources) {
    Excitation ex;
    ex.point_sources.push_back(s);
    out.push_back(std::move(ex));
  }
  return out;
}

FieldErrors l2_errors(const HdgSystem& system, const FieldSolution& solution, const ScalarField& p,
                      const VectorField& v) {
  system.check_generation(solution);
  const Mesh& mesh = system.mesh();
  const int dim = mesh.dim();
  FieldErrors err;
  double sq[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t e = 0; e < mesh.num_cells(); ++e) {
    const int order = system.discretization().cell_order(e);
    const int nv = system.field_size(e);
    const detail::CellSamples cs = detail::sample_cell(mesh, e, order, 2 * order + 6);
    const CVector& u = solution.cells[e];
    const CMatrix phi = cs.phi.cast<Complex>();
    const CVector ph = phi * u.head(nv);
    for (Eigen::Index q = 0; q < cs.weight.size(); ++q) {
      sq[0] += cs.weight[q] * std::norm(ph[q] - p(cs.x[q]));
    }
    for (int d = 0; d < dim; ++d) {
      const CVector vh = phi * u.segment((d + 1) * nv, nv);
      for (Eigen::Index q = 0; q < cs.weight.size(); ++q) {
        sq[d + 1] += cs.weight[q] * std::norm(vh[q] - v(cs.x[q])[d]);
      }
    }
  }
  err.pressure = std::sqrt(sq[0]);
  for (int d = 0; d < dim; ++d) err.velocity[d] = std::sqrt(sq[d + 1]);
  return err;
}

namespace {

// Barycentric hat functions of a simplex at reference point ref.
RVector hat_values(int dim, const Point& ref) {
  RVector h(dim + 1);
  h[0] = 1.0;
  for (int k = 0; k < dim; ++k) {
    h[k + 1] = ref[k];
    h[0] -= ref[k];
  }
  return h;
}

}  // namespace

CVector solve_second_order_p1(const Mesh& mesh, const Model& model, Complex sigma, const BoundarySpec& boundary,
                              const Excitation& excitation) {
  const int dim = mesh.dim();
  const int n = static_cast<int>(mesh.num_vertices());
  const Complex sigma2 = sigma * sigma;
  std::vector<Eigen::Triplet<Complex, int>> triplets;
  CVector rhs = CVector::Zero(n);
  const QuadratureRule& vol = quadrature_for(4 + 2 * model.order(), IntegrationDomain::kCell, dim);
  for (std::size_t e = 0; e < mesh.num_cells(); ++e) {
    const auto verts = mesh.cell_vertices(e);
    const Eigen::Matrix3d jinv_t = mesh.jacobian(e).inverse().transpose();
    RMatrix grads(dim + 1, dim);
    for (int k = 0; k < dim; ++k) {
      Point ek = Point::Zero();
      ek[k] = 1.0;
      const Point g = jinv_t * ek;
      grads.row(k + 1) = g.head(dim).transpose();
    }
    grads.row(0) = -grads.bottomRows(dim).colwise().sum();
    const double scale = mesh.cell_volume(e) * (dim == 2 ? 2.0 : 6.0);
    CMatrix ke = CMatrix::Zero(dim + 1, dim + 1);
    for (std::size_t q = 0; q < vol.size(); ++q) {
      const double w = vol.weights[q] * scale;
      const double c = model.wave_speed_at(e, vol.points[q]);
      const double rho = model.density_at(e, vol.points[q]);
      const RVector h = hat_values(dim, vol.points[q]);
      ke += (w * sigma2 / (rho * c * c)) * (h * h.transpose()).cast<Complex>();
      ke += (w / rho) * (grads * grads.transpose()).cast<Complex>();
      if (excitation.volume) {
        const Complex f = excitation.volume(mesh.to_physical(e, vol.points[q]));
        for (int i = 0; i <= dim; ++i) rhs[verts[i]] += -sigma * w * f * h[i];
      }
    }
    for (int i = 0; i <= dim; ++i) {
      for (int j = 0; j <= dim; ++j) triplets.emplace_back(verts[i], verts[j], ke(i, j));
    }
  }
  for (const PointSource& src : excitation.point_sources) {
    const std::optional<int> cell = mesh.locate(src.position);
    if (!cell) throw ConfigError("point source lies outside the mesh");
    const RVector h = hat_values(dim, mesh.to_reference(*cell, src.position));
    const auto verts = mesh.cell_vertices(*cell);
    for (int i = 0; i <= dim; ++i) rhs[verts[i]] += -sigma * src.amplitude * h[i];
  }
  std::vector<char> dirichlet(n, 0);
  std::vector<Complex> dirichlet_value(n, 0.0);
  const QuadratureRule& face_rule = quadrature_for(5, IntegrationDomain::kFace, dim);
  const double face_ref = dim == 2 ? 1.0 : 0.5;
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    if (!face.is_boundary()) continue;
    const BoundaryCondition& bc = boundary.for_tag(face.tag);
    if (bc.kind == BoundaryKind::kDirichlet) {
      for (int k = 0; k < dim; ++k) {
        const int v = face.vertices[k];
        dirichlet[v] = 1;
        dirichlet_value[v] = excitation.boundary ? excitation.boundary(mesh.vertex(v), face.normals[0]) : 0.0;
      }
      continue;
    }
    const int e = face.cells[0];
    const auto verts = mesh.cell_vertices(e);
    const double scale = mesh.face_measure(f) / face_ref;
    CMatrix me = CMatrix::Zero(dim + 1, dim + 1);
    for (std::size_t q = 0; q < face_rule.size(); ++q) {
      const Point x = mesh.face_to_physical(f, face_rule.points[q]);
      const Point ref = mesh.to_reference(e, x);
      const RVector h = hat_values(dim, ref);
      const double w = face_rule.weights[q] * scale;
      const double rho = model.density_at(e, ref);
      Complex gamma = 0.0;
      if (bc.kind == BoundaryKind::kAbc) gamma = -1.0 / (model.wave_speed_at(e, ref) * rho);
      if (bc.kind == BoundaryKind::kRobin) gamma = bc.alpha / (sigma * rho * bc.beta);
      me += (w * sigma * gamma) * (h * h.transpose()).cast<Complex>();
      if (excitation.boundary) {
        const Complex g = excitation.boundary(x, face.normals[0]);
        for (int i = 0; i <= dim; ++i) rhs[verts[i]] += sigma * w * g * h[i];
      }
    }
    for (int i = 0; i <= dim; ++i) {
      for (int j = 0; j <= dim; ++j) triplets.emplace_back(verts[i], verts[j], me(i, j));
    }
  }
  SparseMatrix a(n, n);
  a.setFromTriplets(triplets.begin(), triplets.end());
  // Strong Dirichlet rows; the known values move to the right-hand side.
  for (int j = 0; j < n; ++j) {
    for (SparseMatrix::InnerIterator it(a, j); it; ++it) {
      if (dirichlet[j] && !dirichlet[it.row()]) rhs[it.row()] -= it.value() * dirichlet_value[j];
    }
  }
  for (int j = 0; j < n; ++j) {
    for (SparseMatrix::InnerIterator it(a, j); it; ++it) {
      if (dirichlet[it.row()] || dirichlet[j]) it.valueRef() = it.row() == j ? Complex(1.0) : Complex(0.0);
    }
  }
  for (int i = 0; i < n; ++i) {
    if (dirichlet[i]) rhs[i] = dirichlet_value[i];
  }
  a.prune(Complex(0.0));
  FactorizationOptions opts;
  opts.backend = SolverBackend::kEigen;
  return Factorization(a, opts).solve(rhs);
}

double second_order_crosscheck(const HdgSystem& system, const FieldSolution& solution,
                               const Excitation& excitation) {
  system.check_generation(solution);
  const Mesh& mesh = system.mesh();
  const int dim = mesh.dim();
  CVector ref_p;
  try {
    ref_p = solve_second_order_p1(mesh, system.model(), system.sigma(), system.boundary(), excitation);
  } catch (const NumericalError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  double diff = 0.0;
  double norm = 0.0;
  for (std::size_t e = 0; e < mesh.num_cells(); ++e) {
    const int order = system.discretization().cell_order(e);
    const int nv = system.field_size(e);
    const detail::CellSamples cs = detail::sample_cell(mesh, e, order, 2 * order + 4);
    const CVector ph = cs.phi.cast<Complex>() * solution.cells[e].head(nv);
    const auto verts = mesh.cell_vertices(e);
    for (Eigen::Index q = 0; q < cs.weight.size(); ++q) {
      const RVector h = hat_values(dim, cs.ref[q]);
      Complex pc = 0.0;
      for (int i = 0; i <= dim; ++i) pc += h[i] * ref_p[verts[i]];
      diff += cs.weight[q] * std::norm(ph[q] - pc);
      norm += cs.weight[q] * std::norm(pc);
    }
  }
  if (!(norm > 0.0)) return diff > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return std::sqrt(diff / norm);
}

}  // namespace hdgfwi
