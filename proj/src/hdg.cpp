#include "hdgfwi/hdg.hpp"

#include <atomic>
#include <cmath>
#include <sstream>

#include <spdlog/spdlog.h>

#include "hdg_internal.hpp"
#include "hdgfwi/basis.hpp"
#include "hdgfwi/parallel.hpp"
#include "hdgfwi/quadrature.hpp"

namespace hdgfwi {

namespace {

std::atomic<std::uint64_t> g_generation{0};

double reference_measure(int dim) { return dim == 1 ? 1.0 : (dim == 2 ? 0.5 : 1.0 / 6.0); }

}  // namespace

namespace detail {

CellSamples sample_cell(const Mesh& mesh, std::size_t e, int order, int degree) {
  const int dim = mesh.dim();
  const QuadratureRule& rule = quadrature_for(degree, IntegrationDomain::kCell, dim);
  const NodalBasis& basis = cached_basis(dim, order);
  const Eigen::Matrix3d jinv_t = mesh.jacobian(e).inverse().transpose();
  const double scale = mesh.cell_volume(e) / reference_measure(dim);
  const int nq = static_cast<int>(rule.size());
  CellSamples s;
  s.ref = rule.points;
  s.x.resize(nq);
  s.weight.resize(nq);
  s.phi.resize(nq, basis.size());
  for (int d = 0; d < dim; ++d) s.dphi[d].resize(nq, basis.size());
  for (int q = 0; q < nq; ++q) {
    s.x[q] = mesh.to_physical(e, rule.points[q]);
    s.weight[q] = rule.weights[q] * scale;
    s.phi.row(q) = basis.values(rule.points[q]).transpose();
    const RMatrix g = basis.gradients(rule.points[q]);
    for (int i = 0; i < basis.size(); ++i) {
      Point gr = Point::Zero();
      gr.head(dim) = g.row(i).transpose();
      const Point gp = jinv_t * gr;
      for (int d = 0; d < dim; ++d) s.dphi[d](q, i) = gp[d];
    }
  }
  return s;
}

FaceSamples sample_face(const Mesh& mesh, std::size_t e, int local_face, int cell_order, int face_order,
                        int degree) {
  const int dim = mesh.dim();
  const int f = mesh.cell_face(e, local_face);
  const int side = mesh.cell_face_side(e, local_face);
  const QuadratureRule& rule = quadrature_for(degree, IntegrationDomain::kFace, dim);
  const NodalBasis& cell_basis = cached_basis(dim, cell_order);
  const NodalBasis& face_basis = cached_basis(dim - 1, face_order);
  const double scale = mesh.face_measure(f) / reference_measure(dim - 1);
  const int nq = static_cast<int>(rule.size());
  FaceSamples s;
  s.cell_ref.resize(nq);
  s.x.resize(nq);
  s.weight.resize(nq);
  s.phi.resize(nq, cell_basis.size());
  s.xi.resize(nq, face_basis.size());
  s.normal = mesh.face(f).normals[side];
  for (int q = 0; q < nq; ++q) {
    s.x[q] = mesh.face_to_physical(f, rule.points[q]);
    s.cell_ref[q] = mesh.to_reference(e, s.x[q]);
    s.weight[q] = rule.weights[q] * scale;
    s.phi.row(q) = cell_basis.values(s.cell_ref[q]).transpose();
    s.xi.row(q) = face_basis.values(rule.points[q]).transpose();
  }
  return s;
}

std::vector<Point> face_nodes(const Mesh& mesh, std::size_t f, int face_order) {
  const NodalBasis& basis = cached_basis(mesh.dim() - 1, face_order);
  std::vector<Point> out;
  out.reserve(basis.nodes().size());
  for (const Point& node : basis.nodes()) out.push_back(mesh.face_to_physical(f, node));
  return out;
}

}  // namespace detail

const char* boundary_kind_name(BoundaryKind kind) {
  switch (kind) {
    case BoundaryKind::kDirichlet: return "dirichlet";
    case BoundaryKind::kNeumann: return "neumann";
    case BoundaryKind::kRobin: return "robin";
    case BoundaryKind::kAbc: return "abc";
  }
  return "unknown";
}

const BoundaryCondition& BoundarySpec::for_tag(BoundaryTag tag) const {
  const auto it = per_tag.find(tag);
  return it == per_tag.end() ? default_condition : it->second;
}

void BoundarySpec::validate() const {
  auto check = [](const BoundaryCondition& bc, const char* where) {
    if (bc.kind != BoundaryKind::kRobin) return;
    if (bc.beta == 0.0) {
      throw ConfigError(std::string("Robin condition on '") + where +
                        "' has beta = 0; such a face must be declared Dirichlet");
    }
    if (!std::isfinite(bc.alpha) || !std::isfinite(bc.beta)) {
      throw ConfigError(std::string("Robin coefficients on '") + where + "' are not finite");
    }
  };
  check(default_condition, "default");
  for (const auto& [tag, bc] : per_tag) check(bc, boundary_tag_name(tag));
}

BoundarySpec BoundarySpec::surface_dirichlet(BoundaryTag surface) {
  BoundarySpec spec;
  spec.default_condition.kind = BoundaryKind::kAbc;
  spec.per_tag[surface] = BoundaryCondition{BoundaryKind::kDirichlet, 0.0, 1.0};
  return spec;
}

int volume_quadrature_degree(int cell_order, int model_order) {
  return 2 * cell_order + 1 + (model_order > 0 ? 2 * model_order : 0);
}

int face_quadrature_degree(int cell_order, int face_order, int model_order, bool boundary) {
  const int p = std::max(cell_order, face_order);
  return 2 * p + 1 + (boundary && model_order > 0 ? 2 * model_order : 0);
}

HdgSystem::HdgSystem(const Mesh& mesh, const Discretization& disc, const Model& model, Complex sigma,
                     const BoundarySpec& boundary)
    : mesh_(&mesh), disc_(&disc), model_(&model), sigma_(sigma), boundary_(boundary),
      generation_(++g_generation) {
  if (sigma == Complex(0.0)) throw ConfigError("complex frequency sigma must be nonzero");
  if (model.num_cells() != mesh.num_cells() || model.dim() != mesh.dim()) {
    throw StructuralError("model layout does not match the mesh");
  }
  if (disc.cell_orders().size() != mesh.num_cells()) {
    throw StructuralError("discretization layout does not match the mesh");
  }
  boundary_.validate();
  model.validate();
  blocks_.resize(mesh.num_cells());
  parallel_for(mesh.num_cells(), [this](std::size_t e) { assemble_cell(e); });

  const ConnectivityMap& conn = disc.connectivity();
  std::vector<Eigen::Triplet<Complex, int>> triplets;
  std::size_t reserve = 0;
  for (const CellBlocks& b : blocks_) reserve += static_cast<std::size_t>(b.K.size());
  triplets.reserve(reserve);
  for (std::size_t e = 0; e < mesh.num_cells(); ++e) {
    const std::vector<int>& dofs = conn.cell_dofs(e);
    const CMatrix& K = blocks_[e].K;
    for (int j = 0; j < K.cols(); ++j) {
      for (int i = 0; i < K.rows(); ++i) {
        if (K(i, j) != Complex(0.0)) triplets.emplace_back(dofs[i], dofs[j], K(i, j));
      }
    }
  }
  const int n = static_cast<int>(conn.total_dofs());
  matrix_.resize(n, n);
  matrix_.setFromTriplets(triplets.begin(), triplets.end());
  matrix_.makeCompressed();

  if (spdlog::should_log(spdlog::level::debug)) {
    for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
      const Face& face = mesh.face(f);
      if (!face.is_boundary()) continue;
      const BoundaryCondition bc = face_condition(f);
      const int e = face.cells[0];
      const double rho = model.mean_density(e);
      std::ostringstream msg;
      msg << "boundary face " << f << " tag " << boundary_tag_name(face.tag) << " kind "
          << boundary_kind_name(bc.kind) << " tau " << 1.0 / rho;
      if (bc.kind == BoundaryKind::kAbc) msg << " gamma " << -1.0 / (model.mean_wave_speed(e) * rho);
      spdlog::debug(msg.str());
    }
  }
}

BoundaryCondition HdgSystem::face_condition(std::size_t f) const {
  const Face& face = mesh_->face(f);
  if (!face.is_boundary()) throw StructuralError("face " + std::to_string(f) + " is not a boundary face");
  return boundary_.for_tag(face.tag);
}

void HdgSystem::assemble_cell(std::size_t e) {
  const Mesh& mesh = *mesh_;
  const Model& model = *model_;
  const int dim = mesh.dim();
  const int p = disc_->cell_order(e);
  const int r = model.order();
  const int nv = dof_count(p, dim);
  const int na = (dim + 1) * nv;
  const int nf = mesh.faces_per_cell();
  const ConnectivityMap& conn = disc_->connectivity();
  const int nt = static_cast<int>(conn.cell_dofs(e).size());

  CellBlocks& b = blocks_[e];
  b.field_size = nv;
  const double rho_mean = model.mean_density(e);
  const double tau = 1.0 / rho_mean;
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw ConfigError("stabilization tau must be positive (cell " + std::to_string(e) + ")");
  }
  b.tau = tau;

  const detail::CellSamples cs = detail::sample_cell(mesh, e, p, volume_quadrature_degree(p, r));
  const int nq = static_cast<int>(cs.weight.size());
  RVector w_kinv(nq), w_rho(nq);
  for (int q = 0; q < nq; ++q) {
    const double c = model.wave_speed_at(e, cs.ref[q]);
    const double rho = model.density_at(e, cs.ref[q]);
    w_kinv[q] = cs.weight[q] / (rho * c * c);
    w_rho[q] = cs.weight[q] * rho;
  }
  const RMatrix m_kinv = cs.phi.transpose() * w_kinv.asDiagonal() * cs.phi;
  const RMatrix m_rho = cs.phi.transpose() * w_rho.asDiagonal() * cs.phi;

  b.A = CMatrix::Zero(na, na);
  b.C = CMatrix::Zero(na, nt);
  b.B = CMatrix::Zero(nt, na);
  b.L = CMatrix::Zero(nt, nt);
  b.A.block(0, 0, nv, nv) = -sigma_ * m_kinv.cast<Complex>();
  for (int d = 0; d < dim; ++d) {
    // D(i, j) = (d_d phi_j, phi_i)
    const RMatrix D = cs.phi.transpose() * cs.weight.asDiagonal() * cs.dphi[d];
    b.A.block(0, (d + 1) * nv, nv, nv) = D.cast<Complex>();
    b.A.block((d + 1) * nv, 0, nv, nv) = -D.transpose().cast<Complex>();
    b.A.block((d + 1) * nv, (d + 1) * nv, nv, nv) = -sigma_ * m_rho.cast<Complex>();
  }

  for (int lf = 0; lf < nf; ++lf) {
    const int f = mesh.cell_face(e, lf);
    const Face& face = mesh.face(f);
    const int qf = disc_->face_order(f);
    const int off = conn.local_face_offset(e, lf);
    const int nxi = conn.face_dofs(f);
    const bool boundary = face.is_boundary();
    const detail::FaceSamples fs =
        detail::sample_face(mesh, e, lf, p, qf, face_quadrature_degree(p, qf, r, boundary));
    const RMatrix phiphi = fs.phi.transpose() * fs.weight.asDiagonal() * fs.phi;
    const RMatrix phixi = fs.phi.transpose() * fs.weight.asDiagonal() * fs.xi;
    const RMatrix xixi = fs.xi.transpose() * fs.weight.asDiagonal() * fs.xi;
    b.A.block(0, 0, nv, nv) += (tau * phiphi).cast<Complex>();

    BoundaryCondition bc;
    if (boundary) bc = boundary_.for_tag(face.tag);
    const bool dirichlet = boundary && bc.kind == BoundaryKind::kDirichlet;

    b.C.block(0, off, nv, nxi) = (-tau * phixi).cast<Complex>();
    for (int d = 0; d < dim; ++d) {
      b.C.block((d + 1) * nv, off, nv, nxi) = (fs.normal[d] * phixi).cast<Complex>();
    }
    if (dirichlet) {
      b.L.block(off, off, nxi, nxi).setIdentity();
      continue;
    }
    b.B.block(off, 0, nxi, nv) = (tau * phixi.transpose()).cast<Complex>();
    for (int d = 0; d < dim; ++d) {
      b.B.block(off, (d + 1) * nv, nxi, nv) = (fs.normal[d] * phixi.transpose()).cast<Complex>();
    }
    if (!boundary || bc.kind == BoundaryKind::kNeumann) {
      b.L.block(off, off, nxi, nxi) = (-tau * xixi).cast<Complex>();
      continue;
    }
    // Robin / ABC: (gamma - tau)(xi_k, xi_j) with gamma varying along the face.
    const int nqf = static_cast<int>(fs.weight.size());
    CVector wg(nqf);
    for (int q = 0; q < nqf; ++q) {
      const double rho = model.density_at(e, fs.cell_ref[q]);
      Complex gamma;
      if (bc.kind == BoundaryKind::kAbc) {
        gamma = -1.0 / (model.wave_speed_at(e, fs.cell_ref[q]) * rho);
      } else {
        gamma = bc.alpha / (sigma_ * rho * bc.beta);
      }
      wg[q] = fs.weight[q] * (gamma - tau);
    }
    b.L.block(off, off, nxi, nxi) = fs.xi.transpose().cast<Complex>() * wg.asDiagonal() * fs.xi.cast<Complex>();
  }

  b.lu.compute(b.A);
  const double rcond = b.lu.rcond();
  if (!(rcond > 1e-14) || !std::isfinite(rcond)) {
    std::ostringstream msg;
    msg << "local matrix A of cell " << e << " is singular (rcond " << rcond << ", tau " << tau << ", sigma "
        << sigma_.real() << (sigma_.imag() < 0 ? "" : "+") << sigma_.imag() << "i, order " << p << ")";
    throw NumericalError(msg.str());
  }
  b.ainv_c = b.lu.solve(b.C);
  CMatrix bt(na, nt);
  b.lu._solve_impl_transposed<false>(CMatrix(b.B.transpose()), bt);
  b.b_ainv = bt.transpose();
  b.K = b.L - b.B * b.ainv_c;
}

CellLoads HdgSystem::loads(const Excitation& excitation) const {
  const Mesh& mesh = *mesh_;
  const int dim = mesh.dim();
  CellLoads out;
  for (const PointSource& src : excitation.point_sources) {
    const std::optional<int> cell = mesh.locate(src.position);
    if (!cell) {
      std::ostringstream msg;
      msg << "point source at (" << src.position.x() << ", " << src.position.y() << ", " << src.position.z()
          << ") lies outside the mesh";
      throw ConfigError(msg.str());
    }
    const int e = *cell;
    const int nv = blocks_[e].field_size;
    auto [it, inserted] = out.volume.try_emplace(e, CVector::Zero((dim + 1) * nv));
    const RVector phi = cached_basis(dim, disc_->cell_order(e)).values(mesh.to_reference(e, src.position));
    it->second.head(nv) += src.amplitude * phi.cast<Complex>();
  }
  if (excitation.volume) {
    for (std::size_t e = 0; e < mesh.num_cells(); ++e) {
      const int p = disc_->cell_order(e);
      const int nv = blocks_[e].field_size;
      const detail::CellSamples cs = detail::sample_cell(mesh, e, p, volume_quadrature_degree(p, 0) + 4);
      CVector fw(cs.weight.size());
      for (Eigen::Index q = 0; q < fw.size(); ++q) fw[q] = cs.weight[q] * excitation.volume(cs.x[q]);
      auto [it, inserted] = out.volume.try_emplace(static_cast<int>(e), CVector::Zero((dim + 1) * nv));
      it->second.head(nv) += cs.phi.transpose().cast<Complex>() * fw;
    }
  }
  if (excitation.boundary) {
    const ConnectivityMap& conn = disc_->connectivity();
    for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
      const Face& face = mesh.face(f);
      if (!face.is_boundary()) continue;
      const int e = face.cells[0];
      const int lf = face.local_index[0];
      const int qf = disc_->face_order(f);
      const int off = conn.local_face_offset(e, lf);
      const int nxi = conn.face_dofs(f);
      auto [it, inserted] =
          out.trace.try_emplace(e, CVector::Zero(static_cast<Eigen::Index>(conn.cell_dofs(e).size())));
      const Point n = face.normals[0];
      if (boundary_.for_tag(face.tag).kind == BoundaryKind::kDirichlet) {
        const std::vector<Point> nodes = detail::face_nodes(mesh, f, qf);
        for (int k = 0; k < nxi; ++k) it->second[off + k] = excitation.boundary(nodes[k], n);
        continue;
      }
      const int p = disc_->cell_order(e);
      const detail::FaceSamples fs = detail::sample_face(mesh, e, lf, p, qf, 2 * std::max(p, qf) + 5);
      CVector gw(fs.weight.size());
      for (Eigen::Index q = 0; q < gw.size(); ++q) gw[q] = fs.weight[q] * excitation.boundary(fs.x[q], n);
      it->second.segment(off, nxi) += fs.xi.transpose().cast<Complex>() * gw;
    }
  }
  return out;
}

CVector HdgSystem::rhs(const CellLoads& loads) const {
  const ConnectivityMap& conn = disc_->connectivity();
  CVector out = CVector::Zero(static_cast<Eigen::Index>(trace_dofs()));
  for (const auto& [e, s] : loads.volume) conn.scatter_add(e, -(blocks_[e].b_ainv * s), out);
  for (const auto& [e, t] : loads.trace) conn.scatter_add(e, t, out);
  return out;
}

FieldSolution HdgSystem::reconstruct(const CVector& trace, const CellLoads& loads, int source_id) const {
  if (static_cast<std::size_t>(trace.size()) != trace_dofs()) {
    throw StructuralError("trace vector has length " + std::to_string(trace.size()) + ", expected " +
                          std::to_string(trace_dofs()));
  }
  const ConnectivityMap& conn = disc_->connectivity();
  FieldSolution sol;
  sol.trace = trace;
  sol.sigma = sigma_;
  sol.source_id = source_id;
  sol.generation = generation_;
  sol.cells.resize(mesh_->num_cells());
  parallel_for(mesh_->num_cells(), [&](std::size_t e) {
    const CellBlocks& b = blocks_[e];
    CVector u = -(b.ainv_c * conn.select(e, trace));
    const auto it = loads.volume.find(static_cast<int>(e));
    if (it != loads.volume.end()) u += b.lu.solve(it->second);
    sol.cells[e] = std::move(u);
  });
  return sol;
}

void HdgSystem::check_generation(const FieldSolution& solution) const {
  if (solution.generation != generation_) {
    throw StructuralError("stale solution: produced by system generation " + std::to_string(solution.generation) +
                          ", current generation is " + std::to_string(generation_));
  }
}

double HdgSystem::flux_residual(const FieldSolution& solution) const {
  check_generation(solution);
  const Mesh& mesh = *mesh_;
  const int dim = mesh.dim();
  const int r = model_->order();
  std::vector<double> worst(mesh.num_faces(), 0.0);
  parallel_for(mesh.num_faces(), [&](std::size_t f) {
    const Face& face = mesh.face(f);
    if (face.is_boundary()) return;
    const int qf = disc_->face_order(f);
    const int nxi = disc_->connectivity().face_dofs(f);
    const CVector lambda = solution.trace.segment(disc_->connectivity().face_offset(f), nxi);
    CVector flux[2];
    for (int side = 0; side < 2; ++side) {
      const int e = face.cells[side];
      const int p = disc_->cell_order(e);
      const int nv = blocks_[e].field_size;
      const double tau = blocks_[e].tau;
      const detail::FaceSamples fs =
          detail::sample_face(mesh, e, face.local_index[side], p, qf, face_quadrature_degree(p, qf, r, false));
      const CVector& u = solution.cells[e];
      CVector vhat_n = tau * (fs.phi.cast<Complex>() * u.head(nv) - fs.xi.cast<Complex>() * lambda);
      for (int d = 0; d < dim; ++d) vhat_n += fs.normal[d] * (fs.phi.cast<Complex>() * u.segment((d + 1) * nv, nv));
      flux[side] = fs.xi.transpose().cast<Complex>() * (fs.weight.cast<Complex>().asDiagonal() * vhat_n);
    }
    const double scale = flux[0].norm() + flux[1].norm();
    if (scale > 0.0) worst[f] = (flux[0] + flux[1]).norm() / scale;
  });
  double out = 0.0;
  for (double v : worst) out = std::max(out, v);
  return out;
}

double HdgSystem::local_residual(const FieldSolution& solution, const CellLoads& loads) const {
  check_generation(solution);
  const ConnectivityMap& conn = disc_->connectivity();
  double out = 0.0;
  for (std::size_t e = 0; e < mesh_->num_cells(); ++e) {
    const CellBlocks& b = blocks_[e];
    CVector rhs = -(b.C * conn.select(e, solution.trace));
    const double scale0 = rhs.norm();
    const auto it = loads.volume.find(static_cast<int>(e));
    if (it != loads.volume.end()) rhs += it->second;
    const double scale = std::max(scale0 + (it != loads.volume.end() ? it->second.norm() : 0.0), 1e-300);
    out = std::max(out, (b.A * solution.cells[e] - rhs).norm() / scale);
  }
  return out;
}

Complex evaluate_pressure(const FieldSolution& solution, std::size_t e, int order, int dim, const Point& ref) {
  const RVector phi = cached_basis(dim, order).values(ref);
  return (phi.cast<Complex>().transpose() * solution.cells[e].head(phi.size()))(0);
}

}  // namespace hdgfwi
