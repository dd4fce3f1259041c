#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include <Eigen/LU>

#include "hdgfwi/discretization.hpp"
#include "hdgfwi/mesh.hpp"
#include "hdgfwi/model.hpp"
#include "hdgfwi/sparse_lu.hpp"

namespace hdgfwi {

enum class BoundaryKind { kDirichlet, kNeumann, kRobin, kAbc };

const char* boundary_kind_name(BoundaryKind kind);

/// alpha p + sigma rho beta v.n = 0 on a boundary face. alpha and beta
/// are read only for kRobin.
struct BoundaryCondition {
  BoundaryKind kind = BoundaryKind::kAbc;
  double alpha = 0.0;
  double beta = 1.0;
};

/// Boundary condition per boundary tag, with a default for unlisted tags.
struct BoundarySpec {
  BoundaryCondition default_condition;
  std::map<BoundaryTag, BoundaryCondition> per_tag;

  const BoundaryCondition& for_tag(BoundaryTag tag) const;
  /// Rejects Robin conditions with beta = 0.
  void validate() const;

  /// Dirichlet on one tag, ABC everywhere else.
  static BoundarySpec surface_dirichlet(BoundaryTag surface);
};

struct PointSource {
  Point position = Point::Zero();
  Complex amplitude{1.0, 0.0};
};

/// Right-hand side of one forward problem: point sources (delta sifting),
/// an optional volume source f(x) and optional boundary data g(x, n).
/// On Dirichlet faces g is the trace value; on the other kinds it is the
/// right-hand side of v.n + gamma p = g.
struct Excitation {
  std::vector<PointSource> point_sources;
  std::function<Complex(const Point&)> volume;
  std::function<Complex(const Point&, const Point&)> boundary;
};

/// Dense local HDG blocks of one cell. Trace columns/rows follow the
/// cell's local face order (see ConnectivityMap). Volume unknowns are
/// [p, v_x, v_y(, v_z)], each with field_size coefficients.
struct CellBlocks {
  int field_size = 0;
  CMatrix A;
  CMatrix C;
  CMatrix B;
  CMatrix L;
  Eigen::PartialPivLU<CMatrix> lu;  ///< factorization of A
  CMatrix ainv_c;                   ///< A^{-1} C
  CMatrix b_ainv;                   ///< B A^{-1}
  CMatrix K;                        ///< L - B A^{-1} C
  double tau = 0.0;
};

/// Per-cell source content of an Excitation.
struct CellLoads {
  std::map<int, CVector> volume;  ///< S_e, cells with a nonzero source
  std::map<int, CVector> trace;   ///< boundary-data contribution to cell trace rows
};

/// HDG solution of one forward problem.
struct FieldSolution {
  CVector trace;
  std::vector<CVector> cells;
  Complex sigma;
  int source_id = -1;
  std::uint64_t generation = 0;

  /// Pressure coefficients of cell e.
  CVector pressure(std::size_t e, int field_size) const { return cells[e].head(field_size); }
};

/// Quadrature exactness used for cell and face integrals.
int volume_quadrature_degree(int cell_order, int model_order);
int face_quadrature_degree(int cell_order, int face_order, int model_order, bool boundary);

/// The assembled and condensed HDG problem for one (mesh, orders, model,
/// sigma, boundary) tuple. Every instance gets a fresh generation tag;
/// solutions carry the tag of the system that produced them.
class HdgSystem {
 public:
  HdgSystem(const Mesh& mesh, const Discretization& disc, const Model& model, Complex sigma,
            const BoundarySpec& boundary);

  const Mesh& mesh() const noexcept { return *mesh_; }
  const Discretization& discretization() const noexcept { return *disc_; }
  const Model& model() const noexcept { return *model_; }
  const BoundarySpec& boundary() const noexcept { return boundary_; }
  Complex sigma() const noexcept { return sigma_; }
  std::uint64_t generation() const noexcept { return generation_; }

  const CellBlocks& blocks(std::size_t e) const { return blocks_[e]; }
  int field_size(std::size_t e) const { return blocks_[e].field_size; }
  /// Global trace matrix, sum of R_e^T K_e R_e in cell order.
  const SparseMatrix& matrix() const noexcept { return matrix_; }
  std::size_t trace_dofs() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }
  BoundaryCondition face_condition(std::size_t f) const;

  CellLoads loads(const Excitation& excitation) const;
  /// Global right-hand side: sum of R_e^T (trace load - B A^{-1} S_e).
  CVector rhs(const CellLoads& loads) const;
  CVector rhs(const Excitation& excitation) const { return rhs(loads(excitation)); }

  /// U_e = A^{-1}(S_e - C R_e Lambda), every cell.
  FieldSolution reconstruct(const CVector& trace, const CellLoads& loads, int source_id = -1) const;

  /// Largest relative residual of the flux continuity condition over the
  /// interior faces: ||int [v_hat . n] xi|| / (||int v_hat+ . n+ xi|| + ||int v_hat- . n- xi||).
  double flux_residual(const FieldSolution& solution) const;

  /// Largest relative residual ||A U + C R Lambda - S|| / ||S| + |C R Lambda|| over cells.
  double local_residual(const FieldSolution& solution, const CellLoads& loads) const;

  /// Throws StructuralError unless the solution came from this system.
  void check_generation(const FieldSolution& solution) const;

 private:
  void assemble_cell(std::size_t e);

  const Mesh* mesh_;
  const Discretization* disc_;
  const Model* model_;
  Complex sigma_;
  BoundarySpec boundary_;
  std::uint64_t generation_;
  std::vector<CellBlocks> blocks_;
  SparseMatrix matrix_;
};

/// Pressure of cell e at a reference point.
Complex evaluate_pressure(const FieldSolution& solution, std::size_t e, int order, int dim, const Point& ref);

}  // namespace hdgfwi
