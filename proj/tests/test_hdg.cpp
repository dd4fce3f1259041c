#include <gtest/gtest.h>

#include <map>
#include <random>

#include "hdgfwi/basis.hpp"
#include "hdgfwi/hdg.hpp"
#include "hdgfwi/quadrature.hpp"
#include "support.hpp"

using namespace hdgfwi;

namespace {

Mesh unit_square(int n) {
  const std::array<int, 2> cells{n, n};
  return build_structured_mesh(2, Point::Zero(), Point(1.0, 1.0, 0.0), cells);
}

BoundarySpec neumann_everywhere() {
  BoundarySpec b;
  b.default_condition.kind = BoundaryKind::kNeumann;
  return b;
}

BoundarySpec dirichlet_everywhere() {
  BoundarySpec b;
  b.default_condition.kind = BoundaryKind::kDirichlet;
  return b;
}

// Face mass (xi_i, xi_j) on a segment of length len, from the 1D basis.
RMatrix segment_mass(int order, double len) {
  const NodalBasis& basis = cached_basis(1, order);
  const QuadratureRule& q = quadrature_for(2 * order, 1);
  RMatrix m = RMatrix::Zero(basis.size(), basis.size());
  for (std::size_t k = 0; k < q.size(); ++k) {
    const RVector v = basis.values(q.points[k]);
    m += q.weights[k] * len * v * v.transpose();
  }
  return m;
}

double face_length(const Mesh& mesh, std::size_t f) {
  const Face& face = mesh.face(f);
  return (mesh.vertex(face.vertices[1]) - mesh.vertex(face.vertices[0])).norm();
}

CVector random_trace(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  CVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = Complex(g(rng), g(rng));
  return v;
}

}  // namespace

TEST(HdgBlocks, DimensionsFollowOrders) {
  const Mesh mesh = unit_square(2);
  const Discretization disc(mesh, fixtures::random_orders(mesh.num_cells(), 0, 3, 2));
  const Model model(2, mesh.num_cells(), 0, 1.0, 1.0);
  const HdgSystem sys(mesh, disc, model, complex_frequency(1.0, 0.2), fixtures::mixed_boundary());
  for (std::size_t e = 0; e < mesh.num_cells(); ++e) {
    const CellBlocks& b = sys.blocks(e);
    const int nv = dof_count(disc.cell_order(e), 2);
    const auto nt = static_cast<Eigen::Index>(disc.connectivity().cell_dofs(e).size());
    EXPECT_EQ(b.field_size, nv);
    EXPECT_EQ(b.A.rows(), 3 * nv);
    EXPECT_EQ(b.A.cols(), 3 * nv);
    EXPECT_EQ(b.C.rows(), 3 * nv);
    EXPECT_EQ(b.C.cols(), nt);
    EXPECT_EQ(b.B.rows(), nt);
    EXPECT_EQ(b.B.cols(), 3 * nv);
    EXPECT_EQ(b.L.rows(), nt);
    EXPECT_EQ(b.K.rows(), nt);
  }
  EXPECT_EQ(sys.trace_dofs(), disc.trace_dofs());
}

TEST(HdgBlocks, OrderZeroHasNoDerivativeCoupling) {
  const Mesh mesh = unit_square(1);
  const Model model(2, mesh.num_cells(), 0, 1.0, 1.0);
  const Discretization disc = Discretization::uniform(mesh, 0);
  const HdgSystem sys(mesh, disc, model, complex_frequency(1.0, 0.0),
                      BoundarySpec{});
  const CellBlocks& b = sys.blocks(0);
  ASSERT_EQ(b.A.rows(), 3);
  for (int d = 1; d <= 2; ++d) {
    EXPECT_EQ(b.A(0, d), Complex(0.0));
    EXPECT_EQ(b.A(d, 0), Complex(0.0));
  }
}

TEST(HdgBlocks, DerivativeBlocksAreAntisymmetricPair) {
  const Mesh mesh = fixtures::jittered_mesh(2, std::array<int, 2>{2, 2}, 0.2, 3);
  const Model model = fixtures::random_model(mesh, 1, 1.0, 0.2, 4);
  const Discretization disc = Discretization::uniform(mesh, 3);
  const HdgSystem sys(mesh, disc, model, complex_frequency(2.0, 0.3), BoundarySpec{});
  for (std::size_t e = 0; e < mesh.num_cells(); ++e) {
    const CellBlocks& b = sys.blocks(e);
    const int nv = b.field_size;
    for (int d = 1; d <= 2; ++d) {
      const CMatrix upper = b.A.block(0, d * nv, nv, nv);
      const CMatrix lower = b.A.block(d * nv, 0, nv, nv);
      EXPECT_LT((upper + lower.transpose()).norm(), 1e-14 * upper.norm());
    }
  }
}

TEST(HdgBlocks, TauIsInverseDensity) {
  const Mesh mesh = unit_square(1);
  const Model model(2, mesh.num_cells(), 0, 1500.0, 1000.0);
  const Discretization disc = Discretization::uniform(mesh, 1);
  const HdgSystem sys(mesh, disc, model, complex_frequency(5.0, 0.0),
                      BoundarySpec{});
  for (std::size_t e = 0; e < mesh.num_cells(); ++e) EXPECT_DOUBLE_EQ(sys.blocks(e).tau, 0.001);
}

TEST(HdgBlocks, CondensedBlockMatchesExplicitElimination) {
  const Mesh mesh = fixtures::jittered_mesh(2, std::array<int, 2>{2, 2}, 0.25, 8);
  const Discretization disc(mesh, fixtures::random_orders(mesh.num_cells(), 1, 3, 9));
  const Model model = fixtures::random_model(mesh, 0, 1.0, 0.3, 10);
  const HdgSystem sys(mesh, disc, model, complex_frequency(1.5, 0.1), fixtures::mixed_boundary());
  for (std::size_t e = 0; e < mesh.num_cells(); ++e) {
    const CellBlocks& b = sys.blocks(e);
    const CMatrix k = b.L - b.B * Eigen::FullPivLU<CMatrix>(b.A).solve(b.C);
    EXPECT_LT((k - b.K).norm(), 1e-12 * k.norm());
  }
}

TEST(HdgBlocks, InteriorAndNeumannFacesUseTheSameTraceBlock) {
  const Mesh mesh = unit_square(2);
  const int order = 2;
  const Model model(2, mesh.num_cells(), 0, 1.0, 2.0);
  const Discretization disc = Discretization::uniform(mesh, order);
  const HdgSystem sys(mesh, disc, model, complex_frequency(1.0, 0.0), neumann_everywhere());
  const ConnectivityMap& conn = disc.connectivity();
  for (std::size_t e = 0; e < mesh.num_cells(); ++e) {
    const CellBlocks& b = sys.blocks(e);
    for (int lf = 0; lf < 3; ++lf) {
      const int f = mesh.cell_face(e, lf);
      const int off = conn.local_face_offset(e, lf);
      const int n = conn.face_dofs(f);
      const CMatrix expected = (-b.tau * segment_mass(order, face_length(mesh, f))).cast<Complex>();
      EXPECT_LT((b.L.block(off, off, n, n) - expected).norm(), 1e-13) << "cell " << e << " face " << f;
    }
  }
}

TEST(HdgBlocks, SingleCellCouplesOnlyItsFaces) {
  const Mesh mesh = unit_square(3);
  const Discretization disc = Discretization::uniform(mesh, 1);
  const Model model(2, mesh.num_cells(), 0, 1.0, 1.0);
  const HdgSystem sys(mesh, disc, model, complex_frequency(1.0, 0.0), BoundarySpec{});
  const SparseMatrix& k = sys.matrix();
  const ConnectivityMap& conn = disc.connectivity();
  std::vector<int> face_of(conn.total_dofs());
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
    for (int i = 0; i < conn.face_dofs(f); ++i) face_of[conn.face_offset(f) + i] = static_cast<int>(f);
  }
  auto share_cell = [&](int f, int g) {
    for (int a : mesh.face(f).cells) {
      for (int c : mesh.face(g).cells) {
        if (a >= 0 && a == c) return true;
      }
    }
    return false;
  };
  for (int j = 0; j < k.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(k, j); it; ++it) {
      EXPECT_TRUE(share_cell(face_of[it.row()], face_of[it.col()]));
    }
  }
}

TEST(HdgSystem, TwoTriangleMatrixIsTwentySquare) {
  const Mesh mesh = unit_square(1);
  const Model model(2, mesh.num_cells(), 0, 1.0, 1.0);
  const Discretization disc = Discretization::uniform(mesh, 3);
  const HdgSystem sys(mesh, disc, model, complex_frequency(1.0, 0.0),
                      BoundarySpec{});
  EXPECT_EQ(sys.matrix().rows(), 20);
  EXPECT_EQ(sys.matrix().cols(), 20);
}

TEST(HdgSystem, MatrixIsInvariantUnderCellPermutation) {
  const Mesh mesh = fixtures::jittered_mesh(2, std::array<int, 2>{3, 2}, 0.2, 5);
  std::vector<std::size_t> perm(mesh.num_cells());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = perm.size() - 1 - i;
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(6));
  std::vector<std::array<int, 4>> conn(mesh.num_cells(), {-1, -1, -1, -1});
  std::vector<int> orders(mesh.num_cells()), base_orders = fixtures::random_orders(mesh.num_cells(), 0, 3, 7);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    const auto cv = mesh.cell_vertices(perm[i]);
    for (int k = 0; k < 3; ++k) conn[i][k] = cv[k];
    orders[i] = base_orders[perm[i]];
  }
  const Mesh shuffled(2, mesh.vertices(), conn);

  const Model m1(2, mesh.num_cells(), 0, 1.0, 1.0);
  const Model m2(2, mesh.num_cells(), 0, 1.0, 1.0);
  const Discretization d1(mesh, base_orders);
  const Discretization d2(shuffled, orders);
  const HdgSystem s1(mesh, d1, m1, complex_frequency(1.0, 0.1), fixtures::mixed_boundary());
  const HdgSystem s2(shuffled, d2, m2, complex_frequency(1.0, 0.1), fixtures::mixed_boundary());
  ASSERT_EQ(s1.trace_dofs(), s2.trace_dofs());

  std::map<std::array<int, 3>, std::size_t> face_by_key;
  for (std::size_t f = 0; f < shuffled.num_faces(); ++f) face_by_key[shuffled.face(f).vertices] = f;
  std::vector<int> map(s1.trace_dofs());
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
    const std::size_t g = face_by_key.at(mesh.face(f).vertices);
    for (int k = 0; k < d1.connectivity().face_dofs(f); ++k) {
      map[d1.connectivity().face_offset(f) + k] = d2.connectivity().face_offset(g) + k;
    }
  }
  const CMatrix a = CMatrix(s1.matrix());
  const CMatrix b = CMatrix(s2.matrix());
  double worst = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) worst = std::max(worst, std::abs(a(i, j) - b(map[i], map[j])));
  }
  EXPECT_LT(worst, 1e-14 * a.norm());
}

TEST(HdgSystem, NoSourceNoLoads) {
  const Mesh mesh = unit_square(2);
  const Model model(2, mesh.num_cells(), 0, 1.0, 1.0);
  const Discretization disc = Discretization::uniform(mesh, 2);
  const HdgSystem sys(mesh, disc, model, complex_frequency(1.0, 0.0),
                      BoundarySpec{});
  const CellLoads loads = sys.loads(Excitation{});
  EXPECT_TRUE(loads.volume.empty());
  EXPECT_TRUE(loads.trace.empty());
  EXPECT_EQ(sys.rhs(loads).norm(), 0.0);
  const FieldSolution sol = sys.reconstruct(CVector::Zero(sys.trace_dofs()), loads);
  for (const CVector& u : sol.cells) EXPECT_EQ(u.norm(), 0.0);
}

TEST(HdgSystem, PointSourceSiftsTheBasis) {
  const Mesh mesh = unit_square(2);
  const int order = 3;
  const Model model(2, mesh.num_cells(), 0, 1.0, 1.0);
  const HdgSystem sys(mesh, Discretization::uniform(mesh, order), model, complex_frequency(1.0, 0.0),
                      BoundarySpec{});
  const Point xs(0.37, 0.61, 0.0);
  Excitation ex;
  ex.point_sources.push_back({xs, Complex(2.0, -1.0)});
  const CellLoads loads = sys.loads(ex);
  ASSERT_EQ(loads.volume.size(), 1u);
  const auto& [e, s] = *loads.volume.begin();
  EXPECT_EQ(e, *mesh.locate(xs));
  const RVector phi = cached_basis(2, order).values(mesh.to_reference(e, xs));
  const int nv = sys.field_size(e);
  EXPECT_LT((s.head(nv) - Complex(2.0, -1.0) * phi.cast<Complex>()).norm(), 1e-14);
  EXPECT_EQ(s.tail(2 * nv).norm(), 0.0);
}

TEST(HdgSystem, SourceOutsideMeshIsAConfigError) {
  const Mesh mesh = unit_square(1);
  const Model model(2, mesh.num_cells(), 0, 1.0, 1.0);
  const Discretization disc = Discretization::uniform(mesh, 1);
  const HdgSystem sys(mesh, disc, model, complex_frequency(1.0, 0.0),
                      BoundarySpec{});
  Excitation ex;
  ex.point_sources.push_back({Point(2.0, 0.5, 0.0), 1.0});
  EXPECT_THROW(sys.loads(ex), ConfigError);
}

TEST(HdgSystem, HomogeneousDirichletGivesZeroTrace) {
  const Mesh mesh = unit_square(2);
  const Discretization disc = Discretization::uniform(mesh, 2);
  const Model model(2, mesh.num_cells(), 0, 1.0, 1.0);
  const HdgSystem sys(mesh, disc, model, complex_frequency(1.0, 0.5), dirichlet_everywhere());
  Excitation ex;
  ex.point_sources.push_back({Point(0.4, 0.45, 0.0), 1.0});
  const CellLoads loads = sys.loads(ex);
  const CVector lambda = Factorization(sys.matrix()).solve(sys.rhs(loads));
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
    if (!mesh.face(f).is_boundary()) continue;
    const int off = disc.connectivity().face_offset(f);
    EXPECT_LT(lambda.segment(off, disc.connectivity().face_dofs(f)).norm(), 1e-14);
  }
  EXPECT_GT(lambda.norm(), 0.0);
}

TEST(HdgSystem, ReconstructionSatisfiesLocalEquations) {
  const Mesh mesh = fixtures::jittered_mesh(2, std::array<int, 2>{3, 3}, 0.2, 11);
  const Discretization disc(mesh, fixtures::random_orders(mesh.num_cells(), 0, 3, 12));
  const Model model = fixtures::random_model(mesh, 1, 1.0, 0.2, 13);
  const HdgSystem sys(mesh, disc, model, complex_frequency(1.2, 0.2), fixtures::mixed_boundary());
  Excitation ex;
  ex.point_sources.push_back({Point(0.5, 0.5, 0.0), 1.0});
  ex.volume = [](const Point& x) { return Complex(x.x(), x.y() * x.y()); };
  const CellLoads loads = sys.loads(ex);
  const CVector lambda = Factorization(sys.matrix()).solve(sys.rhs(loads));
  const FieldSolution sol = sys.reconstruct(lambda, loads);
  EXPECT_LT(sys.local_residual(sol, loads), 1e-10);
  EXPECT_LT(sys.flux_residual(sol), 1e-10);
  // A random trace still reconstructs consistently.
  const FieldSolution other = sys.reconstruct(random_trace(sys.trace_dofs(), 14), loads);
  EXPECT_LT(sys.local_residual(other, loads), 1e-10);
}

TEST(HdgSystem, StaleSolutionIsRejected) {
  const Mesh mesh = unit_square(1);
  const Discretization disc = Discretization::uniform(mesh, 1);
  const Model model(2, mesh.num_cells(), 0, 1.0, 1.0);
  const HdgSystem a(mesh, disc, model, complex_frequency(1.0, 0.0), BoundarySpec{});
  const HdgSystem b(mesh, disc, model, complex_frequency(1.0, 0.0), BoundarySpec{});
  EXPECT_NE(a.generation(), b.generation());
  const FieldSolution sol = a.reconstruct(CVector::Zero(a.trace_dofs()), CellLoads{});
  EXPECT_NO_THROW(a.check_generation(sol));
  EXPECT_THROW(b.flux_residual(sol), StructuralError);
}

TEST(HdgSystem, RobinWithZeroBetaIsRejected) {
  const Mesh mesh = unit_square(1);
  const Model model(2, mesh.num_cells(), 0, 1.0, 1.0);
  BoundarySpec spec;
  spec.per_tag[BoundaryTag::kXMin] = {BoundaryKind::kRobin, 1.0, 0.0};
  try {
    const Discretization disc = Discretization::uniform(mesh, 1);
    HdgSystem(mesh, disc, model, complex_frequency(1.0, 0.0), spec);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("Dirichlet"), std::string::npos);
  }
}

TEST(HdgSystem, ZeroComplexFrequencyIsRejected) {
  const Mesh mesh = unit_square(1);
  const Model model(2, mesh.num_cells(), 0, 1.0, 1.0);
  const Discretization disc = Discretization::uniform(mesh, 1);
  EXPECT_THROW(HdgSystem(mesh, disc, model, Complex(0.0), BoundarySpec{}),
               ConfigError);
}

TEST(HdgSystem, FlatFaceInThreeDimensionsHasNoTangentialCoupling) {
  const std::array<int, 3> cells{1, 1, 1};
  const Mesh mesh = build_structured_mesh(3, Point::Zero(), Point(1, 1, 1), cells);
  const Discretization disc = Discretization::uniform(mesh, 2);
  const Model model(3, mesh.num_cells(), 0, 1.0, 1.0);
  const HdgSystem sys(mesh, disc, model, complex_frequency(1.0, 0.0), BoundarySpec{});
  int checked = 0;
  for (std::size_t e = 0; e < mesh.num_cells(); ++e) {
    const CellBlocks& b = sys.blocks(e);
    const int nv = b.field_size;
    for (int lf = 0; lf < 4; ++lf) {
      const int f = mesh.cell_face(e, lf);
      const Face& face = mesh.face(f);
      const int side = face.cells[0] == static_cast<int>(e) ? 0 : 1;
      if (std::abs(std::abs(face.normals[side].z()) - 1.0) > 1e-14) continue;
      const int off = disc.connectivity().local_face_offset(e, lf);
      const int n = disc.connectivity().face_dofs(f);
      EXPECT_LT(b.C.block(nv, off, 2 * nv, n).norm(), 1e-14);
      EXPECT_GT(b.C.block(3 * nv, off, nv, n).norm(), 0.0);
      ++checked;
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(Quadrature, DegreesForModelOrder) {
  EXPECT_EQ(volume_quadrature_degree(3, 0), 7);
  EXPECT_EQ(volume_quadrature_degree(3, 1), 9);
  EXPECT_EQ(face_quadrature_degree(2, 3, 1, false), 7);
  EXPECT_EQ(face_quadrature_degree(2, 3, 1, true), 9);
}
