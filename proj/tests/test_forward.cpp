#include <gtest/gtest.h>

#include <random>

#include "hdgfwi/basis.hpp"
#include "support.hpp"

using namespace hdgfwi;

namespace {

Mesh unit_square(int n) {
  const std::array<int, 2> cells{n, n};
  return build_structured_mesh(2, Point::Zero(), Point(1.0, 1.0, 0.0), cells);
}

Excitation point_at(const Point& x, Complex a = 1.0) {
  Excitation ex;
  ex.point_sources.push_back({x, a});
  return ex;
}

double max_difference(const FieldSolution& a, const FieldSolution& b) {
  double worst = (a.trace - b.trace).cwiseAbs().maxCoeff();
  for (std::size_t e = 0; e < a.cells.size(); ++e) {
    worst = std::max(worst, (a.cells[e] - b.cells[e]).cwiseAbs().maxCoeff());
  }
  return worst;
}

double max_abs(const FieldSolution& a) {
  double m = a.trace.cwiseAbs().maxCoeff();
  for (const CVector& u : a.cells) m = std::max(m, u.cwiseAbs().maxCoeff());
  return m;
}

}  // namespace

TEST(ForwardSolver, SolveBeforeStateIsAnError) {
  const Mesh mesh = unit_square(1);
  ForwardSolver solver(mesh, Discretization::uniform(mesh, 1), BoundarySpec{});
  EXPECT_FALSE(solver.ready());
  EXPECT_THROW(solver.solve(Excitation{}), StructuralError);
}

TEST(ForwardSolver, LinearityAndSuperposition) {
  const Mesh mesh = fixtures::jittered_mesh(2, std::array<int, 2>{4, 4}, 0.2, 1);
  ForwardSolver solver(mesh, Discretization(mesh, fixtures::random_orders(mesh.num_cells(), 1, 3, 2)),
                       fixtures::mixed_boundary());
  solver.set_state(fixtures::random_model(mesh, 0, 1.0, 0.2, 3), complex_frequency(1.0, 0.2));
  const Point a(0.3, 0.4, 0.0), b(0.7, 0.55, 0.0);
  const Complex alpha(1.5, -0.5);
  const FieldSolution ua = solver.solve(point_at(a));
  const FieldSolution ub = solver.solve(point_at(b));
  const FieldSolution scaled = solver.solve(point_at(a, alpha));
  Excitation both;
  both.point_sources = {{a, 1.0}, {b, 1.0}};
  const FieldSolution sum = solver.solve(both);

  FieldSolution expect = ua;
  expect.trace = alpha * ua.trace;
  for (std::size_t e = 0; e < ua.cells.size(); ++e) expect.cells[e] = alpha * ua.cells[e];
  EXPECT_LT(max_difference(scaled, expect), 1e-12 * max_abs(scaled));

  expect.trace = ua.trace + ub.trace;
  for (std::size_t e = 0; e < ua.cells.size(); ++e) expect.cells[e] = ua.cells[e] + ub.cells[e];
  EXPECT_LT(max_difference(sum, expect), 1e-12 * max_abs(sum));
}

TEST(ForwardSolver, ZeroSourcesGiveZeroFields) {
  const Mesh mesh = unit_square(3);
  ForwardSolver solver(mesh, Discretization::uniform(mesh, 2), BoundarySpec{});
  solver.set_state(Model(2, mesh.num_cells(), 0, 1.0, 1.0), complex_frequency(1.0, 0.0));
  const FieldSolution sol = solver.solve(Excitation{});
  EXPECT_EQ(max_abs(sol), 0.0);
}

TEST(ForwardSolver, ManySourcesShareOneFactorization) {
  const Mesh mesh = unit_square(4);
  ForwardSolver solver(mesh, Discretization::uniform(mesh, 2), BoundarySpec::surface_dirichlet(BoundaryTag::kYMax));
  const std::uint64_t before = factorization_count();
  solver.set_state(Model(2, mesh.num_cells(), 0, 1.0, 1.0), complex_frequency(1.0, 0.1));
  std::vector<Excitation> ex;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int k = 0; k < 100; ++k) ex.push_back(point_at(Point(u(rng), u(rng), 0.0)));
  const std::vector<FieldSolution> sols = solver.solve_all(ex);
  EXPECT_EQ(factorization_count() - before, 1u);
  ASSERT_EQ(sols.size(), 100u);
  // Results come back in input order.
  const FieldSolution again = solver.solve(ex[37]);
  EXPECT_LT(max_difference(sols[37], again), 1e-14 * max_abs(again));
}

TEST(ForwardSolver, NewStateRejectsOldSolutions) {
  const Mesh mesh = unit_square(2);
  ForwardSolver solver(mesh, Discretization::uniform(mesh, 1), BoundarySpec{});
  solver.set_state(Model(2, mesh.num_cells(), 0, 1.0, 1.0), complex_frequency(1.0, 0.0));
  const FieldSolution old = solver.solve(point_at(Point(0.5, 0.5, 0.0)));
  solver.set_state(Model(2, mesh.num_cells(), 0, 1.2, 1.0), complex_frequency(1.0, 0.0));
  EXPECT_THROW(solver.system().check_generation(old), StructuralError);
}

TEST(ForwardSolver, LaplaceShiftDampsFarField) {
  const std::array<int, 2> cells{16, 4};
  const Mesh mesh = build_structured_mesh(2, Point::Zero(), Point(4.0, 1.0, 0.0), cells);
  ForwardSolver solver(mesh, Discretization::uniform(mesh, 2), BoundarySpec{});
  const RestrictionOperator far(mesh, solver.discretization(), {Point(3.7, 0.5, 0.0)});
  double previous = std::numeric_limits<double>::infinity();
  for (double s : {0.0, 0.5, 1.0, 2.0, 4.0}) {
    solver.set_state(Model(2, mesh.num_cells(), 0, 1.0, 1.0), complex_frequency(1.0, s));
    const double amp = std::abs(far.apply(solver.solve(point_at(Point(0.3, 0.5, 0.0))))[0]);
    EXPECT_LT(amp, previous) << "s = " << s;
    previous = amp;
  }
}

TEST(Restriction, ReceiverOnSharedVertexUsesLowestCell) {
  const Mesh mesh = unit_square(2);
  const Discretization disc = Discretization::uniform(mesh, 2);
  const Point x(0.5, 0.5, 0.0);
  const RestrictionOperator r(mesh, disc, {x});
  int lowest = -1;
  for (std::size_t e = 0; e < mesh.num_cells() && lowest < 0; ++e) {
    const Point ref = mesh.to_reference(e, x);
    if (ref.minCoeff() > -1e-12 && ref.x() + ref.y() < 1.0 + 1e-12) lowest = static_cast<int>(e);
  }
  EXPECT_EQ(r.cell(0), lowest);
  // At a vertex the basis weights reduce to a single nodal value.
  EXPECT_NEAR(r.weights(0).cwiseAbs().maxCoeff(), 1.0, 1e-12);
  EXPECT_NEAR(r.weights(0).sum(), 1.0, 1e-12);
}

TEST(Restriction, ReceiverOutsideMeshIsAConfigError) {
  const Mesh mesh = unit_square(2);
  const Discretization disc = Discretization::uniform(mesh, 1);
  EXPECT_THROW(RestrictionOperator(mesh, disc, {Point(0.5, 1.5, 0.0)}), ConfigError);
}

TEST(Restriction, SamplesPressurePolynomialExactly) {
  const Mesh mesh = unit_square(3);
  const int order = 2;
  ForwardSolver solver(mesh, Discretization::uniform(mesh, order), BoundarySpec{});
  solver.set_state(Model(2, mesh.num_cells(), 0, 1.0, 1.0), complex_frequency(1.0, 0.0));
  // Load a quadratic into the pressure coefficients by nodal interpolation.
  FieldSolution sol = solver.solve(Excitation{});
  auto p = [](const Point& x) { return Complex(x.x() * x.y() + 0.5 * x.x(), -x.y() * x.y()); };
  const NodalBasis& basis = cached_basis(2, order);
  for (std::size_t e = 0; e < mesh.num_cells(); ++e) {
    for (int i = 0; i < basis.size(); ++i) sol.cells[e][i] = p(mesh.to_physical(e, basis.nodes()[i]));
  }
  std::vector<Point> rx;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 20; ++k) rx.emplace_back(u(rng), u(rng), 0.0);
  const CVector d = RestrictionOperator(mesh, solver.discretization(), rx).apply(sol);
  for (int k = 0; k < 20; ++k) EXPECT_LT(std::abs(d[k] - p(rx[k])), 1e-12);
}

TEST(ForwardSolver, PointExcitationsFollowSetup) {
  AcquisitionSetup setup;
  setup.sources = {{Point(0.1, 0.2, 0.0), 1.0}, {Point(0.3, 0.4, 0.0), Complex(0.0, 2.0)}};
  const std::vector<Excitation> ex = point_excitations(setup);
  ASSERT_EQ(ex.size(), 2u);
  EXPECT_EQ(ex[1].point_sources.size(), 1u);
  EXPECT_EQ(ex[1].point_sources[0].amplitude, Complex(0.0, 2.0));
}

TEST(CrossCheck, SecondOrderReferenceConverges) {
  auto f = [](const Point& x) { return Complex(std::exp(-20.0 * (x - Point(0.5, 0.5, 0.0)).squaredNorm()), 0.0); };
  Excitation ex;
  ex.volume = f;
  BoundarySpec boundary;
  boundary.default_condition.kind = BoundaryKind::kDirichlet;
  double previous = std::numeric_limits<double>::infinity();
  for (int n : {4, 8, 16}) {
    const Mesh mesh = unit_square(n);
    ForwardSolver solver(mesh, Discretization::uniform(mesh, 2), boundary);
    solver.set_state(Model(2, mesh.num_cells(), 0, 1.0, 1.0), complex_frequency(0.0, 1.0));
    const FieldSolution sol = solver.solve(ex);
    const double d = second_order_crosscheck(solver.system(), sol, ex);
    EXPECT_LT(d, previous) << "n = " << n;
    previous = d;
    // A pure Laplace shift leaves the problem real.
    double imag = 0.0;
    for (const CVector& u : sol.cells) imag = std::max(imag, u.imag().cwiseAbs().maxCoeff());
    EXPECT_LT(imag, 1e-12 * max_abs(sol));
  }
  EXPECT_LT(previous, 0.05);
}

TEST(FieldErrors, PlaneWaveErrorDecreasesWithRefinement) {
  const fixtures::PlaneWave wave;
  const FieldErrors coarse = fixtures::plane_wave_errors(wave, 4, 2);
  const FieldErrors fine = fixtures::plane_wave_errors(wave, 8, 2);
  EXPECT_LT(fine.pressure, coarse.pressure / 4.0);
  EXPECT_LT(fine.velocity[0], coarse.velocity[0] / 4.0);
}
