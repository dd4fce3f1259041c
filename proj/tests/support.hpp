#pragma once

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "hdgfwi/adjoint.hpp"
#include "hdgfwi/forward.hpp"
#include "hdgfwi/inversion.hpp"

namespace hdgfwi::fixtures {

/// Plane wave p = exp(i k d.x), v = d p / (rho c) on a homogeneous medium.
struct PlaneWave {
  double omega = 2.0 * kPi;
  double c = 1.0;
  double rho = 1.0;
  Point direction{std::cos(0.3), std::sin(0.3), 0.0};

  Complex sigma() const { return {0.0, omega}; }
  Complex pressure(const Point& x) const { return std::exp(Complex(0.0, omega / c * direction.dot(x))); }
  Eigen::Vector3cd velocity(const Point& x) const {
    return direction.cast<Complex>() * (pressure(x) / (rho * c));
  }
  // Absorbing-boundary data: v.n - p/(c rho). Plain transpose product, no conjugation.
  Complex abc_data(const Point& x, const Point& n) const {
    return (velocity(x).transpose() * n.cast<Complex>())(0) - pressure(x) / (c * rho);
  }
};

inline FieldErrors plane_wave_errors(const PlaneWave& wave, int n, int order) {
  const std::array<int, 2> cells{n, n};
  const Mesh mesh = build_structured_mesh(2, Point::Zero(), Point(1.0, 1.0, 0.0), cells);
  const Model model(2, mesh.num_cells(), 0, wave.c, wave.rho);
  BoundarySpec boundary;
  boundary.default_condition.kind = BoundaryKind::kAbc;
  ForwardSolver solver(mesh, Discretization::uniform(mesh, order), boundary);
  solver.set_state(model, wave.sigma());
  Excitation ex;
  ex.boundary = [&](const Point& x, const Point& nn) { return wave.abc_data(x, nn); };
  const FieldSolution sol = solver.solve(ex);
  return l2_errors(
      solver.system(), sol, [&](const Point& x) { return wave.pressure(x); },
      [&](const Point& x) { return wave.velocity(x); });
}

/// Structured box mesh with interior vertices moved by up to `jitter`
/// of the cell size.
inline Mesh jittered_mesh(int dim, std::span<const int> cells, double jitter, std::uint64_t seed) {
  Point upper = Point::Zero();
  for (int d = 0; d < dim; ++d) upper[d] = 1.0;
  const Mesh base = build_structured_mesh(dim, Point::Zero(), upper, cells);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Point> verts = base.vertices();
  for (Point& v : verts) {
    bool interior = true;
    for (int d = 0; d < dim; ++d) interior = interior && v[d] > 1e-12 && v[d] < 1.0 - 1e-12;
    for (int d = 0; d < dim; ++d) {
      const double shift = u(rng) * jitter / cells[d];
      if (interior) v[d] += shift;
    }
  }
  std::vector<std::array<int, 4>> conn(base.num_cells(), {-1, -1, -1, -1});
  for (std::size_t e = 0; e < base.num_cells(); ++e) {
    const auto cv = base.cell_vertices(e);
    for (int k = 0; k <= dim; ++k) conn[e][k] = cv[k];
  }
  return Mesh(dim, std::move(verts), std::move(conn));
}

inline std::vector<int> random_orders(std::size_t n, int lo, int hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(lo, hi);
  std::vector<int> out(n);
  for (int& p : out) p = u(rng);
  return out;
}

/// A boundary spec exercising every condition kind on the unit square.
inline BoundarySpec mixed_boundary() {
  BoundarySpec b;
  b.default_condition.kind = BoundaryKind::kAbc;
  b.per_tag[BoundaryTag::kYMax] = {BoundaryKind::kDirichlet, 0.0, 1.0};
  b.per_tag[BoundaryTag::kXMin] = {BoundaryKind::kRobin, 0.7, 1.3};
  b.per_tag[BoundaryTag::kYMin] = {BoundaryKind::kNeumann, 0.0, 1.0};
  return b;
}

inline Model random_model(const Mesh& mesh, int order, double c0, double spread, std::uint64_t seed) {
  Model m(mesh.dim(), mesh.num_cells(), order, c0, 1.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(1.0 - spread, 1.0 + spread);
  for (double& c : m.wave_speed()) c *= u(rng);
  for (double& r : m.density()) r *= u(rng);
  return m;
}

}  // namespace hdgfwi::fixtures
