#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>
#include <random>

#include "hdgfwi/discretization.hpp"
#include "hdgfwi/io.hpp"
#include "hdgfwi/mesh.hpp"
#include "support.hpp"

using namespace hdgfwi;

namespace {

Mesh unit_square(int n) {
  const std::array<int, 2> cells{n, n};
  return build_structured_mesh(2, Point::Zero(), Point(1.0, 1.0, 0.0), cells);
}

Mesh unit_cube(int n) {
  const std::array<int, 3> cells{n, n, n};
  return build_structured_mesh(3, Point::Zero(), Point(1.0, 1.0, 1.0), cells);
}

void expect_mesh_invariants(const Mesh& mesh) {
  std::vector<int> refs(mesh.num_faces(), 0);
  for (std::size_t e = 0; e < mesh.num_cells(); ++e) {
    EXPECT_GT(mesh.cell_volume(e), 0.0);
    for (int lf = 0; lf < mesh.faces_per_cell(); ++lf) ++refs[mesh.cell_face(e, lf)];
  }
  std::size_t interior = 0, boundary = 0;
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    EXPECT_EQ(refs[f], face.is_boundary() ? 1 : 2);
    face.is_boundary() ? ++boundary : ++interior;
    EXPECT_NEAR(face.normals[0].norm(), 1.0, 1e-14);
    // Outward: normal points from the owner centroid towards the face.
    EXPECT_GT(face.normals[0].dot(mesh.face_centroid(f) - mesh.cell_centroid(face.cells[0])), 0.0);
    if (!face.is_boundary()) {
      EXPECT_LT((face.normals[0] + face.normals[1]).norm(), 1e-14);
      EXPECT_LT(face.cells[0], face.cells[1]);
    }
  }
  EXPECT_EQ(interior, mesh.num_interior_faces());
  EXPECT_EQ(boundary, mesh.num_boundary_faces());
  EXPECT_EQ(interior + boundary, mesh.num_faces());
}

}  // namespace

TEST(Mesh, TwoTriangleSquare) {
  const Mesh mesh = unit_square(1);
  EXPECT_EQ(mesh.num_cells(), 2u);
  EXPECT_EQ(mesh.num_faces(), 5u);
  EXPECT_EQ(mesh.num_boundary_faces(), 4u);
  EXPECT_EQ(mesh.num_interior_faces(), 1u);
  expect_mesh_invariants(mesh);
}

TEST(Mesh, SquareTwoByTwoHasEightTriangles) {
  const Mesh mesh = unit_square(2);
  EXPECT_EQ(mesh.num_cells(), 8u);
  expect_mesh_invariants(mesh);
}

TEST(Mesh, UnitCubeSixTetsEighteenFaces) {
  const Mesh mesh = unit_cube(1);
  EXPECT_EQ(mesh.num_cells(), 6u);
  // Brute-force enumeration of distinct vertex triples.
  std::set<std::array<int, 3>> keys;
  for (std::size_t e = 0; e < mesh.num_cells(); ++e) {
    const auto v = mesh.cell_vertices(e);
    for (int skip = 0; skip < 4; ++skip) {
      std::array<int, 3> k{};
      int n = 0;
      for (int i = 0; i < 4; ++i) {
        if (i != skip) k[n++] = v[i];
      }
      std::sort(k.begin(), k.end());
      keys.insert(k);
    }
  }
  EXPECT_EQ(keys.size(), 18u);
  EXPECT_EQ(mesh.num_faces(), 18u);
  expect_mesh_invariants(mesh);
}

TEST(Mesh, VolumesSumToBox) {
  const std::array<int, 3> cells{3, 2, 2};
  const Mesh mesh = build_structured_mesh(3, Point(1, 2, 3), Point(4, 3, 5), cells);
  double v = 0.0;
  for (std::size_t e = 0; e < mesh.num_cells(); ++e) v += mesh.cell_volume(e);
  EXPECT_NEAR(v, 3.0 * 1.0 * 2.0, 1e-12);
  expect_mesh_invariants(mesh);
}

TEST(Mesh, JitteredMeshesKeepInvariants) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const std::array<int, 2> c2{4, 3};
    expect_mesh_invariants(fixtures::jittered_mesh(2, c2, 0.3, seed));
    const std::array<int, 3> c3{2, 2, 2};
    expect_mesh_invariants(fixtures::jittered_mesh(3, c3, 0.3, seed));
  }
}

TEST(Mesh, BoundaryTags) {
  const Mesh mesh = unit_square(3);
  std::map<BoundaryTag, int> count;
  for (const Face& f : mesh.faces()) {
    if (f.is_boundary()) ++count[f.tag];
  }
  EXPECT_EQ(count[BoundaryTag::kXMin], 3);
  EXPECT_EQ(count[BoundaryTag::kXMax], 3);
  EXPECT_EQ(count[BoundaryTag::kYMin], 3);
  EXPECT_EQ(count[BoundaryTag::kYMax], 3);
  EXPECT_EQ(parse_boundary_tag("ymax"), BoundaryTag::kYMax);
  EXPECT_FALSE(parse_boundary_tag("top").has_value());
}

TEST(Mesh, NegativeOrientationIsFixed) {
  std::vector<Point> v{Point(0, 0, 0), Point(1, 0, 0), Point(0, 1, 0), Point(0, 0, 1)};
  const Mesh mesh(3, v, {{0, 2, 1, 3}});
  EXPECT_EQ(mesh.num_reoriented_cells(), 1u);
  EXPECT_NEAR(mesh.cell_volume(0), 1.0 / 6.0, 1e-15);
}

TEST(Mesh, DanglingVertexIsRejected) {
  std::vector<Point> v{Point(0, 0, 0), Point(1, 0, 0), Point(0, 1, 0)};
  try {
    Mesh(2, v, {{0, 1, 7, -1}});
    FAIL() << "expected MeshError";
  } catch (const MeshError& e) {
    EXPECT_EQ(e.kind(), MeshErrorKind::kDanglingVertex);
    EXPECT_NE(std::string(e.what()).find("dangling vertex"), std::string::npos);
  }
}

TEST(Mesh, DegenerateCellIsRejected) {
  std::vector<Point> v{Point(0, 0, 0), Point(1, 0, 0), Point(2, 0, 0)};
  try {
    Mesh(2, v, {{0, 1, 2, -1}});
    FAIL() << "expected MeshError";
  } catch (const MeshError& e) {
    EXPECT_EQ(e.kind(), MeshErrorKind::kDegenerateCell);
  }
}

TEST(Mesh, NonmanifoldFaceIsRejected) {
  std::vector<Point> v{Point(0, 0, 0), Point(1, 0, 0), Point(0, 1, 0), Point(0, -1, 0), Point(1, 1, 0)};
  try {
    Mesh(2, v, {{0, 1, 2, -1}, {0, 1, 3, -1}, {0, 1, 4, -1}});
    FAIL() << "expected MeshError";
  } catch (const MeshError& e) {
    EXPECT_EQ(e.kind(), MeshErrorKind::kNonmanifold);
  }
}

TEST(Mesh, DegenerateExtentIsRejected) {
  const std::array<int, 2> cells{2, 2};
  EXPECT_THROW(build_structured_mesh(2, Point::Zero(), Point(1, 0, 0), cells), MeshError);
  const std::array<int, 2> none{0, 2};
  EXPECT_THROW(build_structured_mesh(2, Point::Zero(), Point(1, 1, 0), none), MeshError);
}

TEST(Mesh, LocateAndReferenceMapRoundTrip) {
  const Mesh mesh = fixtures::jittered_mesh(2, std::array<int, 2>{3, 3}, 0.2, 9);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    const Point x(u(rng), u(rng), 0.0);
    const auto e = mesh.locate(x);
    ASSERT_TRUE(e.has_value());
    const Point ref = mesh.to_reference(*e, x);
    EXPECT_LT((mesh.to_physical(*e, ref) - x).norm(), 1e-13);
  }
  EXPECT_FALSE(mesh.locate(Point(1.5, 0.5, 0.0)).has_value());
}

TEST(Connectivity, SelectScatterRoundTrip) {
  const Mesh mesh = unit_square(3);
  const Discretization disc(mesh, fixtures::random_orders(mesh.num_cells(), 0, 3, 5));
  const ConnectivityMap& map = disc.connectivity();
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  CVector lambda(static_cast<Eigen::Index>(map.total_dofs()));
  for (Eigen::Index i = 0; i < lambda.size(); ++i) lambda[i] = Complex(n(rng), n(rng));
  for (std::size_t e = 0; e < mesh.num_cells(); ++e) {
    const CVector local = map.select(e, lambda);
    CVector back = CVector::Zero(lambda.size());
    map.scatter_add(e, local, back);
    for (int idx : map.cell_dofs(e)) EXPECT_EQ(back[idx], lambda[idx]);
    // Local face order: each face's block is contiguous.
    for (int lf = 0; lf < mesh.faces_per_cell(); ++lf) {
      const int f = mesh.cell_face(e, lf);
      for (int k = 0; k < map.face_dofs(f); ++k) {
        EXPECT_EQ(map.cell_dofs(e)[map.local_face_offset(e, lf) + k], map.face_offset(f) + k);
      }
    }
  }
}

TEST(MeshIo, TextRoundTripMatchesGenerator) {
  const Mesh mesh = unit_square(1);
  const fs::path path = fs::temp_directory_path() / "hdgfwi_mesh_roundtrip.txt";
  write_mesh(mesh, path);
  const Mesh back = read_mesh(path);
  ASSERT_EQ(back.num_cells(), mesh.num_cells());
  ASSERT_EQ(back.num_faces(), mesh.num_faces());
  EXPECT_EQ(back.num_interior_faces(), 1u);
  for (std::size_t e = 0; e < mesh.num_cells(); ++e) {
    const auto a = mesh.cell_vertices(e);
    const auto b = back.cell_vertices(e);
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
  }
  fs::remove(path);
}

TEST(MeshIo, ParseErrorsCarryLineNumbers) {
  try {
    parse_mesh("2 3 1\n0 0\n1 0\nbad\n0 1 2\n");
    FAIL() << "expected MeshError";
  } catch (const MeshError& e) {
    EXPECT_EQ(e.kind(), MeshErrorKind::kParse);
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos);
  }
  try {
    parse_mesh("2 3 1\n0 0\n1 0\n0 1\n0 1 5\n");
    FAIL() << "expected MeshError";
  } catch (const MeshError& e) {
    EXPECT_EQ(e.kind(), MeshErrorKind::kDanglingVertex);
  }
}
