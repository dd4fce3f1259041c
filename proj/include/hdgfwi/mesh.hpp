#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hdgfwi/common.hpp"

namespace hdgfwi {

/// Distinct failure classes of mesh construction and import.
enum class MeshErrorKind {
  kParse,
  kDanglingVertex,
  kDegenerateCell,
  kNonmanifold,
  kDegenerateExtent,
};

class MeshError : public Error {
 public:
  MeshError(MeshErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}
  MeshErrorKind kind() const noexcept { return kind_; }

 private:
  MeshErrorKind kind_;
};

/// Geometric boundary labels. Boundary faces lying on a side of the
/// vertex bounding box get that side's tag; every other boundary face is
/// tagged kBoundary.
enum class BoundaryTag : std::int8_t { kXMin, kXMax, kYMin, kYMax, kZMin, kZMax, kBoundary, kNone };

const char* boundary_tag_name(BoundaryTag tag);
std::optional<BoundaryTag> parse_boundary_tag(const std::string& name);

/// A face of the simplicial complex. Side 0 (the "+" side) is always the
/// lower-indexed cell; side 1 is the neighbor, absent (-1) on the boundary.
struct Face {
  std::array<int, 3> vertices{-1, -1, -1};  ///< sorted global ids; dim entries used
  std::array<int, 2> cells{-1, -1};
  std::array<int, 2> local_index{-1, -1};  ///< face slot within each cell
  std::array<Point, 2> normals{Point::Zero(), Point::Zero()};  ///< outward of each side
  BoundaryTag tag = BoundaryTag::kNone;

  bool is_boundary() const noexcept { return cells[1] < 0; }
};

/// Simplicial mesh: triangles in 2D, tetrahedra in 3D. Immutable after
/// construction. Local face f of a cell is the face opposite local vertex f.
class Mesh {
 public:
  /// Validates indices, reorders vertices of negatively oriented cells,
  /// rejects zero-volume cells and enumerates the faces.
  Mesh(int dim, std::vector<Point> vertices, std::vector<std::array<int, 4>> cells);

  int dim() const noexcept { return dim_; }
  int vertices_per_cell() const noexcept { return dim_ + 1; }
  int faces_per_cell() const noexcept { return dim_ + 1; }
  int vertices_per_face() const noexcept { return dim_; }

  std::size_t num_vertices() const noexcept { return vertices_.size(); }
  std::size_t num_cells() const noexcept { return cells_.size(); }
  std::size_t num_faces() const noexcept { return faces_.size(); }
  std::size_t num_interior_faces() const noexcept { return num_interior_; }
  std::size_t num_boundary_faces() const noexcept { return faces_.size() - num_interior_; }
  /// Number of cells whose vertex order was flipped to make the volume positive.
  std::size_t num_reoriented_cells() const noexcept { return num_reoriented_; }

  const Point& vertex(std::size_t i) const { return vertices_[i]; }
  const std::vector<Point>& vertices() const noexcept { return vertices_; }
  std::span<const int> cell_vertices(std::size_t e) const {
    return {cells_[e].data(), static_cast<std::size_t>(dim_ + 1)};
  }
  const Face& face(std::size_t f) const { return faces_[f]; }
  const std::vector<Face>& faces() const noexcept { return faces_; }
  int cell_face(std::size_t e, int local_face) const { return cell_faces_[e][local_face]; }
  /// Side (0 or 1) of the face seen from cell e.
  int cell_face_side(std::size_t e, int local_face) const;

  double cell_volume(std::size_t e) const { return volumes_[e]; }
  Point cell_centroid(std::size_t e) const;
  double cell_diameter(std::size_t e) const;
  double face_measure(std::size_t f) const;
  Point face_centroid(std::size_t f) const;

  /// Affine map x = x0 + J xi from the reference simplex.
  Eigen::Matrix3d jacobian(std::size_t e) const;
  Point to_physical(std::size_t e, const Point& ref) const;
  Point to_reference(std::size_t e, const Point& x) const;
  /// Point on face f from reference face coordinates, using the face's
  /// sorted vertex order.
  Point face_to_physical(std::size_t f, const Point& face_ref) const;

  /// Lowest-indexed cell containing x (barycentric tolerance tol), if any.
  std::optional<int> locate(const Point& x, double tol = 1e-10) const;

  /// Axis-aligned bounding box of the vertices.
  std::pair<Point, Point> bounding_box() const;

 private:
  void orient_cells();
  void build_faces();
  void tag_boundary_faces();

  int dim_;
  std::vector<Point> vertices_;
  std::vector<std::array<int, 4>> cells_;
  std::vector<double> volumes_;
  std::vector<Face> faces_;
  std::vector<std::array<int, 4>> cell_faces_;
  std::size_t num_interior_ = 0;
  std::size_t num_reoriented_ = 0;
};

/// Axis-aligned box split into 2 triangles per square (2D) or 6
/// tetrahedra per hexahedron (3D, Kuhn split along the main diagonal).
/// `cells_per_axis` has dim entries; `lower`/`upper` use the first dim
/// components.
Mesh build_structured_mesh(int dim, const Point& lower, const Point& upper,
                           std::span<const int> cells_per_axis);

/// Per-cell ranges of global trace dofs. Face f owns the contiguous block
/// [face_offset[f], face_offset[f+1]); a cell's local trace vector is the
/// concatenation of its faces' blocks in local face order.
class ConnectivityMap {
 public:
  ConnectivityMap() = default;
  ConnectivityMap(const Mesh& mesh, std::span<const int> face_dofs);

  std::size_t total_dofs() const noexcept { return face_offset_.empty() ? 0 : face_offset_.back(); }
  int face_offset(std::size_t f) const { return face_offset_[f]; }
  int face_dofs(std::size_t f) const { return face_offset_[f + 1] - face_offset_[f]; }
  /// Global indices of the trace dofs of cell e, in local order.
  const std::vector<int>& cell_dofs(std::size_t e) const { return cell_dofs_[e]; }
  /// Offset of local face lf inside the cell's local trace vector.
  int local_face_offset(std::size_t e, int lf) const { return local_face_offset_[e][lf]; }

  /// R_e Lambda.
  CVector select(std::size_t e, const CVector& global) const;
  /// global += R_e^T local.
  void scatter_add(std::size_t e, const CVector& local, CVector& global) const;

 private:
  std::vector<int> face_offset_;
  std::vector<std::vector<int>> cell_dofs_;
  std::vector<std::array<int, 4>> local_face_offset_;
};

}  // namespace hdgfwi
