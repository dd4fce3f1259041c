#include "hdgfwi/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace hdgfwi {

namespace {

constexpr std::array<const char*, 8> kTagNames = {"xmin", "xmax", "ymin", "ymax",
                                                  "zmin", "zmax", "boundary", "none"};

double signed_volume(int dim, const std::vector<Point>& v, const std::array<int, 4>& c) {
  if (dim == 2) {
    const Point a = v[c[1]] - v[c[0]];
    const Point b = v[c[2]] - v[c[0]];
    return 0.5 * (a.x() * b.y() - a.y() * b.x());
  }
  const Point a = v[c[1]] - v[c[0]];
  const Point b = v[c[2]] - v[c[0]];
  const Point d = v[c[3]] - v[c[0]];
  return a.dot(b.cross(d)) / 6.0;
}

}  // namespace

const char* boundary_tag_name(BoundaryTag tag) {
  return kTagNames[static_cast<std::size_t>(tag)];
}

std::optional<BoundaryTag> parse_boundary_tag(const std::string& name) {
  for (std::size_t i = 0; i + 1 < kTagNames.size(); ++i) {
    if (name == kTagNames[i]) return static_cast<BoundaryTag>(i);
  }
  return std::nullopt;
}

Mesh::Mesh(int dim, std::vector<Point> vertices, std::vector<std::array<int, 4>> cells)
    : dim_(dim), vertices_(std::move(vertices)), cells_(std::move(cells)) {
  if (dim_ != 2 && dim_ != 3) {
    throw MeshError(MeshErrorKind::kParse, "mesh dimension must be 2 or 3, got " + std::to_string(dim_));
  }
  if (cells_.empty()) throw MeshError(MeshErrorKind::kParse, "mesh has no cells");
  const int nv = static_cast<int>(vertices_.size());
  for (std::size_t e = 0; e < cells_.size(); ++e) {
    for (int k = 0; k <= dim_; ++k) {
      const int v = cells_[e][k];
      if (v < 0 || v >= nv) {
        throw MeshError(MeshErrorKind::kDanglingVertex,
                        "dangling vertex: cell " + std::to_string(e) + " references vertex " +
                            std::to_string(v) + " but the table has " + std::to_string(nv));
      }
    }
    if (dim_ == 2) cells_[e][3] = -1;
  }
  orient_cells();
  build_faces();
  tag_boundary_faces();
}

void Mesh::orient_cells() {
  volumes_.resize(cells_.size());
  // Scale for the degeneracy test: bounding-box diagonal to the power dim.
  const auto [lo, hi] = bounding_box();
  const double scale = std::pow((hi - lo).norm(), dim_);
  for (std::size_t e = 0; e < cells_.size(); ++e) {
    double vol = signed_volume(dim_, vertices_, cells_[e]);
    if (vol < 0.0) {
      std::swap(cells_[e][1], cells_[e][2]);
      vol = -vol;
      ++num_reoriented_;
    }
    if (!(vol > 1e-14 * scale)) {
      throw MeshError(MeshErrorKind::kDegenerateCell,
                      "degenerate cell " + std::to_string(e) + " (volume " + std::to_string(vol) + ")");
    }
    volumes_[e] = vol;
  }
}

void Mesh::build_faces() {
  const int nf = faces_per_cell();
  cell_faces_.assign(cells_.size(), {-1, -1, -1, -1});
  std::map<std::array<int, 3>, int> index;
  for (std::size_t e = 0; e < cells_.size(); ++e) {
    for (int lf = 0; lf < nf; ++lf) {
      std::array<int, 3> key{-1, -1, -1};
      int n = 0;
      for (int k = 0; k <= dim_; ++k) {
        if (k != lf) key[n++] = cells_[e][k];
      }
      std::sort(key.begin(), key.begin() + n);
      auto [it, inserted] = index.emplace(key, static_cast<int>(faces_.size()));
      if (inserted) {
        Face face;
        face.vertices = key;
        face.cells[0] = static_cast<int>(e);
        face.local_index[0] = lf;
        faces_.push_back(face);
      } else {
        Face& face = faces_[it->second];
        if (face.cells[1] >= 0) {
          throw MeshError(MeshErrorKind::kNonmanifold,
                          "nonmanifold mesh: face shared by more than two cells (cell " +
                              std::to_string(e) + ")");
        }
        // Cells are visited in increasing order, so side 0 keeps the lower id.
        face.cells[1] = static_cast<int>(e);
        face.local_index[1] = lf;
      }
      cell_faces_[e][lf] = it->second;
    }
  }
  num_interior_ = 0;
  for (std::size_t f = 0; f < faces_.size(); ++f) {
    Face& face = faces_[f];
    if (!face.is_boundary()) ++num_interior_;
    const Point& a = vertices_[face.vertices[0]];
    const Point& b = vertices_[face.vertices[1]];
    Point n;
    if (dim_ == 2) {
      const Point t = b - a;
      n = Point(t.y(), -t.x(), 0.0);
    } else {
      const Point& c = vertices_[face.vertices[2]];
      n = (b - a).cross(c - a);
    }
    n.normalize();
    const Point fc = face_centroid(f);
    for (int side = 0; side < 2; ++side) {
      if (face.cells[side] < 0) continue;
      const Point outward = fc - cell_centroid(face.cells[side]);
      face.normals[side] = outward.dot(n) >= 0.0 ? n : Point(-n);
    }
  }
}

void Mesh::tag_boundary_faces() {
  const auto [lo, hi] = bounding_box();
  const double tol = 1e-10 * (hi - lo).norm();
  for (std::size_t f = 0; f < faces_.size(); ++f) {
    Face& face = faces_[f];
    if (!face.is_boundary()) continue;
    face.tag = BoundaryTag::kBoundary;
    for (int axis = 0; axis < dim_; ++axis) {
      bool on_lo = true;
      bool on_hi = true;
      for (int k = 0; k < dim_; ++k) {
        const double x = vertices_[face.vertices[k]][axis];
        on_lo = on_lo && std::abs(x - lo[axis]) <= tol;
        on_hi = on_hi && std::abs(x - hi[axis]) <= tol;
      }
      if (on_lo) face.tag = static_cast<BoundaryTag>(2 * axis);
      if (on_hi) face.tag = static_cast<BoundaryTag>(2 * axis + 1);
      if (on_lo || on_hi) break;
    }
  }
}

int Mesh::cell_face_side(std::size_t e, int local_face) const {
  const Face& f = faces_[cell_faces_[e][local_face]];
  return f.cells[0] == static_cast<int>(e) ? 0 : 1;
}

Point Mesh::cell_centroid(std::size_t e) const {
  Point c = Point::Zero();
  for (int k = 0; k <= dim_; ++k) c += vertices_[cells_[e][k]];
  return c / static_cast<double>(dim_ + 1);
}

double Mesh::cell_diameter(std::size_t e) const {
  double h = 0.0;
  for (int a = 0; a <= dim_; ++a) {
    for (int b = a + 1; b <= dim_; ++b) {
      h = std::max(h, (vertices_[cells_[e][a]] - vertices_[cells_[e][b]]).norm());
    }
  }
  return h;
}

double Mesh::face_measure(std::size_t f) const {
  const Face& face = faces_[f];
  const Point& a = vertices_[face.vertices[0]];
  const Point& b = vertices_[face.vertices[1]];
  if (dim_ == 2) return (b - a).norm();
  return 0.5 * (b - a).cross(vertices_[face.vertices[2]] - a).norm();
}

Point Mesh::face_centroid(std::size_t f) const {
  Point c = Point::Zero();
  for (int k = 0; k < dim_; ++k) c += vertices_[faces_[f].vertices[k]];
  return c / static_cast<double>(dim_);
}

Eigen::Matrix3d Mesh::jacobian(std::size_t e) const {
  Eigen::Matrix3d j = Eigen::Matrix3d::Identity();
  const Point& x0 = vertices_[cells_[e][0]];
  for (int k = 0; k < dim_; ++k) {
    j.col(k) = vertices_[cells_[e][k + 1]] - x0;
  }
  return j;
}

Point Mesh::to_physical(std::size_t e, const Point& ref) const {
  Point x = vertices_[cells_[e][0]];
  for (int k = 0; k < dim_; ++k) x += ref[k] * (vertices_[cells_[e][k + 1]] - vertices_[cells_[e][0]]);
  return x;
}

Point Mesh::to_reference(std::size_t e, const Point& x) const {
  const Eigen::Matrix3d j = jacobian(e);
  Point rhs = x - vertices_[cells_[e][0]];
  if (dim_ == 2) rhs.z() = 0.0;
  Point ref = j.partialPivLu().solve(rhs);
  if (dim_ == 2) ref.z() = 0.0;
  return ref;
}

Point Mesh::face_to_physical(std::size_t f, const Point& face_ref) const {
  const Face& face = faces_[f];
  const Point& x0 = vertices_[face.vertices[0]];
  Point x = x0;
  for (int k = 0; k + 1 < dim_; ++k) x += face_ref[k] * (vertices_[face.vertices[k + 1]] - x0);
  return x;
}

std::optional<int> Mesh::locate(const Point& x, double tol) const {
  for (std::size_t e = 0; e < cells_.size(); ++e) {
    const Point ref = to_reference(e, x);
    double sum = 0.0;
    bool inside = true;
    for (int k = 0; k < dim_; ++k) {
      inside = inside && ref[k] >= -tol;
      sum += ref[k];
    }
    if (inside && sum <= 1.0 + tol) return static_cast<int>(e);
  }
  return std::nullopt;
}

std::pair<Point, Point> Mesh::bounding_box() const {
  Point lo = Point::Constant(std::numeric_limits<double>::infinity());
  Point hi = Point::Constant(-std::numeric_limits<double>::infinity());
  for (const Point& v : vertices_) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  if (dim_ == 2) {
    lo.z() = 0.0;
    hi.z() = 0.0;
  }
  return {lo, hi};
}

Mesh build_structured_mesh(int dim, const Point& lower, const Point& upper,
                           std::span<const int> cells_per_axis) {
  if (dim != 2 && dim != 3) {
    throw MeshError(MeshErrorKind::kDegenerateExtent, "dimension must be 2 or 3");
  }
  if (static_cast<int>(cells_per_axis.size()) != dim) {
    throw MeshError(MeshErrorKind::kDegenerateExtent, "need one cell count per axis");
  }
  for (int a = 0; a < dim; ++a) {
    if (cells_per_axis[a] < 1) {
      throw MeshError(MeshErrorKind::kDegenerateExtent, "cells per axis must be >= 1");
    }
    if (!(upper[a] > lower[a]) || !std::isfinite(upper[a] - lower[a])) {
      throw MeshError(MeshErrorKind::kDegenerateExtent,
                      "degenerate extent along axis " + std::to_string(a));
    }
  }
  const int nx = cells_per_axis[0];
  const int ny = cells_per_axis[1];
  const int nz = dim == 3 ? cells_per_axis[2] : 0;
  std::vector<Point> vertices;
  std::vector<std::array<int, 4>> cells;
  auto coord = [&](int a, int i, int n) { return lower[a] + (upper[a] - lower[a]) * i / n; };
  if (dim == 2) {
    auto vid = [&](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j <= ny; ++j) {
      for (int i = 0; i <= nx; ++i) vertices.emplace_back(coord(0, i, nx), coord(1, j, ny), 0.0);
    }
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        cells.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), -1});
        cells.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1), -1});
      }
    }
  } else {
    auto vid = [&](int i, int j, int k) { return (k * (ny + 1) + j) * (nx + 1) + i; };
    for (int k = 0; k <= nz; ++k) {
      for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
          vertices.emplace_back(coord(0, i, nx), coord(1, j, ny), coord(2, k, nz));
        }
      }
    }
    constexpr std::array<std::array<int, 3>, 6> kAxisOrders = {
        {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
    for (int k = 0; k < nz; ++k) {
      for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
          for (const auto& order : kAxisOrders) {
            std::array<int, 3> p{i, j, k};
            std::array<int, 4> tet{};
            tet[0] = vid(p[0], p[1], p[2]);
            for (int s = 0; s < 3; ++s) {
              ++p[order[s]];
              tet[s + 1] = vid(p[0], p[1], p[2]);
            }
            cells.push_back(tet);
          }
        }
      }
    }
  }
  return Mesh(dim, std::move(vertices), std::move(cells));
}

ConnectivityMap::ConnectivityMap(const Mesh& mesh, std::span<const int> face_dofs) {
  if (face_dofs.size() != mesh.num_faces()) {
    throw StructuralError("connectivity: face dof list has " + std::to_string(face_dofs.size()) +
                          " entries for " + std::to_string(mesh.num_faces()) + " faces");
  }
  face_offset_.resize(mesh.num_faces() + 1);
  face_offset_[0] = 0;
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) face_offset_[f + 1] = face_offset_[f] + face_dofs[f];
  cell_dofs_.resize(mesh.num_cells());
  local_face_offset_.resize(mesh.num_cells());
  for (std::size_t e = 0; e < mesh.num_cells(); ++e) {
    auto& dofs = cell_dofs_[e];
    for (int lf = 0; lf < mesh.faces_per_cell(); ++lf) {
      const int f = mesh.cell_face(e, lf);
      local_face_offset_[e][lf] = static_cast<int>(dofs.size());
      for (int k = face_offset_[f]; k < face_offset_[f + 1]; ++k) dofs.push_back(k);
    }
  }
}

CVector ConnectivityMap::select(std::size_t e, const CVector& global) const {
  const auto& dofs = cell_dofs_[e];
  CVector local(static_cast<Eigen::Index>(dofs.size()));
  for (std::size_t k = 0; k < dofs.size(); ++k) local[static_cast<Eigen::Index>(k)] = global[dofs[k]];
  return local;
}

void ConnectivityMap::scatter_add(std::size_t e, const CVector& local, CVector& global) const {
  const auto& dofs = cell_dofs_[e];
  if (static_cast<std::size_t>(local.size()) != dofs.size()) {
    throw StructuralError("connectivity: local trace vector has wrong length");
  }
  for (std::size_t k = 0; k < dofs.size(); ++k) global[dofs[k]] += local[static_cast<Eigen::Index>(k)];
}

}  // namespace hdgfwi
