#pragma once

#include <array>
#include <vector>

#include "hdgfwi/mesh.hpp"

namespace hdgfwi::detail {

/// Cell basis sampled at the points of a cell quadrature rule.
struct CellSamples {
  std::vector<Point> ref;
  std::vector<Point> x;
  RVector weight;                 ///< physical weights
  RMatrix phi;                    ///< nq x nv
  std::array<RMatrix, 3> dphi;    ///< physical derivatives, nq x nv each
};

/// Cell basis and trace basis sampled on one face of a cell.
struct FaceSamples {
  std::vector<Point> cell_ref;
  std::vector<Point> x;
  RVector weight;
  RMatrix phi;   ///< cell basis, nq x nv
  RMatrix xi;    ///< face basis, nq x nxi
  Point normal;  ///< outward of the cell
};

CellSamples sample_cell(const Mesh& mesh, std::size_t e, int order, int degree);
FaceSamples sample_face(const Mesh& mesh, std::size_t e, int local_face, int cell_order, int face_order,
                        int degree);

/// Physical positions of the nodes of the trace basis of face f.
std::vector<Point> face_nodes(const Mesh& mesh, std::size_t f, int face_order);

}  // namespace hdgfwi::detail
