#pragma once

#include <array>
#include <vector>

#include "hdgfwi/common.hpp"

namespace hdgfwi {

/// Dimension of P_p on a simplex of dimension dim (1, 2 or 3).
int dof_count(int order, int dim);

/// Lagrange basis of P_p on the reference simplex (segment [0,1],
/// triangle (0,0),(1,0),(0,1) or the unit corner tetrahedron) with
/// equispaced nodes. Order 0 uses a single node at the centroid.
///
/// Evaluation goes through an orthonormal (Dubiner) modal basis and the
/// inverse generalized Vandermonde matrix, which stays well conditioned up
/// to the orders used here.
class NodalBasis {
 public:
  NodalBasis(int dim, int order);

  int dim() const noexcept { return dim_; }
  int order() const noexcept { return order_; }
  int size() const noexcept { return size_; }
  const std::vector<Point>& nodes() const noexcept { return nodes_; }

  /// phi_i(ref) for every basis function.
  RVector values(const Point& ref) const;
  /// d phi_i / d ref_k, size() x dim() matrix.
  RMatrix gradients(const Point& ref) const;

 private:
  RVector modal_values(const Point& ref) const;
  RMatrix modal_gradients(const Point& ref) const;

  int dim_;
  int order_;
  int size_;
  std::vector<Point> nodes_;
  std::vector<std::array<int, 3>> modes_;
  RMatrix vinv_;
};

/// Shared immutable basis, built once per (dim, order). Thread-safe.
const NodalBasis& cached_basis(int dim, int order);

}  // namespace hdgfwi
