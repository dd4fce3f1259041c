#pragma once

#include <vector>

#include "hdgfwi/common.hpp"

namespace hdgfwi {

/// Points and weights on a reference simplex. Weights sum to the
/// reference measure: 1 (segment), 1/2 (triangle), 1/6 (tetrahedron).
struct QuadratureRule {
  int dim = 0;
  int degree = 0;  ///< every monomial of total degree <= degree is integrated exactly
  std::vector<Point> points;
  std::vector<double> weights;

  std::size_t size() const noexcept { return weights.size(); }
};

enum class IntegrationDomain { kCell, kFace };

/// Highest exactness degree served by quadrature_for.
inline constexpr int kMaxQuadratureDegree = 40;

/// Collapsed-coordinate (Stroud conical product) Gauss-Legendre rule on
/// the simplex of dimension simplex_dim. Throws ConfigError above
/// kMaxQuadratureDegree rather than returning an inexact rule.
const QuadratureRule& quadrature_for(int degree, int simplex_dim);

/// Rule for the cells (dim) or faces (dim - 1) of a dim-dimensional mesh.
const QuadratureRule& quadrature_for(int degree, IntegrationDomain domain, int mesh_dim);

/// Gauss-Legendre nodes and weights on [0, 1].
void gauss_legendre_unit(int n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace hdgfwi
