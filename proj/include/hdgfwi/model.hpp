#pragma once

#include <vector>

#include "hdgfwi/common.hpp"

namespace hdgfwi {

/// Piecewise-polynomial medium: wave speed c and density rho stored as
/// nodal coefficients of order `order` on every cell, cell-major
/// (coefficient k of cell e at e * dofs_per_cell() + k). Order 0 is one
/// value per cell. The bulk modulus is kappa = rho c^2.
class Model {
 public:
  Model(int dim, std::size_t num_cells, int order, double wave_speed, double density);

  int dim() const noexcept { return dim_; }
  int order() const noexcept { return order_; }
  std::size_t num_cells() const noexcept { return num_cells_; }
  int dofs_per_cell() const noexcept { return dofs_per_cell_; }
  std::size_t num_dofs() const noexcept { return wave_speed_.size(); }

  std::vector<double>& wave_speed() noexcept { return wave_speed_; }
  const std::vector<double>& wave_speed() const noexcept { return wave_speed_; }
  std::vector<double>& density() noexcept { return density_; }
  const std::vector<double>& density() const noexcept { return density_; }

  double wave_speed_at(std::size_t e, const Point& ref) const;
  double density_at(std::size_t e, const Point& ref) const;
  /// Model basis values at a reference point (size dofs_per_cell()).
  RVector basis_values(const Point& ref) const;
  double mean_wave_speed(std::size_t e) const;
  double mean_density(std::size_t e) const;

  /// Throws ConfigError unless every coefficient is finite and positive.
  void validate() const;

 private:
  int dim_;
  std::size_t num_cells_;
  int order_;
  int dofs_per_cell_;
  std::vector<double> wave_speed_;
  std::vector<double> density_;
};

}  // namespace hdgfwi
