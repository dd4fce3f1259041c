#pragma once

#include <span>
#include <vector>

#include "hdgfwi/mesh.hpp"

namespace hdgfwi {

/// Polynomial orders per cell and per face plus the trace dof layout.
/// Face order is the max of its adjacent cell orders (boundary faces take
/// the single cell's order).
class Discretization {
 public:
  Discretization(const Mesh& mesh, std::vector<int> cell_orders);
  static Discretization uniform(const Mesh& mesh, int order);

  int cell_order(std::size_t e) const { return cell_order_[e]; }
  int face_order(std::size_t f) const { return face_order_[f]; }
  const std::vector<int>& cell_orders() const noexcept { return cell_order_; }
  const std::vector<int>& face_orders() const noexcept { return face_order_; }
  const ConnectivityMap& connectivity() const noexcept { return connectivity_; }
  int max_order() const;

  /// Global trace system dimension (sum of face dofs).
  std::size_t trace_dofs() const noexcept { return connectivity_.total_dofs(); }
  /// Volume dofs of one scalar unknown, sum over cells.
  std::size_t volume_dofs() const noexcept { return volume_dofs_; }

 private:
  std::vector<int> cell_order_;
  std::vector<int> face_order_;
  ConnectivityMap connectivity_;
  std::size_t volume_dofs_ = 0;
};

std::vector<int> face_orders_from_cells(const Mesh& mesh, std::span<const int> cell_orders);
std::size_t count_trace_dofs(const Mesh& mesh, std::span<const int> cell_orders);
std::size_t count_volume_dofs(const Mesh& mesh, std::span<const int> cell_orders);

struct OrderPolicy {
  int p_min = 1;
  int p_max = 6;
  double dofs_per_wavelength = 8.0;
};

struct OrderAssignment {
  std::vector<int> cell_orders;
  std::size_t clamped_cells = 0;  ///< cells whose target order exceeded p_max
};

/// Smallest order p in [p_min, p_max] with p * wavelength / h >= target,
/// where wavelength = c / f on each cell and h is the cell diameter.
OrderAssignment assign_orders(const Mesh& mesh, std::span<const double> cell_wave_speed,
                              double frequency_hz, const OrderPolicy& policy);

}  // namespace hdgfwi
