#include "hdgfwi/discretization.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "hdgfwi/basis.hpp"

namespace hdgfwi {

std::vector<int> face_orders_from_cells(const Mesh& mesh, std::span<const int> cell_orders) {
  if (cell_orders.size() != mesh.num_cells()) {
    throw ConfigError("need one polynomial order per cell");
  }
  std::vector<int> orders(mesh.num_faces());
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    int q = cell_orders[face.cells[0]];
    if (!face.is_boundary()) q = std::max(q, cell_orders[face.cells[1]]);
    orders[f] = q;
  }
  return orders;
}

std::size_t count_trace_dofs(const Mesh& mesh, std::span<const int> cell_orders) {
  std::size_t n = 0;
  for (int q : face_orders_from_cells(mesh, cell_orders)) n += dof_count(q, mesh.dim() - 1);
  return n;
}

std::size_t count_volume_dofs(const Mesh& mesh, std::span<const int> cell_orders) {
  std::size_t n = 0;
  for (int p : cell_orders) n += dof_count(p, mesh.dim());
  return n;
}

Discretization::Discretization(const Mesh& mesh, std::vector<int> cell_orders)
    : cell_order_(std::move(cell_orders)) {
  for (int p : cell_order_) {
    if (p < 0) throw ConfigError("polynomial orders must be >= 0");
  }
  face_order_ = face_orders_from_cells(mesh, cell_order_);
  std::vector<int> face_dofs(face_order_.size());
  for (std::size_t f = 0; f < face_order_.size(); ++f) face_dofs[f] = dof_count(face_order_[f], mesh.dim() - 1);
  connectivity_ = ConnectivityMap(mesh, face_dofs);
  volume_dofs_ = count_volume_dofs(mesh, cell_order_);
}

Discretization Discretization::uniform(const Mesh& mesh, int order) {
  return Discretization(mesh, std::vector<int>(mesh.num_cells(), order));
}

int Discretization::max_order() const { return *std::max_element(cell_order_.begin(), cell_order_.end()); }

OrderAssignment assign_orders(const Mesh& mesh, std::span<const double> cell_wave_speed,
                              double frequency_hz, const OrderPolicy& policy) {
  if (!(frequency_hz > 0.0)) throw ConfigError("order assignment needs a positive frequency");
  if (policy.p_min < 0 || policy.p_max < policy.p_min) throw ConfigError("invalid order range");
  if (cell_wave_speed.size() != mesh.num_cells()) throw ConfigError("need one wave speed per cell");
  OrderAssignment out;
  out.cell_orders.resize(mesh.num_cells());
  for (std::size_t e = 0; e < mesh.num_cells(); ++e) {
    const double c = cell_wave_speed[e];
    if (!(c > 0.0)) throw ConfigError("order assignment needs positive wave speeds");
    const double wavelength = c / frequency_hz;
    const double target = policy.dofs_per_wavelength * mesh.cell_diameter(e) / wavelength;
    const int p = static_cast<int>(std::ceil(target - 1e-12));
    if (p > policy.p_max) ++out.clamped_cells;
    out.cell_orders[e] = std::clamp(p, policy.p_min, policy.p_max);
  }
  if (out.clamped_cells > 0) {
    spdlog::warn("order assignment: {} of {} cells need more than p_max = {}; clamped", out.clamped_cells,
                 mesh.num_cells(), policy.p_max);
  }
  return out;
}

}  // namespace hdgfwi
