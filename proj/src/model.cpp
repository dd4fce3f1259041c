#include "hdgfwi/model.hpp"

#include <cmath>

#include "hdgfwi/basis.hpp"

namespace hdgfwi {

Model::Model(int dim, std::size_t num_cells, int order, double wave_speed, double density)
    : dim_(dim), num_cells_(num_cells), order_(order), dofs_per_cell_(dof_count(order, dim)) {
  wave_speed_.assign(num_cells_ * dofs_per_cell_, wave_speed);
  density_.assign(num_cells_ * dofs_per_cell_, density);
}

RVector Model::basis_values(const Point& ref) const {
  if (order_ == 0) return RVector::Ones(1);
  return cached_basis(dim_, order_).values(ref);
}

double Model::wave_speed_at(std::size_t e, const Point& ref) const {
  if (order_ == 0) return wave_speed_[e];
  const RVector phi = basis_values(ref);
  double v = 0.0;
  for (int k = 0; k < dofs_per_cell_; ++k) v += phi[k] * wave_speed_[e * dofs_per_cell_ + k];
  return v;
}

double Model::density_at(std::size_t e, const Point& ref) const {
  if (order_ == 0) return density_[e];
  const RVector phi = basis_values(ref);
  double v = 0.0;
  for (int k = 0; k < dofs_per_cell_; ++k) v += phi[k] * density_[e * dofs_per_cell_ + k];
  return v;
}

double Model::mean_wave_speed(std::size_t e) const {
  double s = 0.0;
  for (int k = 0; k < dofs_per_cell_; ++k) s += wave_speed_[e * dofs_per_cell_ + k];
  return s / dofs_per_cell_;
}

double Model::mean_density(std::size_t e) const {
  double s = 0.0;
  for (int k = 0; k < dofs_per_cell_; ++k) s += density_[e * dofs_per_cell_ + k];
  return s / dofs_per_cell_;
}

void Model::validate() const {
  for (std::size_t i = 0; i < wave_speed_.size(); ++i) {
    if (!(std::isfinite(wave_speed_[i]) && wave_speed_[i] > 0.0)) {
      throw ConfigError("model: nonpositive or non-finite wave speed at dof " + std::to_string(i));
    }
    if (!(std::isfinite(density_[i]) && density_[i] > 0.0)) {
      throw ConfigError("model: nonpositive or non-finite density at dof " + std::to_string(i));
    }
  }
}

}  // namespace hdgfwi
