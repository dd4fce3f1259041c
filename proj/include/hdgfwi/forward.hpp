#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <vector>

#include "hdgfwi/hdg.hpp"

namespace hdgfwi {

struct AcquisitionSetup {
  std::vector<PointSource> sources;
  std::vector<Point> receivers;
};

/// Pressure sampling at receiver points: for each receiver, the lowest-id
/// containing cell and the cell basis values at its reference coordinates.
class RestrictionOperator {
 public:
  RestrictionOperator() = default;
  RestrictionOperator(const Mesh& mesh, const Discretization& disc, const std::vector<Point>& receivers);

  std::size_t size() const noexcept { return cells_.size(); }
  int cell(std::size_t k) const { return cells_[k]; }
  const RVector& weights(std::size_t k) const { return weights_[k]; }

  /// p_h at the receivers, in declaration order.
  CVector apply(const FieldSolution& solution) const;
  /// R^* r: per cell, the pressure-row vector sum_k r_k phi(x_k), padded
  /// to the cell's full volume size (dim + 1) * field_size.
  std::map<int, CVector> adjoint(const CVector& residual, const HdgSystem& system) const;

 private:
  std::vector<int> cells_;
  std::vector<RVector> weights_;
};

/// Forward half of the pipeline: owns one HDG system and its single
/// factorization for the current (model, sigma). Changing the state
/// builds a new generation; solutions of the old generation are rejected.
class ForwardSolver {
 public:
  ForwardSolver(const Mesh& mesh, Discretization disc, BoundarySpec boundary,
                FactorizationOptions options = {});
  ForwardSolver(const ForwardSolver&) = delete;
  ForwardSolver& operator=(const ForwardSolver&) = delete;

  /// Assembles the global matrix and factorizes it once.
  void set_state(const Model& model, Complex sigma);
  bool ready() const noexcept { return system_ != nullptr; }

  const Mesh& mesh() const noexcept { return *mesh_; }
  const Discretization& discretization() const noexcept { return disc_; }
  const BoundarySpec& boundary() const noexcept { return boundary_; }
  const Model& model() const;
  const HdgSystem& system() const;
  const Factorization& factorization() const;

  FieldSolution solve(const Excitation& excitation, int source_id = -1) const;
  /// One solve per excitation on the worker pool, results in input order.
  std::vector<FieldSolution> solve_all(const std::vector<Excitation>& excitations) const;

 private:
  const Mesh* mesh_;
  Discretization disc_;
  BoundarySpec boundary_;
  FactorizationOptions options_;
  std::unique_ptr<Model> model_;
  std::unique_ptr<HdgSystem> system_;
  std::unique_ptr<Factorization> factorization_;
};

/// One excitation per source of the setup.
std::vector<Excitation> point_excitations(const AcquisitionSetup& setup);

using ScalarField = std::function<Complex(const Point&)>;
using VectorField = std::function<Eigen::Vector3cd(const Point&)>;

struct FieldErrors {
  double pressure = 0.0;
  std::array<double, 3> velocity{0.0, 0.0, 0.0};
};

/// Absolute L2 errors of p_h and each velocity component against exact fields.
FieldErrors l2_errors(const HdgSystem& system, const FieldSolution& solution, const ScalarField& p,
                      const VectorField& v);

/// Continuous P1 Galerkin solution of the second-order pressure equation
/// on the mesh vertices, with the same boundary conditions. Used only as
/// an independent cross-check of the HDG pressure.
CVector solve_second_order_p1(const Mesh& mesh, const Model& model, Complex sigma, const BoundarySpec& boundary,
                              const Excitation& excitation);

/// Relative L2 distance between the HDG pressure and the P1 reference.
double second_order_crosscheck(const HdgSystem& system, const FieldSolution& solution,
                               const Excitation& excitation);

}  // namespace hdgfwi
