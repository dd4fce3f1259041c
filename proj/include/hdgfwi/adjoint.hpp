#pragma once

#include <map>
#include <vector>

#include "hdgfwi/forward.hpp"

namespace hdgfwi {

/// Inverted parameter. kInverseBulkModulus requires a piecewise-constant model.
enum class Parameter { kWaveSpeed, kInverseBulkModulus };

/// Adjoint states of one source: gamma2 on the trace, gamma1 per cell.
struct AdjointSolution {
  CVector residual;  ///< R U - d at the receivers
  CVector gamma2;
  std::vector<CVector> gamma1;
  std::uint64_t generation = 0;
};

/// Sum over cells of R_e^T C_e^* A_e^{-*} s_e for per-cell volume vectors s_e.
CVector adjoint_rhs(const HdgSystem& system, const std::map<int, CVector>& cell_vectors);

/// Solves the adjoint problem of one source with the forward factors.
AdjointSolution solve_adjoint_states(const HdgSystem& system, const Factorization& factorization,
                                     const RestrictionOperator& restriction, const FieldSolution& forward,
                                     const CVector& data);

/// Real gradient of the misfit with respect to the model coefficients of
/// the chosen parameter, contribution of one (source, frequency) pair.
RVector gradient_contribution(const HdgSystem& system, const FieldSolution& forward,
                              const AdjointSolution& adjoint, Parameter parameter);

/// Left side of the global adjoint system assembled from the local blocks,
/// sum of R_e^T (L_e^* - C_e^* A_e^{-*} B_e^*) R_e, with an independent
/// local factorization of A_e^*.
SparseMatrix explicit_adjoint_matrix(const HdgSystem& system);

/// Largest per-cell relative residual of A^* gamma1 + B^* R gamma2 + R^* r.
double adjoint_local_residual(const HdgSystem& system, const RestrictionOperator& restriction,
                              const AdjointSolution& adjoint);
/// Relative norm of sum_e R_e^T (C_e^* gamma1 + L_e^* R_e gamma2).
double adjoint_global_residual(const HdgSystem& system, const AdjointSolution& adjoint);

/// Misfit 1/2 ||R U - d||^2 and gradient for a batch of sources sharing a
/// factorization. data[k] holds the receiver values of source k.
struct MisfitGradient {
  double misfit = 0.0;
  RVector gradient;
};
MisfitGradient misfit_and_gradient(const ForwardSolver& solver, const RestrictionOperator& restriction,
                                   const std::vector<Excitation>& sources, const std::vector<CVector>& data,
                                   Parameter parameter, bool with_gradient = true);

}  // namespace hdgfwi
