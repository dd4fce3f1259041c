#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

#include <Eigen/SparseCore>

#include "hdgfwi/common.hpp"

namespace hdgfwi {

using SparseMatrix = Eigen::SparseMatrix<Complex, Eigen::ColMajor, int>;

enum class SolverBackend {
  kNative,  ///< left-looking LU with threshold partial pivoting, minimum-degree ordering
  kEigen,   ///< Eigen::SparseLU with COLAMD ordering
};

struct FactorizationOptions {
  SolverBackend backend = SolverBackend::kNative;
  /// Diagonal pivot accepted when |a_kk| >= threshold * max |a_ik|.
  double pivot_threshold = 0.1;
};

struct FactorizationStats {
  std::size_t dimension = 0;
  std::size_t matrix_nonzeros = 0;
  std::size_t l_nonzeros = 0;
  std::size_t u_nonzeros = 0;
  /// Factor storage (values + indices), bytes.
  std::size_t memory_bytes = 0;
};

class FactorizationBackend {
 public:
  virtual ~FactorizationBackend() = default;
  virtual void solve_in_place(CVector& b) const = 0;
  virtual void solve_adjoint_in_place(CVector& c) const = 0;
  virtual FactorizationStats stats() const = 0;
};

/// Factors of a square sparse complex matrix, reusable for any number of
/// forward (A x = b) and conjugate-transpose (A^* y = c) solves. Immutable
/// once constructed; concurrent solves on distinct right-hand sides are
/// safe.
class Factorization {
 public:
  explicit Factorization(const SparseMatrix& matrix, const FactorizationOptions& options = {});

  std::size_t dimension() const noexcept { return dimension_; }
  const FactorizationStats& stats() const noexcept { return stats_; }

  CVector solve(const CVector& b) const;
  /// Column-wise solves; column order is preserved. An empty batch
  /// returns an empty batch.
  std::vector<CVector> solve_many(const std::vector<CVector>& rhs) const;
  CMatrix solve_many(const CMatrix& rhs) const;
  CVector solve_adjoint(const CVector& c) const;

 private:
  void check(Eigen::Index n) const;

  std::size_t dimension_;
  std::unique_ptr<FactorizationBackend> backend_;
  FactorizationStats stats_;
};

/// Number of factorizations performed by this process so far.
std::uint64_t factorization_count();

/// Minimum-degree elimination order on the pattern of A + A^T. Ties go to
/// the lowest index, so the order is deterministic.
std::vector<int> minimum_degree_ordering(const SparseMatrix& matrix);

/// Coordinate dump, one "row col re im" line per stored entry (0-based).
void write_coo(const SparseMatrix& matrix, std::ostream& out);

}  // namespace hdgfwi
