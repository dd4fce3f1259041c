#include "hdgfwi/sparse_lu.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <set>

#include <Eigen/OrderingMethods>
#include <Eigen/SparseLU>

namespace hdgfwi {

namespace {

std::atomic<std::uint64_t> g_factorizations{0};

// Gilbert-Peierls left-looking LU: P A Q = L U, L unit lower with the
// diagonal stored first in each column, U upper with the diagonal last.
class NativeLU final : public FactorizationBackend {
 public:
  NativeLU(const SparseMatrix& a, double threshold) : n_(static_cast<int>(a.rows())) {
    q_ = minimum_degree_ordering(a);
    factorize(a, threshold);
  }

  void solve_in_place(CVector& b) const override {
    CVector y(n_);
    for (int i = 0; i < n_; ++i) y[pinv_[i]] = b[i];
    for (int j = 0; j < n_; ++j) {
      const Complex yj = y[j];
      if (yj == Complex(0.0)) continue;
      for (int p = lp_[j] + 1; p < lp_[j + 1]; ++p) y[li_[p]] -= lx_[p] * yj;
    }
    for (int j = n_ - 1; j >= 0; --j) {
      y[j] /= ux_[up_[j + 1] - 1];
      const Complex yj = y[j];
      if (yj == Complex(0.0)) continue;
      for (int p = up_[j]; p < up_[j + 1] - 1; ++p) y[ui_[p]] -= ux_[p] * yj;
    }
    for (int k = 0; k < n_; ++k) b[q_[k]] = y[k];
  }

  void solve_adjoint_in_place(CVector& c) const override {
    CVector z(n_);
    for (int k = 0; k < n_; ++k) z[k] = c[q_[k]];
    for (int j = 0; j < n_; ++j) {
      Complex s = z[j];
      for (int p = up_[j]; p < up_[j + 1] - 1; ++p) s -= std::conj(ux_[p]) * z[ui_[p]];
      z[j] = s / std::conj(ux_[up_[j + 1] - 1]);
    }
    for (int j = n_ - 1; j >= 0; --j) {
      Complex s = z[j];
      for (int p = lp_[j] + 1; p < lp_[j + 1]; ++p) s -= std::conj(lx_[p]) * z[li_[p]];
      z[j] = s;
    }
    for (int i = 0; i < n_; ++i) c[i] = z[pinv_[i]];
  }

  FactorizationStats stats() const override {
    FactorizationStats s;
    s.dimension = static_cast<std::size_t>(n_);
    s.l_nonzeros = lx_.size();
    s.u_nonzeros = ux_.size();
    s.memory_bytes = (lx_.size() + ux_.size()) * (sizeof(Complex) + sizeof(int)) +
                     (lp_.size() + up_.size() + q_.size() + pinv_.size()) * sizeof(int);
    return s;
  }

 private:
  // Depth-first search from row j through the columns of L computed so far;
  // finished nodes are pushed onto xi[top..n).
  int dfs(int j, int top, std::vector<int>& xi, std::vector<int>& pstack, std::vector<char>& marked) const {
    int head = 0;
    xi[0] = j;
    while (head >= 0) {
      j = xi[head];
      const int jnew = pinv_[j];
      if (!marked[j]) {
        marked[j] = 1;
        pstack[head] = jnew < 0 ? 0 : lp_[jnew];
      }
      bool done = true;
      const int p2 = jnew < 0 ? 0 : lp_[jnew + 1];
      for (int p = pstack[head]; p < p2; ++p) {
        const int i = li_[p];
        if (marked[i]) continue;
        pstack[head] = p;
        xi[++head] = i;
        done = false;
        break;
      }
      if (done) {
        --head;
        xi[--top] = j;
      }
    }
    return top;
  }

  void factorize(const SparseMatrix& a, double threshold) {
    const int* ap = a.outerIndexPtr();
    const int* ai = a.innerIndexPtr();
    const Complex* ax = a.valuePtr();
    pinv_.assign(n_, -1);
    lp_.assign(n_ + 1, 0);
    up_.assign(n_ + 1, 0);
    lx_.reserve(4 * a.nonZeros() + n_);
    li_.reserve(4 * a.nonZeros() + n_);
    ux_.reserve(4 * a.nonZeros() + n_);
    ui_.reserve(4 * a.nonZeros() + n_);
    CVector x = CVector::Zero(n_);
    std::vector<int> xi(n_);
    std::vector<int> pstack(n_);
    std::vector<char> marked(n_, 0);
    // Column pointer lp_[k + 1] is only read for completed columns.
    for (int k = 0; k < n_; ++k) {
      lp_[k] = static_cast<int>(lx_.size());
      up_[k] = static_cast<int>(ux_.size());
      lp_[k + 1] = lp_[k];
      const int col = q_[k];
      // Symbolic reach of column col through L.
      int top = n_;
      for (int p = ap[col]; p < ap[col + 1]; ++p) {
        if (!marked[ai[p]]) top = dfs(ai[p], top, xi, pstack, marked);
      }
      for (int p = top; p < n_; ++p) marked[xi[p]] = 0;
      // Numeric sparse triangular solve x = L \ A(:, col).
      for (int p = top; p < n_; ++p) x[xi[p]] = 0.0;
      for (int p = ap[col]; p < ap[col + 1]; ++p) x[ai[p]] = ax[p];
      for (int px = top; px < n_; ++px) {
        const int j = xi[px];
        const int jj = pinv_[j];
        if (jj < 0) continue;
        const Complex xj = x[j];
        for (int p = lp_[jj] + 1; p < lp_[jj + 1]; ++p) x[li_[p]] -= lx_[p] * xj;
      }
      int ipiv = -1;
      double best = -1.0;
      for (int p = top; p < n_; ++p) {
        const int i = xi[p];
        if (pinv_[i] < 0) {
          const double t = std::abs(x[i]);
          if (t > best) {
            best = t;
            ipiv = i;
          }
        } else {
          ui_.push_back(pinv_[i]);
          ux_.push_back(x[i]);
        }
      }
      if (ipiv < 0 || !(best > 0.0) || !std::isfinite(best)) {
        throw NumericalError("sparse LU: numerically singular pivot at trace dof index " +
                             std::to_string(col));
      }
      if (pinv_[col] < 0 && std::abs(x[col]) >= threshold * best) ipiv = col;
      const Complex pivot = x[ipiv];
      ui_.push_back(k);
      ux_.push_back(pivot);
      pinv_[ipiv] = k;
      li_.push_back(ipiv);
      lx_.push_back(1.0);
      for (int p = top; p < n_; ++p) {
        const int i = xi[p];
        if (pinv_[i] < 0) {
          li_.push_back(i);
          lx_.push_back(x[i] / pivot);
        }
        x[i] = 0.0;
      }
      lp_[k + 1] = static_cast<int>(lx_.size());
    }
    lp_[n_] = static_cast<int>(lx_.size());
    up_[n_] = static_cast<int>(ux_.size());
    for (int& i : li_) i = pinv_[i];
  }

  int n_;
  std::vector<int> q_;
  std::vector<int> pinv_;
  std::vector<int> lp_, li_, up_, ui_;
  std::vector<Complex> lx_, ux_;
};

class EigenLU final : public FactorizationBackend {
 public:
  explicit EigenLU(const SparseMatrix& a) {
    lu_.analyzePattern(a);
    lu_.factorize(a);
    if (lu_.info() != Eigen::Success) {
      throw NumericalError("sparse LU (Eigen backend): " + lu_.lastErrorMessage());
    }
  }
  void solve_in_place(CVector& b) const override { b = lu_.solve(b); }
  void solve_adjoint_in_place(CVector& c) const override { c = lu_.adjoint().solve(c); }
  FactorizationStats stats() const override {
    FactorizationStats s;
    s.dimension = static_cast<std::size_t>(lu_.rows());
    s.l_nonzeros = static_cast<std::size_t>(lu_.nnzL());
    s.u_nonzeros = static_cast<std::size_t>(lu_.nnzU());
    s.memory_bytes = (s.l_nonzeros + s.u_nonzeros) * (sizeof(Complex) + sizeof(int));
    return s;
  }

 private:
  mutable Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
};

}  // namespace

std::uint64_t factorization_count() { return g_factorizations.load(); }

Factorization::Factorization(const SparseMatrix& matrix, const FactorizationOptions& options)
    : dimension_(static_cast<std::size_t>(matrix.rows())) {
  if (matrix.rows() != matrix.cols()) throw StructuralError("factorize: matrix is not square");
  SparseMatrix a = matrix;
  a.makeCompressed();
  if (options.backend == SolverBackend::kEigen) {
    backend_ = std::make_unique<EigenLU>(a);
  } else {
    backend_ = std::make_unique<NativeLU>(a, options.pivot_threshold);
  }
  stats_ = backend_->stats();
  stats_.matrix_nonzeros = static_cast<std::size_t>(a.nonZeros());
  ++g_factorizations;
}

void Factorization::check(Eigen::Index n) const {
  if (static_cast<std::size_t>(n) != dimension_) {
    throw StructuralError("solve: right-hand side has length " + std::to_string(n) + ", expected " +
                          std::to_string(dimension_));
  }
}

CVector Factorization::solve(const CVector& b) const {
  check(b.size());
  CVector x = b;
  if (dimension_ > 0) backend_->solve_in_place(x);
  return x;
}

std::vector<CVector> Factorization::solve_many(const std::vector<CVector>& rhs) const {
  std::vector<CVector> out;
  out.reserve(rhs.size());
  for (const CVector& b : rhs) out.push_back(solve(b));
  return out;
}

CMatrix Factorization::solve_many(const CMatrix& rhs) const {
  check(rhs.rows());
  CMatrix out(rhs.rows(), rhs.cols());
  for (Eigen::Index j = 0; j < rhs.cols(); ++j) {
    CVector x = rhs.col(j);
    if (dimension_ > 0) backend_->solve_in_place(x);
    out.col(j) = x;
  }
  return out;
}

CVector Factorization::solve_adjoint(const CVector& c) const {
  check(c.size());
  CVector y = c;
  if (dimension_ > 0) backend_->solve_adjoint_in_place(y);
  return y;
}

std::vector<int> minimum_degree_ordering(const SparseMatrix& matrix) {
  const int n = static_cast<int>(matrix.rows());
  std::vector<std::vector<int>> adj(n);
  for (int j = 0; j < matrix.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(matrix, j); it; ++it) {
      const int i = static_cast<int>(it.row());
      if (i == j) continue;
      adj[i].push_back(j);
      adj[j].push_back(i);
    }
  }
  for (auto& a : adj) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  std::set<std::pair<int, int>> queue;
  for (int i = 0; i < n; ++i) queue.emplace(static_cast<int>(adj[i].size()), i);
  std::vector<int> order;
  order.reserve(n);
  std::vector<int> merged;
  while (!queue.empty()) {
    const int v = queue.begin()->second;
    queue.erase(queue.begin());
    order.push_back(v);
    const std::vector<int> clique = std::move(adj[v]);
    adj[v].clear();
    for (int u : clique) {
      queue.erase({static_cast<int>(adj[u].size()), u});
      merged.clear();
      std::set_union(adj[u].begin(), adj[u].end(), clique.begin(), clique.end(), std::back_inserter(merged));
      merged.erase(std::remove_if(merged.begin(), merged.end(), [&](int w) { return w == u || w == v; }),
                   merged.end());
      adj[u].swap(merged);
      queue.emplace(static_cast<int>(adj[u].size()), u);
    }
  }
  return order;
}

void write_coo(const SparseMatrix& matrix, std::ostream& out) {
  out << std::setprecision(17);
  for (int j = 0; j < matrix.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(matrix, j); it; ++it) {
      out << it.row() << ' ' << it.col() << ' ' << it.value().real() << ' ' << it.value().imag() << '\n';
    }
  }
}

}  // namespace hdgfwi
