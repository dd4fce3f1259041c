#include "hdgfwi/basis.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

namespace hdgfwi {

namespace {

// Orthonormal Jacobi polynomial P_n^{(alpha,beta)} on [-1, 1].
double jacobi(double x, double alpha, double beta, int n) {
  const double gamma0 = std::pow(2.0, alpha + beta + 1.0) / (alpha + beta + 1.0) *
                        std::tgamma(alpha + 1.0) * std::tgamma(beta + 1.0) /
                        std::tgamma(alpha + beta + 1.0);
  double p_prev = 1.0 / std::sqrt(gamma0);
  if (n == 0) return p_prev;
  const double gamma1 = (alpha + 1.0) * (beta + 1.0) / (alpha + beta + 3.0) * gamma0;
  double p = ((alpha + beta + 2.0) * x / 2.0 + (alpha - beta) / 2.0) / std::sqrt(gamma1);
  double a_old = 2.0 / (2.0 + alpha + beta) *
                 std::sqrt((alpha + 1.0) * (beta + 1.0) / (alpha + beta + 3.0));
  for (int i = 1; i < n; ++i) {
    const double h1 = 2.0 * i + alpha + beta;
    const double a_new = 2.0 / (h1 + 2.0) *
                         std::sqrt((i + 1.0) * (i + 1.0 + alpha + beta) * (i + 1.0 + alpha) *
                                   (i + 1.0 + beta) / (h1 + 1.0) / (h1 + 3.0));
    const double b_new = -(alpha * alpha - beta * beta) / h1 / (h1 + 2.0);
    const double p_next = (-a_old * p_prev + (x - b_new) * p) / a_new;
    p_prev = p;
    p = p_next;
    a_old = a_new;
  }
  return p;
}

double jacobi_derivative(double x, double alpha, double beta, int n) {
  if (n == 0) return 0.0;
  return std::sqrt(n * (n + alpha + beta + 1.0)) * jacobi(x, alpha + 1.0, beta + 1.0, n - 1);
}

double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

}  // namespace

int dof_count(int order, int dim) {
  if (order < 0) throw ConfigError("polynomial order must be >= 0");
  switch (dim) {
    case 1:
      return order + 1;
    case 2:
      return (order + 1) * (order + 2) / 2;
    case 3:
      return (order + 1) * (order + 2) * (order + 3) / 6;
    default:
      throw ConfigError("simplex dimension must be 1, 2 or 3");
  }
}

NodalBasis::NodalBasis(int dim, int order) : dim_(dim), order_(order), size_(dof_count(order, dim)) {
  if (order == 0) {
    nodes_.push_back(Point::Constant(1.0 / (dim + 1)));
    if (dim < 3) nodes_[0].z() = 0.0;
    if (dim < 2) nodes_[0].y() = 0.0;
  }
  // Equispaced nodes and modes share the same multi-index enumeration.
  for (int k = 0; k <= (dim == 3 ? order : 0); ++k) {
    for (int j = 0; j <= (dim >= 2 ? order - k : 0); ++j) {
      for (int i = 0; i <= order - j - k; ++i) {
        modes_.push_back({i, j, k});
        if (order > 0) {
          nodes_.emplace_back(static_cast<double>(i) / order, static_cast<double>(j) / order,
                              static_cast<double>(k) / order);
        }
      }
    }
  }
  RMatrix vandermonde(size_, size_);
  for (int n = 0; n < size_; ++n) vandermonde.row(n) = modal_values(nodes_[n]).transpose();
  vinv_ = vandermonde.inverse();
}

RVector NodalBasis::modal_values(const Point& ref) const {
  RVector psi(size_);
  if (dim_ == 1) {
    const double r = 2.0 * ref.x() - 1.0;
    for (int m = 0; m < size_; ++m) psi[m] = std::sqrt(2.0) * jacobi(r, 0, 0, modes_[m][0]);
    return psi;
  }
  if (dim_ == 2) {
    const double r = 2.0 * ref.x() - 1.0;
    const double s = 2.0 * ref.y() - 1.0;
    const double a = std::abs(1.0 - s) > 1e-14 ? 2.0 * (1.0 + r) / (1.0 - s) - 1.0 : -1.0;
    const double b = s;
    for (int m = 0; m < size_; ++m) {
      const int i = modes_[m][0];
      const int j = modes_[m][1];
      // Orthonormal on the [-1,1] triangle (area 2); rescale to area 1/2.
      psi[m] = 2.0 * std::sqrt(2.0) * jacobi(a, 0, 0, i) * jacobi(b, 2 * i + 1, 0, j) * ipow(1.0 - b, i);
    }
    return psi;
  }
  const double r = 2.0 * ref.x() - 1.0;
  const double s = 2.0 * ref.y() - 1.0;
  const double t = 2.0 * ref.z() - 1.0;
  const double a = std::abs(s + t) > 1e-14 ? 2.0 * (1.0 + r) / (-s - t) - 1.0 : -1.0;
  const double b = std::abs(1.0 - t) > 1e-14 ? 2.0 * (1.0 + s) / (1.0 - t) - 1.0 : -1.0;
  const double c = t;
  for (int m = 0; m < size_; ++m) {
    const int i = modes_[m][0];
    const int j = modes_[m][1];
    const int k = modes_[m][2];
    psi[m] = 2.0 * std::sqrt(2.0) * jacobi(a, 0, 0, i) * jacobi(b, 2 * i + 1, 0, j) *
             jacobi(c, 2 * (i + j) + 2, 0, k) * ipow(1.0 - b, i) * ipow(1.0 - c, i + j) *
             std::sqrt(8.0);
  }
  return psi;
}

RMatrix NodalBasis::modal_gradients(const Point& ref) const {
  RMatrix grad(size_, dim_);
  if (dim_ == 1) {
    const double r = 2.0 * ref.x() - 1.0;
    for (int m = 0; m < size_; ++m) grad(m, 0) = 2.0 * std::sqrt(2.0) * jacobi_derivative(r, 0, 0, modes_[m][0]);
    return grad;
  }
  if (dim_ == 2) {
    const double r = 2.0 * ref.x() - 1.0;
    const double s = 2.0 * ref.y() - 1.0;
    const double a = std::abs(1.0 - s) > 1e-14 ? 2.0 * (1.0 + r) / (1.0 - s) - 1.0 : -1.0;
    const double b = s;
    for (int m = 0; m < size_; ++m) {
      const int id = modes_[m][0];
      const int jd = modes_[m][1];
      const double fa = jacobi(a, 0, 0, id);
      const double dfa = jacobi_derivative(a, 0, 0, id);
      const double gb = jacobi(b, 2 * id + 1, 0, jd);
      const double dgb = jacobi_derivative(b, 2 * id + 1, 0, jd);
      const double hb = 0.5 * (1.0 - b);
      double dr = dfa * gb;
      double ds = dfa * (gb * 0.5 * (1.0 + a));
      if (id > 0) {
        dr *= ipow(hb, id - 1);
        ds *= ipow(hb, id - 1);
      }
      double tmp = dgb * ipow(hb, id);
      if (id > 0) tmp -= 0.5 * id * gb * ipow(hb, id - 1);
      ds += fa * tmp;
      const double scale = std::pow(2.0, id + 0.5) * 2.0 * 2.0;  // area rescale and d/dx = 2 d/dr
      grad(m, 0) = dr * scale;
      grad(m, 1) = ds * scale;
    }
    return grad;
  }
  const double r = 2.0 * ref.x() - 1.0;
  const double s = 2.0 * ref.y() - 1.0;
  const double t = 2.0 * ref.z() - 1.0;
  const double a = std::abs(s + t) > 1e-14 ? 2.0 * (1.0 + r) / (-s - t) - 1.0 : -1.0;
  const double b = std::abs(1.0 - t) > 1e-14 ? 2.0 * (1.0 + s) / (1.0 - t) - 1.0 : -1.0;
  const double c = t;
  for (int m = 0; m < size_; ++m) {
    const int id = modes_[m][0];
    const int jd = modes_[m][1];
    const int kd = modes_[m][2];
    const double fa = jacobi(a, 0, 0, id);
    const double dfa = jacobi_derivative(a, 0, 0, id);
    const double gb = jacobi(b, 2 * id + 1, 0, jd);
    const double dgb = jacobi_derivative(b, 2 * id + 1, 0, jd);
    const double hc = jacobi(c, 2 * (id + jd) + 2, 0, kd);
    const double dhc = jacobi_derivative(c, 2 * (id + jd) + 2, 0, kd);
    const double hb = 0.5 * (1.0 - b);
    const double hcc = 0.5 * (1.0 - c);
    double dr = dfa * gb * hc;
    if (id > 0) dr *= ipow(hb, id - 1);
    if (id + jd > 0) dr *= ipow(hcc, id + jd - 1);
    double ds = 0.5 * (1.0 + a) * dr;
    double tmp = dgb * ipow(hb, id);
    if (id > 0) tmp -= 0.5 * id * gb * ipow(hb, id - 1);
    if (id + jd > 0) tmp *= ipow(hcc, id + jd - 1);
    tmp = fa * tmp * hc;
    ds += tmp;
    double dt = 0.5 * (1.0 + a) * dr + 0.5 * (1.0 + b) * tmp;
    tmp = dhc * ipow(hcc, id + jd);
    if (id + jd > 0) tmp -= 0.5 * (id + jd) * hc * ipow(hcc, id + jd - 1);
    tmp = fa * gb * tmp * ipow(hb, id);
    dt += tmp;
    const double scale = std::pow(2.0, 2 * id + jd + 1.5) * std::sqrt(8.0) * 2.0;
    grad(m, 0) = dr * scale;
    grad(m, 1) = ds * scale;
    grad(m, 2) = dt * scale;
  }
  return grad;
}

RVector NodalBasis::values(const Point& ref) const { return vinv_.transpose() * modal_values(ref); }

RMatrix NodalBasis::gradients(const Point& ref) const { return vinv_.transpose() * modal_gradients(ref); }

const NodalBasis& cached_basis(int dim, int order) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<NodalBasis>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[{dim, order}];
  if (!slot) slot = std::make_unique<NodalBasis>(dim, order);
  return *slot;
}

}  // namespace hdgfwi
