#include "hdgfwi/quadrature.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

namespace hdgfwi {

void gauss_legendre_unit(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    // Newton on P_n from the Chebyshev-like initial guess.
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) {
        p1 = x;
        p0 = 1.0;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    nodes[n - 1 - i] = 0.5 * (x + 1.0);
    weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
}

namespace {

QuadratureRule build_rule(int degree, int dim) {
  QuadratureRule rule;
  rule.dim = dim;
  rule.degree = degree;
  std::vector<double> x;
  std::vector<double> w;
  if (dim == 1) {
    gauss_legendre_unit((degree + 2) / 2, x, w);
    for (std::size_t i = 0; i < x.size(); ++i) {
      rule.points.emplace_back(x[i], 0.0, 0.0);
      rule.weights.push_back(w[i]);
    }
    return rule;
  }
  if (dim == 2) {
    // Duffy map (u, v) -> (u (1 - v), v) with Jacobian (1 - v).
    gauss_legendre_unit((degree + 3) / 2, x, w);
    for (std::size_t j = 0; j < x.size(); ++j) {
      for (std::size_t i = 0; i < x.size(); ++i) {
        rule.points.emplace_back(x[i] * (1.0 - x[j]), x[j], 0.0);
        rule.weights.push_back(w[i] * w[j] * (1.0 - x[j]));
      }
    }
    return rule;
  }
  // (u, v, t) -> (u (1 - v)(1 - t), v (1 - t), t), Jacobian (1 - v)(1 - t)^2.
  gauss_legendre_unit((degree + 4) / 2, x, w);
  for (std::size_t k = 0; k < x.size(); ++k) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      for (std::size_t i = 0; i < x.size(); ++i) {
        rule.points.emplace_back(x[i] * (1.0 - x[j]) * (1.0 - x[k]), x[j] * (1.0 - x[k]), x[k]);
        rule.weights.push_back(w[i] * w[j] * w[k] * (1.0 - x[j]) * (1.0 - x[k]) * (1.0 - x[k]));
      }
    }
  }
  return rule;
}

}  // namespace

const QuadratureRule& quadrature_for(int degree, int simplex_dim) {
  if (degree < 0) degree = 0;
  if (degree > kMaxQuadratureDegree) {
    throw ConfigError("quadrature degree " + std::to_string(degree) + " exceeds supported maximum " +
                      std::to_string(kMaxQuadratureDegree));
  }
  if (simplex_dim < 1 || simplex_dim > 3) throw ConfigError("quadrature: simplex dimension must be 1..3");
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<QuadratureRule>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[{degree, simplex_dim}];
  if (!slot) slot = std::make_unique<QuadratureRule>(build_rule(degree, simplex_dim));
  return *slot;
}

const QuadratureRule& quadrature_for(int degree, IntegrationDomain domain, int mesh_dim) {
  return quadrature_for(degree, domain == IntegrationDomain::kCell ? mesh_dim : mesh_dim - 1);
}

}  // namespace hdgfwi
