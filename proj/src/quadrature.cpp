#include "affine_cdo/quadrature.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace affine_cdo {

namespace {

// Barycentric weights for Lagrange interpolation through `x`.
std::vector<double> barycentric_weights(const std::vector<double>& x) {
  std::vector<double> w(x.size(), 1.0);
  for (std::size_t j = 0; j < x.size(); ++j)
    for (std::size_t k = 0; k < x.size(); ++k)
      if (k != j) w[j] /= (x[j] - x[k]);
  return w;
}

double lagrange_basis(const std::vector<double>& x, const std::vector<double>& bw, std::size_t l,
                      double s) {
  double num = bw[l];
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (k == l) continue;
    num *= (s - x[k]);
  }
  return num;
}

}  // namespace

GaussLegendre::GaussLegendre(std::size_t n) : nodes_(n), weights_(n), cumulative_(n * n) {
  if (n == 0) throw std::invalid_argument("Gauss-Legendre rule needs at least one node");
  const std::size_t m = (n + 1) / 2;
  for (std::size_t i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0;
      double p2 = 0.0;
      for (std::size_t j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / static_cast<double>(j);
      }
      pp = static_cast<double>(n) * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < 1e-15) break;
    }
    nodes_[i] = -z;
    nodes_[n - 1 - i] = z;
    weights_[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    weights_[n - 1 - i] = weights_[i];
  }

  // Running integrals of the Lagrange basis; each basis polynomial has degree n-1 so an
  // n-point rule on [-1, node_k] integrates it exactly.
  const auto bw = barycentric_weights(nodes_);
  for (std::size_t k = 0; k < n; ++k) {
    const double half = 0.5 * (nodes_[k] + 1.0);
    const double mid = 0.5 * (nodes_[k] - 1.0);
    for (std::size_t l = 0; l < n; ++l) {
      double sum = 0.0;
      for (std::size_t q = 0; q < n; ++q) sum += weights_[q] * lagrange_basis(nodes_, bw, l, mid + half * nodes_[q]);
      cumulative_[k * n + l] = half * sum;
    }
  }
}

const GaussLegendre& GaussLegendre::rule(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, std::unique_ptr<GaussLegendre>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, std::unique_ptr<GaussLegendre>(new GaussLegendre(n))).first;
  return *it->second;
}

void append_mapped_nodes(const GaussLegendre& rule, double a, double b, std::vector<double>& nodes,
                         std::vector<double>& weights) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  for (std::size_t k = 0; k < rule.size(); ++k) {
    nodes.push_back(mid + half * rule.nodes()[k]);
    weights.push_back(half * rule.weights()[k]);
  }
}

}  // namespace affine_cdo
