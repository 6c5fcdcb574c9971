#pragma once

#include <cstddef>
#include <vector>

namespace affine_cdo {

/// Gauss-Legendre rule on the reference interval [-1, 1].
///
/// Rules are computed once per order by Newton iteration on the Legendre recurrence and
/// cached; `rule(n)` is safe to call from several threads.
class GaussLegendre {
 public:
  static const GaussLegendre& rule(std::size_t n);

  std::size_t size() const { return nodes_.size(); }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }

  /// Row-major n x n matrix S with S[k*n + l] = integral over [-1, node_k] of the l-th
  /// Lagrange basis polynomial through the nodes. Multiplying nodal values by S gives the
  /// running integral at every node, exact for polynomials of degree < n.
  const std::vector<double>& cumulative_matrix() const { return cumulative_; }

  /// Integral of f over [a, b].
  template <class F>
  double integrate(F&& f, double a, double b) const {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (b + a);
    double sum = 0.0;
    for (std::size_t k = 0; k < nodes_.size(); ++k) sum += weights_[k] * f(mid + half * nodes_[k]);
    return half * sum;
  }

  /// Composite rule with `panels` equal sub-intervals.
  template <class F>
  double integrate(F&& f, double a, double b, std::size_t panels) const {
    double sum = 0.0;
    const double h = (b - a) / static_cast<double>(panels);
    for (std::size_t p = 0; p < panels; ++p) sum += integrate(f, a + p * h, a + (p + 1) * h);
    return sum;
  }

 private:
  explicit GaussLegendre(std::size_t n);

  std::vector<double> nodes_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
};

/// Nodes and weights of a rule mapped onto [a, b], appended to the output vectors.
void append_mapped_nodes(const GaussLegendre& rule, double a, double b, std::vector<double>& nodes,
                         std::vector<double>& weights);

}  // namespace affine_cdo
