#pragma once

#include <cstddef>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

namespace mehaz {

/// Nodes and weights of a composite quadrature rule.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const noexcept { return nodes.size(); }

  template <class F>
  double integrate(F&& f) const {
    double sum = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) sum += weights[k] * f(nodes[k]);
    return sum;
  }
};

/// Composite Gauss-Legendre rule: `panels` equal panels on [a, b], `Order`
/// nodes per panel.
template <unsigned Order = 10>
QuadratureRule composite_gauss(double a, double b, std::size_t panels) {
  using rule = boost::math::quadrature::gauss<double, Order>;
  const auto& x = rule::abscissa();
  const auto& w = rule::weights();
  QuadratureRule out;
  out.nodes.reserve(panels * Order);
  out.weights.reserve(panels * Order);
  const double width = (b - a) / static_cast<double>(panels);
  for (std::size_t p = 0; p < panels; ++p) {
    const double lo = a + width * static_cast<double>(p);
    const double mid = lo + 0.5 * width;
    const double half = 0.5 * width;
    // boost stores the non-negative half of a symmetric rule; an odd order
    // carries the centre node first.
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] == 0.0) {
        out.nodes.push_back(mid);
        out.weights.push_back(w[i] * half);
        continue;
      }
      out.nodes.push_back(mid - half * x[i]);
      out.weights.push_back(w[i] * half);
      out.nodes.push_back(mid + half * x[i]);
      out.weights.push_back(w[i] * half);
    }
  }
  return out;
}

/// Composite rule over consecutive intervals given by sorted breakpoints.
template <unsigned Order = 20>
QuadratureRule composite_gauss(const std::vector<double>& breaks, std::size_t panels_per_interval) {
  QuadratureRule out;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (!(breaks[i + 1] > breaks[i])) continue;
    auto piece = composite_gauss<Order>(breaks[i], breaks[i + 1], panels_per_interval);
    out.nodes.insert(out.nodes.end(), piece.nodes.begin(), piece.nodes.end());
    out.weights.insert(out.weights.end(), piece.weights.begin(), piece.weights.end());
  }
  return out;
}

}  // namespace mehaz
