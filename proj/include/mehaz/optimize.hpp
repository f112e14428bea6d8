#pragma once

#include <cstdint>
#include <functional>

#include "mehaz/model.hpp"

namespace mehaz {

/// Axis-aligned box lo <= x <= hi.
struct Box {
  Vec lo;
  Vec hi;

  Eigen::Index dim() const noexcept { return lo.size(); }
  Vec center() const { return 0.5 * (lo + hi); }
  Vec clamp(const Vec& x) const { return x.cwiseMax(lo).cwiseMin(hi); }
  bool contains(const Vec& x) const;
  void validate() const;
};

struct MinimizeOptions {
  /// Latin-hypercube starts in addition to the box centre.
  int starts = 5;
  std::uint64_t seed = 0;
  int max_iterations = 4000;
  double x_tol = 1e-7;
  double f_tol = 1e-10;
};

struct MinimizeResult {
  Vec x;
  double value = 0.0;
  int iterations = 0;
  int restarts_used = 0;
  int evaluations = 0;
  bool converged = false;
};

/// Box-projected Nelder-Mead from the box centre and `starts` Latin-hypercube
/// points; returns the best local minimum. Exceptions and non-finite values
/// count as +infinity. Throws NumericalError when every start fails.
MinimizeResult minimize(const std::function<double(const Vec&)>& f, const Box& box, const MinimizeOptions& opt = {});

}  // namespace mehaz
