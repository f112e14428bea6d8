#pragma once

#include "mehaz/simulate.hpp"

namespace mehaz {

struct PopulationOptions {
  /// 20-point Gauss panels per interval between breakpoints.
  std::size_t z_panels = 16;
  std::size_t t_panels = 16;
};

/// Population least-squares criterion S(theta) under the true model of
/// `cfg`, by nested quadrature over the covariate law and [0, tau] of
/// int E[(eta f W^(1/2) - eta0 f0 W^(1/2))^2 Y] dt - int E[eta0^2 f0^2 W Y] dt,
/// with E[Y(t) | Z] = S_T(t | Z) S_C(t).
double population_criterion(const Theta& theta, const StudyConfig& cfg, const PopulationOptions& opt = {});

/// The first (non-negative) part of the decomposition above:
/// S(theta) - S(theta0).
double population_excess(const Theta& theta, const StudyConfig& cfg, const PopulationOptions& opt = {});

/// Hessian of S at theta0 from its three closed-form blocks.
Mat population_hessian(const StudyConfig& cfg, const PopulationOptions& opt = {});

}  // namespace mehaz
