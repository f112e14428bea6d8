#pragma once

#include <string>

#include "mehaz/model.hpp"

namespace mehaz {

/// Cells of the rate table, indexed by the smoothness of W f_beta (a, d, r)
/// and of the noise (alpha, delta, rho).
enum class RateRegime {
  SobolevOrdinarySlow,        // r = 0, rho = 0, a < alpha + 1/2
  SobolevOrdinaryParametric,  // r = 0, rho = 0, a >= alpha + 1/2
  SobolevSuper,               // r = 0, rho > 0
  SmoothOrdinary,             // r > 0, rho = 0
  SmoothSuperSlower,          // 0 < r < rho
  EqualSmallerD,              // r = rho, d < delta
  EqualSameDSlow,             // r = rho, d = delta, a < alpha + 1/2
  EqualSameDParametric,       // r = rho, d = delta, a >= alpha + 1/2
  EqualLargerD,               // r = rho, d > delta
  SmoothSuperFaster,          // r > rho > 0
};

std::string to_string(RateRegime regime);
RateRegime parse_regime(const std::string& name);

/// (-2a + 1 - r + (1 - r)_-) / rho.
double rate_exponent_a(double a, double r, double rho);

/// phi_n^2 = (log n)^log_power * n^-poly_power * exp(-exp_scale * (log n / log_divisor)^exp_power).
struct RateSpec {
  SmoothnessClass psi;
  NoiseSmoothness noise;
  RateRegime regime = RateRegime::SmoothOrdinary;
  double log_power = 0.0;
  double poly_power = 0.0;
  double exp_scale = 0.0;
  double log_divisor = 1.0;
  double exp_power = 0.0;

  bool parametric() const noexcept { return poly_power == 1.0 && log_power == 0.0 && exp_scale == 0.0; }
  double value(double n) const;
};

/// Assigns the unique cell; throws DomainError for inadmissible classes
/// (exponents outside [0, 2], r = 0 with d != 0 or a <= 1/2, r > 0 with d <= 0,
/// rho = 0 with alpha <= 0, rho > 0 with delta <= 0).
RateSpec rate_spec(const SmoothnessClass& psi, const NoiseSmoothness& noise);

struct RateLookup {
  RateRegime regime;
  double value;
};

/// Requires n >= 3.
RateLookup rate_lookup(const SmoothnessClass& psi, const NoiseSmoothness& noise, double n);

bool parametric_rate_predicate(const SmoothnessClass& psi, const NoiseSmoothness& noise);

}  // namespace mehaz
