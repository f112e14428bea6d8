#include "mehaz/rates.hpp"

#include <array>
#include <cmath>
#include <utility>

#include "mehaz/error.hpp"

namespace mehaz {

namespace {

constexpr std::array<std::pair<RateRegime, const char*>, 10> kNames{{
    {RateRegime::SobolevOrdinarySlow, "sobolev-ordinary-slow"},
    {RateRegime::SobolevOrdinaryParametric, "sobolev-ordinary-parametric"},
    {RateRegime::SobolevSuper, "sobolev-super"},
    {RateRegime::SmoothOrdinary, "smooth-ordinary"},
    {RateRegime::SmoothSuperSlower, "smooth-super-r<rho"},
    {RateRegime::EqualSmallerD, "smooth-super-r=rho-d<delta"},
    {RateRegime::EqualSameDSlow, "smooth-super-r=rho-d=delta-slow"},
    {RateRegime::EqualSameDParametric, "smooth-super-r=rho-d=delta-parametric"},
    {RateRegime::EqualLargerD, "smooth-super-r=rho-d>delta"},
    {RateRegime::SmoothSuperFaster, "smooth-super-r>rho"},
}};

bool same(double x, double y) { return std::abs(x - y) <= 1e-12 * std::max(1.0, std::abs(y)); }

double negative_part(double x) { return x <= 0.0 ? x : 0.0; }

void check(const SmoothnessClass& psi, const NoiseSmoothness& noise) {
  auto fail = [](const char* what) { throw DomainError(std::string("rate_spec: ") + what); };
  if (!(psi.r >= 0.0 && psi.r <= 2.0) || !(noise.rho >= 0.0 && noise.rho <= 2.0))
    fail("exponents r and rho must lie in [0, 2]");
  if (!std::isfinite(psi.a) || !std::isfinite(psi.d) || !std::isfinite(noise.alpha) || !std::isfinite(noise.delta))
    fail("smoothness parameters must be finite");
  if (psi.r == 0.0 && psi.d != 0.0) fail("r = 0 requires d = 0");
  if (psi.r == 0.0 && !(psi.a > 0.5)) fail("r = 0 requires a > 1/2");
  if (psi.r > 0.0 && !(psi.d > 0.0)) fail("r > 0 requires d > 0");
  if (noise.rho == 0.0 && !(noise.alpha > 0.0)) fail("ordinary smooth noise requires alpha > 0");
  if (noise.rho > 0.0 && !(noise.delta > 0.0)) fail("super smooth noise requires delta > 0");
}

}  // namespace

std::string to_string(RateRegime regime) {
  for (const auto& [r, name] : kNames)
    if (r == regime) return name;
  return "unknown";
}

RateRegime parse_regime(const std::string& name) {
  for (const auto& [r, n] : kNames)
    if (name == n) return r;
  throw DomainError("unknown rate regime '" + name + "'");
}

double rate_exponent_a(double a, double r, double rho) {
  if (!(rho > 0.0)) throw DomainError("rate_exponent_a: rho must be positive");
  return (-2.0 * a + 1.0 - r + negative_part(1.0 - r)) / rho;
}

double RateSpec::value(double n) const {
  if (!(n >= 3.0)) throw DomainError("rate_lookup: n must be at least 3");
  const double logn = std::log(n);
  double logv = log_power * std::log(logn) - poly_power * logn;
  if (exp_scale != 0.0) logv -= exp_scale * std::pow(logn / log_divisor, exp_power);
  return std::exp(logv);
}

RateSpec rate_spec(const SmoothnessClass& psi, const NoiseSmoothness& noise) {
  check(psi, noise);
  RateSpec s{psi, noise};
  const double a = psi.a, d = psi.d, r = psi.r;
  const double alpha = noise.alpha, delta = noise.delta, rho = noise.rho;
  const bool fast_a = a >= alpha + 0.5;
  auto parametric = [&](RateRegime regime) {
    s.regime = regime;
    s.poly_power = 1.0;
  };
  if (r == 0.0 && rho == 0.0) {
    if (fast_a) {
      parametric(RateRegime::SobolevOrdinaryParametric);
    } else {
      s.regime = RateRegime::SobolevOrdinarySlow;
      s.poly_power = (2.0 * a - 1.0) / (2.0 * alpha);
    }
  } else if (r == 0.0) {
    s.regime = RateRegime::SobolevSuper;
    s.log_power = -(2.0 * a - 1.0) / rho;
  } else if (rho == 0.0) {
    parametric(RateRegime::SmoothOrdinary);
  } else if (same(r, rho)) {
    if (same(d, delta)) {
      if (fast_a) {
        parametric(RateRegime::EqualSameDParametric);
      } else {
        s.regime = RateRegime::EqualSameDSlow;
        s.log_power = (2.0 * alpha - 2.0 * a + 1.0) / r;
        s.poly_power = 1.0;
      }
    } else if (d < delta) {
      s.regime = RateRegime::EqualSmallerD;
      s.log_power = rate_exponent_a(a, r, rho) + 2.0 * alpha * d / (delta * r);
      s.poly_power = d / delta;
    } else {
      parametric(RateRegime::EqualLargerD);
    }
  } else if (r < rho) {
    s.regime = RateRegime::SmoothSuperSlower;
    s.log_power = rate_exponent_a(a, r, rho);
    s.exp_scale = 2.0 * d;
    s.log_divisor = 2.0 * delta;
    s.exp_power = r / rho;
  } else {
    parametric(RateRegime::SmoothSuperFaster);
  }
  return s;
}

RateLookup rate_lookup(const SmoothnessClass& psi, const NoiseSmoothness& noise, double n) {
  const auto s = rate_spec(psi, noise);
  return {s.regime, s.value(n)};
}

bool parametric_rate_predicate(const SmoothnessClass& psi, const NoiseSmoothness& noise) {
  return rate_spec(psi, noise).parametric();
}

}  // namespace mehaz
