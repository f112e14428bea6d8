#include "mehaz/fourier.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "mehaz/error.hpp"

namespace mehaz {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::size_t kNumericNodes = 16384;
constexpr unsigned kNumericOrder = 10;
// Largest phase t * width on one 10-point Gauss panel that keeps the
// relative error of the oscillatory factor below 1e-12.
constexpr double kMaxPanelPhase = 7.0;

double abs_tail(const FourierFunction& psi, double lo, double hi) {
  const auto rule = composite_gauss<20>(lo, hi, 32);
  return rule.integrate([&](double z) { return std::abs(psi.value(z)); });
}

}  // namespace

void FourierFunction::transform(std::span<const double> t, std::span<std::complex<double>> out) const {
  for (std::size_t k = 0; k < t.size(); ++k) out[k] = transform(t[k]);
}

double FourierFunction::extent() const { return tail_radius(*this); }

GaussianFunction::GaussianFunction(double s, double scale) : s_(s), scale_(scale) {
  if (!(s > 0.0)) throw DomainError("GaussianFunction: width must be positive");
}

double GaussianFunction::value(double z) const { return scale_ * std::exp(-0.5 * z * z / (s_ * s_)); }

std::complex<double> GaussianFunction::transform(double t) const {
  return scale_ * s_ * std::sqrt(2.0 * kPi) * std::exp(-0.5 * s_ * s_ * t * t);
}

double GaussianFunction::extent() const { return 7.5 * s_; }

double tail_radius(const FourierFunction& psi, double tol) {
  double mass = 0.0;
  for (double L = 1.0; L <= 1024.0; L *= 2.0) {
    const double inner = abs_tail(psi, -L, L);
    mass = std::max(mass, inner);
    const double tail = abs_tail(psi, L, 8.0 * L) + abs_tail(psi, -8.0 * L, -L);
    if (tail <= tol * std::max(1.0, mass)) return L;
  }
  std::ostringstream msg;
  msg << "tail mass of psi exceeds " << tol << " beyond |z| = 1024 (not integrable or too heavy-tailed)";
  throw NumericalError(msg.str());
}

// ---------------------------------------------------------- WeightedRisk

WeightedRisk::WeightedRisk(RelativeRisk risk, Vec beta, WeightFunction weight, int power, Derivative deriv,
                           FourierRoute route)
    : risk_(std::move(risk)), beta_(std::move(beta)), weight_(std::move(weight)), power_(power), deriv_(deriv) {
  if (power_ != 1 && power_ != 2) throw DomainError("WeightedRisk: power must be 1 or 2");
  risk_.check_beta(beta_);
  const int m = risk_.arity();
  if (deriv_.order < 0 || deriv_.order > 2 || (deriv_.order >= 1 && (deriv_.i < 0 || deriv_.i >= m)) ||
      (deriv_.order == 2 && (deriv_.j < 0 || deriv_.j >= m)))
    throw DomainError("WeightedRisk: derivative index out of range");

  const bool cauchy_one = weight_.is_one() && std::holds_alternative<risk::Cauchy2>(risk_.family());
  if (weight_.is_one() && !cauchy_one)
    throw DomainError("WeightedRisk: " + risk_.name() + " times W = one is not integrable");
  if (cauchy_one && beta_[0] == 0.0)
    throw DomainError("WeightedRisk: cauchy2 at beta = 0 is constant and not integrable with W = one");

  if (route == FourierRoute::Auto && cauchy_one) {
    method_ = Method::CauchyClosedForm;
    extent_ = 0.0;
    return;
  }
  if (route == FourierRoute::Auto && risk_.has_series() && weight_.gaussian_delta()) {
    delta_ = *weight_.gaussian_delta();
    const auto base = *risk_.series(beta_, Derivative::none());
    ExpPolySeries s;
    if (power_ == 1) {
      s = *risk_.series(beta_, deriv_);
    } else if (deriv_.order == 0) {
      s = base * base;
    } else if (deriv_.order == 1) {
      s = base * *risk_.series(beta_, deriv_) * 2.0;
    } else {
      const auto si = *risk_.series(beta_, Derivative::first(deriv_.i));
      const auto sj = *risk_.series(beta_, Derivative::first(deriv_.j));
      s = (si * sj + base * *risk_.series(beta_, deriv_)) * 2.0;
    }
    series_ = *weight_.polynomial_factor() * s;
    method_ = Method::Series;
    return;
  }
  if (cauchy_one) throw DomainError("WeightedRisk: numeric route unavailable for a non-integrable tail");
  method_ = Method::Numeric;
  build_numeric_grid();
}

double WeightedRisk::risk_part(double z) const {
  if (power_ == 1) return risk_.derivative(beta_, z, deriv_);
  const double f = risk_.value(beta_, z);
  if (deriv_.order == 0) return f * f;
  if (deriv_.order == 1) return 2.0 * f * risk_.derivative(beta_, z, deriv_);
  const double fi = risk_.derivative(beta_, z, Derivative::first(deriv_.i));
  const double fj = risk_.derivative(beta_, z, Derivative::first(deriv_.j));
  return 2.0 * (fi * fj + f * risk_.derivative(beta_, z, deriv_));
}

double WeightedRisk::value(double z) const {
  const double w = weight_.value(z);
  if (w == 0.0) return 0.0;
  return risk_part(z) * w;
}

void WeightedRisk::build_numeric_grid() {
  double lo, hi;
  if (auto sup = weight_.support()) {
    lo = sup->first;
    hi = sup->second;
  } else {
    const double L = tail_radius(*this);
    lo = -L;
    hi = L;
  }
  extent_ = std::max(std::abs(lo), std::abs(hi));
  std::vector<double> breaks{lo, hi};
  for (double b : risk_.breakpoints())
    if (b > lo && b < hi) breaks.push_back(b);
  for (double b : weight_.breakpoints())
    if (b > lo && b < hi) breaks.push_back(b);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  const std::size_t total_panels = kNumericNodes / kNumericOrder;
  const double span = hi - lo;
  nodes_.clear();
  weighted_values_.clear();
  max_panel_ = 0.0;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double len = breaks[k + 1] - breaks[k];
    const auto panels = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(total_panels * len / span)));
    max_panel_ = std::max(max_panel_, len / static_cast<double>(panels));
    const auto rule = composite_gauss<kNumericOrder>(breaks[k], breaks[k + 1], panels);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double v = value(rule.nodes[q]);
      if (v == 0.0) continue;
      nodes_.push_back(rule.nodes[q]);
      weighted_values_.push_back(rule.weights[q] * v);
    }
  }
}

std::complex<double> WeightedRisk::cauchy_transform(double t) const {
  // f = 1/(1 + (beta z)^2): with s = 1/|beta| the transforms of f and f^2
  // are pi s e^{-s|t|} and (pi/2)(s + s^2 |t|) e^{-s|t|}; beta-derivatives
  // follow from ds/dbeta = -sign(beta) s^2 and d2s/dbeta2 = 2 s^3.
  const double b = beta_[0];
  const double s = 1.0 / std::abs(b);
  const double a = std::abs(t);
  const double e = std::exp(-s * a);
  double F, Fs, Fss;
  if (power_ == 1) {
    F = kPi * s * e;
    Fs = kPi * e * (1.0 - s * a);
    Fss = kPi * e * (s * a * a - 2.0 * a);
  } else {
    F = 0.5 * kPi * (s + s * s * a) * e;
    Fs = 0.5 * kPi * e * (1.0 + s * a - s * s * a * a);
    Fss = 0.5 * kPi * e * (s * s * a * a * a - 3.0 * s * a * a);
  }
  const double ds = -std::copysign(1.0, b) * s * s;
  const double d2s = 2.0 * s * s * s;
  if (deriv_.order == 0) return F;
  if (deriv_.order == 1) return Fs * ds;
  return Fss * ds * ds + Fs * d2s;
}

std::complex<double> WeightedRisk::transform(double t) const {
  switch (method_) {
    case Method::Series:
      return series_->gaussian_transform(delta_, t);
    case Method::CauchyClosedForm:
      return cauchy_transform(t);
    case Method::Numeric:
      break;
  }
  if (std::abs(t) * max_panel_ > kMaxPanelPhase) {
    std::ostringstream msg;
    msg << "numeric Fourier grid under-resolved at t = " << t << " (panel width " << max_panel_ << ")";
    throw NumericalError(msg.str());
  }
  double re = 0.0, im = 0.0;
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    const double ph = t * nodes_[k];
    re += weighted_values_[k] * std::cos(ph);
    im += weighted_values_[k] * std::sin(ph);
  }
  return {re, im};
}

void WeightedRisk::transform(std::span<const double> t, std::span<std::complex<double>> out) const {
  for (std::size_t k = 0; k < t.size(); ++k) out[k] = transform(t[k]);
}

double WeightedRisk::extent() const {
  if (method_ != Method::Series) return extent_;
  // Each term z^k exp(c z) exp(-z^2/(4 delta)) is centred at 2 delta Re(c)
  // and falls below 1e-12 of its peak within sqrt(4 delta (28 + k log z)).
  double centre = 0.0;
  int power = 0;
  for (const auto& term : series_->terms()) {
    centre = std::max(centre, std::abs(2.0 * delta_ * term.rate.real()));
    power = std::max(power, term.power);
  }
  return centre + std::sqrt(4.0 * delta_ * (30.0 + 3.0 * power));
}

std::complex<double> weighted_risk_fourier(const RelativeRisk& risk, const Vec& beta, const WeightFunction& w,
                                           int power, std::optional<int> grad_index, double t) {
  const Derivative d = grad_index ? Derivative::first(*grad_index) : Derivative::none();
  return WeightedRisk(risk, beta, w, power, d).transform(t);
}

}  // namespace mehaz
