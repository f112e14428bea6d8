#pragma once

#include <array>
#include <complex>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "mehaz/series.hpp"

namespace mehaz {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Parameter pair (beta, gamma). `beta` holds the free relative-risk
/// parameters, `gamma` the baseline parameters.
struct Theta {
  Vec beta;
  Vec gamma;

  Eigen::Index dim() const { return beta.size() + gamma.size(); }
  Vec flat() const;
  static Theta split(const Vec& flat, Eigen::Index m);
};

/// Derivative selector with respect to the free beta parameters.
struct Derivative {
  int order = 0;  // 0, 1 or 2
  int i = 0;
  int j = 0;

  static constexpr Derivative none() { return {}; }
  static constexpr Derivative first(int i) { return {1, i, 0}; }
  static constexpr Derivative second(int i, int j) { return {2, i, j}; }
};

namespace risk {
struct Exponential {};
struct Polynomial1 {
  int m = 1;
};
/// sum_j b_j cos(j z) with sum_j b_j = 1; the free parameters are b_2..b_m
/// and b_1 = 1 - sum of the others.
struct Cosine1 {
  int m = 1;
};
struct Cauchy1 {};
struct LaplaceKink {};
struct Indicator {};
struct Polygonal {
  double a = 0.0;
  double b = 0.0;
};
/// f(beta z) with f(x) = 1 + sum_k a_k x^k.
struct Polynomial2 {
  std::vector<double> coeffs;
};
/// f(beta z) with f(x) = sum_j a_j cos(j x), sum_j a_j = 1.
struct Cosine2 {
  std::vector<double> coeffs;
};
/// 1 / (1 + (beta z)^2).
struct Cauchy2 {};
}  // namespace risk

/// Relative risk family f_beta(z), normalised so that f_beta(0) = 1.
class RelativeRisk {
 public:
  using Family = std::variant<risk::Exponential, risk::Polynomial1, risk::Cosine1, risk::Cauchy1,
                              risk::LaplaceKink, risk::Indicator, risk::Polygonal, risk::Polynomial2,
                              risk::Cosine2, risk::Cauchy2>;

  explicit RelativeRisk(Family family);

  static RelativeRisk exponential() { return RelativeRisk(risk::Exponential{}); }
  static RelativeRisk polynomial1(int m) { return RelativeRisk(risk::Polynomial1{m}); }
  static RelativeRisk cosine1(int m) { return RelativeRisk(risk::Cosine1{m}); }
  static RelativeRisk cauchy1() { return RelativeRisk(risk::Cauchy1{}); }
  static RelativeRisk laplace_kink() { return RelativeRisk(risk::LaplaceKink{}); }
  static RelativeRisk indicator() { return RelativeRisk(risk::Indicator{}); }
  static RelativeRisk polygonal(double a, double b) { return RelativeRisk(risk::Polygonal{a, b}); }
  static RelativeRisk polynomial2(std::vector<double> a) { return RelativeRisk(risk::Polynomial2{std::move(a)}); }
  static RelativeRisk cosine2(std::vector<double> a) { return RelativeRisk(risk::Cosine2{std::move(a)}); }
  static RelativeRisk cauchy2() { return RelativeRisk(risk::Cauchy2{}); }

  const Family& family() const noexcept { return family_; }
  std::string name() const;
  /// Number of free beta parameters.
  int arity() const;

  /// Unchecked evaluation; may be non-positive outside the admissible region.
  double value(const Vec& beta, double z) const;
  /// d f / d beta into `out` (length arity()).
  void gradient(const Vec& beta, double z, std::span<double> out) const;
  /// d^2 f / d beta^2 into `out`, row-major arity() x arity().
  void hessian(const Vec& beta, double z, std::span<double> out) const;
  /// Value or a single beta-derivative of f.
  double derivative(const Vec& beta, double z, Derivative d) const;

  /// Exponential-polynomial representation of the selected derivative of f,
  /// when the family has one.
  std::optional<ExpPolySeries> series(const Vec& beta, Derivative d) const;
  bool has_series() const;

  /// Points where f is not smooth in z.
  std::vector<double> breakpoints() const;

  void check_beta(const Vec& beta) const;

 private:
  Family family_;
};

namespace baseline {
struct Constant {};
struct AffinePositive {};
struct ExpPoly {};
}  // namespace baseline

/// Baseline hazard eta_gamma(t) with closed-form integrals of eta and eta^2.
class Baseline {
 public:
  using Family = std::variant<baseline::Constant, baseline::AffinePositive, baseline::ExpPoly>;

  explicit Baseline(Family family) : family_(family) {}
  static Baseline constant() { return Baseline(baseline::Constant{}); }
  static Baseline affine_positive() { return Baseline(baseline::AffinePositive{}); }
  static Baseline exp_poly() { return Baseline(baseline::ExpPoly{}); }

  const Family& family() const noexcept { return family_; }
  std::string name() const;
  int arity() const;

  double value(const Vec& gamma, double t) const;
  void gradient(const Vec& gamma, double t, std::span<double> out) const;
  void hessian(const Vec& gamma, double t, std::span<double> out) const;

  /// Cumulative hazard H(t) = int_0^t eta.
  double cumulative(const Vec& gamma, double t) const;
  /// int_0^t eta^2 together with its gamma gradient and Hessian (row-major).
  double squared_integral(const Vec& gamma, double t) const;
  void squared_integral_gradient(const Vec& gamma, double t, std::span<double> out) const;
  void squared_integral_hessian(const Vec& gamma, double t, std::span<double> out) const;

  /// Solves H(t) = x. Returns +infinity when H never reaches x.
  double inverse_cumulative(const Vec& gamma, double x) const;

  /// Throws DomainError unless eta > 0 on [0, t].
  void check_positive(const Vec& gamma, double t) const;
  void check_gamma(const Vec& gamma) const;

 private:
  Family family_;
};

/// Returns (int_0^t eta, int_0^t eta^2).
std::pair<double, double> baseline_integrals(const Baseline& family, const Vec& gamma, double t);

/// Parameters of a smoothing bump Psi_{A,B,R}.
struct BumpSegment {
  double a;
  double b;
  double r;
};

namespace weight {
struct One {};
struct GaussianDamp {
  double delta;
};
struct PolyGaussianDamp {
  double delta;
};
struct BumpSum {
  std::vector<BumpSegment> segments;
};
}  // namespace weight

/// exp(-1 / ((z - A)^R (B - z)^R)) on [A, B], zero outside.
double bump(const BumpSegment& s, double z);

/// Non-negative weight W(z) multiplying the relative risk.
class WeightFunction {
 public:
  using Family = std::variant<weight::One, weight::GaussianDamp, weight::PolyGaussianDamp, weight::BumpSum>;

  explicit WeightFunction(Family family);
  static WeightFunction one() { return WeightFunction(weight::One{}); }
  static WeightFunction gaussian_damp(double delta) { return WeightFunction(weight::GaussianDamp{delta}); }
  static WeightFunction poly_gaussian_damp(double delta) { return WeightFunction(weight::PolyGaussianDamp{delta}); }
  static WeightFunction bump_sum(std::vector<BumpSegment> s) { return WeightFunction(weight::BumpSum{std::move(s)}); }

  const Family& family() const noexcept { return family_; }
  std::string name() const;
  double value(double z) const;
  bool is_one() const { return std::holds_alternative<weight::One>(family_); }
  bool integrable() const { return !is_one(); }

  /// For the Gaussian-damped families: delta and the polynomial prefactor.
  std::optional<double> gaussian_delta() const;
  std::optional<ExpPolySeries> polynomial_factor() const;
  /// Support [lo, hi] when compact.
  std::optional<std::pair<double, double>> support() const;
  std::vector<double> breakpoints() const;

 private:
  Family family_;
};

/// Smoothness record (alpha, delta, rho) of an error density:
/// |f*(u)| ~ |u|^-alpha exp(-delta |u|^rho).
struct NoiseSmoothness {
  double alpha = 0.0;
  double delta = 0.0;
  double rho = 0.0;
};

namespace noise {
struct Gaussian {
  double sigma;
};
struct Laplace {
  double b;
};
struct Cauchy {
  double s;
};
}  // namespace noise

/// Known density of the measurement error epsilon.
class ErrorDensity {
 public:
  using Family = std::variant<noise::Gaussian, noise::Laplace, noise::Cauchy>;

  explicit ErrorDensity(Family family);
  static ErrorDensity gaussian(double sigma) { return ErrorDensity(noise::Gaussian{sigma}); }
  static ErrorDensity laplace(double b) { return ErrorDensity(noise::Laplace{b}); }
  static ErrorDensity cauchy(double s) { return ErrorDensity(noise::Cauchy{s}); }

  const Family& family() const noexcept { return family_; }
  std::string name() const;

  double density(double x) const;
  /// Inverse-cdf draw from a uniform in (0, 1).
  double quantile(double u) const;
  /// f*(t) = E exp(i t epsilon).
  std::complex<double> fourier(double t) const;
  NoiseSmoothness smoothness() const;
  /// False for the Cauchy law, which has no mean.
  bool centered() const;

  /// log E exp(c epsilon) and its first two derivatives; nullopt when the
  /// moment generating function is infinite at c.
  std::optional<std::array<double, 3>> log_mgf(double c) const;
  /// E epsilon^k for k <= 8; nullopt when undefined.
  std::optional<double> moment(int k) const;

 private:
  Family family_;
};

/// Smoothness class H_{a,d,r}: |psi*(u)| |u|^a exp(d |u|^r) bounded above
/// and below for large |u|.
struct SmoothnessClass {
  double a = 0.0;
  double d = 0.0;
  double r = 0.0;
};

/// Relative risk, baseline and weight used by every criterion.
struct ModelBundle {
  RelativeRisk risk;
  Baseline baseline;
  WeightFunction weight;
};

/// Checked f_beta(z); throws on dimension mismatch or a non-positive value.
double risk_eval(const RelativeRisk& family, const Vec& beta, double z);
Vec risk_grad(const RelativeRisk& family, const Vec& beta, double z);
Mat risk_hess(const RelativeRisk& family, const Vec& beta, double z);
std::complex<double> error_fourier(const ErrorDensity& err, double t);

/// Weight used when none is configured: GaussianDamp(2 delta) for super
/// smooth noise, One for ordinary smooth noise.
WeightFunction default_weight(const ErrorDensity& err);

/// Smoothness class of f_beta W as a function of z. Throws DomainError when
/// f_beta W is not integrable.
SmoothnessClass smoothness_class(const RelativeRisk& family, const Vec& beta, const WeightFunction& w);

}  // namespace mehaz
