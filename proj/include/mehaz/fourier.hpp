#pragma once

#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "mehaz/model.hpp"
#include "mehaz/quadrature.hpp"

namespace mehaz {

/// Real integrable function psi with a computable Fourier transform
/// psi*(t) = int exp(i t z) psi(z) dz.
class FourierFunction {
 public:
  virtual ~FourierFunction() = default;

  virtual double value(double z) const = 0;
  virtual std::complex<double> transform(double t) const = 0;
  virtual void transform(std::span<const double> t, std::span<std::complex<double>> out) const;

  /// Radius L with int_{|z| > L} |psi| negligible; used to size oscillatory
  /// quadrature grids.
  virtual double extent() const;
};

/// scale * exp(-z^2 / (2 s^2)).
class GaussianFunction final : public FourierFunction {
 public:
  explicit GaussianFunction(double s = 1.0, double scale = 1.0);
  double value(double z) const override;
  std::complex<double> transform(double t) const override;
  using FourierFunction::transform;
  double extent() const override;

 private:
  double s_;
  double scale_;
};

class ZeroFunction final : public FourierFunction {
 public:
  double value(double) const override { return 0.0; }
  std::complex<double> transform(double) const override { return 0.0; }
  using FourierFunction::transform;
  double extent() const override { return 0.0; }
};

/// Smallest L on a doubling ladder from 1 to 1024 with
/// int_{|z| > L} |psi| <= tol * max(1, int |psi|). Throws NumericalError
/// when no rung qualifies.
double tail_radius(const FourierFunction& psi, double tol = 1e-12);

enum class FourierRoute { Auto, Numeric };

/// psi = d^k/dbeta^k (f_beta^power) * W for power 1 or 2.
class WeightedRisk final : public FourierFunction {
 public:
  enum class Method { Series, CauchyClosedForm, Numeric };

  WeightedRisk(RelativeRisk risk, Vec beta, WeightFunction weight, int power,
               Derivative deriv = Derivative::none(), FourierRoute route = FourierRoute::Auto);

  double value(double z) const override;
  std::complex<double> transform(double t) const override;
  void transform(std::span<const double> t, std::span<std::complex<double>> out) const override;
  double extent() const override;

  Method method() const noexcept { return method_; }
  const RelativeRisk& risk() const noexcept { return risk_; }
  const Vec& beta() const noexcept { return beta_; }
  int power() const noexcept { return power_; }
  Derivative derivative() const noexcept { return deriv_; }

 private:
  double risk_part(double z) const;
  std::complex<double> cauchy_transform(double t) const;
  void build_numeric_grid();

  RelativeRisk risk_;
  Vec beta_;
  WeightFunction weight_;
  int power_;
  Derivative deriv_;
  Method method_;
  std::optional<ExpPolySeries> series_;
  double delta_ = 0.0;
  // Numeric route: quadrature nodes and weights already multiplied by psi.
  std::vector<double> nodes_;
  std::vector<double> weighted_values_;
  double max_panel_ = 0.0;
  double extent_ = 0.0;
};

/// Fourier transform at t of f_beta^power W, or of its partial derivative in
/// beta[grad_index].
std::complex<double> weighted_risk_fourier(const RelativeRisk& risk, const Vec& beta, const WeightFunction& w,
                                           int power, std::optional<int> grad_index, double t);

}  // namespace mehaz
