#pragma once

#include <optional>
#include <string>

#include "mehaz/corrections.hpp"
#include "mehaz/criteria.hpp"
#include "mehaz/optimize.hpp"

namespace mehaz {

enum class EstimatorKind { Oracle, Naive, Theta1, Theta2 };

std::string to_string(EstimatorKind kind);
/// Accepts "oracle", "naive", "theta1", "theta2".
EstimatorKind parse_estimator(const std::string& name);

/// beta in [-3, 3]^m; gamma in a family-specific box.
Box default_box(const RelativeRisk& risk, const Baseline& baseline);

struct EstimateOptions {
  std::optional<Box> box;
  MinimizeOptions minimize{};
  /// Bandwidth for theta1; chosen by default_bandwidth when empty.
  std::optional<double> bandwidth;
  bool covariance = true;
  QuadratureOptions quadrature{};
};

struct Sandwich {
  Mat covariance;  // asymptotic covariance of sqrt(n) (theta_hat - theta0)
  Vec standard_errors;
  double condition = 0.0;
};

struct EstimateResult {
  Theta theta_hat;
  double criterion_value = 0.0;
  int iterations = 0;
  int restarts_used = 0;
  bool converged = false;
  std::optional<Mat> covariance;
  std::optional<Vec> standard_errors;
  /// Set when the sandwich could not be formed; the point estimate is kept.
  std::string covariance_error;
  /// Cut used by theta1, zero for the other estimators.
  double bandwidth = 0.0;
};

/// H^-1 S0 H^-1 with H the mean Hessian and S0 the mean outer product of the
/// per-observation criterion gradients at theta_hat. Throws NumericalError
/// when H is singular, reporting its condition number.
Sandwich sandwich_covariance(const Criterion& criterion, const Theta& theta_hat);

/// Minimises `criterion` over the box and optionally attaches the sandwich.
EstimateResult minimize_criterion(const Criterion& criterion, const Box& box, const EstimateOptions& opt);

double auto_bandwidth(const ModelBundle& model, const ErrorDensity& err, const Box& box, std::size_t n);

EstimateResult estimate_oracle(const Dataset& data, const ModelBundle& model, const EstimateOptions& opt = {});
EstimateResult estimate_naive(const Dataset& data, const ModelBundle& model, const EstimateOptions& opt = {});
EstimateResult estimate_theta1(const Dataset& data, const ModelBundle& model, const ErrorDensity& err,
                               const EstimateOptions& opt = {});
EstimateResult estimate_theta2(const Dataset& data, const ModelBundle& model, const CorrectionFunctions& corr,
                               const EstimateOptions& opt = {});

/// Dispatches on `kind`; theta2 builds its corrections from (risk, err, W).
EstimateResult estimate(EstimatorKind kind, const Dataset& data, const ModelBundle& model, const ErrorDensity& err,
                        const EstimateOptions& opt = {});

}  // namespace mehaz
