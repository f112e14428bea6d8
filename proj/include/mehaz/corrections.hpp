#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "mehaz/criteria.hpp"

namespace mehaz {

/// Functions Phi1, Phi2 of the observed U with E[Phi1(U) | Z] = f_beta W (Z)
/// and E[Phi2(U) | Z] = f_beta^2 W (Z).
///
/// CoxMgf: exponential risk, W = 1, Phi_k(u) = exp(k beta u) / E exp(k beta eps).
/// CosineTrig: cosine risk, W = 1, each cos(j z) replaced by cos(j u) / f_eps*(j).
/// Deconvolution: integrable W, Phi = full-line deconvolution of f_beta W and
/// f_beta^2 W.
class CorrectionFunctions {
 public:
  enum class Kind { CoxMgf, CosineTrig, Deconvolution };

  CorrectionFunctions(Kind kind, RelativeRisk risk, ErrorDensity err, WeightFunction weight);

  Kind kind() const noexcept { return kind_; }
  std::string name() const;
  const RelativeRisk& risk() const noexcept { return risk_; }
  const ErrorDensity& error() const noexcept { return err_; }
  const WeightFunction& weight() const noexcept { return weight_; }

  double phi1(const Vec& beta, double u) const;
  double phi2(const Vec& beta, double u) const;

  /// Values and beta-derivatives at every point.
  CovariateTerms evaluate(std::span<const double> u, const Vec& beta, int order) const;

 private:
  CovariateTerms evaluate_cox(std::span<const double> u, const Vec& beta, int order) const;
  CovariateTerms evaluate_cosine(std::span<const double> u, const Vec& beta, int order) const;

  Kind kind_;
  RelativeRisk risk_;
  ErrorDensity err_;
  WeightFunction weight_;
};

/// Picks the correction scheme for a (risk, noise, weight) triple. For the
/// deconvolution scheme the frequency integrand is checked for
/// integrability at `probe_beta` (default 0.5 in every coordinate).
/// Throws DomainError for unsupported pairs.
CorrectionFunctions build_corrections(const RelativeRisk& risk, const ErrorDensity& err, const WeightFunction& w,
                                      std::optional<Vec> probe_beta = std::nullopt);

/// Covariate side of the corrected criterion at the observed U.
std::shared_ptr<const CovariateSide> corrected_side(std::vector<double> u, const CorrectionFunctions& corr,
                                                    QuadratureOptions opt = {});

double s2_criterion(const Theta& theta, const Dataset& data, const ModelBundle& model,
                    const CorrectionFunctions& corr);

}  // namespace mehaz
