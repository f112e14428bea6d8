#pragma once

#include <map>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "mehaz/deconv.hpp"
#include "mehaz/model.hpp"
#include "mehaz/simulate.hpp"

namespace mehaz {

/// a = int_0^tau eta dN and b = int_0^tau eta^2 Y dt for one subject, with
/// gamma gradients and Hessians (row-major).
struct PathIntegrals {
  double a = 0.0;
  double b = 0.0;
  Vec grad_a;
  Vec grad_b;
  Mat hess_a;
  Mat hess_b;
};

PathIntegrals path_integrals(const Observation& obs, const Baseline& baseline, const Vec& gamma, double tau);

/// Covariate-side weights phi1(beta) (paired with dN) and phi2(beta)
/// (paired with Y) at every subject, with beta-derivatives.
struct CovariateTerms {
  Vec phi1;
  Vec phi2;
  Mat dphi1;   // n x m
  Mat dphi2;   // n x m
  Mat d2phi1;  // n x m*m, column i*m + j
  Mat d2phi2;
};

/// Smoothed weights written as plan.basis() * coeffs, with coeffs columns
/// (phi1, phi2). Lets the criterion fold the data into the basis once.
struct SpectralForm {
  const DeconvolutionPlan* plan = nullptr;
  Mat coeffs;
};

class CovariateSide {
 public:
  virtual ~CovariateSide() = default;
  virtual std::size_t size() const = 0;
  virtual int arity() const = 0;
  /// Values and derivatives up to `order` (0, 1 or 2); higher-order blocks
  /// are left empty.
  virtual CovariateTerms evaluate(const Vec& beta, int order) const = 0;
  virtual std::optional<SpectralForm> spectral(const Vec&) const { return std::nullopt; }
};

/// phi1 = f_beta W and phi2 = f_beta^2 W evaluated at the given points
/// (Z for the oracle criterion, U for the naive one).
class DirectSide final : public CovariateSide {
 public:
  DirectSide(std::vector<double> points, RelativeRisk risk, WeightFunction weight);
  std::size_t size() const override { return points_.size(); }
  int arity() const override { return risk_.arity(); }
  CovariateTerms evaluate(const Vec& beta, int order) const override;

 private:
  std::vector<double> points_;
  RelativeRisk risk_;
  WeightFunction weight_;
};

/// Deconvolution-smoothed weights at U. With a fixed cut this is the
/// kernel estimator with K* = 1{|t| <= cn}; with an adaptive cut the
/// frequency integral runs over the whole line, truncated where
/// |psi* / f_eps*| becomes negligible.
class DeconvolvedSide final : public CovariateSide {
 public:
  struct FixedCut {
    double cn;
  };
  struct AdaptiveCut {};
  using CutRule = std::variant<FixedCut, AdaptiveCut>;

  DeconvolvedSide(std::vector<double> points, RelativeRisk risk, WeightFunction weight, ErrorDensity err,
                  CutRule cut, QuadratureOptions opt = {});

  std::size_t size() const override { return points_.size(); }
  int arity() const override { return risk_.arity(); }
  CovariateTerms evaluate(const Vec& beta, int order) const override;
  std::optional<SpectralForm> spectral(const Vec& beta) const override;

  /// Cut used at beta: the fixed cn or the adaptive truncation point.
  double cut_at(const Vec& beta) const;

 private:
  std::vector<std::unique_ptr<WeightedRisk>> specs(const Vec& beta, int order) const;
  const DeconvolutionPlan& plan(double cut, double extent) const;
  double choose_cut(std::span<const std::unique_ptr<WeightedRisk>> specs) const;
  double extent_rung(std::span<const std::unique_ptr<WeightedRisk>> specs) const;

  std::vector<double> points_;
  RelativeRisk risk_;
  WeightFunction weight_;
  ErrorDensity err_;
  CutRule cut_;
  QuadratureOptions opt_;
  mutable std::map<std::pair<double, double>, std::unique_ptr<DeconvolutionPlan>> plans_;
};

/// Empirical least-squares criterion mean_i(-2 phi1_i a_i + phi2_i b_i).
/// Holds evaluation caches; use one instance per thread.
class Criterion {
 public:
  Criterion(std::shared_ptr<const CovariateSide> side, const Dataset& data, Baseline baseline);

  std::size_t size() const noexcept { return obs_.size(); }
  int beta_arity() const noexcept { return side_->arity(); }
  int gamma_arity() const noexcept { return baseline_.arity(); }
  int dim() const noexcept { return beta_arity() + gamma_arity(); }
  double tau() const noexcept { return tau_; }

  double value(const Theta& theta) const;
  double value(const Vec& flat) const { return value(Theta::split(flat, beta_arity())); }
  Vec gradient(const Theta& theta) const;

  struct PerObservation {
    double value = 0.0;
    Mat scores;   // n x dim, gradient of each summand
    Mat hessian;  // dim x dim, mean of the summand Hessians
  };
  PerObservation per_observation(const Theta& theta, bool with_hessian = true) const;

 private:
  void check(const Theta& theta) const;
  std::vector<PathIntegrals> paths(const Vec& gamma, bool derivatives) const;

  std::shared_ptr<const CovariateSide> side_;
  std::vector<Observation> obs_;
  double tau_;
  Baseline baseline_;
  // Path integrals linear in fixed data columns: a = Ea * ca(gamma),
  // b = Eb * cb(gamma). Empty when the baseline has no such form.
  Mat ea_, eb_;
  mutable std::map<const DeconvolutionPlan*, std::pair<Mat, Mat>> projections_;
};

double oracle_criterion(const Theta& theta, const Dataset& data, const ModelBundle& model);
double naive_criterion(const Theta& theta, const Dataset& data, const ModelBundle& model);
double s1_criterion(const Theta& theta, const Dataset& data, const ModelBundle& model, const DeconvKernelSpec& k,
                    const ErrorDensity& err);

std::vector<double> covariate_points(const Dataset& data, bool use_z);

}  // namespace mehaz
