#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mehaz/estimate.hpp"
#include "mehaz/simulate.hpp"

namespace mehaz {

struct StudyPlan {
  /// Template configuration; `n` and `seed` are replaced per replicate.
  StudyConfig config;
  std::vector<std::size_t> n_list;
  std::size_t replicates = 2;
  std::vector<EstimatorKind> estimators{EstimatorKind::Theta2};
  EstimateOptions estimate{};
  std::uint64_t master_seed = 0;
  unsigned threads = 1;
  /// Abort when more than this fraction of any (n, estimator) cell fails.
  double max_failure_rate = 0.05;
};

struct ReplicateRecord {
  std::size_t n = 0;
  std::size_t r = 0;
  EstimatorKind estimator = EstimatorKind::Oracle;
  Vec theta_hat;
  bool converged = false;
  bool failed = false;
  std::string error;
  std::optional<Vec> se;
  std::optional<Mat> covariance;
  double bandwidth = 0.0;
};

struct ComponentSummary {
  double mean = 0.0;
  double bias = 0.0;
  /// Divides by the replicate count, so mse = bias^2 + variance.
  double variance = 0.0;
  double mse = 0.0;
  /// Standard error of `mean`.
  double mean_stderr = 0.0;
  /// Fraction of nominal 95% intervals covering the truth; NaN without standard errors.
  double coverage = 0.0;
};

struct CellSummary {
  std::size_t n = 0;
  EstimatorKind estimator = EstimatorKind::Oracle;
  std::size_t replicates = 0;
  std::size_t failures = 0;
  std::size_t nonconverged = 0;
  std::vector<ComponentSummary> components;
};

struct StudySummary {
  Vec theta0;
  std::vector<CellSummary> cells;
  std::vector<ReplicateRecord> records;

  /// Throws DomainError when the cell is absent.
  const CellSummary& cell(std::size_t n, EstimatorKind estimator) const;
};

/// Replicate r at size n draws its data from derive_seed(master, {n, r}).
/// Replicates run on `threads` workers; records are stored in (n, r,
/// estimator) order regardless of scheduling. Throws NumericalError when the
/// failure rate of a cell exceeds the plan's limit.
StudySummary run_study(const StudyPlan& plan);

std::uint64_t replicate_seed(std::uint64_t master, std::size_t n, std::size_t r);

/// Aggregates records by (n, estimator), in order of first appearance.
StudySummary summarize(std::vector<ReplicateRecord> records, const Vec& theta0);

/// One JSON object per line: {n, r, estimator, theta_hat, converged, se, covariance, ...}.
void write_jsonl(std::ostream& os, std::span<const ReplicateRecord> records);
std::vector<ReplicateRecord> read_jsonl(std::istream& is);

/// Columns n, estimator, component, mean, bias, variance, mse, mean_stderr,
/// coverage, replicates, failures, nonconverged.
void write_summary_csv(std::ostream& os, const StudySummary& summary);
std::vector<CellSummary> read_summary_csv(std::istream& is);

struct RegressionResult {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};

/// Least squares of log mse on log n. Needs at least three distinct n.
RegressionResult rate_regression(std::span<const double> n, std::span<const double> mse);
/// Regression of one component's MSE for one estimator across the study's n values.
RegressionResult rate_regression(const StudySummary& summary, EstimatorKind estimator, int component);

struct NormalityBands {
  double skewness = 0.3;
  double excess_kurtosis = 0.6;
  double ks = 0.08;
};

/// Two-sided 1% bands of the three statistics for R standard normal draws.
NormalityBands null_bands(std::size_t replicates);

struct NormalityReport {
  std::size_t replicates = 0;
  std::vector<double> skewness;
  std::vector<double> excess_kurtosis;
  std::vector<double> ks;

  bool within(const NormalityBands& bands) const;
};

/// Standardises sqrt(n) (theta_hat_r - theta0) by covariance_r^{-1/2} and
/// reports per-component skewness, excess kurtosis and the Kolmogorov-Smirnov
/// distance to N(0, 1). `covariances` holds one matrix per replicate or a
/// single shared one. Needs R >= 200.
NormalityReport normality_check(std::span<const Vec> estimates, const Vec& theta0, std::span<const Mat> covariances,
                                double n);

struct IdentityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double paired_stderr = 0.0;
};

using ObservationWeight = std::function<double(const Observation&)>;

/// Sample means over a simulated dataset of phi(obs) (psi * K_{n,cn})(U) and
/// phi(obs) (psi * K_cn)(Z), with the standard error of their paired difference.
IdentityCheck identity_check(const ObservationWeight& phi, const FourierFunction& psi, StudyConfig cfg, std::size_t n,
                          const DeconvKernelSpec& kernel);

}  // namespace mehaz
