#include "mehaz/estimate.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/SVD>

#include "mehaz/error.hpp"

namespace mehaz {

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Oracle:
      return "oracle";
    case EstimatorKind::Naive:
      return "naive";
    case EstimatorKind::Theta1:
      return "theta1";
    case EstimatorKind::Theta2:
      return "theta2";
  }
  return "unknown";
}

EstimatorKind parse_estimator(const std::string& name) {
  if (name == "oracle") return EstimatorKind::Oracle;
  if (name == "naive") return EstimatorKind::Naive;
  if (name == "theta1") return EstimatorKind::Theta1;
  if (name == "theta2") return EstimatorKind::Theta2;
  throw DomainError("unknown estimator '" + name + "' (expected oracle, naive, theta1 or theta2)");
}

Box default_box(const RelativeRisk& risk, const Baseline& baseline) {
  const int m = risk.arity();
  const int p = baseline.arity();
  Box box{Vec(m + p), Vec(m + p)};
  box.lo.head(m).setConstant(-3.0);
  box.hi.head(m).setConstant(3.0);
  std::visit(
      [&](const auto& fam) {
        using T = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<T, baseline::Constant>) {
          box.lo[m] = 0.01;
          box.hi[m] = 10.0;
        } else if constexpr (std::is_same_v<T, baseline::AffinePositive>) {
          box.lo[m] = 0.01;
          box.hi[m] = 10.0;
          box.lo[m + 1] = 0.0;
          box.hi[m + 1] = 10.0;
        } else {
          box.lo.tail(2).setConstant(-5.0);
          box.hi.tail(2).setConstant(5.0);
        }
      },
      baseline.family());
  return box;
}

Sandwich sandwich_covariance(const Criterion& criterion, const Theta& theta_hat) {
  const auto po = criterion.per_observation(theta_hat, true);
  const Mat H = 0.5 * (po.hessian + po.hessian.transpose());
  const Eigen::JacobiSVD<Mat> svd(H);
  const auto& sv = svd.singularValues();
  const double cond = sv.size() == 0 ? 1.0 : sv[0] / sv[sv.size() - 1];
  if (!(cond <= 1e12)) {
    std::ostringstream msg;
    msg << "sandwich_covariance: criterion Hessian is singular (condition number " << cond << ")";
    throw NumericalError(msg.str());
  }
  const auto n = static_cast<double>(po.scores.rows());
  const Mat S0 = po.scores.transpose() * po.scores / n;
  const Mat Hinv = H.inverse();
  Mat cov = Hinv * S0 * Hinv;
  cov = 0.5 * (cov + cov.transpose());
  Sandwich out;
  out.standard_errors = (cov.diagonal().array().max(0.0) / n).sqrt();
  out.covariance = std::move(cov);
  out.condition = cond;
  return out;
}

EstimateResult minimize_criterion(const Criterion& criterion, const Box& box, const EstimateOptions& opt) {
  if (box.dim() != criterion.dim()) throw DomainError("estimate: box dimension does not match the parameter");
  const auto m = static_cast<Eigen::Index>(criterion.beta_arity());
  const auto r = minimize([&](const Vec& x) { return criterion.value(x); }, box, opt.minimize);
  EstimateResult out;
  out.theta_hat = Theta::split(r.x, m);
  out.criterion_value = criterion.value(out.theta_hat);
  out.iterations = r.iterations;
  out.restarts_used = r.restarts_used;
  out.converged = r.converged;
  if (opt.covariance) {
    try {
      auto s = sandwich_covariance(criterion, out.theta_hat);
      out.covariance = std::move(s.covariance);
      out.standard_errors = std::move(s.standard_errors);
    } catch (const NumericalError& e) {
      out.covariance_error = e.what();
    }
  }
  return out;
}

double auto_bandwidth(const ModelBundle& model, const ErrorDensity& err, const Box& box, std::size_t n) {
  const Vec beta = box.center().head(model.risk.arity());
  const auto cls = smoothness_class(model.risk, beta, model.weight);
  return default_bandwidth(cls, err.smoothness(), static_cast<double>(n));
}

namespace {

Box resolve_box(const ModelBundle& model, const EstimateOptions& opt) {
  return opt.box ? *opt.box : default_box(model.risk, model.baseline);
}

}  // namespace

EstimateResult estimate_oracle(const Dataset& data, const ModelBundle& model, const EstimateOptions& opt) {
  auto side = std::make_shared<DirectSide>(covariate_points(data, true), model.risk, model.weight);
  return minimize_criterion(Criterion(side, data, model.baseline), resolve_box(model, opt), opt);
}

EstimateResult estimate_naive(const Dataset& data, const ModelBundle& model, const EstimateOptions& opt) {
  auto side = std::make_shared<DirectSide>(covariate_points(data, false), model.risk, model.weight);
  return minimize_criterion(Criterion(side, data, model.baseline), resolve_box(model, opt), opt);
}

EstimateResult estimate_theta1(const Dataset& data, const ModelBundle& model, const ErrorDensity& err,
                               const EstimateOptions& opt) {
  const Box box = resolve_box(model, opt);
  const double cn = opt.bandwidth ? *opt.bandwidth : auto_bandwidth(model, err, box, data.size());
  auto side = std::make_shared<DeconvolvedSide>(covariate_points(data, false), model.risk, model.weight, err,
                                                DeconvolvedSide::FixedCut{cn}, opt.quadrature);
  auto out = minimize_criterion(Criterion(side, data, model.baseline), box, opt);
  out.bandwidth = cn;
  return out;
}

EstimateResult estimate_theta2(const Dataset& data, const ModelBundle& model, const CorrectionFunctions& corr,
                               const EstimateOptions& opt) {
  auto side = corrected_side(covariate_points(data, false), corr, opt.quadrature);
  return minimize_criterion(Criterion(side, data, model.baseline), resolve_box(model, opt), opt);
}

EstimateResult estimate(EstimatorKind kind, const Dataset& data, const ModelBundle& model, const ErrorDensity& err,
                        const EstimateOptions& opt) {
  switch (kind) {
    case EstimatorKind::Oracle:
      return estimate_oracle(data, model, opt);
    case EstimatorKind::Naive:
      return estimate_naive(data, model, opt);
    case EstimatorKind::Theta1:
      return estimate_theta1(data, model, err, opt);
    case EstimatorKind::Theta2:
      break;
  }
  const Box box = resolve_box(model, opt);
  const auto corr = build_corrections(model.risk, err, model.weight, Vec(box.center().head(model.risk.arity())));
  return estimate_theta2(data, model, corr, opt);
}

}  // namespace mehaz
