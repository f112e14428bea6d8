#include "mehaz/corrections.hpp"

#include <cmath>
#include <sstream>

#include "mehaz/error.hpp"

namespace mehaz {

namespace {

class CorrectedSide final : public CovariateSide {
 public:
  CorrectedSide(std::vector<double> u, CorrectionFunctions corr) : u_(std::move(u)), corr_(std::move(corr)) {}
  std::size_t size() const override { return u_.size(); }
  int arity() const override { return corr_.risk().arity(); }
  CovariateTerms evaluate(const Vec& beta, int order) const override { return corr_.evaluate(u_, beta, order); }

 private:
  std::vector<double> u_;
  CorrectionFunctions corr_;
};

std::array<double, 3> checked_log_mgf(const ErrorDensity& err, double c) {
  const auto l = err.log_mgf(c);
  if (!l) {
    std::ostringstream msg;
    msg << "Cox correction: E exp(" << c << " eps) is infinite for " << err.name() << " noise";
    throw NumericalError(msg.str());
  }
  return *l;
}

void allocate(CovariateTerms& t, Eigen::Index n, int m, int order) {
  t.phi1.resize(n);
  t.phi2.resize(n);
  if (order >= 1) {
    t.dphi1.resize(n, m);
    t.dphi2.resize(n, m);
  }
  if (order >= 2) {
    t.d2phi1.resize(n, m * m);
    t.d2phi2.resize(n, m * m);
  }
}

}  // namespace

CorrectionFunctions::CorrectionFunctions(Kind kind, RelativeRisk risk, ErrorDensity err, WeightFunction weight)
    : kind_(kind), risk_(std::move(risk)), err_(err), weight_(std::move(weight)) {}

std::string CorrectionFunctions::name() const {
  switch (kind_) {
    case Kind::CoxMgf:
      return "cox_mgf";
    case Kind::CosineTrig:
      return "cosine_trig";
    case Kind::Deconvolution:
      return "deconvolution";
  }
  return "unknown";
}

CovariateTerms CorrectionFunctions::evaluate(std::span<const double> u, const Vec& beta, int order) const {
  risk_.check_beta(beta);
  switch (kind_) {
    case Kind::CoxMgf:
      return evaluate_cox(u, beta, order);
    case Kind::CosineTrig:
      return evaluate_cosine(u, beta, order);
    case Kind::Deconvolution:
      break;
  }
  DeconvolvedSide side(std::vector<double>(u.begin(), u.end()), risk_, weight_, err_, DeconvolvedSide::AdaptiveCut{});
  return side.evaluate(beta, order);
}

CovariateTerms CorrectionFunctions::evaluate_cox(std::span<const double> u, const Vec& beta, int order) const {
  const double b = beta[0];
  const auto l1 = checked_log_mgf(err_, b);
  const auto l2 = checked_log_mgf(err_, 2.0 * b);
  const auto n = static_cast<Eigen::Index>(u.size());
  CovariateTerms t;
  allocate(t, n, 1, order);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = u[static_cast<std::size_t>(i)];
    const double p1 = std::exp(b * x - l1[0]);
    const double p2 = std::exp(2.0 * b * x - l2[0]);
    t.phi1[i] = p1;
    t.phi2[i] = p2;
    if (order < 1) continue;
    const double s1 = x - l1[1];
    const double s2 = 2.0 * x - 2.0 * l2[1];
    t.dphi1(i, 0) = s1 * p1;
    t.dphi2(i, 0) = s2 * p2;
    if (order < 2) continue;
    t.d2phi1(i, 0) = (s1 * s1 - l1[2]) * p1;
    t.d2phi2(i, 0) = (s2 * s2 - 4.0 * l2[2]) * p2;
  }
  return t;
}

CovariateTerms CorrectionFunctions::evaluate_cosine(std::span<const double> u, const Vec& beta, int order) const {
  const int mfull = std::get<risk::Cosine1>(risk_.family()).m;
  const int m = mfull - 1;
  // Full coefficient vector b_1..b_m from the free b_2..b_m.
  Vec b(mfull);
  b[0] = 1.0;
  for (int j = 1; j < mfull; ++j) {
    b[j] = beta[j - 1];
    b[0] -= beta[j - 1];
  }
  std::vector<double> inv(static_cast<std::size_t>(2 * mfull + 1));
  for (int w = 0; w <= 2 * mfull; ++w) inv[static_cast<std::size_t>(w)] = 1.0 / err_.fourier(w).real();

  const auto n = static_cast<Eigen::Index>(u.size());
  CovariateTerms t;
  allocate(t, n, m, order);
  Vec c(2 * mfull + 1);
  Mat M(mfull, mfull);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = u[static_cast<std::size_t>(i)];
    for (int w = 0; w <= 2 * mfull; ++w) c[w] = std::cos(w * x) * inv[static_cast<std::size_t>(w)];
    // cos(j z) cos(k z) = (cos((j+k) z) + cos((j-k) z)) / 2
    for (int j = 1; j <= mfull; ++j)
      for (int k = 1; k <= mfull; ++k) M(j - 1, k - 1) = 0.5 * (c[j + k] + c[std::abs(j - k)]);
    const Vec Mb = M * b;
    t.phi1[i] = b.dot(c.segment(1, mfull));
    t.phi2[i] = b.dot(Mb);
    if (order < 1) continue;
    // d b / d beta_l = e_{l+1} - e_0 (zero-based)
    for (int l = 0; l < m; ++l) {
      t.dphi1(i, l) = c[l + 2] - c[1];
      t.dphi2(i, l) = 2.0 * (Mb[l + 1] - Mb[0]);
    }
    if (order < 2) continue;
    for (int l = 0; l < m; ++l)
      for (int k = 0; k < m; ++k) {
        t.d2phi1(i, l * m + k) = 0.0;
        t.d2phi2(i, l * m + k) = 2.0 * (M(l + 1, k + 1) - M(l + 1, 0) - M(0, k + 1) + M(0, 0));
      }
  }
  return t;
}

double CorrectionFunctions::phi1(const Vec& beta, double u) const {
  const double pts[] = {u};
  return evaluate(pts, beta, 0).phi1[0];
}

double CorrectionFunctions::phi2(const Vec& beta, double u) const {
  const double pts[] = {u};
  return evaluate(pts, beta, 0).phi2[0];
}

CorrectionFunctions build_corrections(const RelativeRisk& risk, const ErrorDensity& err, const WeightFunction& w,
                                      std::optional<Vec> probe_beta) {
  using Kind = CorrectionFunctions::Kind;
  if (w.is_one()) {
    if (std::holds_alternative<risk::Exponential>(risk.family())) {
      if (!err.centered() || !err.log_mgf(1.0))
        throw DomainError("build_corrections: exponential risk needs a finite noise mgf; " + err.name() +
                          " noise has none");
      return CorrectionFunctions(Kind::CoxMgf, risk, err, w);
    }
    if (std::holds_alternative<risk::Cosine1>(risk.family())) return CorrectionFunctions(Kind::CosineTrig, risk, err, w);
    throw DomainError("build_corrections: no correction for " + risk.name() + " with W = one; use an integrable weight");
  }
  const Vec probe = probe_beta ? *probe_beta : Vec::Constant(risk.arity(), 0.5);
  try {
    DeconvolvedSide side({0.0}, risk, w, err, DeconvolvedSide::AdaptiveCut{});
    side.cut_at(probe);
  } catch (const NumericalError& e) {
    throw DomainError(std::string("build_corrections: ") + e.what());
  }
  return CorrectionFunctions(Kind::Deconvolution, risk, err, w);
}

std::shared_ptr<const CovariateSide> corrected_side(std::vector<double> u, const CorrectionFunctions& corr,
                                                    QuadratureOptions opt) {
  if (corr.kind() == CorrectionFunctions::Kind::Deconvolution)
    return std::make_shared<DeconvolvedSide>(std::move(u), corr.risk(), corr.weight(), corr.error(),
                                             DeconvolvedSide::AdaptiveCut{}, opt);
  return std::make_shared<CorrectedSide>(std::move(u), corr);
}

double s2_criterion(const Theta& theta, const Dataset& data, const ModelBundle& model,
                    const CorrectionFunctions& corr) {
  return Criterion(corrected_side(covariate_points(data, false), corr), data, model.baseline).value(theta);
}

}  // namespace mehaz
